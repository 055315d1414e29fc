"""Prompt builders for the feedback generator, verifier and safety judge."""

from __future__ import annotations

from ..domain import FeedbackItem, MarkScheme, Question, StudentAnswer
from ..memory import FeedbackStrategy

REMINDER = (
    "REMINDER: your previous reply could not be parsed. "
    "Answer strictly in the requested line format and nothing else."
)


def _scheme_block(scheme: MarkScheme, awarded: dict[str, int]) -> str:
    lines = []
    for idx, c in enumerate(scheme.concepts, start=1):
        got = awarded.get(c.concept_id, 0)
        lines.append(f"{idx}. [{got}/{c.weight}] {c.description}")
    return "\n".join(lines)


def generate_prompt(
    question: Question,
    scheme: MarkScheme,
    answer: StudentAnswer,
    awarded: dict[str, int],
    strategy: FeedbackStrategy,
    suggestion: str | None = None,
    prior_items: tuple[FeedbackItem, ...] | None = None,
    verifier_notes: dict[str, str] | None = None,
) -> str:
    task = "feedback-revise" if prior_items is not None else "feedback-generate"
    parts = [
        f"TASK: {task}",
        f"QUESTION: {question.prompt_text}",
        f"ANSWER: {answer.text}",
        "MARK SCHEME (awarded/possible per concept):",
        _scheme_block(scheme, awarded),
        f"STRATEGY: {strategy.strategy_kind} - {strategy.rationale}",
    ]
    if suggestion:
        parts.append(f"TEACHER SUGGESTION: {suggestion}")
    if prior_items is not None:
        parts.append("PREVIOUS FEEDBACK:")
        parts.extend(
            f"{idx}: {item.comment}" for idx, item in enumerate(prior_items, start=1)
        )
    if verifier_notes:
        parts.append("VERIFIER NOTES:")
        parts.extend(f"- {name}: {note}" for name, note in verifier_notes.items())
    parts.append(
        "Write one actionable comment per concept: praise what was credited,\n"
        "state exactly what to add or fix for anything missed. Reply with\n"
        "exactly one line per concept:\n"
        "<concept number>: <comment>"
    )
    return "\n".join(parts)


def verify_prompt(
    question: Question,
    answer: StudentAnswer,
    items: tuple[FeedbackItem, ...],
    criteria: tuple[str, ...],
) -> str:
    comment_lines = "\n".join(
        f"{idx}: [{item.awarded_mark}] {item.comment}" for idx, item in enumerate(items, start=1)
    )
    return (
        "TASK: feedback-verify\n"
        f"QUESTION: {question.prompt_text}\n"
        f"ANSWER: {answer.text}\n"
        "FEEDBACK:\n"
        f"{comment_lines}\n"
        f"Score this feedback from 1 (poor) to 5 (excellent) on each criterion:\n"
        f"{', '.join(criteria)}.\n"
        "Reply with exactly one line per criterion:\n"
        "<criterion>: <score> | <justification>"
    )


def safety_prompt(comment: str) -> str:
    return (
        "TASK: safety-check\n"
        f"COMMENT: {comment}\n"
        "Is this comment appropriate to show a school student: free of harmful,\n"
        "biased, demeaning or otherwise inappropriate language? Reply with one\n"
        "word, APPROVE or REJECT, optionally followed by | <reason>."
    )


def rewrite_prompt(comment: str, reason: str) -> str:
    return (
        "TASK: comment-rewrite\n"
        f"COMMENT: {comment}\n"
        f"PROBLEM: {reason}\n"
        "Rewrite the comment so it keeps the same educational content but is\n"
        "appropriate for a school student. Reply with the rewritten comment only."
    )
