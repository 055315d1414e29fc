"""Prompt builders for the scoring judge.

Each prompt starts with a stable TASK tag so scripted providers can key on
it, and demands a rigid line format the parser in `scoring` understands.
The wording is configuration, not contract: only the output format matters.
"""

from __future__ import annotations

from ..domain import MarkScheme, Question, StudentAnswer

REMINDER = (
    "REMINDER: your previous reply could not be parsed. "
    "Answer strictly in the requested line format and nothing else."
)


def _concept_block(scheme: MarkScheme) -> str:
    lines = []
    for idx, c in enumerate(scheme.concepts, start=1):
        lines.append(f"{idx}. {c.description} (marks: {c.weight})")
    return "\n".join(lines)


def match_prompt(question: Question, scheme: MarkScheme, answer: StudentAnswer) -> str:
    return (
        "TASK: concept-match\n"
        f"QUESTION: {question.prompt_text}\n"
        f"ANSWER: {answer.text}\n"
        "KEY CONCEPTS:\n"
        f"{_concept_block(scheme)}\n"
        "For each key concept decide whether it appears in the answer, in meaning\n"
        "rather than exact words. Reply with exactly one line per concept:\n"
        "<concept number>: YES|NO | <short quoted or paraphrased evidence>"
    )


def reflect_prompt(question: Question, scheme: MarkScheme, answer: StudentAnswer,
                   prior_lines: str, rubric_score: int, holistic_score: int) -> str:
    return (
        "TASK: reflect-match\n"
        f"QUESTION: {question.prompt_text}\n"
        f"ANSWER: {answer.text}\n"
        "KEY CONCEPTS:\n"
        f"{_concept_block(scheme)}\n"
        f"Your per-concept decisions gave {rubric_score} marks:\n"
        f"{prior_lines}\n"
        f"A holistic grading of the same answer gave {holistic_score} marks.\n"
        "Reconsider each concept decision carefully. Reply with exactly one line\n"
        "per concept:\n"
        "<concept number>: YES|NO | <short quoted or paraphrased evidence>"
    )


def grade_prompt(question: Question, scheme: MarkScheme, answer: StudentAnswer) -> str:
    return (
        "TASK: holistic-grade\n"
        f"QUESTION: {question.prompt_text}\n"
        "MARK SCHEME:\n"
        f"{_concept_block(scheme)}\n"
        f"ANSWER: {answer.text}\n"
        f"Grade this answer out of {scheme.total_weight}. "
        "Reply with a single integer and nothing else."
    )


def expression_prompt(answer: StudentAnswer) -> str:
    return (
        "TASK: expression-check\n"
        f"ANSWER: {answer.text}\n"
        "Does this answer show major language or expression problems (grammar,\n"
        "spelling, phrasing) that would hinder a reader? Judge only the writing,\n"
        "not the science. Reply with exactly one word: MAJOR or FINE."
    )


def matches_as_lines(decisions: list[tuple[int, bool, str]]) -> str:
    return "\n".join(
        f"{idx}: {'YES' if matched else 'NO'} | {evidence}"
        for idx, matched, evidence in decisions
    )
