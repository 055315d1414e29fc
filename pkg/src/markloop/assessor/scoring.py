"""Error-aware scoring against a mark scheme.

The pipeline per answer: judge every rubric concept (binary match with
evidence), take the weighted sum as the rubric score, cross-check with a
holistic grade, and re-run the rubric match once when the two disagree. The
rubric score is authoritative; the disagreement is kept on the assessment so
teachers can review it. A separate judge call sets the expression flag, which
never touches any numeric score.
"""

from __future__ import annotations

import logging
import re

from ..domain import (
    Assessment,
    ConceptMatch,
    MarkScheme,
    Question,
    StudentAnswer,
    validate_assessment,
)
from ..errors import AlignmentError, JudgeFormatError
from ..gateway import Gateway
from . import prompts

logger = logging.getLogger(__name__)

_MATCH_LINE = re.compile(r"^\s*(\d+)\s*[:.]\s*(YES|NO)\s*(?:\|\s*(.*))?$", re.IGNORECASE)
_INT = re.compile(r"-?\d+")


def compute_raw_score(matches: tuple[ConceptMatch, ...], scheme: MarkScheme) -> int:
    """Weighted sum of matched concepts. Pure; raises AlignmentError on skew."""
    if len(matches) != len(scheme.concepts):
        raise AlignmentError(
            f"{len(matches)} matches for {len(scheme.concepts)} concepts"
        )
    total = 0
    for match, concept in zip(matches, scheme.concepts):
        if match.concept_id != concept.concept_id:
            raise AlignmentError(
                f"match {match.concept_id!r} out of order with {concept.concept_id!r}"
            )
        if match.matched:
            total += concept.weight
    return total


def parse_match_lines(text: str, scheme: MarkScheme) -> tuple[ConceptMatch, ...]:
    """Parse `<n>: YES|NO | evidence` lines into scheme-ordered matches."""
    found: dict[int, tuple[bool, str]] = {}
    for line in text.splitlines():
        m = _MATCH_LINE.match(line)
        if not m:
            continue
        idx = int(m.group(1))
        if idx in found:
            raise JudgeFormatError(f"concept {idx} judged twice")
        found[idx] = (m.group(2).upper() == "YES", (m.group(3) or "").strip())
    expected = set(range(1, len(scheme.concepts) + 1))
    if set(found) != expected:
        raise JudgeFormatError(
            f"judge covered concepts {sorted(found)}, expected {sorted(expected)}"
        )
    return tuple(
        ConceptMatch(concept.concept_id, found[idx][0], found[idx][1])
        for idx, concept in enumerate(scheme.concepts, start=1)
    )


class Assessor:
    """Runs the scoring pipeline through the gateway's judge role."""

    def __init__(self, gateway: Gateway, judge_role: str = "assessor_judge"):
        self._gateway = gateway
        self._role = judge_role

    def _ask(self, prompt: str) -> str:
        return self._gateway.complete(self._role, prompt).text

    def _ask_with_retry(self, prompt: str, parse):
        """One re-ask with a format reminder before giving up."""
        try:
            return parse(self._ask(prompt))
        except JudgeFormatError as first:
            logger.warning("judge format error, re-asking: %s", first)
            try:
                return parse(self._ask(f"{prompt}\n{prompts.REMINDER}"))
            except JudgeFormatError as second:
                raise JudgeFormatError(f"judge output unusable after re-ask: {second}") from second

    def match_concepts(self, answer: StudentAnswer, scheme: MarkScheme,
                       question: Question) -> tuple[ConceptMatch, ...]:
        prompt = prompts.match_prompt(question, scheme, answer)
        return self._ask_with_retry(prompt, lambda text: parse_match_lines(text, scheme))

    def prompt_score(self, answer: StudentAnswer, question: Question,
                     scheme: MarkScheme) -> int:
        prompt = prompts.grade_prompt(question, scheme, answer)

        def parse(text: str) -> int:
            m = _INT.search(text)
            if not m:
                raise JudgeFormatError(f"no integer in grade reply: {text[:80]!r}")
            return int(m.group(0))

        value = self._ask_with_retry(prompt, parse)
        clamped = max(0, min(question.max_marks, value))
        if clamped != value:
            logger.warning(
                "holistic grade %s outside [0, %s]; clamped to %s",
                value, question.max_marks, clamped,
            )
        return clamped

    def flag_expression(self, answer: StudentAnswer) -> int:
        prompt = prompts.expression_prompt(answer)

        def parse(text: str) -> int:
            lowered = text.lower()
            if "major" in lowered:
                return 1
            if any(token in lowered for token in ("fine", "ok", "minor", "none")):
                return 0
            raise JudgeFormatError(f"unreadable expression verdict: {text[:80]!r}")

        try:
            return self._ask_with_retry(prompt, parse)
        except JudgeFormatError:
            # Fail open: an infrastructure failure must never penalise a student.
            logger.warning("expression judge unusable for answer %s; defaulting to 0", answer.id)
            return 0

    def _reflect(self, answer: StudentAnswer, scheme: MarkScheme, question: Question,
                 matches: tuple[ConceptMatch, ...], rubric_score: int,
                 holistic_score: int) -> tuple[ConceptMatch, ...]:
        prior = prompts.matches_as_lines(
            [(i, m.matched, m.evidence) for i, m in enumerate(matches, start=1)]
        )
        prompt = prompts.reflect_prompt(
            question, scheme, answer, prior, rubric_score, holistic_score
        )
        return self._ask_with_retry(prompt, lambda text: parse_match_lines(text, scheme))

    def assess(self, answer: StudentAnswer, question: Question,
               scheme: MarkScheme) -> Assessment:
        matches = self.match_concepts(answer, scheme, question)
        raw = compute_raw_score(matches, scheme)
        holistic = self.prompt_score(answer, question, scheme)

        triggered = raw != holistic
        rounds = 0
        if triggered:
            # Exactly one reflection round; the rubric result stays authoritative.
            matches = self._reflect(answer, scheme, question, matches, raw, holistic)
            raw = compute_raw_score(matches, scheme)
            rounds = 1

        assessment = Assessment(
            answer_id=answer.id,
            matches=matches,
            raw_score=raw,
            prompt_score=holistic,
            reflection_triggered=triggered,
            reflection_rounds=rounds,
            expression_flag=self.flag_expression(answer),
            final_score=raw,
        )
        return validate_assessment(assessment, scheme)
