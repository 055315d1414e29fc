"""Performance analytics: mastery cells and the attention list.

Everything is recomputed from raw assessments on read; there is no cached
aggregate that can drift from the source of truth.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..domain import Assessment, FeedbackVersion, Question, StudentAnswer

TREND_WINDOW = 5


@dataclass(frozen=True)
class MasteryCell:
    student_id: str
    topic_id: str
    attempts: int
    mean_normalised_score: float
    trend: float


def mastery_cell_doc(c: MasteryCell) -> dict:
    return {
        "schema": "mastery_cell/1",
        "student_id": c.student_id,
        "topic_id": c.topic_id,
        "attempts": c.attempts,
        "mean_normalised_score": c.mean_normalised_score,
        "trend": c.trend,
    }


def slope(values: Sequence[float]) -> float:
    """Least-squares slope of values against their 0-based index."""
    n = len(values)
    if n < 2:
        return 0.0
    xs = range(n)
    mean_x = (n - 1) / 2
    mean_y = sum(values) / n
    num = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, values))
    den = sum((x - mean_x) ** 2 for x in xs)
    return num / den


def performance_overview(
    rows: Sequence[tuple[StudentAnswer, Assessment, Question]],
    topic_filter: str | None = None,
) -> list[MasteryCell]:
    """Mastery cells per (student, topic) from assessed answers.

    Multi-topic questions contribute to every one of their topics. Topics a
    student never attempted produce no cell at all - absence, not zero.
    """
    by_cell: dict[tuple[str, str], list[tuple[StudentAnswer, float]]] = {}
    for answer, assessment, question in rows:
        normalised = assessment.final_score / question.max_marks
        for topic_id in question.topics:
            if topic_filter is not None and topic_id != topic_filter:
                continue
            by_cell.setdefault((answer.student_id, topic_id), []).append(
                (answer, normalised)
            )

    cells = []
    for (student_id, topic_id), entries in sorted(by_cell.items()):
        entries.sort(key=lambda pair: (pair[0].submitted_at, pair[0].id))
        scores = [score for _, score in entries]
        cells.append(
            MasteryCell(
                student_id=student_id,
                topic_id=topic_id,
                attempts=len(scores),
                mean_normalised_score=sum(scores) / len(scores),
                trend=slope(scores[-TREND_WINDOW:]),
            )
        )
    return cells


def flag_attention(
    rows: Sequence[tuple[StudentAnswer, Assessment, FeedbackVersion]],
    tau: int,
) -> list[tuple[str, str]]:
    """(answer_id, reason) pairs for feedback a teacher should look at.

    Flags: the latest version's lowest verifier score sits below the loop
    threshold, the version was withheld by the safety gate, or the rubric and
    holistic scores never reconciled.
    """
    flags: list[tuple[str, str]] = []
    for answer, assessment, version in rows:
        if not version.safety_passed:
            flags.append((answer.id, "withheld by safety gate"))
        if version.verification is not None and version.verification.min_score < tau:
            flags.append(
                (answer.id,
                 f"verifier minimum {version.verification.min_score} below "
                 f"threshold {tau}")
            )
        if assessment.reflection_triggered and assessment.unreconciled:
            flags.append(
                (answer.id,
                 f"rubric score {assessment.final_score} and holistic score "
                 f"{assessment.prompt_score} still disagree after reflection")
            )
    return flags
