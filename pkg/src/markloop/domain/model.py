"""Core value objects for questions, rubrics, assessments and feedback.

Everything here is an immutable dataclass validated at construction, so
instances can be shared freely across threads. Cross-entity rules that need
more than one object (e.g. a scheme against its question) live in the
validator functions at the bottom.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone

from ..errors import NonPositiveWeight, ValidationError, WeightSumMismatch

QUESTION_SOURCES = ("bank", "custom", "generated")
FEEDBACK_ORIGINS = ("loop", "teacher_revision")

#: Verifier scores are integers on this closed scale.
VERIFY_SCALE_MIN = 1
VERIFY_SCALE_MAX = 5


def utcnow() -> datetime:
    return datetime.now(timezone.utc)


@dataclass(frozen=True)
class Topic:
    """A curriculum topic; parent_id points at its prerequisite topic."""

    id: str
    name: str
    curriculum_code: str
    parent_id: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValidationError("topic id required")
        if self.parent_id == self.id:
            raise ValidationError(f"topic {self.id!r} cannot be its own parent")


@dataclass(frozen=True)
class Question:
    id: str
    prompt_text: str
    topics: frozenset[str]
    max_marks: int
    source: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "topics", frozenset(self.topics))
        if not self.prompt_text.strip():
            raise ValidationError("question text required")
        if not self.topics:
            raise ValidationError("a question must be tagged with at least one topic")
        if self.max_marks < 1:
            raise ValidationError("max_marks must be a positive integer")
        if self.source not in QUESTION_SOURCES:
            raise ValidationError(f"unknown question source {self.source!r}")


@dataclass(frozen=True)
class ConceptCriterion:
    """One key concept of a mark scheme and the whole marks it is worth."""

    concept_id: str
    description: str
    weight: int

    def __post_init__(self) -> None:
        if not isinstance(self.weight, int) or isinstance(self.weight, bool):
            raise NonPositiveWeight(f"weight must be an integer, got {self.weight!r}")
        if self.weight < 1:
            raise NonPositiveWeight(
                f"concept {self.concept_id!r} has weight {self.weight}; must be >= 1"
            )


@dataclass(frozen=True)
class MarkScheme:
    question_id: str
    concepts: tuple[ConceptCriterion, ...]
    rationale: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "concepts", tuple(self.concepts))
        if not self.concepts:
            raise ValidationError("a mark scheme needs at least one concept")
        seen = set()
        for c in self.concepts:
            if c.concept_id in seen:
                raise ValidationError(f"duplicate concept id {c.concept_id!r}")
            seen.add(c.concept_id)

    @property
    def total_weight(self) -> int:
        return sum(c.weight for c in self.concepts)


@dataclass(frozen=True)
class StudentAnswer:
    id: str
    student_id: str
    question_id: str
    text: str
    submitted_at: datetime = field(default_factory=utcnow)

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValidationError("answer text is empty")


@dataclass(frozen=True)
class ConceptMatch:
    """Binary judgement that one rubric concept appears in the answer."""

    concept_id: str
    matched: bool
    evidence: str = ""


@dataclass(frozen=True)
class Assessment:
    """Scoring outcome for one answer.

    raw_score is the weighted sum over matched concepts and is what counts;
    prompt_score is the holistic cross-check grade. The expression flag is
    reported alongside but never folded into any numeric field, so
    final_score is identical whichever value it takes.
    """

    answer_id: str
    matches: tuple[ConceptMatch, ...]
    raw_score: int
    prompt_score: int
    reflection_triggered: bool
    reflection_rounds: int
    expression_flag: int
    final_score: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "matches", tuple(self.matches))
        if not self.matches:
            raise ValidationError("an assessment needs at least one concept match")
        if self.expression_flag not in (0, 1):
            raise ValidationError("expression flag must be 0 or 1")
        if self.reflection_rounds < 0:
            raise ValidationError("reflection_rounds must be >= 0")
        if self.raw_score < 0 or self.final_score < 0 or self.prompt_score < 0:
            raise ValidationError("scores must be non-negative")

    @property
    def missed_concept_ids(self) -> tuple[str, ...]:
        return tuple(m.concept_id for m in self.matches if not m.matched)

    @property
    def matched_concept_ids(self) -> tuple[str, ...]:
        return tuple(m.concept_id for m in self.matches if m.matched)

    @property
    def unreconciled(self) -> bool:
        """Rubric and holistic scores still disagree after reflection."""
        return self.final_score != self.prompt_score


@dataclass(frozen=True)
class FeedbackItem:
    concept_id: str
    awarded_mark: int
    comment: str

    def __post_init__(self) -> None:
        if self.awarded_mark < 0:
            raise ValidationError("awarded mark must be >= 0")
        if not self.comment.strip():
            raise ValidationError("feedback comment is empty")


@dataclass(frozen=True)
class VerificationReport:
    """Per-criterion verifier scores on the 1-5 scale plus justifications."""

    scores: dict[str, int]
    justifications: dict[str, str]
    verifier_model_id: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "scores", dict(self.scores))
        object.__setattr__(self, "justifications", dict(self.justifications))
        if not self.scores:
            raise ValidationError("verification report has no criteria")
        if set(self.scores) != set(self.justifications):
            raise ValidationError("criteria of scores and justifications differ")
        for name, value in self.scores.items():
            if not isinstance(value, int) or isinstance(value, bool):
                raise ValidationError(f"score for {name!r} must be an integer")
            if not VERIFY_SCALE_MIN <= value <= VERIFY_SCALE_MAX:
                raise ValidationError(
                    f"score for {name!r} is {value}; must be in "
                    f"[{VERIFY_SCALE_MIN}, {VERIFY_SCALE_MAX}]"
                )

    @property
    def min_score(self) -> int:
        return min(self.scores.values())

    @property
    def mean_score(self) -> float:
        return sum(self.scores.values()) / len(self.scores)


def build_verification_report(
    criteria: tuple[str, ...],
    scores: dict[str, int],
    justifications: dict[str, str],
    verifier_model_id: str,
) -> VerificationReport:
    """Construct a report enforcing that exactly `criteria` are present."""
    missing = [c for c in criteria if c not in scores]
    extra = [c for c in scores if c not in criteria]
    if missing or extra:
        raise ValidationError(
            f"criterion set mismatch: missing={missing} extra={extra}"
        )
    ordered = {c: scores[c] for c in criteria}
    notes = {c: justifications.get(c, "") for c in criteria}
    return VerificationReport(ordered, notes, verifier_model_id)


@dataclass(frozen=True)
class IterationRecord:
    """Provenance of one generate/verify round inside the refinement loop."""

    iteration: int
    scores: dict[str, int] | None
    generator_model_id: str
    verifier_model_id: str
    generator_budget: str
    latency_seconds: float
    note: str = ""

    def __post_init__(self) -> None:
        if self.scores is not None:
            object.__setattr__(self, "scores", dict(self.scores))


@dataclass(frozen=True)
class FeedbackVersion:
    """One immutable entry in an answer's append-only feedback chain."""

    id: str
    answer_id: str
    items: tuple[FeedbackItem, ...]
    total_mark: int
    verification: VerificationReport | None
    iteration: int
    origin: str
    parent_version_id: str | None
    safety_passed: bool
    provenance: tuple[IterationRecord, ...] = ()
    safety_notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "provenance", tuple(self.provenance))
        object.__setattr__(self, "safety_notes", tuple(self.safety_notes))
        if self.origin not in FEEDBACK_ORIGINS:
            raise ValidationError(f"unknown feedback origin {self.origin!r}")
        if self.iteration < 1:
            raise ValidationError("iteration must be >= 1")
        if self.total_mark != sum(i.awarded_mark for i in self.items):
            raise ValidationError("total_mark must equal the sum of awarded marks")
        if self.parent_version_id == self.id:
            raise ValidationError("a version cannot be its own parent")


@dataclass(frozen=True)
class LoopConfig:
    """Settings of the verify-and-revise loop."""

    criteria: tuple[str, ...] = ("accuracy", "specificity", "clarity")
    tau: int = 4
    t_max: int = 3
    generator_role: str = "generator"
    verifier_role: str = "verifier"
    safety_role: str = "safety"

    def __post_init__(self) -> None:
        object.__setattr__(self, "criteria", tuple(self.criteria))
        if not self.criteria:
            raise ValidationError("at least one verification criterion required")
        if len(set(self.criteria)) != len(self.criteria):
            raise ValidationError("verification criteria must be unique")
        if not VERIFY_SCALE_MIN <= self.tau <= VERIFY_SCALE_MAX:
            raise ValidationError("tau must be on the verification scale")
        if self.t_max < 1:
            raise ValidationError("t_max must be >= 1")
        if self.generator_role == self.verifier_role:
            raise ValidationError("generator and verifier must be distinct roles")


def validate_mark_scheme(scheme: MarkScheme, question: Question) -> MarkScheme:
    """Check a scheme against its question; returns the scheme unchanged.

    Raises WeightSumMismatch when the weights do not sum to max_marks and
    NonPositiveWeight for any weight below one mark.
    """
    if scheme.question_id != question.id:
        raise ValidationError(
            f"scheme references question {scheme.question_id!r}, not {question.id!r}"
        )
    for c in scheme.concepts:
        if c.weight < 1:
            raise NonPositiveWeight(
                f"concept {c.concept_id!r} has weight {c.weight}"
            )
    total = scheme.total_weight
    if total != question.max_marks:
        raise WeightSumMismatch(
            f"scheme weights sum to {total}, question is worth {question.max_marks}"
        )
    return scheme


def validate_assessment(assessment: Assessment, scheme: MarkScheme) -> Assessment:
    """Check an assessment is aligned with its scheme and self-consistent."""
    if len(assessment.matches) != len(scheme.concepts):
        raise ValidationError(
            f"{len(assessment.matches)} matches for {len(scheme.concepts)} concepts"
        )
    for match, concept in zip(assessment.matches, scheme.concepts):
        if match.concept_id != concept.concept_id:
            raise ValidationError(
                f"match order mismatch: {match.concept_id!r} vs {concept.concept_id!r}"
            )
    recomputed = sum(
        c.weight for m, c in zip(assessment.matches, scheme.concepts) if m.matched
    )
    if assessment.raw_score != recomputed:
        raise ValidationError(
            f"raw_score {assessment.raw_score} != weighted match sum {recomputed}"
        )
    if not 0 <= assessment.raw_score <= scheme.total_weight:
        raise ValidationError("raw_score outside [0, max_marks]")
    return assessment
