from .model import (
    Assessment,
    ConceptCriterion,
    ConceptMatch,
    FeedbackItem,
    FeedbackVersion,
    IterationRecord,
    LoopConfig,
    MarkScheme,
    Question,
    StudentAnswer,
    Topic,
    VerificationReport,
    build_verification_report,
    utcnow,
    validate_assessment,
    validate_mark_scheme,
)
from . import serialize

__all__ = [
    "Assessment",
    "ConceptCriterion",
    "ConceptMatch",
    "FeedbackItem",
    "FeedbackVersion",
    "IterationRecord",
    "LoopConfig",
    "MarkScheme",
    "Question",
    "StudentAnswer",
    "Topic",
    "VerificationReport",
    "build_verification_report",
    "serialize",
    "utcnow",
    "validate_assessment",
    "validate_mark_scheme",
]
