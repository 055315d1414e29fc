"""Exception types shared across the package.

Grouped by the layer that raises them; everything derives from MarkloopError
so callers can catch the whole family at service boundaries.
"""


class MarkloopError(Exception):
    """Base class for all package errors."""


class ValidationError(MarkloopError):
    """A value object or request violates a structural invariant."""


class WeightSumMismatch(ValidationError):
    """Mark scheme weights do not add up to the question's maximum marks."""


class NonPositiveWeight(ValidationError):
    """A rubric concept carries a weight below one mark."""


class ConfigurationError(MarkloopError):
    """Bad or missing configuration (roles, budgets, providers)."""


class SameModelConfigError(ConfigurationError):
    """Generator and verifier are configured on the same provider/model pair."""


class GatewayError(MarkloopError):
    """Base class for model-gateway failures."""


class ProviderError(GatewayError):
    """Provider call failed (after bounded retries for transient faults)."""


class ProviderTimeout(ProviderError):
    """Provider did not answer within the allowed time."""


class TransientProviderError(ProviderError):
    """Transport-level fault worth retrying. Internal to the gateway."""


class BudgetExceeded(GatewayError):
    """Response exceeded the output allowance of the requested budget tier."""


class JudgeFormatError(MarkloopError):
    """Scoring judge output could not be parsed after a re-ask."""


class GeneratorFormatError(MarkloopError):
    """Feedback generator output could not be parsed after a re-ask."""


class VerifierFormatError(MarkloopError):
    """Verifier output could not be parsed after a re-ask."""


class GenerationFormatError(MarkloopError):
    """Authoring model output (question or mark scheme) could not be parsed."""


class AlignmentError(MarkloopError):
    """Concept matches are not aligned 1:1 with the mark scheme."""


class LoopFailed(MarkloopError):
    """Every refinement iteration failed verification parsing."""

    def __init__(self, message: str, provenance=()):
        super().__init__(message)
        self.provenance = tuple(provenance)


class DuplicateId(MarkloopError):
    """An id was reused with different content."""


class UnknownNode(MarkloopError):
    """Memory node id not present in the store."""


class UnknownFeedback(MarkloopError):
    """Feedback version id not present in the store."""


class NoTeacher(ValidationError):
    """A student group must have at least one teacher."""


class UnknownUser(MarkloopError):
    """User id not present in the directory."""


class UnknownTopic(MarkloopError):
    """Topic id not present in the registry."""


class EmptyBankForTopic(MarkloopError):
    """The question bank holds no entry for the requested topic."""


class PermissionDenied(MarkloopError):
    """Requester is not allowed to perform the action on this resource."""


class LengthMismatch(MarkloopError):
    """Paired metric inputs have different lengths."""


class EmptyInput(MarkloopError):
    """Metric inputs are empty."""


class BatchAborted(MarkloopError):
    """Too many corpus items failed for the batch report to be meaningful."""
