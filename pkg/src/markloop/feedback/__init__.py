from . import prompts
from .engine import FeedbackContext, FeedbackEngine, RevisionOutcome

__all__ = ["FeedbackContext", "FeedbackEngine", "RevisionOutcome", "prompts"]
