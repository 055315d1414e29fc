from . import prompts
from .scoring import Assessor, compute_raw_score, parse_match_lines

__all__ = ["Assessor", "compute_raw_score", "parse_match_lines", "prompts"]
