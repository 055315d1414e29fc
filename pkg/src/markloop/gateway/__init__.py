from .core import (
    BUDGET_TIERS,
    DEFAULT_BUDGETS,
    ROLE_NAMES,
    BudgetTier,
    CallRecord,
    Completion,
    Gateway,
    ModelRole,
    UsageSummary,
    estimate_tokens,
)
from .embedding import cosine, hash_embed
from .providers import (
    HTTPProvider,
    Provider,
    ScriptedProvider,
    ScriptRule,
    prompt_sha256,
    rule_doc,
    rule_from_doc,
)

__all__ = [
    "BUDGET_TIERS",
    "DEFAULT_BUDGETS",
    "ROLE_NAMES",
    "BudgetTier",
    "CallRecord",
    "Completion",
    "Gateway",
    "HTTPProvider",
    "ModelRole",
    "Provider",
    "ScriptRule",
    "ScriptedProvider",
    "UsageSummary",
    "cosine",
    "estimate_tokens",
    "hash_embed",
    "prompt_sha256",
    "rule_doc",
    "rule_from_doc",
]
