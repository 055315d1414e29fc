from .store import ConceptStore, Embedding, MemoryNode, MemoryQuery, node_doc, node_from_doc
from .strategy import (
    STRATEGY_KINDS,
    FeedbackStrategy,
    format_digest,
    parse_digest,
    select_strategy,
)

__all__ = [
    "ConceptStore",
    "Embedding",
    "FeedbackStrategy",
    "MemoryNode",
    "MemoryQuery",
    "STRATEGY_KINDS",
    "format_digest",
    "node_doc",
    "node_from_doc",
    "parse_digest",
    "select_strategy",
]
