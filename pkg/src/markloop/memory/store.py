"""Topic-graph memory of past assessment records.

Records are graph nodes labelled with one or more topics; two nodes are
neighbours when their label sets intersect. Edges are never materialised:
an inverted topic index answers both neighbourhood and subgraph queries, and
retrieval runs an exhaustive cosine scan over the query's topic subgraph
only. That confinement is the point: a query never sees records from
unrelated topics, however similar their embeddings happen to be.
"""

from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass, field
from datetime import datetime
from typing import Callable, Iterable

from ..domain import utcnow
from ..domain.serialize import _parse_ts, _ts, dump_line
from ..errors import DuplicateId, UnknownNode, ValidationError

logger = logging.getLogger(__name__)

Embedding = tuple[float, ...]

_NORM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class MemoryNode:
    """One past sub-question assessment, labelled with its topics."""

    id: str
    student_id: str
    sub_question_text: str
    topics: frozenset[str]
    embedding: Embedding
    assessment_digest: str
    created_at: datetime = field(default_factory=utcnow)

    def __post_init__(self) -> None:
        object.__setattr__(self, "topics", frozenset(self.topics))
        object.__setattr__(self, "embedding", tuple(self.embedding))
        if not self.topics:
            raise ValidationError(f"memory node {self.id!r} has no topic labels")
        norm = math.sqrt(sum(v * v for v in self.embedding))
        if abs(norm - 1.0) > _NORM_TOLERANCE:
            raise ValidationError(
                f"memory node {self.id!r} embedding norm {norm:.8f} is not 1"
            )


@dataclass(frozen=True)
class MemoryQuery:
    query_text: str
    topics: frozenset[str]
    k: int
    student_id: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "topics", frozenset(self.topics))
        if not self.topics:
            raise ValidationError("a memory query must carry at least one topic")
        if self.k < 1:
            raise ValidationError("k must be >= 1")


def node_doc(node: MemoryNode) -> dict:
    return {
        "schema": "memory_node/1",
        "id": node.id,
        "student_id": node.student_id,
        "sub_question_text": node.sub_question_text,
        "topics": sorted(node.topics),
        "embedding": list(node.embedding),
        "assessment_digest": node.assessment_digest,
        "created_at": _ts(node.created_at),
    }


def node_from_doc(doc: dict) -> MemoryNode:
    return MemoryNode(
        id=doc["id"],
        student_id=doc["student_id"],
        sub_question_text=doc["sub_question_text"],
        topics=frozenset(doc["topics"]),
        embedding=tuple(doc["embedding"]),
        assessment_digest=doc["assessment_digest"],
        created_at=_parse_ts(doc["created_at"]),
    )


class ConceptStore:
    """In-memory node store with an inverted topic index.

    Reads take a consistent snapshot under the lock; writes are serialised.
    When `student_scoped` is set (the default), queries carrying a student id
    only see that student's records; cohort-wide retrieval is a config
    switch, not a per-call surprise.
    """

    def __init__(self, embedder: Callable[[str], Embedding], student_scoped: bool = True):
        self._embedder = embedder
        self._student_scoped = student_scoped
        self._nodes: dict[str, MemoryNode] = {}
        self._by_topic: dict[str, set[str]] = {}
        self._lock = threading.RLock()

    def __len__(self) -> int:
        with self._lock:
            return len(self._nodes)

    def add_record(self, node: MemoryNode) -> str:
        with self._lock:
            existing = self._nodes.get(node.id)
            if existing is not None:
                if existing == node:
                    return node.id
                raise DuplicateId(f"node {node.id!r} already stored with different content")
            self._nodes[node.id] = node
            for topic in node.topics:
                self._by_topic.setdefault(topic, set()).add(node.id)
        return node.id

    def get(self, node_id: str) -> MemoryNode:
        with self._lock:
            node = self._nodes.get(node_id)
        if node is None:
            raise UnknownNode(f"no memory node {node_id!r}")
        return node

    def topic_subgraph(self, topics: Iterable[str]) -> set[str]:
        """Ids of every node whose label set intersects `topics`."""
        topic_set = set(topics)
        if not topic_set:
            logger.info("topic subgraph requested with no topics; returning empty set")
            return set()
        with self._lock:
            out: set[str] = set()
            for topic in topic_set:
                out |= self._by_topic.get(topic, set())
            return out

    def edges(self, node_id: str) -> set[str]:
        """Neighbours of a node: every other node sharing at least one topic."""
        node = self.get(node_id)
        neighbours = self.topic_subgraph(node.topics)
        neighbours.discard(node_id)
        return neighbours

    def retrieve(self, query: MemoryQuery) -> list[tuple[MemoryNode, float]]:
        """Top-k nodes of the query's topic subgraph by cosine similarity.

        Ties break by newest created_at, then lexicographic id, so results
        are reproducible. Returns fewer than k when the subgraph is smaller.
        """
        query_vec = self._embedder(query.query_text)
        with self._lock:
            candidate_ids = set()
            for topic in query.topics:
                candidate_ids |= self._by_topic.get(topic, set())
            candidates = [self._nodes[i] for i in candidate_ids]
        if self._student_scoped and query.student_id is not None:
            candidates = [n for n in candidates if n.student_id == query.student_id]
        scored = [
            (node, sum(a * b for a, b in zip(query_vec, node.embedding)))
            for node in candidates
        ]
        scored.sort(key=lambda pair: (-pair[1], -pair[0].created_at.timestamp(), pair[0].id))
        return scored[: query.k]

    def export_lines(self) -> str:
        """Line-delimited canonical dump, ordered by id for stable bytes."""
        with self._lock:
            nodes = sorted(self._nodes.values(), key=lambda n: n.id)
        return "".join(dump_line(node_doc(n)) + "\n" for n in nodes)

    def import_lines(self, text: str) -> int:
        import json

        count = 0
        for line in text.splitlines():
            if not line.strip():
                continue
            self.add_record(node_from_doc(json.loads(line)))
            count += 1
        return count
