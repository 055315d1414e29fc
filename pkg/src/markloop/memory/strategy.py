"""Feedback strategy selection from the current assessment plus retrieved history.

The decision is a deterministic rule layer; an optional LLM hook may reword
the rationale but can never change the chosen kind. Node digests carry the
missed/matched concept ids in a parseable prefix so the rules can read
structure out of what is otherwise free text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from ..domain import Assessment
from ..errors import ValidationError
from .store import MemoryNode

STRATEGY_KINDS = (
    "address_misconception",
    "scaffold_prerequisite",
    "reinforce_partial",
    "generic",
)

_DIGEST_LIST = re.compile(r"(missed|matched)=\[([^\]]*)\]")


@dataclass(frozen=True)
class FeedbackStrategy:
    strategy_kind: str
    rationale: str
    evidence_node_ids: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "evidence_node_ids", tuple(self.evidence_node_ids))
        if self.strategy_kind not in STRATEGY_KINDS:
            raise ValidationError(f"unknown strategy kind {self.strategy_kind!r}")


def format_digest(missed: Sequence[str], matched: Sequence[str], note: str = "") -> str:
    head = f"missed=[{','.join(missed)}] matched=[{','.join(matched)}]"
    return f"{head} | {note}" if note else head


def parse_digest(digest: str) -> tuple[set[str], set[str]]:
    missed: set[str] = set()
    matched: set[str] = set()
    for kind, body in _DIGEST_LIST.findall(digest):
        ids = {part.strip() for part in body.split(",") if part.strip()}
        if kind == "missed":
            missed |= ids
        else:
            matched |= ids
    return missed, matched


def select_strategy(
    assessment: Assessment,
    retrieved: Sequence[tuple[MemoryNode, float]],
    question_topics: frozenset[str] = frozenset(),
    topic_parents: Mapping[str, str | None] | None = None,
    rationale_refiner: Callable[[FeedbackStrategy], str] | None = None,
) -> FeedbackStrategy:
    strategy = _apply_rules(assessment, retrieved, question_topics, topic_parents or {})
    if rationale_refiner is not None:
        refined = rationale_refiner(strategy).strip()
        if refined:
            strategy = FeedbackStrategy(
                strategy.strategy_kind, refined, strategy.evidence_node_ids
            )
    return strategy


def _apply_rules(
    assessment: Assessment,
    retrieved: Sequence[tuple[MemoryNode, float]],
    question_topics: frozenset[str],
    topic_parents: Mapping[str, str | None],
) -> FeedbackStrategy:
    if not retrieved:
        return FeedbackStrategy(
            "generic",
            "no prior records for these topics; give rubric-grounded feedback",
        )

    missed_now = set(assessment.missed_concept_ids)
    nodes = [node for node, _ in retrieved]

    # A concept missed now and in at least two retrieved records is a
    # recurring misconception worth addressing head-on.
    for concept_id in sorted(missed_now):
        repeats = [n for n in nodes if concept_id in parse_digest(n.assessment_digest)[0]]
        if len(repeats) >= 2:
            return FeedbackStrategy(
                "address_misconception",
                f"concept {concept_id!r} missed again; it recurs in "
                f"{len(repeats)} past records",
                tuple(n.id for n in repeats),
            )

    # Failures recorded under a prerequisite topic of the current question
    # suggest scaffolding the groundwork before re-teaching this topic.
    prerequisite_topics = {
        parent for topic in question_topics
        if (parent := topic_parents.get(topic)) is not None
    }
    if missed_now and prerequisite_topics:
        shaky = [
            n for n in nodes
            if n.topics & prerequisite_topics and parse_digest(n.assessment_digest)[0]
        ]
        if shaky:
            return FeedbackStrategy(
                "scaffold_prerequisite",
                "past records show gaps in prerequisite topics "
                f"{sorted(prerequisite_topics & set().union(*(n.topics for n in shaky)))}",
                tuple(n.id for n in shaky),
            )

    return FeedbackStrategy(
        "reinforce_partial",
        "no recurring errors in history; reinforce what was earned and close "
        "the remaining gaps",
        tuple(n.id for n in nodes[:3]),
    )
