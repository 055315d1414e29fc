"""Canonical document serialisation.

Every entity maps to a JSON-compatible dict carrying a `schema` field of the
form "<kind>/<version>". This is the wire format of the HTTP API, the storage
format of the embedded store, and the line format of bulk exports. Documents
are rendered with sorted keys so that export/import round-trips are
byte-identical.

Other packages register their own kinds via `register`, so `from_doc` can
dispatch any document produced anywhere in the system.
"""

from __future__ import annotations

import json
from datetime import datetime
from typing import Any, Callable

from ..errors import ValidationError
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
)

_TO: dict[type, Callable[[Any], dict]] = {}
_FROM: dict[str, Callable[[dict], Any]] = {}


def register(kind: str, typ: type, to_fn: Callable[[Any], dict], from_fn: Callable[[dict], Any]) -> None:
    _TO[typ] = to_fn
    _FROM[kind] = from_fn


def to_doc(obj: Any) -> dict:
    fn = _TO.get(type(obj))
    if fn is None:
        raise ValidationError(f"no serialiser for {type(obj).__name__}")
    return fn(obj)


def from_doc(doc: dict) -> Any:
    schema = doc.get("schema", "")
    kind = schema.split("/", 1)[0]
    fn = _FROM.get(kind)
    if fn is None:
        raise ValidationError(f"unknown document schema {schema!r}")
    return fn(doc)


def dumps(doc: dict) -> str:
    """Human-readable canonical rendering."""
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False)


def dump_line(doc: dict) -> str:
    """Single-line canonical rendering for line-delimited exports."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _ts(dt: datetime) -> str:
    return dt.isoformat()


def _parse_ts(raw: str) -> datetime:
    return datetime.fromisoformat(raw)


def topic_doc(t: Topic) -> dict:
    return {
        "schema": "topic/1",
        "id": t.id,
        "name": t.name,
        "curriculum_code": t.curriculum_code,
        "parent_id": t.parent_id,
    }


def topic_from(doc: dict) -> Topic:
    return Topic(doc["id"], doc["name"], doc["curriculum_code"], doc.get("parent_id"))


def question_doc(q: Question) -> dict:
    return {
        "schema": "question/1",
        "id": q.id,
        "prompt_text": q.prompt_text,
        "topics": sorted(q.topics),
        "max_marks": q.max_marks,
        "source": q.source,
    }


def question_from(doc: dict) -> Question:
    return Question(
        doc["id"], doc["prompt_text"], frozenset(doc["topics"]), doc["max_marks"], doc["source"]
    )


def mark_scheme_doc(s: MarkScheme) -> dict:
    return {
        "schema": "mark_scheme/1",
        "question_id": s.question_id,
        "concepts": [
            {"concept_id": c.concept_id, "description": c.description, "weight": c.weight}
            for c in s.concepts
        ],
        "rationale": s.rationale,
    }


def mark_scheme_from(doc: dict) -> MarkScheme:
    return MarkScheme(
        doc["question_id"],
        tuple(
            ConceptCriterion(c["concept_id"], c["description"], c["weight"])
            for c in doc["concepts"]
        ),
        doc.get("rationale", ""),
    )


def answer_doc(a: StudentAnswer) -> dict:
    return {
        "schema": "student_answer/1",
        "id": a.id,
        "student_id": a.student_id,
        "question_id": a.question_id,
        "text": a.text,
        "submitted_at": _ts(a.submitted_at),
    }


def answer_from(doc: dict) -> StudentAnswer:
    return StudentAnswer(
        doc["id"], doc["student_id"], doc["question_id"], doc["text"],
        _parse_ts(doc["submitted_at"]),
    )


def assessment_doc(a: Assessment, scheme: MarkScheme) -> dict:
    """Joined document exposing every (concept, weight, matched) triple.

    The scheme context is embedded so readers can audit exactly which marks
    were available and which were awarded without a second lookup.
    """
    concepts = []
    for match, criterion in zip(a.matches, scheme.concepts):
        concepts.append(
            {
                "concept_id": criterion.concept_id,
                "description": criterion.description,
                "weight": criterion.weight,
                "matched": match.matched,
                "evidence": match.evidence,
            }
        )
    return {
        "schema": "assessment/1",
        "answer_id": a.answer_id,
        "concepts": concepts,
        "raw_score": a.raw_score,
        "prompt_score": a.prompt_score,
        "reflection_triggered": a.reflection_triggered,
        "reflection_rounds": a.reflection_rounds,
        "expression_flag": a.expression_flag,
        "final_score": a.final_score,
    }


def assessment_from(doc: dict) -> Assessment:
    matches = tuple(
        ConceptMatch(c["concept_id"], c["matched"], c.get("evidence", ""))
        for c in doc["concepts"]
    )
    return Assessment(
        answer_id=doc["answer_id"],
        matches=matches,
        raw_score=doc["raw_score"],
        prompt_score=doc["prompt_score"],
        reflection_triggered=doc["reflection_triggered"],
        reflection_rounds=doc["reflection_rounds"],
        expression_flag=doc["expression_flag"],
        final_score=doc["final_score"],
    )


def verification_doc(v: VerificationReport) -> dict:
    return {
        "schema": "verification_report/1",
        "scores": dict(v.scores),
        "justifications": dict(v.justifications),
        "verifier_model_id": v.verifier_model_id,
    }


def verification_from(doc: dict) -> VerificationReport:
    return VerificationReport(doc["scores"], doc["justifications"], doc["verifier_model_id"])


def _iteration_doc(r: IterationRecord) -> dict:
    return {
        "iteration": r.iteration,
        "scores": dict(r.scores) if r.scores is not None else None,
        "generator_model_id": r.generator_model_id,
        "verifier_model_id": r.verifier_model_id,
        "generator_budget": r.generator_budget,
        "latency_seconds": r.latency_seconds,
        "note": r.note,
    }


def _iteration_from(doc: dict) -> IterationRecord:
    return IterationRecord(
        iteration=doc["iteration"],
        scores=doc["scores"],
        generator_model_id=doc["generator_model_id"],
        verifier_model_id=doc["verifier_model_id"],
        generator_budget=doc["generator_budget"],
        latency_seconds=doc["latency_seconds"],
        note=doc.get("note", ""),
    )


def feedback_version_doc(v: FeedbackVersion) -> dict:
    return {
        "schema": "feedback_version/1",
        "id": v.id,
        "answer_id": v.answer_id,
        "items": [
            {"concept_id": i.concept_id, "awarded_mark": i.awarded_mark, "comment": i.comment}
            for i in v.items
        ],
        "total_mark": v.total_mark,
        "verification": verification_doc(v.verification) if v.verification else None,
        "iteration": v.iteration,
        "origin": v.origin,
        "parent_version_id": v.parent_version_id,
        "safety_passed": v.safety_passed,
        "provenance": [_iteration_doc(r) for r in v.provenance],
        "safety_notes": list(v.safety_notes),
    }


def feedback_version_from(doc: dict) -> FeedbackVersion:
    return FeedbackVersion(
        id=doc["id"],
        answer_id=doc["answer_id"],
        items=tuple(
            FeedbackItem(i["concept_id"], i["awarded_mark"], i["comment"])
            for i in doc["items"]
        ),
        total_mark=doc["total_mark"],
        verification=verification_from(doc["verification"]) if doc.get("verification") else None,
        iteration=doc["iteration"],
        origin=doc["origin"],
        parent_version_id=doc.get("parent_version_id"),
        safety_passed=doc["safety_passed"],
        provenance=tuple(_iteration_from(r) for r in doc.get("provenance", [])),
        safety_notes=tuple(doc.get("safety_notes", [])),
    )


def loop_config_doc(c: LoopConfig) -> dict:
    return {
        "schema": "loop_config/1",
        "criteria": list(c.criteria),
        "tau": c.tau,
        "t_max": c.t_max,
        "generator_role": c.generator_role,
        "verifier_role": c.verifier_role,
        "safety_role": c.safety_role,
    }


def loop_config_from(doc: dict) -> LoopConfig:
    return LoopConfig(
        criteria=tuple(doc["criteria"]),
        tau=doc["tau"],
        t_max=doc["t_max"],
        generator_role=doc["generator_role"],
        verifier_role=doc["verifier_role"],
        safety_role=doc["safety_role"],
    )


register("topic", Topic, topic_doc, topic_from)
register("question", Question, question_doc, question_from)
register("mark_scheme", MarkScheme, mark_scheme_doc, mark_scheme_from)
register("student_answer", StudentAnswer, answer_doc, answer_from)
register("verification_report", VerificationReport, verification_doc, verification_from)
register("feedback_version", FeedbackVersion, feedback_version_doc, feedback_version_from)
register("loop_config", LoopConfig, loop_config_doc, loop_config_from)
_FROM["assessment"] = assessment_from
