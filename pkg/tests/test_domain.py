from __future__ import annotations

import random

import pytest

from markloop.domain import (
    Assessment,
    ConceptCriterion,
    ConceptMatch,
    FeedbackItem,
    FeedbackVersion,
    LoopConfig,
    MarkScheme,
    Question,
    StudentAnswer,
    Topic,
    VerificationReport,
    build_verification_report,
    utcnow,
    validate_mark_scheme,
)
from markloop.domain.serialize import (
    answer_doc,
    answer_from,
    assessment_doc,
    assessment_from,
    dump_line,
    feedback_version_doc,
    feedback_version_from,
    from_doc,
    mark_scheme_doc,
    question_doc,
    to_doc,
)
from markloop.errors import NonPositiveWeight, ValidationError, WeightSumMismatch


def make_question(max_marks: int = 5) -> Question:
    return Question("q1", "Explain the process.", frozenset({"t1"}), max_marks, "bank")


def make_scheme(weights: list[int], question_id: str = "q1") -> MarkScheme:
    return MarkScheme(
        question_id,
        tuple(
            ConceptCriterion(f"c{i}", f"concept {i}", w)
            for i, w in enumerate(weights, start=1)
        ),
    )


def make_assessment(mask: list[bool], weights: list[int], prompt_score: int | None = None,
                    flag: int = 0) -> Assessment:
    raw = sum(w for w, hit in zip(weights, mask) if hit)
    return Assessment(
        answer_id="a1",
        matches=tuple(
            ConceptMatch(f"c{i}", hit, "evidence") for i, hit in enumerate(mask, start=1)
        ),
        raw_score=raw,
        prompt_score=raw if prompt_score is None else prompt_score,
        reflection_triggered=False,
        reflection_rounds=0,
        expression_flag=flag,
        final_score=raw,
    )


class TestMarkSchemeValidation:
    def test_five_unit_weights_valid(self):
        scheme = make_scheme([1, 1, 1, 1, 1])
        assert validate_mark_scheme(scheme, make_question(5)) is scheme

    def test_two_three_split_valid(self):
        scheme = make_scheme([2, 3])
        assert validate_mark_scheme(scheme, make_question(5)) is scheme

    def test_sum_mismatch_rejected(self):
        with pytest.raises(WeightSumMismatch):
            validate_mark_scheme(make_scheme([2, 2]), make_question(5))

    def test_zero_weight_rejected_at_construction(self):
        with pytest.raises(NonPositiveWeight):
            ConceptCriterion("c1", "concept", 0)

    def test_wrong_question_rejected(self):
        with pytest.raises(ValidationError):
            validate_mark_scheme(make_scheme([5], question_id="other"), make_question(5))

    def test_empty_scheme_rejected(self):
        with pytest.raises(ValidationError):
            MarkScheme("q1", ())


class TestDomainInvariants:
    def test_raw_score_recomputable_by_fold(self):
        rng = random.Random(11)
        for _ in range(200):
            k = rng.randint(1, 10)
            weights = [rng.randint(1, 5) for _ in range(k)]
            mask = [rng.random() < 0.5 for _ in range(k)]
            a = make_assessment(mask, weights)
            fold = sum(w for w, m in zip(weights, a.matches) if m.matched)
            assert a.raw_score == fold

    def test_final_score_invariant_under_expression_flag(self):
        weights = [1, 2, 2]
        mask = [True, False, True]
        plain = make_assessment(mask, weights, flag=0)
        flagged = make_assessment(mask, weights, flag=1)
        assert plain.final_score == flagged.final_score

    def test_verification_rejects_out_of_range(self):
        with pytest.raises(ValidationError):
            VerificationReport({"accuracy": 6}, {"accuracy": ""}, "m1")
        with pytest.raises(ValidationError):
            VerificationReport({"accuracy": 0}, {"accuracy": ""}, "m1")

    def test_verification_rejects_missing_or_extra_criterion(self):
        criteria = ("accuracy", "clarity")
        with pytest.raises(ValidationError):
            build_verification_report(criteria, {"accuracy": 5}, {}, "m1")
        with pytest.raises(ValidationError):
            build_verification_report(
                criteria, {"accuracy": 5, "clarity": 4, "bonus": 3}, {}, "m1"
            )

    def test_loop_config_requires_distinct_roles(self):
        with pytest.raises(ValidationError):
            LoopConfig(generator_role="generator", verifier_role="generator")

    def test_feedback_version_total_must_match_items(self):
        items = (FeedbackItem("c1", 1, "good"), FeedbackItem("c2", 0, "missing"))
        with pytest.raises(ValidationError):
            FeedbackVersion(
                id="v1", answer_id="a1", items=items, total_mark=5, verification=None,
                iteration=1, origin="loop", parent_version_id=None, safety_passed=False,
            )

    def test_empty_answer_rejected(self):
        with pytest.raises(ValidationError):
            StudentAnswer("a1", "s1", "q1", "   ")

    def test_topic_cannot_parent_itself(self):
        with pytest.raises(ValidationError):
            Topic("t1", "Topic", "T1", parent_id="t1")


class TestSerialisation:
    def test_question_round_trip(self):
        q = make_question()
        doc = to_doc(q)
        assert doc["schema"] == "question/1"
        assert from_doc(doc) == q

    def test_scheme_round_trip(self):
        s = make_scheme([2, 3])
        assert from_doc(mark_scheme_doc(s)) == s

    def test_answer_round_trip(self):
        a = StudentAnswer("a1", "s1", "q1", "text", utcnow())
        assert answer_from(answer_doc(a)) == a

    def test_assessment_doc_exposes_concept_weight_match_triples(self):
        scheme = make_scheme([1, 2])
        a = make_assessment([True, False], [1, 2])
        doc = assessment_doc(a, scheme)
        assert doc["schema"] == "assessment/1"
        triples = [(c["description"], c["weight"], c["matched"]) for c in doc["concepts"]]
        assert triples == [("concept 1", 1, True), ("concept 2", 2, False)]
        assert assessment_from(doc) == a

    def test_feedback_version_round_trip(self):
        report = build_verification_report(
            ("accuracy",), {"accuracy": 5}, {"accuracy": "fine"}, "ver-1"
        )
        v = FeedbackVersion(
            id="v1",
            answer_id="a1",
            items=(FeedbackItem("c1", 1, "well done"),),
            total_mark=1,
            verification=report,
            iteration=2,
            origin="teacher_revision",
            parent_version_id="v0",
            safety_passed=True,
        )
        assert feedback_version_from(feedback_version_doc(v)) == v

    def test_dump_line_is_stable(self):
        doc = question_doc(make_question())
        assert dump_line(doc) == dump_line(dict(reversed(list(doc.items()))))
