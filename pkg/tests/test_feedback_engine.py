from __future__ import annotations

import random

import pytest

from markloop.domain import Assessment, ConceptMatch, LoopConfig
from markloop.errors import (
    LoopFailed,
    SameModelConfigError,
    ValidationError,
    VerifierFormatError,
)
from markloop.feedback import FeedbackContext, FeedbackEngine
from markloop.fixtures import (
    PHLOEM_COMMENTS,
    PHLOEM_QUESTION,
    PHLOEM_REVISED_COMMENTS,
    PHLOEM_SCHEME,
    PHLOEM_VERIFY_REPLY,
    TEACHER_SUGGESTIONS,
    phloem_answer,
)
from markloop.gateway import Gateway, ModelRole, ScriptedProvider, ScriptRule
from markloop.memory import FeedbackStrategy

from conftest import build_gateway

GOLDEN_MASK = [False, True, False, True, True]


def make_assessment(mask=None, answer_id="a-phloem") -> Assessment:
    mask = GOLDEN_MASK if mask is None else mask
    raw = sum(1 for hit in mask if hit)
    return Assessment(
        answer_id=answer_id,
        matches=tuple(
            ConceptMatch(c.concept_id, hit, "evidence")
            for c, hit in zip(PHLOEM_SCHEME.concepts, mask)
        ),
        raw_score=raw,
        prompt_score=raw,
        reflection_triggered=False,
        reflection_rounds=0,
        expression_flag=0,
        final_score=raw,
    )


def make_context(mask=None, answer_id="a-phloem", strategy_kind="reinforce_partial"
                 ) -> FeedbackContext:
    return FeedbackContext(
        question=PHLOEM_QUESTION,
        scheme=PHLOEM_SCHEME,
        answer=phloem_answer(answer_id=answer_id),
        assessment=make_assessment(mask, answer_id=answer_id),
        strategy=FeedbackStrategy(strategy_kind, "test rationale"),
    )


def comment_lines(comments) -> str:
    return "\n".join(f"{i}: {c}" for i, c in enumerate(comments, start=1))


def verify_reply(scores: dict[str, int]) -> str:
    return "\n".join(f"{name}: {value} | scripted note" for name, value in scores.items())


def engine_rules(comments=PHLOEM_COMMENTS, verify=PHLOEM_VERIFY_REPLY,
                 safety="APPROVE") -> list[ScriptRule]:
    return [
        ScriptRule(responses=(comment_lines(comments),), contains="TASK: feedback-generate"),
        ScriptRule(responses=(comment_lines(comments),), contains="TASK: feedback-revise"),
        ScriptRule(responses=(verify,), contains="TASK: feedback-verify"),
        ScriptRule(responses=(safety,), contains="TASK: safety-check"),
    ]


def make_engine(rules, config: LoopConfig | None = None, **kwargs):
    gw = build_gateway(rules, **kwargs)
    return FeedbackEngine(gw, config or LoopConfig()), gw


class TestGenerate:
    def test_golden_marks_and_total(self):
        engine, _ = make_engine(engine_rules())
        draft = engine.generate_feedback(make_context())
        assert [i.awarded_mark for i in draft.items] == [0, 1, 0, 1, 1]
        assert draft.total_mark == 3
        assert [i.comment for i in draft.items] == PHLOEM_COMMENTS
        assert draft.verification is None

    def test_all_matched_totals_max_marks(self):
        engine, _ = make_engine(engine_rules())
        draft = engine.generate_feedback(make_context(mask=[True] * 5))
        assert draft.total_mark == PHLOEM_QUESTION.max_marks
        assert all(i.awarded_mark == 1 for i in draft.items)

    def test_strategy_text_reaches_generator_prompt(self):
        comments = [f"comment {i} echoing the recurring gradient error" for i in range(1, 6)]
        rules = [
            ScriptRule(
                responses=(comment_lines(comments),),
                contains=("TASK: feedback-generate", "address_misconception"),
            ),
        ] + engine_rules()
        engine, _ = make_engine(rules)
        draft = engine.generate_feedback(make_context(strategy_kind="address_misconception"))
        assert "recurring gradient error" in draft.items[0].comment

    def test_reask_on_malformed_generator_output(self):
        rules = [
            ScriptRule(
                responses=("not parseable", comment_lines(PHLOEM_COMMENTS)),
                contains="TASK: feedback-generate",
            ),
        ] + engine_rules()[1:]
        engine, gw = make_engine(rules)
        draft = engine.generate_feedback(make_context())
        assert draft.total_mark == 3
        assert gw.call_count("generator") == 2


class TestVerify:
    def test_golden_scores(self):
        engine, _ = make_engine(engine_rules())
        ctx = make_context()
        report = engine.verify(engine.generate_feedback(ctx), ctx)
        assert report.scores == {"accuracy": 5, "specificity": 5, "clarity": 4}
        assert report.verifier_model_id == "ver-1"
        assert all(report.justifications.values())

    def test_out_of_scale_score_clamped(self):
        reply = verify_reply({"accuracy": 6, "specificity": 5, "clarity": 4})
        engine, _ = make_engine(engine_rules(verify=reply))
        ctx = make_context()
        report = engine.verify(engine.generate_feedback(ctx), ctx)
        assert report.scores["accuracy"] == 5

    def test_missing_criterion_raises_after_reask(self):
        reply = verify_reply({"accuracy": 5, "specificity": 5})
        engine, gw = make_engine(engine_rules(verify=reply))
        ctx = make_context()
        with pytest.raises(VerifierFormatError):
            engine.verify(engine.generate_feedback(ctx), ctx)
        assert gw.call_count("verifier") == 2

    def test_same_model_config_rejected_at_engine_init(self):
        provider = ScriptedProvider(default="x")
        roles = {
            name: ModelRole(name, "scripted", "shared-model")
            for name in ("generator", "verifier", "safety", "assessor_judge",
                         "markscheme_author", "question_author", "embedder")
        }
        with pytest.raises(SameModelConfigError):
            Gateway(roles=roles, providers={"scripted": provider})


class TestRefineLoop:
    def test_immediate_pass_stops_at_one(self):
        engine, gw = make_engine(engine_rules())
        version = engine.refine_loop(make_context())
        assert version.iteration == 1
        assert len(version.provenance) == 1
        assert gw.call_count("verifier") == 1
        assert version.verification.scores == {"accuracy": 5, "specificity": 5, "clarity": 4}

    def test_constant_low_runs_to_cap_and_returns_first(self):
        low = verify_reply({"accuracy": 3, "specificity": 3, "clarity": 3})
        engine, gw = make_engine(engine_rules(verify=low))
        version = engine.refine_loop(make_context())
        assert gw.call_count("verifier") == 3  # T_max
        assert len(version.provenance) == 3
        assert version.iteration == 1  # lexicographic tie broken by earliest

    def test_late_pass_returns_later_better_iterate(self):
        rules = [
            ScriptRule(
                responses=(
                    verify_reply({"accuracy": 3, "specificity": 5, "clarity": 5}),
                    verify_reply({"accuracy": 4, "specificity": 4, "clarity": 4}),
                ),
                contains="TASK: feedback-verify",
            ),
        ] + engine_rules()[:2]
        engine, gw = make_engine(rules)
        version = engine.refine_loop(make_context())
        assert version.iteration == 2
        assert gw.call_count("verifier") == 2  # stopped early at t=2
        assert version.verification.min_score == 4

    def test_mark_conservation_through_revision_iterations(self):
        low_then_high = [
            verify_reply({"accuracy": 3, "specificity": 3, "clarity": 3}),
            verify_reply({"accuracy": 5, "specificity": 5, "clarity": 5}),
        ]
        rules = [
            ScriptRule(responses=tuple(low_then_high), contains="TASK: feedback-verify"),
            ScriptRule(responses=(comment_lines(PHLOEM_COMMENTS),),
                       contains="TASK: feedback-generate"),
            ScriptRule(responses=(comment_lines(PHLOEM_REVISED_COMMENTS),),
                       contains="TASK: feedback-revise"),
        ]
        engine, _ = make_engine(rules)
        version = engine.refine_loop(make_context())
        assert version.iteration == 2
        assert [i.awarded_mark for i in version.items] == [0, 1, 0, 1, 1]
        assert version.total_mark == 3

    def test_all_verifications_unparseable_raises_loop_failed(self):
        rules = [
            ScriptRule(responses=("???",), contains="TASK: feedback-verify"),
        ] + engine_rules()[:2]
        engine, _ = make_engine(rules)
        with pytest.raises(LoopFailed) as excinfo:
            engine.refine_loop(make_context())
        assert len(excinfo.value.provenance) == 3

    def test_single_iteration_cap_with_unparseable_verifier(self):
        rules = [
            ScriptRule(responses=("???",), contains="TASK: feedback-verify"),
        ] + engine_rules()[:2]
        engine, gw = make_engine(rules, config=LoopConfig(tau=4, t_max=1))
        with pytest.raises(LoopFailed) as excinfo:
            engine.refine_loop(make_context())
        assert len(excinfo.value.provenance) == 1
        assert gw.call_count("verifier") == 2  # one verify plus its re-ask

    def test_later_iterate_below_threshold_still_returned_when_best(self):
        # Verification of t=1 is unparseable; t=2 parses but stays below tau.
        rules = [
            ScriptRule(
                responses=("???", "???",
                           verify_reply({"accuracy": 3, "specificity": 3, "clarity": 3})),
                contains="TASK: feedback-verify",
            ),
        ] + engine_rules()[:2]
        engine, _ = make_engine(rules, config=LoopConfig(tau=4, t_max=2))
        version = engine.refine_loop(make_context())
        assert version.iteration == 2
        assert version.verification.min_score == 3
        assert version.provenance[0].scores is None
        assert version.provenance[1].scores is not None

    def test_provenance_records_model_separation(self):
        engine, _ = make_engine(engine_rules())
        version = engine.refine_loop(make_context())
        for record in version.provenance:
            assert record.generator_model_id != record.verifier_model_id

    def test_stop_rule_and_optimality_over_scripted_trajectories(self):
        rng = random.Random(77)
        config = LoopConfig(tau=4, t_max=3)
        for _ in range(12):
            trajectory = [
                {name: rng.randint(1, 5) for name in config.criteria}
                for _ in range(config.t_max)
            ]
            replies = tuple(verify_reply(scores) for scores in trajectory)
            rules = [
                ScriptRule(responses=replies, contains="TASK: feedback-verify"),
            ] + engine_rules()[:2]
            engine, gw = make_engine(rules, config=config)
            version = engine.refine_loop(make_context())

            # Re-evaluate the stop rule directly on the recorded trajectory.
            expected_rounds = config.t_max
            for t, scores in enumerate(trajectory, start=1):
                if min(scores.values()) >= config.tau:
                    expected_rounds = t
                    break
            assert gw.call_count("verifier") == expected_rounds
            assert len(version.provenance) == expected_rounds

            seen = trajectory[:expected_rounds]
            keys = [
                (min(s.values()), sum(s.values()) / len(s), -t)
                for t, s in enumerate(seen, start=1)
            ]
            best_key = max(keys)
            got = version.verification.scores
            got_key = (min(got.values()), sum(got.values()) / len(got),
                       -version.iteration)
            assert got_key == best_key


class TestRevision:
    def test_single_revision_conserves_marks_and_changes_comments(self):
        rules = [
            ScriptRule(responses=(comment_lines(PHLOEM_COMMENTS),),
                       contains="TASK: feedback-generate"),
            ScriptRule(responses=(comment_lines(PHLOEM_REVISED_COMMENTS),),
                       contains=("TASK: feedback-generate", "TEACHER SUGGESTION")),
            ScriptRule(responses=(PHLOEM_VERIFY_REPLY,), contains="TASK: feedback-verify"),
            ScriptRule(responses=("APPROVE",), contains="TASK: safety-check"),
        ]
        # Suggestion-scoped rule must come first to win matching.
        rules.insert(0, rules.pop(1))
        engine, _ = make_engine(rules)
        ctx = make_context()
        original = engine.refine_loop(ctx)
        (outcome,) = engine.revise_with_suggestion(
            original, TEACHER_SUGGESTIONS, scope="single", ctx=ctx
        )
        revised = outcome.version
        assert revised is not None
        assert revised.origin == "teacher_revision"
        assert revised.parent_version_id == original.id
        assert [i.awarded_mark for i in revised.items] == \
               [i.awarded_mark for i in original.items] == [0, 1, 0, 1, 1]
        assert revised.total_mark == original.total_mark == 3
        assert [i.comment for i in revised.items] != [i.comment for i in original.items]

    def test_revision_uses_extended_generator_budget(self):
        engine, gw = make_engine(engine_rules())
        ctx = make_context()
        original = engine.refine_loop(ctx)
        engine.revise_with_suggestion(original, "tighten it", scope="single", ctx=ctx)
        budgets = [r.budget for r in gw.records() if r.role == "generator"]
        assert budgets[0] == "normal"
        assert budgets[-1] == "extended"

    def test_empty_suggestion_rejected(self):
        engine, _ = make_engine(engine_rules())
        ctx = make_context()
        version = engine.refine_loop(ctx)
        with pytest.raises(ValidationError):
            engine.revise_with_suggestion(version, "   ", scope="single", ctx=ctx)

    def test_quiz_wide_creates_one_version_per_answer(self):
        engine, _ = make_engine(engine_rules())
        items = []
        for i in range(3):
            ctx = make_context(answer_id=f"a-phloem-{i}")
            items.append((ctx, engine.refine_loop(ctx)))
        outcomes = engine.revise_with_suggestion(
            items[0][1], "be more concise", scope="quiz_wide", quiz_items=items
        )
        assert len(outcomes) == 3
        assert all(o.version is not None for o in outcomes)
        for (ctx, original), outcome in zip(items, outcomes):
            assert outcome.version.parent_version_id == original.id
            assert outcome.version.answer_id == ctx.answer.id

    def test_quiz_wide_isolates_per_item_failures(self):
        engine, gw = make_engine(engine_rules())
        good = make_context(answer_id="a-good")
        bad = make_context(answer_id="a-bad")
        original = engine.refine_loop(good)

        class SplitEngine(FeedbackEngine):
            def refine_loop(self, ctx, **kwargs):
                if ctx.answer.id == "a-bad":
                    raise LoopFailed("scripted failure")
                return super().refine_loop(ctx, **kwargs)

        split = SplitEngine(gw, LoopConfig())
        outcomes = split.revise_with_suggestion(
            original, "fix", scope="quiz_wide",
            quiz_items=[(good, original), (bad, original)],
        )
        assert len(outcomes) == 2
        assert outcomes[0].version is not None and outcomes[0].error is None
        assert outcomes[1].version is None and "scripted failure" in outcomes[1].error


class TestSafetyFilter:
    def test_benign_feedback_passes(self):
        engine, _ = make_engine(engine_rules(safety="APPROVE"))
        version = engine.refine_loop(make_context())
        filtered = engine.safety_filter(version)
        assert filtered.safety_passed

    def test_reject_then_approved_rewrite(self):
        rules = [
            ScriptRule(responses=("REJECT | sarcastic tone", "APPROVE", "APPROVE"),
                       contains="TASK: safety-check"),
            ScriptRule(responses=("A kinder version of the comment.",),
                       contains="TASK: comment-rewrite"),
        ] + engine_rules()[:3]
        engine, _ = make_engine(rules)
        version = engine.refine_loop(make_context())
        filtered = engine.safety_filter(version)
        assert filtered.safety_passed
        assert filtered.items[0].comment == "A kinder version of the comment."
        assert any("rewritten" in note for note in filtered.safety_notes)
        # Marks untouched by the rewrite.
        assert [i.awarded_mark for i in filtered.items] == [0, 1, 0, 1, 1]

    def test_persistent_rejection_withholds(self):
        rules = [
            ScriptRule(responses=("REJECT | bad", "REJECT | still bad", "APPROVE"),
                       contains="TASK: safety-check"),
            ScriptRule(responses=("attempted rewrite",),
                       contains="TASK: comment-rewrite"),
        ] + engine_rules()[:3]
        engine, _ = make_engine(rules)
        filtered = engine.safety_filter(engine.refine_loop(make_context()))
        assert not filtered.safety_passed

    def test_provider_failure_withholds(self):
        rules = engine_rules()[:3]  # no safety rule at all -> ProviderError
        engine, _ = make_engine(rules)
        filtered = engine.safety_filter(engine.refine_loop(make_context()))
        assert not filtered.safety_passed
        assert any("withheld" in note for note in filtered.safety_notes)
