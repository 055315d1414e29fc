"""Feedback generation with a verify-and-revise loop and a safety gate.

The loop generates per-concept feedback, has a second model score it on the
configured criteria, and revises conditioned on the verifier's justifications
until every criterion reaches the threshold or the iteration cap is hit. The
best iterate wins by the lexicographic key (min score, mean score, earliest
iteration) - min first because that is what the stopping rule gates on.

Marks are never produced here: awarded marks come from the assessment's
concept matches and stay fixed through generation, verification, revision and
safety rewriting. Only comment text changes.
"""

from __future__ import annotations

import logging
import re
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

from ..domain import (
    Assessment,
    FeedbackItem,
    FeedbackVersion,
    IterationRecord,
    LoopConfig,
    MarkScheme,
    Question,
    StudentAnswer,
    VerificationReport,
    build_verification_report,
)
from ..errors import (
    GeneratorFormatError,
    LoopFailed,
    ProviderError,
    SameModelConfigError,
    ValidationError,
    VerifierFormatError,
)
from ..gateway import Gateway
from ..memory import FeedbackStrategy
from . import prompts

logger = logging.getLogger(__name__)

_COMMENT_LINE = re.compile(r"^\s*(\d+)\s*[:.]\s*(.+)$")
_VERIFY_LINE = re.compile(r"^\s*([A-Za-z_ ]+?)\s*[:.]\s*(-?\d+)\s*(?:\|\s*(.*))?$")


@dataclass(frozen=True)
class FeedbackContext:
    """Everything the loop needs to know about one answer."""

    question: Question
    scheme: MarkScheme
    answer: StudentAnswer
    assessment: Assessment
    strategy: FeedbackStrategy

    @property
    def awarded(self) -> dict[str, int]:
        return {
            c.concept_id: (c.weight if m.matched else 0)
            for c, m in zip(self.scheme.concepts, self.assessment.matches)
        }


@dataclass(frozen=True)
class RevisionOutcome:
    """Per-answer result of a (possibly quiz-wide) revision."""

    answer_id: str
    version: FeedbackVersion | None = None
    error: str | None = None


def _new_id() -> str:
    return uuid.uuid4().hex


class FeedbackEngine:
    def __init__(self, gateway: Gateway, config: LoopConfig | None = None,
                 fanout_parallelism: int = 4):
        self._gateway = gateway
        self.config = config or LoopConfig()
        self._fanout = max(1, fanout_parallelism)
        self._check_model_separation()

    def _check_model_separation(self) -> None:
        gen = self._gateway.describe_role(self.config.generator_role)
        ver = self._gateway.describe_role(self.config.verifier_role)
        if (gen.provider_id, gen.model_id) == (ver.provider_id, ver.model_id):
            raise SameModelConfigError(
                f"verifier role {ver.name!r} shares model {ver.model_id!r} "
                "with the generator"
            )

    # -- generation ---------------------------------------------------------

    def _parse_comments(self, text: str, count: int) -> list[str]:
        found: dict[int, str] = {}
        for line in text.splitlines():
            m = _COMMENT_LINE.match(line)
            if not m:
                continue
            idx = int(m.group(1))
            if 1 <= idx <= count and idx not in found:
                found[idx] = m.group(2).strip()
        if set(found) != set(range(1, count + 1)):
            raise GeneratorFormatError(
                f"generator covered concepts {sorted(found)}, expected 1..{count}"
            )
        return [found[i] for i in range(1, count + 1)]

    def _generate_items(
        self,
        ctx: FeedbackContext,
        suggestion: str | None = None,
        prior_items: tuple[FeedbackItem, ...] | None = None,
        verifier_notes: dict[str, str] | None = None,
        budget: str | None = None,
    ) -> tuple[FeedbackItem, ...]:
        prompt = prompts.generate_prompt(
            ctx.question, ctx.scheme, ctx.answer, ctx.awarded, ctx.strategy,
            suggestion=suggestion, prior_items=prior_items, verifier_notes=verifier_notes,
        )
        try:
            text = self._gateway.complete(self.config.generator_role, prompt, budget).text
            comments = self._parse_comments(text, len(ctx.scheme.concepts))
        except GeneratorFormatError as first:
            logger.warning("generator format error, re-asking: %s", first)
            text = self._gateway.complete(
                self.config.generator_role, f"{prompt}\n{prompts.REMINDER}", budget
            ).text
            comments = self._parse_comments(text, len(ctx.scheme.concepts))
        awarded = ctx.awarded
        return tuple(
            FeedbackItem(c.concept_id, awarded[c.concept_id], comment)
            for c, comment in zip(ctx.scheme.concepts, comments)
        )

    def generate_feedback(self, ctx: FeedbackContext,
                          budget: str | None = None) -> FeedbackVersion:
        """One unverified draft; the loop wraps this with verification."""
        items = self._generate_items(ctx, budget=budget)
        return FeedbackVersion(
            id=_new_id(),
            answer_id=ctx.answer.id,
            items=items,
            total_mark=ctx.assessment.final_score,
            verification=None,
            iteration=1,
            origin="loop",
            parent_version_id=None,
            safety_passed=False,
        )

    # -- verification -------------------------------------------------------

    def _parse_verification(self, text: str) -> VerificationReport:
        criteria = self.config.criteria
        scores: dict[str, int] = {}
        notes: dict[str, str] = {}
        for line in text.splitlines():
            m = _VERIFY_LINE.match(line)
            if not m:
                continue
            name = m.group(1).strip().lower().replace(" ", "_")
            if name not in criteria or name in scores:
                continue
            value = int(m.group(2))
            clamped = max(1, min(5, value))
            if clamped != value:
                logger.warning("verifier score %s for %r clamped to %s", value, name, clamped)
            scores[name] = clamped
            notes[name] = (m.group(3) or "").strip()
        missing = [c for c in criteria if c not in scores]
        if missing:
            raise VerifierFormatError(f"verifier omitted criteria {missing}")
        verifier_model = self._gateway.describe_role(self.config.verifier_role).model_id
        return build_verification_report(criteria, scores, notes, verifier_model)

    def verify(self, items: Sequence[FeedbackItem] | FeedbackVersion,
               ctx: FeedbackContext) -> VerificationReport:
        if isinstance(items, FeedbackVersion):
            items = items.items
        prompt = prompts.verify_prompt(ctx.question, ctx.answer, tuple(items),
                                       self.config.criteria)
        try:
            text = self._gateway.complete(self.config.verifier_role, prompt).text
            return self._parse_verification(text)
        except VerifierFormatError as first:
            logger.warning("verifier format error, re-asking: %s", first)
            text = self._gateway.complete(
                self.config.verifier_role, f"{prompt}\n{prompts.REMINDER}"
            ).text
            return self._parse_verification(text)

    # -- the loop -----------------------------------------------------------

    def refine_loop(
        self,
        ctx: FeedbackContext,
        suggestion: str | None = None,
        origin: str = "loop",
        parent_version_id: str | None = None,
        generator_budget: str | None = None,
    ) -> FeedbackVersion:
        config = self.config
        gen_model = self._gateway.describe_role(config.generator_role).model_id
        ver_model = self._gateway.describe_role(config.verifier_role).model_id
        budget_name = generator_budget or self._gateway.describe_role(
            config.generator_role
        ).default_budget

        records: list[IterationRecord] = []
        iterates: list[tuple[int, tuple[FeedbackItem, ...], VerificationReport]] = []
        prior_items: tuple[FeedbackItem, ...] | None = None
        prior_notes: dict[str, str] | None = None

        for t in range(1, config.t_max + 1):
            start = time.perf_counter()
            items = self._generate_items(
                ctx,
                suggestion=suggestion,
                prior_items=prior_items,
                verifier_notes=prior_notes,
                budget=generator_budget,
            )
            note = ""
            try:
                report = self.verify(items, ctx)
            except VerifierFormatError as exc:
                report = None
                note = f"verification unparseable: {exc}"
                logger.warning("iteration %s: %s", t, note)
            records.append(
                IterationRecord(
                    iteration=t,
                    scores=dict(report.scores) if report else None,
                    generator_model_id=gen_model,
                    verifier_model_id=ver_model,
                    generator_budget=budget_name,
                    latency_seconds=time.perf_counter() - start,
                    note=note,
                )
            )
            prior_items = items
            if report is not None:
                iterates.append((t, items, report))
                prior_notes = dict(report.justifications)
                if report.min_score >= config.tau:
                    break
            else:
                prior_notes = {"general": "previous verification failed; improve overall quality"}

        if not iterates:
            raise LoopFailed(
                f"all {config.t_max} iterations failed verification parsing",
                provenance=records,
            )

        best_t, best_items, best_report = max(
            iterates,
            key=lambda it: (it[2].min_score, it[2].mean_score, -it[0]),
        )
        return FeedbackVersion(
            id=_new_id(),
            answer_id=ctx.answer.id,
            items=best_items,
            total_mark=ctx.assessment.final_score,
            verification=best_report,
            iteration=best_t,
            origin=origin,
            parent_version_id=parent_version_id,
            safety_passed=False,
            provenance=tuple(records),
        )

    # -- teacher revision ----------------------------------------------------

    def revise_with_suggestion(
        self,
        feedback: FeedbackVersion,
        suggestion: str,
        scope: str = "single",
        ctx: FeedbackContext | None = None,
        quiz_items: Sequence[tuple[FeedbackContext, FeedbackVersion]] | None = None,
    ) -> list[RevisionOutcome]:
        """Revise one feedback version or fan out across a whole quiz.

        Teacher intervention signals dissatisfaction, so the generator runs
        at the extended budget. Quiz-wide revision is per-item fault
        isolated: one failing sibling never aborts the rest.
        """
        if not suggestion.strip():
            raise ValidationError("revision suggestion must be non-empty")
        if scope not in ("single", "quiz_wide"):
            raise ValidationError(f"unknown revision scope {scope!r}")

        if scope == "single":
            if ctx is None:
                raise ValidationError("single revision requires the answer context")
            return [self._revise_one(ctx, feedback, suggestion)]

        if not quiz_items:
            return []
        with ThreadPoolExecutor(max_workers=min(self._fanout, len(quiz_items))) as pool:
            futures = [
                pool.submit(self._revise_one_guarded, item_ctx, latest, suggestion)
                for item_ctx, latest in quiz_items
            ]
            return [f.result() for f in futures]

    def _revise_one(self, ctx: FeedbackContext, feedback: FeedbackVersion,
                    suggestion: str) -> RevisionOutcome:
        version = self.refine_loop(
            ctx,
            suggestion=suggestion,
            origin="teacher_revision",
            parent_version_id=feedback.id,
            generator_budget="extended",
        )
        version = self.safety_filter(version)
        return RevisionOutcome(answer_id=ctx.answer.id, version=version)

    def _revise_one_guarded(self, ctx: FeedbackContext, feedback: FeedbackVersion,
                            suggestion: str) -> RevisionOutcome:
        try:
            return self._revise_one(ctx, feedback, suggestion)
        except Exception as exc:  # noqa: BLE001 - fault isolation is the contract
            logger.error("revision failed for answer %s: %s", ctx.answer.id, exc)
            return RevisionOutcome(answer_id=ctx.answer.id, error=str(exc))

    # -- safety gate ---------------------------------------------------------

    def _safety_verdict(self, comment: str) -> tuple[bool, str]:
        text = self._gateway.complete(
            self.config.safety_role, prompts.safety_prompt(comment)
        ).text
        lowered = text.lower()
        reason = text.split("|", 1)[1].strip() if "|" in text else ""
        if "approve" in lowered:
            return True, reason
        # Anything else, including unparseable output, fails closed.
        return False, reason or text.strip()[:120]

    def safety_filter(self, feedback: FeedbackVersion) -> FeedbackVersion:
        """Judge every comment; rewrite failures once; withhold if still bad.

        Provider failures also withhold the version: the gate fails closed
        toward students, and teachers see the draft with the notes banner.
        """
        items = list(feedback.items)
        notes: list[str] = []
        passed = True
        try:
            for idx, item in enumerate(items):
                ok, reason = self._safety_verdict(item.comment)
                if ok:
                    continue
                notes.append(f"comment {idx + 1} rejected: {reason or 'unspecified'}")
                rewritten = self._gateway.complete(
                    self.config.generator_role,
                    prompts.rewrite_prompt(item.comment, reason or "inappropriate language"),
                ).text.strip()
                ok2, reason2 = self._safety_verdict(rewritten)
                if ok2:
                    items[idx] = replace(item, comment=rewritten)
                    notes.append(f"comment {idx + 1} rewritten and approved")
                else:
                    passed = False
                    notes.append(
                        f"comment {idx + 1} still rejected after rewrite: "
                        f"{reason2 or 'unspecified'}"
                    )
        except ProviderError as exc:
            passed = False
            notes.append(f"safety gate unavailable, version withheld: {exc}")
        return replace(
            feedback,
            items=tuple(items),
            safety_passed=passed,
            safety_notes=feedback.safety_notes + tuple(notes),
        )
