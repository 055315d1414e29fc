"""Asynchronous per-answer pipeline: assess, remember, plan, refine, gate.

Submission enqueues a job on a bounded worker pool and returns immediately;
the answer's job document tracks queued/running/complete/failed so clients
can poll. Provider failures retry the whole job a configured number of times
before the job is marked failed.
"""

from __future__ import annotations

import logging
import re
import threading
from concurrent.futures import ThreadPoolExecutor

from ..assessor import Assessor
from ..domain import Assessment, MarkScheme, Question, StudentAnswer
from ..domain.serialize import assessment_doc
from ..errors import JudgeFormatError, MarkloopError
from ..feedback import FeedbackContext, FeedbackEngine
from ..gateway import Gateway
from ..memory import (
    ConceptStore,
    MemoryNode,
    MemoryQuery,
    format_digest,
    node_doc,
    select_strategy,
)
from .storage import Store

logger = logging.getLogger(__name__)

_SUB_LINE = re.compile(r"^\s*(\d+)\s*[:.]\s*(.+)$")

JOB_STATES = ("queued", "running", "complete", "failed")


def decompose_question(gateway: Gateway, question: Question, scheme: MarkScheme
                       ) -> list[str] | None:
    """Ask a judge to split a multi-concept question into sub-questions.

    Returns None when the output is unusable; the caller falls back to a
    single node for the whole question.
    """
    if len(scheme.concepts) < 2:
        return None
    concept_lines = "\n".join(
        f"{i}. {c.description}" for i, c in enumerate(scheme.concepts, start=1)
    )
    prompt = (
        "TASK: decompose\n"
        f"QUESTION: {question.prompt_text}\n"
        "KEY CONCEPTS:\n"
        f"{concept_lines}\n"
        "Split the question into one focused sub-question per key concept.\n"
        "Reply with exactly one line per concept:\n"
        "<concept number>: <sub-question>"
    )
    try:
        text = gateway.complete("assessor_judge", prompt).text
    except MarkloopError as exc:
        logger.warning("decomposition call failed (%s); one node per question", exc)
        return None
    found: dict[int, str] = {}
    for line in text.splitlines():
        m = _SUB_LINE.match(line)
        if m:
            found.setdefault(int(m.group(1)), m.group(2).strip())
    if set(found) != set(range(1, len(scheme.concepts) + 1)):
        logger.info("decomposition output incomplete; one node per question")
        return None
    return [found[i] for i in range(1, len(scheme.concepts) + 1)]


def build_memory_nodes(
    gateway: Gateway,
    answer: StudentAnswer,
    question: Question,
    scheme: MarkScheme,
    assessment: Assessment,
) -> list[MemoryNode]:
    subs = decompose_question(gateway, question, scheme)
    if subs is None:
        digest = format_digest(
            assessment.missed_concept_ids, assessment.matched_concept_ids,
            note=f"scored {assessment.final_score}/{scheme.total_weight}",
        )
        vector = gateway.embed([question.prompt_text])[0]
        return [
            MemoryNode(
                id=f"{answer.id}-n0",
                student_id=answer.student_id,
                sub_question_text=question.prompt_text,
                topics=question.topics,
                embedding=vector,
                assessment_digest=digest,
                created_at=answer.submitted_at,
            )
        ]
    vectors = gateway.embed(subs)
    nodes = []
    for idx, (sub_text, vector, match, concept) in enumerate(
        zip(subs, vectors, assessment.matches, scheme.concepts), start=1
    ):
        digest = format_digest(
            [] if match.matched else [concept.concept_id],
            [concept.concept_id] if match.matched else [],
            note=match.evidence,
        )
        nodes.append(
            MemoryNode(
                id=f"{answer.id}-n{idx}",
                student_id=answer.student_id,
                sub_question_text=sub_text,
                topics=question.topics,
                embedding=vector,
                assessment_digest=digest,
                created_at=answer.submitted_at,
            )
        )
    return nodes


class Pipeline:
    def __init__(
        self,
        store: Store,
        gateway: Gateway,
        assessor: Assessor,
        engine: FeedbackEngine,
        concept_store: ConceptStore,
        topic_parents: dict[str, str | None] | None = None,
        retrieval_k: int = 5,
        workers: int = 2,
        retries: int = 1,
    ):
        self._store = store
        self._gateway = gateway
        self._assessor = assessor
        self._engine = engine
        self._memory = concept_store
        self._topic_parents = topic_parents or {}
        self._k = retrieval_k
        self._retries = retries
        self._pool = ThreadPoolExecutor(max_workers=max(1, workers))
        self._inflight: set[str] = set()
        self._inflight_lock = threading.Lock()

    def shutdown(self) -> None:
        self._pool.shutdown(wait=True)

    def job_status(self, answer_id: str) -> dict:
        doc = self._store.get_doc("job", answer_id)
        return doc or {"schema": "job/1", "answer_id": answer_id, "status": "unknown",
                       "error": None}

    def _set_status(self, answer_id: str, status: str, error: str | None = None) -> None:
        self._store.put_doc("job", answer_id, {
            "schema": "job/1", "answer_id": answer_id, "status": status, "error": error,
        })

    def submit(self, answer: StudentAnswer, question: Question, scheme: MarkScheme) -> None:
        with self._inflight_lock:
            self._inflight.add(answer.id)
        self._set_status(answer.id, "queued")
        self._pool.submit(self._run_guarded, answer, question, scheme)

    def wait_idle(self, timeout: float = 10.0) -> bool:
        """Block until no submitted job is in flight. Test/CLI convenience."""
        import time

        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            with self._inflight_lock:
                if not self._inflight:
                    return True
            time.sleep(0.01)
        return False

    def _run_guarded(self, answer: StudentAnswer, question: Question,
                     scheme: MarkScheme) -> None:
        try:
            attempts = 0
            while True:
                try:
                    self._set_status(answer.id, "running")
                    self._run(answer, question, scheme)
                    self._set_status(answer.id, "complete")
                    return
                except MarkloopError as exc:
                    attempts += 1
                    if attempts > self._retries:
                        logger.error("pipeline failed for answer %s: %s", answer.id, exc)
                        self._set_status(answer.id, "failed", error=str(exc))
                        return
                    logger.warning("pipeline retry %s for answer %s after: %s",
                                   attempts, answer.id, exc)
        finally:
            with self._inflight_lock:
                self._inflight.discard(answer.id)

    def _run(self, answer: StudentAnswer, question: Question, scheme: MarkScheme) -> None:
        assessment = self._assessor.assess(answer, question, scheme)
        self._store.put_doc("assessment", answer.id, assessment_doc(assessment, scheme))

        for node in build_memory_nodes(self._gateway, answer, question, scheme, assessment):
            self._memory.add_record(node)
            self._store.put_doc("memory_node", node.id, node_doc(node))

        retrieved = self._memory.retrieve(
            MemoryQuery(
                query_text=question.prompt_text,
                topics=question.topics,
                k=self._k,
                student_id=answer.student_id,
            )
        )
        strategy = select_strategy(
            assessment, retrieved,
            question_topics=question.topics,
            topic_parents=self._topic_parents,
        )
        self._store.put_doc("strategy", answer.id, {
            "schema": "strategy/1",
            "answer_id": answer.id,
            "strategy_kind": strategy.strategy_kind,
            "rationale": strategy.rationale,
            "evidence_node_ids": list(strategy.evidence_node_ids),
        })

        ctx = FeedbackContext(question, scheme, answer, assessment, strategy)
        version = self._engine.refine_loop(ctx)
        version = self._engine.safety_filter(version)
        with self._store.answer_lock(answer.id):
            self._store.append_version(version)
