"""HTTP facade: role-authenticated endpoints for every workflow.

Submission is asynchronous: POST answer returns 202 with the answer id and
the feedback endpoint reports pending/ready/failed while the pipeline runs.
Students never receive a version the safety gate withheld; teachers see the
withheld draft together with its notes.
"""

from __future__ import annotations

import logging
import uuid
from typing import Optional

from fastapi import Depends, FastAPI, Header, HTTPException, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from ..classroom import (
    Authoring,
    CurriculumDoc,
    StudentGroup,
    User,
    create_group,
    flag_attention,
    group_doc,
    group_from_doc,
    is_allowed,
    mastery_cell_doc,
    performance_overview,
    quiz_doc,
    quiz_from_doc,
    update_membership,
)
from ..classroom.authoring import Quiz
from ..domain import Topic, utcnow, validate_mark_scheme
from ..domain.serialize import (
    answer_doc as answer_to_doc,
    answer_from,
    assessment_from,
    feedback_version_doc,
    mark_scheme_from,
    question_doc,
    question_from,
    to_doc,
)
from ..domain.model import StudentAnswer
from ..errors import (
    GenerationFormatError,
    MarkloopError,
    PermissionDenied,
    ProviderError,
    UnknownFeedback,
    WeightSumMismatch,
)
from ..feedback import FeedbackContext
from ..memory import FeedbackStrategy, node_from_doc
from .config import AppConfig, Runtime, build_runtime
from .pipeline import Pipeline
from .storage import Store

logger = logging.getLogger(__name__)


class GroupBody(BaseModel):
    id: Optional[str] = None
    subject: str
    year_level: int
    teacher_ids: list[str]
    student_ids: list[str] = Field(default_factory=list)


class MembershipBody(BaseModel):
    teacher_ids: Optional[list[str]] = None
    student_ids: Optional[list[str]] = None


class QuestionBody(BaseModel):
    topic_id: str
    mode: str
    text: str = ""
    max_marks: int = 0
    requirements: str = ""


class QuizBody(BaseModel):
    group_id: str
    question_ids: list[str]
    due_at: Optional[str] = None


class AnswerBody(BaseModel):
    question_id: str
    text: str


class ReviseBody(BaseModel):
    suggestion: str
    scope: str = "single"


class ServiceState:
    """Everything the endpoints need, rebuilt from storage on startup."""

    def __init__(self, config: AppConfig):
        self.runtime: Runtime = build_runtime(config)
        self.store = Store(config.storage_path)
        for doc in self.store.list_docs("memory_node"):
            self.runtime.concept_store.add_record(node_from_doc(doc))
        self.topic_parents = {
            doc["id"]: doc.get("parent_id") for doc in self.store.list_docs("topic")
        }
        self.pipeline = Pipeline(
            store=self.store,
            gateway=self.runtime.gateway,
            assessor=self.runtime.assessor,
            engine=self.runtime.engine,
            concept_store=self.runtime.concept_store,
            topic_parents=self.topic_parents,
            retrieval_k=config.memory.get("k", 5),
            workers=config.pipeline.get("workers", 2),
            retries=config.pipeline.get("retries", 1),
        )
        for doc in self.store.list_docs("curriculum_doc"):
            self.runtime.curriculum.add(
                CurriculumDoc(doc["topic_id"], doc["level"], doc["body"])
            )

    def close(self) -> None:
        self.pipeline.shutdown()
        self.store.close()

    # -- lookups ---------------------------------------------------------------

    def authoring(self) -> Authoring:
        topics = {
            doc["id"]: Topic(doc["id"], doc["name"], doc["curriculum_code"],
                             doc.get("parent_id"))
            for doc in self.store.list_docs("topic")
        }
        bank: dict[str, list] = {}
        for doc in self.store.list_docs("question"):
            if doc.get("source") == "bank":
                question = question_from(doc)
                for topic_id in question.topics:
                    bank.setdefault(topic_id, []).append(question)
        return Authoring(self.runtime.gateway, topics=topics, bank=bank,
                         curriculum=self.runtime.curriculum)

    def group(self, group_id: str) -> StudentGroup:
        doc = self.store.get_doc("student_group", group_id)
        if doc is None:
            raise HTTPException(404, f"no group {group_id!r}")
        return group_from_doc(doc)

    def question(self, question_id: str):
        doc = self.store.get_doc("question", question_id)
        if doc is None:
            raise HTTPException(404, f"no question {question_id!r}")
        return question_from(doc)

    def scheme(self, question_id: str):
        doc = self.store.get_doc("mark_scheme", question_id)
        if doc is None:
            raise HTTPException(404, f"no mark scheme for question {question_id!r}")
        return mark_scheme_from(doc)

    def quiz(self, quiz_id: str) -> Quiz:
        doc = self.store.get_doc("quiz", quiz_id)
        if doc is None:
            raise HTTPException(404, f"no quiz {quiz_id!r}")
        return quiz_from_doc(doc)

    def answer(self, answer_id: str) -> StudentAnswer:
        doc = self.store.get_doc("student_answer", answer_id)
        if doc is None:
            raise HTTPException(404, f"no answer {answer_id!r}")
        return answer_from(doc)

    def answer_link(self, answer_id: str) -> dict:
        doc = self.store.get_doc("answer_link", answer_id)
        if doc is None:
            raise HTTPException(404, f"no answer {answer_id!r}")
        return doc

    def approval(self, kind: str, entity_id: str) -> bool:
        doc = self.store.get_doc("approval", f"{kind}:{entity_id}")
        return bool(doc and doc.get("approved"))

    def set_approval(self, kind: str, entity_id: str, approved: bool = True,
                     **extra) -> None:
        self.store.put_doc("approval", f"{kind}:{entity_id}", {
            "schema": "approval/1", "kind": kind, "entity_id": entity_id,
            "approved": approved, **extra,
        })

    def group_of_student_answer(self, answer_id: str) -> StudentGroup:
        return self.group(self.answer_link(answer_id)["group_id"])

    def assessed_rows_for_group(self, group: StudentGroup):
        rows = []
        for link in self.store.list_docs("answer_link"):
            if link["group_id"] != group.id:
                continue
            answer_doc_ = self.store.get_doc("student_answer", link["answer_id"])
            assessment_doc_ = self.store.get_doc("assessment", link["answer_id"])
            if not answer_doc_ or not assessment_doc_:
                continue
            question = self.question(answer_doc_["question_id"])
            rows.append((answer_from(answer_doc_), assessment_from(assessment_doc_),
                         question))
        return rows

    def rebuild_context(self, answer_id: str) -> FeedbackContext:
        answer = self.answer(answer_id)
        question = self.question(answer.question_id)
        scheme = self.scheme(answer.question_id)
        assessment_doc_ = self.store.get_doc("assessment", answer_id)
        if assessment_doc_ is None:
            raise HTTPException(409, f"answer {answer_id!r} has no assessment yet")
        strategy_doc = self.store.get_doc("strategy", answer_id)
        strategy = FeedbackStrategy(
            strategy_doc["strategy_kind"], strategy_doc["rationale"],
            tuple(strategy_doc.get("evidence_node_ids", ())),
        ) if strategy_doc else FeedbackStrategy("generic", "context rebuilt without history")
        return FeedbackContext(
            question=question,
            scheme=scheme,
            answer=answer,
            assessment=assessment_from(assessment_doc_),
            strategy=strategy,
        )


def student_feedback_view(state: ServiceState, answer_id: str) -> dict:
    """What a student may see for one answer right now."""
    job = state.pipeline.job_status(answer_id)
    latest = state.store.latest_version(answer_id)
    if latest is not None and latest.safety_passed:
        assessment = state.store.get_doc("assessment", answer_id)
        note = None
        if assessment and assessment.get("expression_flag") == 1:
            note = ("Your answer has noticeable language or expression issues. "
                    "This note does not affect your marks.")
        return {
            "status": "ready",
            "feedback": feedback_version_doc(latest),
            "assessment": assessment,
            "expression_note": note,
        }
    if latest is not None and not latest.safety_passed:
        return {"status": "pending_review", "feedback": None}
    if job["status"] in ("queued", "running"):
        return {"status": "pending", "feedback": None}
    if job["status"] == "failed":
        return {"status": "failed", "error": job.get("error"), "feedback": None}
    return {"status": "pending", "feedback": None}


def create_app(config: AppConfig) -> FastAPI:
    app = FastAPI(title="markloop", version="0.1.0")
    state = ServiceState(config)
    app.state.service = state

    def current_user(authorization: str = Header(default="")) -> User:
        if not authorization.startswith("Bearer "):
            raise HTTPException(401, "missing bearer token")
        token = authorization.removeprefix("Bearer ").strip()
        user_id = state.runtime.tokens.get(token)
        if user_id is None:
            raise HTTPException(401, "unknown token")
        return state.runtime.directory.get(user_id)

    def require_teacher(user: User) -> None:
        if user.role != "teacher":
            raise HTTPException(403, "teacher role required")

    def groups_of(user: User) -> list[StudentGroup]:
        groups = [group_from_doc(d) for d in state.store.list_docs("student_group")]
        if user.role == "teacher":
            return [g for g in groups if user.id in g.teacher_ids]
        return [g for g in groups if user.id in g.student_ids]

    @app.exception_handler(MarkloopError)
    async def markloop_error_handler(request, exc: MarkloopError):
        from fastapi.responses import JSONResponse

        status = 422
        if isinstance(exc, PermissionDenied):
            status = 403
        elif isinstance(exc, ProviderError):
            status = 503
        elif isinstance(exc, UnknownFeedback):
            status = 404
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.get("/api/me")
    def me(user: User = Depends(current_user)):
        return {"id": user.id, "role": user.role, "name": user.name,
                "groups": [g.id for g in groups_of(user)]}

    # -- topics and bank -------------------------------------------------------

    @app.get("/api/topics")
    def list_topics(user: User = Depends(current_user)):
        return state.store.list_docs("topic")

    @app.get("/api/topics/{topic_id}/bank")
    def bank_for_topic(topic_id: str, user: User = Depends(current_user)):
        require_teacher(user)
        return [question_doc(q) for q in state.authoring().bank_questions(topic_id)]

    # -- groups ------------------------------------------------------------------

    @app.post("/api/groups", status_code=201)
    def post_group(body: GroupBody, user: User = Depends(current_user)):
        require_teacher(user)
        group = create_group(
            body.id or uuid.uuid4().hex,
            body.subject,
            body.year_level,
            set(body.teacher_ids) | {user.id},
            set(body.student_ids),
            state.runtime.directory,
        )
        state.store.put_doc("student_group", group.id, group_doc(group))
        return group_doc(group)

    @app.get("/api/groups/{group_id}")
    def get_group(group_id: str, user: User = Depends(current_user)):
        group = state.group(group_id)
        if user.id not in group.teacher_ids | group.student_ids:
            raise HTTPException(403, "not a member of this group")
        return group_doc(group)

    @app.put("/api/groups/{group_id}/membership")
    def put_membership(group_id: str, body: MembershipBody,
                       user: User = Depends(current_user)):
        group = state.group(group_id)
        if not is_allowed(user, "manage_group", group):
            raise HTTPException(403, "not a teacher of this group")
        updated = update_membership(
            group,
            state.runtime.directory,
            teacher_ids=set(body.teacher_ids) if body.teacher_ids is not None else None,
            student_ids=set(body.student_ids) if body.student_ids is not None else None,
        )
        state.store.put_doc("student_group", updated.id, group_doc(updated))
        return group_doc(updated)

    # -- questions and schemes ---------------------------------------------------

    @app.post("/api/questions", status_code=201)
    def post_question(body: QuestionBody, user: User = Depends(current_user)):
        require_teacher(user)
        try:
            question, needs_approval = state.authoring().author_question(
                body.topic_id, body.mode, text=body.text,
                max_marks=body.max_marks, requirements=body.requirements,
            )
        except GenerationFormatError as exc:
            raise HTTPException(503, f"question generation failed: {exc}") from exc
        state.store.put_doc("question", question.id, question_doc(question))
        state.set_approval("question", question.id, approved=not needs_approval)
        return {"question": question_doc(question), "needs_approval": needs_approval}

    @app.post("/api/questions/{question_id}/approve")
    def approve_question(question_id: str, user: User = Depends(current_user)):
        require_teacher(user)
        state.question(question_id)
        state.set_approval("question", question_id)
        return {"approved": True}

    @app.post("/api/questions/{question_id}/mark-scheme", status_code=201)
    def post_mark_scheme(question_id: str, user: User = Depends(current_user)):
        require_teacher(user)
        question = state.question(question_id)
        try:
            scheme, grounding_missing = state.authoring().generate_mark_scheme(question)
        except WeightSumMismatch as exc:
            raise HTTPException(422, f"scheme generation failed after repair: {exc}") from exc
        except GenerationFormatError as exc:
            raise HTTPException(503, f"scheme generation failed: {exc}") from exc
        state.store.put_doc("mark_scheme", question_id, to_doc(scheme))
        state.set_approval("mark_scheme", question_id, approved=False,
                           grounding_missing=grounding_missing)
        return {"scheme": to_doc(scheme), "grounding_missing": grounding_missing,
                "needs_approval": True}

    @app.post("/api/questions/{question_id}/mark-scheme/approve")
    def approve_scheme(question_id: str, user: User = Depends(current_user)):
        require_teacher(user)
        validate_mark_scheme(state.scheme(question_id), state.question(question_id))
        state.set_approval("mark_scheme", question_id)
        return {"approved": True}

    # -- quizzes --------------------------------------------------------------------

    @app.post("/api/quizzes", status_code=201)
    def post_quiz(body: QuizBody, user: User = Depends(current_user)):
        group = state.group(body.group_id)
        if not is_allowed(user, "manage_quizzes", group):
            raise HTTPException(403, "not a teacher of this group")
        for question_id in body.question_ids:
            question = state.question(question_id)
            if not state.approval("question", question_id):
                raise HTTPException(422, f"question {question_id!r} is not approved")
            scheme = state.scheme(question_id)
            validate_mark_scheme(scheme, question)
            if not state.approval("mark_scheme", question_id):
                raise HTTPException(
                    422, f"mark scheme for {question_id!r} is not approved"
                )
        quiz = Quiz(
            id=uuid.uuid4().hex,
            group_id=body.group_id,
            question_ids=tuple(body.question_ids),
            assigned_at=utcnow().isoformat(),
            due_at=body.due_at,
        )
        state.store.put_doc("quiz", quiz.id, quiz_doc(quiz))
        return quiz_doc(quiz)

    @app.get("/api/quizzes/{quiz_id}")
    def get_quiz(quiz_id: str, user: User = Depends(current_user)):
        quiz = state.quiz(quiz_id)
        group = state.group(quiz.group_id)
        if user.id not in group.teacher_ids | group.student_ids:
            raise HTTPException(403, "not a member of this group")
        questions = [question_doc(state.question(qid)) for qid in quiz.question_ids]
        return {"quiz": quiz_doc(quiz), "questions": questions}

    # -- answers and the pipeline ------------------------------------------------

    @app.post("/api/quizzes/{quiz_id}/answers", status_code=202)
    def post_answer(
        quiz_id: str,
        body: AnswerBody,
        response: Response,
        user: User = Depends(current_user),
        idempotency_key: str = Header(default="", alias="Idempotency-Key"),
    ):
        quiz = state.quiz(quiz_id)
        group = state.group(quiz.group_id)
        if not is_allowed(user, "submit_answer", group):
            raise HTTPException(403, "not a student of this group")
        if body.question_id not in quiz.question_ids:
            raise HTTPException(422, "question is not part of this quiz")
        if not body.text.strip():
            raise HTTPException(422, "answer text is empty")

        if idempotency_key:
            previous = state.store.get_doc("idempotency",
                                           f"{user.id}:{idempotency_key}")
            if previous is not None:
                return {"answer_id": previous["answer_id"], "status": "accepted",
                        "replayed": True}

        for link in state.store.list_docs("answer_link"):
            if (link["quiz_id"] == quiz_id and link["question_id"] == body.question_id
                    and link["student_id"] == user.id):
                raise HTTPException(409, "this question was already answered")

        answer = StudentAnswer(
            id=uuid.uuid4().hex,
            student_id=user.id,
            question_id=body.question_id,
            text=body.text,
            submitted_at=utcnow(),
        )
        state.store.put_doc("student_answer", answer.id, answer_to_doc(answer))
        state.store.put_doc("answer_link", answer.id, {
            "schema": "answer_link/1",
            "answer_id": answer.id,
            "quiz_id": quiz_id,
            "group_id": group.id,
            "question_id": body.question_id,
            "student_id": user.id,
        })
        if idempotency_key:
            state.store.put_doc("idempotency", f"{user.id}:{idempotency_key}",
                                {"schema": "idempotency/1", "answer_id": answer.id})
        state.pipeline.submit(answer, state.question(body.question_id),
                              state.scheme(body.question_id))
        return {"answer_id": answer.id, "status": "accepted", "replayed": False}

    def _authorize_answer_access(user: User, answer_id: str) -> StudentGroup:
        link = state.answer_link(answer_id)
        group = state.group(link["group_id"])
        if user.role == "teacher":
            if not is_allowed(user, "view_answers", group):
                raise HTTPException(403, "not a teacher of this group")
        else:
            if not is_allowed(user, "view_own_feedback", group,
                              owner_student_id=link["student_id"]):
                raise HTTPException(403, "students may only view their own answers")
        return group

    @app.get("/api/answers/{answer_id}")
    def get_answer(answer_id: str, user: User = Depends(current_user)):
        _authorize_answer_access(user, answer_id)
        answer = state.answer(answer_id)
        return {"answer": answer_to_doc(answer),
                "job": state.pipeline.job_status(answer_id)}

    @app.get("/api/answers/{answer_id}/assessment")
    def get_assessment(answer_id: str, user: User = Depends(current_user)):
        _authorize_answer_access(user, answer_id)
        doc = state.store.get_doc("assessment", answer_id)
        if doc is None:
            return {"status": state.pipeline.job_status(answer_id)["status"],
                    "assessment": None}
        return {"status": "ready", "assessment": doc}

    @app.get("/api/answers/{answer_id}/feedback")
    def get_feedback(answer_id: str, user: User = Depends(current_user)):
        _authorize_answer_access(user, answer_id)
        if user.role == "student":
            return student_feedback_view(state, answer_id)
        latest = state.store.latest_version(answer_id)
        if latest is None:
            job = state.pipeline.job_status(answer_id)
            status = "failed" if job["status"] == "failed" else "pending"
            return {"status": status, "feedback": None, "error": job.get("error")}
        return {
            "status": "ready" if latest.safety_passed else "withheld",
            "feedback": feedback_version_doc(latest),
            "assessment": state.store.get_doc("assessment", answer_id),
        }

    @app.get("/api/answers/{answer_id}/feedback/history")
    def get_feedback_history(answer_id: str, user: User = Depends(current_user)):
        require_teacher(user)
        _authorize_answer_access(user, answer_id)
        return {"versions": [feedback_version_doc(v)
                             for v in state.store.version_history(answer_id)]}

    # -- teacher revision ----------------------------------------------------------

    @app.post("/api/feedback/{version_id}/revise")
    def revise_feedback(version_id: str, body: ReviseBody,
                        user: User = Depends(current_user)):
        require_teacher(user)
        version = state.store.get_version(version_id)
        link = state.answer_link(version.answer_id)
        group = state.group(link["group_id"])
        if not is_allowed(user, "revise_feedback", group):
            raise HTTPException(403, "not a teacher of this group")
        engine = state.runtime.engine

        if body.scope == "single":
            ctx = state.rebuild_context(version.answer_id)
            with state.store.answer_lock(version.answer_id):
                latest = state.store.latest_version(version.answer_id)
                base = latest if latest is not None else version
                (outcome,) = engine.revise_with_suggestion(
                    base, body.suggestion, scope="single", ctx=ctx
                )
                state.store.append_version(outcome.version)
            return {"revised": [feedback_version_doc(outcome.version)], "failures": []}

        if body.scope != "quiz_wide":
            raise HTTPException(422, f"unknown scope {body.scope!r}")

        quiz_id = link["quiz_id"]
        items = []
        for other in state.store.list_docs("answer_link"):
            if other["quiz_id"] != quiz_id:
                continue
            latest = state.store.latest_version(other["answer_id"])
            if latest is None:
                continue
            try:
                items.append((state.rebuild_context(other["answer_id"]), latest))
            except HTTPException:
                continue
        outcomes = engine.revise_with_suggestion(
            version, body.suggestion, scope="quiz_wide", quiz_items=items
        )
        revised, failures = [], []
        for outcome in outcomes:
            if outcome.version is not None:
                with state.store.answer_lock(outcome.answer_id):
                    state.store.append_version(outcome.version)
                revised.append(feedback_version_doc(outcome.version))
            else:
                failures.append({"answer_id": outcome.answer_id, "error": outcome.error})
        return {"revised": revised, "failures": failures}

    # -- analytics -------------------------------------------------------------------

    @app.get("/api/groups/{group_id}/analytics/overview")
    def analytics_overview(group_id: str, topic: Optional[str] = None,
                           user: User = Depends(current_user)):
        group = state.group(group_id)
        if not is_allowed(user, "view_analytics", group):
            raise HTTPException(403, "not a teacher of this group")
        rows = state.assessed_rows_for_group(group)
        cells = performance_overview(rows, topic_filter=topic)
        return {"cells": [mastery_cell_doc(c) for c in cells]}

    @app.get("/api/groups/{group_id}/attention")
    def attention(group_id: str, user: User = Depends(current_user)):
        group = state.group(group_id)
        if not is_allowed(user, "view_feedback", group):
            raise HTTPException(403, "not a teacher of this group")
        rows = []
        for link in state.store.list_docs("answer_link"):
            if link["group_id"] != group.id:
                continue
            latest = state.store.latest_version(link["answer_id"])
            assessment_doc_ = state.store.get_doc("assessment", link["answer_id"])
            answer_doc_ = state.store.get_doc("student_answer", link["answer_id"])
            if latest is None or assessment_doc_ is None or answer_doc_ is None:
                continue
            rows.append((answer_from(answer_doc_), assessment_from(assessment_doc_),
                         latest))
        tau = state.runtime.engine.config.tau
        return {"flags": [{"answer_id": a, "reason": r}
                          for a, r in flag_attention(rows, tau)]}

    @app.get("/api/usage")
    def usage(user: User = Depends(current_user)):
        require_teacher(user)
        return state.runtime.gateway.usage_summary().as_doc()

    if config.ui_dist:
        from pathlib import Path

        dist = Path(config.ui_dist)
        if dist.is_dir():
            app.mount("/", StaticFiles(directory=str(dist), html=True), name="ui")

    return app
