"""Quiz authoring: bank, custom and model-generated questions, plus
curriculum-grounded mark-scheme generation.

Generated questions and generated mark schemes both require explicit teacher
approval before a quiz can use them; a bad rubric would contaminate every
downstream assessment, so the human stays in the loop at exactly this point.
"""

from __future__ import annotations

import logging
import re
import uuid
from dataclasses import dataclass

from ..domain import (
    ConceptCriterion,
    MarkScheme,
    Question,
    Topic,
    validate_mark_scheme,
)
from ..errors import (
    EmptyBankForTopic,
    GenerationFormatError,
    UnknownTopic,
    ValidationError,
)
from ..gateway import Gateway

logger = logging.getLogger(__name__)

_QUESTION_LINE = re.compile(r"QUESTION\s*:\s*(.+?)\s*\|\s*MARKS\s*:\s*(\d+)", re.IGNORECASE)
_CONCEPT_LINE = re.compile(r"^\s*(\d+)\s*[:.]\s*(.+)$")

REMINDER = (
    "REMINDER: your previous reply could not be parsed. "
    "Answer strictly in the requested format and nothing else."
)


@dataclass(frozen=True)
class CurriculumDoc:
    topic_id: str
    level: str
    body: str


def curriculum_doc_doc(d: CurriculumDoc) -> dict:
    return {"schema": "curriculum_doc/1", "topic_id": d.topic_id, "level": d.level,
            "body": d.body}


def curriculum_doc_from(doc: dict) -> CurriculumDoc:
    return CurriculumDoc(doc["topic_id"], doc["level"], doc["body"])


class CurriculumStore:
    """Prescribed-content documents keyed by topic; exact match, no ranking."""

    def __init__(self, docs: list[CurriculumDoc] | None = None):
        self._by_topic: dict[str, list[CurriculumDoc]] = {}
        for d in docs or []:
            self.add(d)

    def add(self, doc: CurriculumDoc) -> None:
        self._by_topic.setdefault(doc.topic_id, []).append(doc)

    def for_topics(self, topic_ids: frozenset[str] | set[str]) -> list[CurriculumDoc]:
        out: list[CurriculumDoc] = []
        for topic_id in sorted(topic_ids):
            out.extend(self._by_topic.get(topic_id, []))
        return out


@dataclass(frozen=True)
class Quiz:
    id: str
    group_id: str
    question_ids: tuple[str, ...]
    assigned_at: str
    due_at: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "question_ids", tuple(self.question_ids))
        if not self.question_ids:
            raise ValidationError("a quiz needs at least one question")


def quiz_doc(q: Quiz) -> dict:
    return {
        "schema": "quiz/1",
        "id": q.id,
        "group_id": q.group_id,
        "question_ids": list(q.question_ids),
        "assigned_at": q.assigned_at,
        "due_at": q.due_at,
    }


def quiz_from_doc(doc: dict) -> Quiz:
    return Quiz(doc["id"], doc["group_id"], tuple(doc["question_ids"]),
                doc["assigned_at"], doc.get("due_at"))


class Authoring:
    """Question and mark-scheme authoring backed by the gateway."""

    def __init__(
        self,
        gateway: Gateway,
        topics: dict[str, Topic],
        bank: dict[str, list[Question]] | None = None,
        curriculum: CurriculumStore | None = None,
    ):
        self._gateway = gateway
        self._topics = dict(topics)
        self._bank = {k: list(v) for k, v in (bank or {}).items()}
        self._curriculum = curriculum or CurriculumStore()

    def topic(self, topic_id: str) -> Topic:
        t = self._topics.get(topic_id)
        if t is None:
            raise UnknownTopic(f"no topic {topic_id!r}")
        return t

    def bank_questions(self, topic_id: str) -> list[Question]:
        self.topic(topic_id)
        return list(self._bank.get(topic_id, []))

    def author_question(
        self,
        topic_id: str,
        mode: str,
        text: str = "",
        max_marks: int = 0,
        requirements: str = "",
        bank_index: int = 0,
    ) -> tuple[Question, bool]:
        """Returns (question, needs_approval).

        Bank and custom questions are teacher-originated and usable at once;
        generated ones must be approved before a quiz may include them.
        """
        self.topic(topic_id)
        if mode == "bank":
            entries = self._bank.get(topic_id, [])
            if not entries:
                raise EmptyBankForTopic(f"no bank questions for topic {topic_id!r}")
            return entries[bank_index % len(entries)], False
        if mode == "custom":
            if not text.strip():
                raise ValidationError("custom question text is empty")
            if max_marks < 1:
                raise ValidationError("custom question needs positive max_marks")
            question = Question(
                id=uuid.uuid4().hex,
                prompt_text=text.strip(),
                topics=frozenset({topic_id}),
                max_marks=max_marks,
                source="custom",
            )
            return question, False
        if mode == "generated":
            return self._generate_question(topic_id, requirements), True
        raise ValidationError(f"unknown authoring mode {mode!r}")

    def _generate_question(self, topic_id: str, requirements: str) -> Question:
        topic = self.topic(topic_id)
        prompt = (
            "TASK: question-author\n"
            f"TOPIC: {topic.name} ({topic.curriculum_code})\n"
            f"REQUIREMENTS: {requirements or 'standard short-answer question'}\n"
            "Write one short-answer question for this topic honouring the\n"
            "requirements. Reply with exactly one line:\n"
            "QUESTION: <text> | MARKS: <positive integer>"
        )
        text = self._gateway.complete("question_author", prompt).text
        m = _QUESTION_LINE.search(text)
        if not m:
            text = self._gateway.complete("question_author", f"{prompt}\n{REMINDER}").text
            m = _QUESTION_LINE.search(text)
            if not m:
                raise GenerationFormatError(f"unparseable generated question: {text[:120]!r}")
        return Question(
            id=uuid.uuid4().hex,
            prompt_text=m.group(1).strip(),
            topics=frozenset({topic_id}),
            max_marks=int(m.group(2)),
            source="generated",
        )

    def generate_mark_scheme(self, question: Question) -> tuple[MarkScheme, bool]:
        """Returns (scheme, grounding_missing).

        The author role runs at the extended budget with the retrieved
        curriculum documents in context. A weight-sum failure gets one
        automatic repair re-ask before being surfaced to the teacher.
        """
        docs = self._curriculum.for_topics(question.topics)
        grounding_missing = not docs
        if grounding_missing:
            logger.warning(
                "no curriculum docs for topics %s; scheme will be ungrounded",
                sorted(question.topics),
            )
        prompt = self._scheme_prompt(question, docs)
        try:
            scheme = self._ask_scheme(prompt, question)
        except (ValidationError, GenerationFormatError) as first:
            logger.warning("scheme generation failed (%s); repair re-ask", first)
            repair = (
                f"{prompt}\nPREVIOUS ATTEMPT WAS REJECTED: {first}\n"
                f"The weights MUST be positive integers summing to exactly "
                f"{question.max_marks}."
            )
            scheme = self._ask_scheme(repair, question)
        return scheme, grounding_missing

    def _scheme_prompt(self, question: Question, docs: list[CurriculumDoc]) -> str:
        doc_block = "\n".join(f"- [{d.level}] {d.body}" for d in docs) or "- (none available)"
        return (
            "TASK: scheme-author\n"
            f"QUESTION: {question.prompt_text}\n"
            f"TOTAL MARKS: {question.max_marks}\n"
            "CURRICULUM CONTENT (stay within this scope):\n"
            f"{doc_block}\n"
            "Write the key concepts a full-credit answer must contain, one per\n"
            "line, each worth a whole number of marks. Weights must sum to the\n"
            "total. Reply with one line per concept:\n"
            "<weight>: <concept description>"
        )

    def _ask_scheme(self, prompt: str, question: Question) -> MarkScheme:
        text = self._gateway.complete("markscheme_author", prompt, budget="extended").text
        concepts = []
        for line in text.splitlines():
            m = _CONCEPT_LINE.match(line)
            if not m:
                continue
            concepts.append(
                ConceptCriterion(
                    concept_id=f"{question.id}-c{len(concepts) + 1}",
                    description=m.group(2).strip(),
                    weight=int(m.group(1)),
                )
            )
        if not concepts:
            raise GenerationFormatError(f"no concept lines in scheme reply: {text[:120]!r}")
        scheme = MarkScheme(question_id=question.id, concepts=tuple(concepts))
        return validate_mark_scheme(scheme, question)
