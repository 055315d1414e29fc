"""Populate a storage directory with the bundled synthetic fixtures.

Produces everything needed to run the whole service offline: a config wired
to a scripted provider, the script itself (golden fixture plus the synthetic
evaluation corpus), a seeded database with topics, curriculum, bank
questions, approved mark schemes, one demo group and one assigned quiz.
"""

from __future__ import annotations

import json
from pathlib import Path

from .. import fixtures
from ..classroom import curriculum_doc_doc, group_doc, quiz_doc, create_group, Directory
from ..classroom.authoring import Quiz
from ..domain import utcnow
from ..domain.serialize import mark_scheme_doc, question_doc, topic_doc
from ..fixtures.seed import BANK_SCHEMES
from ..metrics import corpus_item_doc
from .storage import Store

ROLE_MODELS = {
    "assessor_judge": "judge-1",
    "markscheme_author": "author-1",
    "generator": "gen-1",
    "verifier": "ver-1",
    "safety": "safety-1",
    "question_author": "qgen-1",
    "embedder": "embed-1",
}


def default_config_dict(corpus_n: int = 100) -> dict:
    return {
        "storage_path": "markloop.db",
        "providers": {"scripted": {"type": "scripted", "script_path": "script.json"}},
        "roles": {
            name: {"provider_id": "scripted", "model_id": model}
            for name, model in ROLE_MODELS.items()
        },
        "budgets": {
            "normal": {"max_output_tokens": 1024},
            "extended": {"max_output_tokens": 4096,
                         "reasoning_effort_hint": "think step by step"},
        },
        "price_table": {model: {"input_per_1k": 0.0002, "output_per_1k": 0.0006}
                        for model in ROLE_MODELS.values()},
        "embedding": {"dim": 64, "seed": 7},
        "retry": {"retries": 2, "backoff_seconds": 0.05},
        "loop": {"criteria": ["accuracy", "specificity", "clarity"],
                 "tau": 4, "t_max": 3,
                 "generator_role": "generator", "verifier_role": "verifier",
                 "safety_role": "safety"},
        "memory": {"k": 5, "student_scoped": True},
        "pipeline": {"workers": 2, "retries": 1, "fanout_parallelism": 4},
        "users": [
            {"id": u.id, "role": u.role, "name": u.name, "token": f"token-{u.id}"}
            for u in fixtures.USERS
        ],
        "corpus_n": corpus_n,
    }


def seed_directory(target: str | Path, corpus_n: int = 100) -> Path:
    """Write config.json, script.json, corpus.jsonl and a seeded database.

    Returns the config path.
    """
    target = Path(target)
    target.mkdir(parents=True, exist_ok=True)

    corpus_items, corpus_rules = fixtures.build_corpus(corpus_n)
    rules = fixtures.demo_rules() + corpus_rules
    fixtures.write_script(target / "script.json", rules)

    corpus_lines = [json.dumps(corpus_item_doc(item), sort_keys=True)
                    for item in corpus_items]
    (target / "corpus.jsonl").write_text("\n".join(corpus_lines) + "\n",
                                         encoding="utf-8")

    config = default_config_dict(corpus_n)
    config_path = target / "config.json"
    config_path.write_text(json.dumps(config, indent=2, sort_keys=True),
                           encoding="utf-8")

    store = Store(target / "markloop.db")
    seed_store(store)
    store.close()
    return config_path


def seed_store(store: Store) -> None:
    for topic in fixtures.TOPICS:
        store.put_doc("topic", topic.id, topic_doc(topic))
    for idx, doc in enumerate(fixtures.CURRICULUM_DOCS):
        store.put_doc("curriculum_doc", f"{doc.topic_id}:{idx}", curriculum_doc_doc(doc))

    for questions in fixtures.BANK_QUESTIONS.values():
        for question in questions:
            store.put_doc("question", question.id, question_doc(question))
            store.put_doc("approval", f"question:{question.id}", {
                "schema": "approval/1", "kind": "question",
                "entity_id": question.id, "approved": True,
            })
    for question_id, scheme in BANK_SCHEMES.items():
        store.put_doc("mark_scheme", question_id, mark_scheme_doc(scheme))
        store.put_doc("approval", f"mark_scheme:{question_id}", {
            "schema": "approval/1", "kind": "mark_scheme",
            "entity_id": question_id, "approved": True,
        })

    directory = Directory(list(fixtures.USERS))
    group = create_group(
        "g-demo", "biology", 10,
        teacher_ids={"t-ada", "t-bo"},
        student_ids={"s-kim", "s-lee", "s-raj"},
        directory=directory,
    )
    store.put_doc("student_group", group.id, group_doc(group))

    quiz = Quiz(
        id="quiz-demo",
        group_id="g-demo",
        question_ids=("q-phloem",),
        assigned_at=utcnow().isoformat(),
    )
    store.put_doc("quiz", quiz.id, quiz_doc(quiz))
