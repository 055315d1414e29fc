"""Embedded durable storage over sqlite.

Two tables: a generic (kind, id) -> document map, and an append-only feedback
version log whose autoincrement sequence gives each answer a total order of
versions. All writes commit immediately; a process restart on the same file
sees exactly the committed state. Per-answer locks serialise read-modify-
write version appends so concurrent revisions produce a linear parent chain.
"""

from __future__ import annotations

import json
import sqlite3
import threading
from collections import defaultdict
from pathlib import Path

from ..domain import FeedbackVersion
from ..domain.serialize import feedback_version_doc, feedback_version_from
from ..errors import UnknownFeedback

_SCHEMA = """
CREATE TABLE IF NOT EXISTS documents (
    kind TEXT NOT NULL,
    id TEXT NOT NULL,
    doc TEXT NOT NULL,
    PRIMARY KEY (kind, id)
);
CREATE TABLE IF NOT EXISTS feedback_versions (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    id TEXT UNIQUE NOT NULL,
    answer_id TEXT NOT NULL,
    parent_id TEXT,
    doc TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS idx_versions_answer ON feedback_versions (answer_id);
"""


class Store:
    def __init__(self, path: str | Path):
        self._path = str(path)
        Path(self._path).parent.mkdir(parents=True, exist_ok=True)
        self._conn = sqlite3.connect(self._path, check_same_thread=False)
        self._conn.execute("PRAGMA journal_mode=WAL")
        self._lock = threading.RLock()
        self._answer_locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        with self._lock:
            self._conn.executescript(_SCHEMA)
            self._conn.commit()

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    # -- generic documents ---------------------------------------------------

    def put_doc(self, kind: str, doc_id: str, doc: dict) -> None:
        payload = json.dumps(doc, sort_keys=True, ensure_ascii=False)
        with self._lock:
            self._conn.execute(
                "INSERT INTO documents (kind, id, doc) VALUES (?, ?, ?) "
                "ON CONFLICT (kind, id) DO UPDATE SET doc = excluded.doc",
                (kind, doc_id, payload),
            )
            self._conn.commit()

    def get_doc(self, kind: str, doc_id: str) -> dict | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT doc FROM documents WHERE kind = ? AND id = ?", (kind, doc_id)
            ).fetchone()
        return json.loads(row[0]) if row else None

    def list_docs(self, kind: str) -> list[dict]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT doc FROM documents WHERE kind = ? ORDER BY id", (kind,)
            ).fetchall()
        return [json.loads(r[0]) for r in rows]

    def delete_doc(self, kind: str, doc_id: str) -> None:
        with self._lock:
            self._conn.execute(
                "DELETE FROM documents WHERE kind = ? AND id = ?", (kind, doc_id)
            )
            self._conn.commit()

    # -- feedback versions -----------------------------------------------------

    def answer_lock(self, answer_id: str) -> threading.Lock:
        with self._lock:
            return self._answer_locks[answer_id]

    def append_version(self, version: FeedbackVersion) -> None:
        doc = feedback_version_doc(version)
        with self._lock:
            self._conn.execute(
                "INSERT INTO feedback_versions (id, answer_id, parent_id, doc) "
                "VALUES (?, ?, ?, ?)",
                (version.id, version.answer_id, version.parent_version_id,
                 json.dumps(doc, sort_keys=True, ensure_ascii=False)),
            )
            self._conn.commit()

    def latest_version(self, answer_id: str) -> FeedbackVersion | None:
        with self._lock:
            row = self._conn.execute(
                "SELECT doc FROM feedback_versions WHERE answer_id = ? "
                "ORDER BY seq DESC LIMIT 1",
                (answer_id,),
            ).fetchone()
        return feedback_version_from(json.loads(row[0])) if row else None

    def version_history(self, answer_id: str) -> list[FeedbackVersion]:
        with self._lock:
            rows = self._conn.execute(
                "SELECT doc FROM feedback_versions WHERE answer_id = ? ORDER BY seq",
                (answer_id,),
            ).fetchall()
        return [feedback_version_from(json.loads(r[0])) for r in rows]

    def get_version(self, version_id: str) -> FeedbackVersion:
        with self._lock:
            row = self._conn.execute(
                "SELECT doc FROM feedback_versions WHERE id = ?", (version_id,)
            ).fetchone()
        if row is None:
            raise UnknownFeedback(f"no feedback version {version_id!r}")
        return feedback_version_from(json.loads(row[0]))
