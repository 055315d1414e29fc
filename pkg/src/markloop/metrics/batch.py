"""Batch evaluation over a corpus of (question, scheme, answer, gold mark).

Runs the scoring pipeline per item with bounded parallelism, then folds the
paired marks into the standard report columns. Failed items are excluded and
counted rather than scored zero - a zero would silently corrupt the squared
error - and the whole batch aborts when more than 10% of items fail. Every
per-item row is kept in the report so the summary can be re-derived from its
own audit trail.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from ..assessor import Assessor
from ..domain import MarkScheme, Question, StudentAnswer, validate_mark_scheme
from ..domain.serialize import (
    answer_doc,
    mark_scheme_doc,
    mark_scheme_from,
    question_doc,
    question_from,
)
from ..errors import BatchAborted, MarkloopError
from ..gateway import Gateway
from .stats import exact_acc, mse, pearson, within_one_acc

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ("MSE", "Corr.", "Acc.", "±1 Acc.", "Avg", "Min", "Max", "Cost")

MAX_FAILURE_FRACTION = 0.10


@dataclass(frozen=True)
class CorpusItem:
    item_id: str
    question: Question
    scheme: MarkScheme
    answer: StudentAnswer
    gold_mark: int


@dataclass(frozen=True)
class ItemResult:
    item_id: str
    predicted: int | None
    gold: int
    latency_seconds: float
    cost_usd: float
    error: str | None = None


@dataclass
class BatchReport:
    summary: dict
    items: list[ItemResult]
    failure_count: int

    def as_doc(self) -> dict:
        return {
            "schema": "batch_report/1",
            "columns": list(REPORT_COLUMNS),
            "summary": self.summary,
            "failure_count": self.failure_count,
            "items": [
                {
                    "item_id": r.item_id,
                    "predicted": r.predicted,
                    "gold": r.gold,
                    "latency_seconds": r.latency_seconds,
                    "cost_usd": r.cost_usd,
                    "error": r.error,
                }
                for r in self.items
            ],
        }

    def table(self) -> str:
        """Human-readable one-row table in the canonical column order."""
        cells = []
        for col in REPORT_COLUMNS:
            value = self.summary[col]
            cells.append("n/a" if value is None else f"{value:.4f}")
        widths = [max(len(c), len(h)) for c, h in zip(cells, REPORT_COLUMNS)]
        header = "  ".join(h.ljust(w) for h, w in zip(REPORT_COLUMNS, widths))
        row = "  ".join(c.ljust(w) for c, w in zip(cells, widths))
        return f"{header}\n{row}"


def corpus_item_doc(item: CorpusItem) -> dict:
    return {
        "schema": "corpus_item/1",
        "item_id": item.item_id,
        "question": question_doc(item.question),
        "scheme": mark_scheme_doc(item.scheme),
        "answer": answer_doc(item.answer),
        "gold_mark": item.gold_mark,
    }


def corpus_item_from(doc: dict) -> CorpusItem:
    question = question_from(doc["question"])
    scheme = mark_scheme_from(doc["scheme"])
    validate_mark_scheme(scheme, question)
    from ..domain.serialize import answer_from

    return CorpusItem(
        item_id=doc["item_id"],
        question=question,
        scheme=scheme,
        answer=answer_from(doc["answer"]),
        gold_mark=doc["gold_mark"],
    )


def load_corpus(path: str | Path) -> list[CorpusItem]:
    items = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            items.append(corpus_item_from(json.loads(line)))
    return items


def summarise(results: list[ItemResult]) -> dict:
    """Fold per-item rows into the report columns. Pure; order-independent."""
    scored = [r for r in results if r.error is None]
    if not scored:
        raise BatchAborted("no item produced a score")
    pred = [r.predicted for r in scored]
    gold = [r.gold for r in scored]
    latencies = [r.latency_seconds for r in scored]
    costs = [r.cost_usd for r in scored]
    return {
        "MSE": mse(pred, gold),
        "Corr.": pearson(pred, gold),
        "Acc.": exact_acc(pred, gold),
        "±1 Acc.": within_one_acc(pred, gold),
        "Avg": sum(latencies) / len(latencies),
        "Min": min(latencies),
        "Max": max(latencies),
        "Cost": sum(costs) / len(costs),
    }


def run_batch(corpus: list[CorpusItem], assessor: Assessor, gateway: Gateway,
              parallelism: int = 4) -> BatchReport:
    if not corpus:
        raise BatchAborted("empty corpus")

    def run_item(item: CorpusItem) -> ItemResult:
        start = time.perf_counter()
        with gateway.collect() as calls:
            try:
                assessment = assessor.assess(item.answer, item.question, item.scheme)
            except MarkloopError as exc:
                logger.error("item %s failed: %s", item.item_id, exc)
                return ItemResult(
                    item_id=item.item_id,
                    predicted=None,
                    gold=item.gold_mark,
                    latency_seconds=time.perf_counter() - start,
                    cost_usd=sum(c.cost_usd for c in calls),
                    error=str(exc),
                )
        return ItemResult(
            item_id=item.item_id,
            predicted=assessment.final_score,
            gold=item.gold_mark,
            latency_seconds=time.perf_counter() - start,
            cost_usd=sum(c.cost_usd for c in calls),
        )

    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        results = list(pool.map(run_item, corpus))

    failures = sum(1 for r in results if r.error is not None)
    if failures > MAX_FAILURE_FRACTION * len(corpus):
        raise BatchAborted(
            f"{failures}/{len(corpus)} items failed, above the "
            f"{MAX_FAILURE_FRACTION:.0%} abort threshold"
        )
    return BatchReport(summary=summarise(results), items=results, failure_count=failures)
