from .batch import (
    REPORT_COLUMNS,
    BatchReport,
    CorpusItem,
    ItemResult,
    corpus_item_doc,
    corpus_item_from,
    load_corpus,
    run_batch,
    summarise,
)
from .stats import exact_acc, mse, pearson, within_one_acc

__all__ = [
    "BatchReport",
    "CorpusItem",
    "ItemResult",
    "REPORT_COLUMNS",
    "corpus_item_doc",
    "corpus_item_from",
    "exact_acc",
    "load_corpus",
    "mse",
    "pearson",
    "run_batch",
    "summarise",
    "within_one_acc",
]
