"""Scoring-quality metrics over paired (predicted, gold) marks."""

from __future__ import annotations

import logging
import math
from typing import Sequence

from ..errors import EmptyInput, LengthMismatch

logger = logging.getLogger(__name__)


def _check(pred: Sequence[float], gold: Sequence[float]) -> None:
    if len(pred) != len(gold):
        raise LengthMismatch(f"{len(pred)} predictions vs {len(gold)} gold marks")
    if not pred:
        raise EmptyInput("no pairs to score")


def mse(pred: Sequence[float], gold: Sequence[float]) -> float:
    _check(pred, gold)
    return sum((p - g) ** 2 for p, g in zip(pred, gold)) / len(pred)


def pearson(pred: Sequence[float], gold: Sequence[float]) -> float | None:
    """Pearson r; None when either input is constant (r is undefined)."""
    _check(pred, gold)
    if len(pred) < 2:
        raise EmptyInput("pearson needs at least two pairs")
    mean_p = sum(pred) / len(pred)
    mean_g = sum(gold) / len(gold)
    var_p = sum((p - mean_p) ** 2 for p in pred)
    var_g = sum((g - mean_g) ** 2 for g in gold)
    if var_p == 0 or var_g == 0:
        logger.warning("pearson undefined on constant input; returning null")
        return None
    cov = sum((p - mean_p) * (g - mean_g) for p, g in zip(pred, gold))
    return cov / math.sqrt(var_p * var_g)


def exact_acc(pred: Sequence[float], gold: Sequence[float]) -> float:
    _check(pred, gold)
    return sum(1 for p, g in zip(pred, gold) if p == g) / len(pred)


def within_one_acc(pred: Sequence[float], gold: Sequence[float]) -> float:
    _check(pred, gold)
    return sum(1 for p, g in zip(pred, gold) if abs(p - g) <= 1) / len(pred)
