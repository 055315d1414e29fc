"""Seeded feature-hash embeddings.

Maps text into a fixed-dimension unit vector by hashing tokens into signed
buckets. Fully deterministic for a given (dim, seed), which makes retrieval
tests reproducible without any network dependence.
"""

from __future__ import annotations

import hashlib
import math

DEFAULT_DIM = 64
DEFAULT_SEED = 7


def hash_embed(text: str, dim: int = DEFAULT_DIM, seed: int = DEFAULT_SEED) -> tuple[float, ...]:
    """Embed one text as a unit-normalised vector of `dim` floats."""
    values = [0.0] * dim
    tokens = text.lower().split()
    for token in tokens:
        digest = hashlib.sha256(f"{seed}:{token}".encode("utf-8")).digest()
        bucket = int.from_bytes(digest[:4], "big") % dim
        sign = 1.0 if digest[4] % 2 == 0 else -1.0
        values[bucket] += sign
    if not any(values):
        # Empty or fully-cancelling input still gets a stable direction.
        digest = hashlib.sha256(f"{seed}:{text}".encode("utf-8")).digest()
        values[int.from_bytes(digest[:4], "big") % dim] = 1.0
    norm = math.sqrt(sum(v * v for v in values))
    return tuple(v / norm for v in values)


def cosine(a: tuple[float, ...], b: tuple[float, ...]) -> float:
    """Cosine similarity; inputs are expected unit-normalised."""
    return sum(x * y for x, y in zip(a, b))
