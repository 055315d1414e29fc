"""Rubric-aligned scoring and verified feedback generation.

The package turns a student answer into an inspectable assessment against a
mark scheme, retrieves relevant history from a topic-graph memory, generates
per-concept feedback under a verify-and-revise loop, and serves the whole
workflow over HTTP with teacher-in-the-loop revision. A scripted model
provider makes every pipeline stage runnable offline and bit-deterministic.
"""

__version__ = "0.1.0"
