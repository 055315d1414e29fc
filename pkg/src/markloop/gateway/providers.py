"""Provider adapters behind the gateway.

Two implementations: an HTTP adapter speaking the common chat-completion
shape, and a scripted provider that replays canned responses for offline,
bit-deterministic runs. Script rules can match on an exact prompt hash, a
substring, or the calling role; the first matching rule wins and its
responses are consumed in order (the last one repeats).
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import httpx

from ..errors import ProviderError, ProviderTimeout, TransientProviderError
from .embedding import hash_embed

logger = logging.getLogger(__name__)


def prompt_sha256(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class Provider(Protocol):
    def complete(self, role: str, model_id: str, prompt: str, max_output_tokens: int,
                 effort_hint: str) -> str: ...

    def embed(self, model_id: str, texts: Sequence[str], dim: int, seed: int
              ) -> list[tuple[float, ...]]: ...


@dataclass
class ScriptRule:
    """One scripted response. Conditions present must all hold.

    `contains` may be a single substring or a tuple of substrings that must
    all appear in the prompt, which is how fixtures scope a response to one
    task tag plus one particular answer.
    """

    responses: tuple[str, ...]
    prompt_sha256: str | None = None
    contains: str | tuple[str, ...] | None = None
    role: str | None = None
    errors_before: int = 0
    _served: int = field(default=0, repr=False)
    _errored: int = field(default=0, repr=False)

    def matches(self, role: str, prompt: str, digest: str) -> bool:
        if self.prompt_sha256 is not None and self.prompt_sha256 != digest:
            return False
        if self.contains is not None:
            needles = (self.contains,) if isinstance(self.contains, str) else self.contains
            if any(needle not in prompt for needle in needles):
                return False
        if self.role is not None and self.role != role:
            return False
        return True

    def next_response(self) -> str:
        if self._errored < self.errors_before:
            self._errored += 1
            raise TransientProviderError("scripted transient failure")
        idx = min(self._served, len(self.responses) - 1)
        self._served += 1
        return self.responses[idx]


class ScriptedProvider:
    """Deterministic provider replaying a script; zero latency, zero network."""

    def __init__(self, rules: Sequence[ScriptRule] = (), default: str | None = None):
        self._rules = list(rules)
        self._default = default
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedProvider":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        rules = [rule_from_doc(doc) for doc in data.get("rules", [])]
        return cls(rules, default=data.get("default"))

    def add_rule(self, rule: ScriptRule) -> None:
        with self._lock:
            self._rules.append(rule)

    def complete(self, role: str, model_id: str, prompt: str, max_output_tokens: int,
                 effort_hint: str) -> str:
        digest = prompt_sha256(prompt)
        with self._lock:
            for rule in self._rules:
                if rule.matches(role, prompt, digest):
                    return rule.next_response()
            if self._default is not None:
                return self._default
        raise ProviderError(
            f"no scripted response for role {role!r} (prompt sha256 {digest[:12]}...)"
        )

    def embed(self, model_id: str, texts: Sequence[str], dim: int, seed: int
              ) -> list[tuple[float, ...]]:
        return [hash_embed(t, dim=dim, seed=seed) for t in texts]


def rule_from_doc(doc: dict) -> ScriptRule:
    responses = doc.get("responses")
    if responses is None:
        responses = [doc["response"]]
    contains = doc.get("contains")
    if isinstance(contains, list):
        contains = tuple(contains)
    return ScriptRule(
        responses=tuple(responses),
        prompt_sha256=doc.get("prompt_sha256"),
        contains=contains,
        role=doc.get("role"),
        errors_before=doc.get("errors_before", 0),
    )


def rule_doc(rule: ScriptRule) -> dict:
    doc: dict = {"responses": list(rule.responses)}
    if rule.prompt_sha256 is not None:
        doc["prompt_sha256"] = rule.prompt_sha256
    if rule.contains is not None:
        doc["contains"] = (
            rule.contains if isinstance(rule.contains, str) else list(rule.contains)
        )
    if rule.role is not None:
        doc["role"] = rule.role
    if rule.errors_before:
        doc["errors_before"] = rule.errors_before
    return doc


class HTTPProvider:
    """Chat-completion HTTP adapter.

    Auth token is read from the named environment variable at call time so
    credentials never live in config files.
    """

    def __init__(self, base_url: str, auth_env_var: str = "", timeout_seconds: float = 30.0,
                 hash_embeddings: bool = True):
        self._base_url = base_url.rstrip("/")
        self._auth_env_var = auth_env_var
        self._timeout = timeout_seconds
        self._hash_embeddings = hash_embeddings
        self._client = httpx.Client(timeout=timeout_seconds)

    def _headers(self) -> dict:
        headers = {"content-type": "application/json"}
        if self._auth_env_var:
            token = os.environ.get(self._auth_env_var, "")
            if token:
                headers["authorization"] = f"Bearer {token}"
        return headers

    def complete(self, role: str, model_id: str, prompt: str, max_output_tokens: int,
                 effort_hint: str) -> str:
        payload = {
            "model": model_id,
            "messages": [{"role": "user", "content": prompt}],
            "max_tokens": max_output_tokens,
        }
        if effort_hint:
            payload["reasoning_effort"] = effort_hint
        try:
            resp = self._client.post(
                f"{self._base_url}/v1/chat/completions", json=payload, headers=self._headers()
            )
        except httpx.TimeoutException as exc:
            raise ProviderTimeout(str(exc)) from exc
        except httpx.TransportError as exc:
            raise TransientProviderError(str(exc)) from exc
        if resp.status_code >= 500:
            raise TransientProviderError(f"provider returned {resp.status_code}")
        if resp.status_code >= 400:
            raise ProviderError(f"provider returned {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise ProviderError(f"malformed provider response: {exc}") from exc

    def embed(self, model_id: str, texts: Sequence[str], dim: int, seed: int
              ) -> list[tuple[float, ...]]:
        if self._hash_embeddings:
            return [hash_embed(t, dim=dim, seed=seed) for t in texts]
        try:
            resp = self._client.post(
                f"{self._base_url}/v1/embeddings",
                json={"model": model_id, "input": list(texts)},
                headers=self._headers(),
            )
        except httpx.TimeoutException as exc:
            raise ProviderTimeout(str(exc)) from exc
        except httpx.TransportError as exc:
            raise TransientProviderError(str(exc)) from exc
        if resp.status_code >= 500:
            raise TransientProviderError(f"provider returned {resp.status_code}")
        if resp.status_code >= 400:
            raise ProviderError(f"provider returned {resp.status_code}: {resp.text[:200]}")
        vectors = [tuple(item["embedding"]) for item in resp.json()["data"]]
        return [_renormalise(v) for v in vectors]


def _renormalise(vector: tuple[float, ...]) -> tuple[float, ...]:
    norm = sum(v * v for v in vector) ** 0.5
    if norm == 0:
        raise ProviderError("zero embedding vector from provider")
    return tuple(v / norm for v in vector)
