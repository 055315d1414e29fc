"""Single chokepoint for model calls.

All pipeline stages go through Gateway.complete/embed, which handles
role-based routing, budget tiers, bounded retries with exponential backoff,
and cost/latency accounting. One CallRecord is appended per call, success or
failure, so accounting counts always equal call counts.
"""

from __future__ import annotations

import contextlib
import logging
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone

from ..errors import (
    BudgetExceeded,
    ConfigurationError,
    ProviderError,
    ProviderTimeout,
    SameModelConfigError,
    TransientProviderError,
)
from .embedding import DEFAULT_DIM, DEFAULT_SEED
from .providers import Provider

logger = logging.getLogger(__name__)

ROLE_NAMES = (
    "assessor_judge",
    "markscheme_author",
    "generator",
    "verifier",
    "safety",
    "question_author",
    "embedder",
)

BUDGET_TIERS = ("normal", "extended")


@dataclass(frozen=True)
class BudgetTier:
    tier: str
    max_output_tokens: int
    reasoning_effort_hint: str = ""

    def __post_init__(self) -> None:
        if self.tier not in BUDGET_TIERS:
            raise ConfigurationError(f"unknown budget tier {self.tier!r}")
        if self.max_output_tokens < 1:
            raise ConfigurationError("max_output_tokens must be positive")


DEFAULT_BUDGETS = {
    "normal": BudgetTier("normal", max_output_tokens=1024),
    "extended": BudgetTier("extended", max_output_tokens=4096,
                           reasoning_effort_hint="think step by step, explore alternatives"),
}


@dataclass(frozen=True)
class ModelRole:
    name: str
    provider_id: str
    model_id: str
    default_budget: str = "normal"

    def __post_init__(self) -> None:
        if self.name not in ROLE_NAMES:
            raise ConfigurationError(f"unknown model role {self.name!r}")
        if self.default_budget not in BUDGET_TIERS:
            raise ConfigurationError(f"unknown budget tier {self.default_budget!r}")


@dataclass(frozen=True)
class CallRecord:
    role: str
    model_id: str
    budget: str
    latency_seconds: float
    cost_usd: float
    input_tokens: int
    output_tokens: int
    timestamp: datetime
    ok: bool = True


@dataclass(frozen=True)
class Completion:
    text: str
    record: CallRecord


@dataclass
class UsageSummary:
    count: int
    avg_latency: float | None
    min_latency: float | None
    max_latency: float | None
    total_cost: float
    per_role: dict[str, dict]

    def as_doc(self) -> dict:
        return {
            "schema": "usage_summary/1",
            "count": self.count,
            "avg_latency": self.avg_latency,
            "min_latency": self.min_latency,
            "max_latency": self.max_latency,
            "total_cost": self.total_cost,
            "per_role": self.per_role,
        }


def estimate_tokens(text: str) -> int:
    return len(text.split())


class Gateway:
    """Routes role-tagged calls to providers and accounts every one of them.

    The accounting log is append-only under a lock; concurrent calls are
    fine. `collect()` opens a thread-local span that additionally gathers the
    records made on the current thread, which is how the batch harness
    attributes cost to individual corpus items.
    """

    def __init__(
        self,
        roles: dict[str, ModelRole],
        providers: dict[str, Provider],
        budgets: dict[str, BudgetTier] | None = None,
        price_table: dict[str, dict] | None = None,
        embedding_dim: int = DEFAULT_DIM,
        embedding_seed: int = DEFAULT_SEED,
        retries: int = 2,
        backoff_seconds: float = 0.05,
        sleeper=time.sleep,
    ):
        self._roles = dict(roles)
        self._providers = dict(providers)
        self._budgets = dict(budgets or DEFAULT_BUDGETS)
        self._price_table = dict(price_table or {})
        self.embedding_dim = embedding_dim
        self.embedding_seed = embedding_seed
        self._retries = retries
        self._backoff = backoff_seconds
        self._sleep = sleeper
        self._records: list[CallRecord] = []
        self._log_lock = threading.Lock()
        self._spans = threading.local()
        self._validate()

    def _validate(self) -> None:
        for name, role in self._roles.items():
            if name != role.name:
                raise ConfigurationError(f"role registered as {name!r} but named {role.name!r}")
            if role.provider_id not in self._providers:
                raise ConfigurationError(
                    f"role {name!r} routes to unknown provider {role.provider_id!r}"
                )
        if "normal" in self._budgets and "extended" in self._budgets:
            if (self._budgets["extended"].max_output_tokens
                    < self._budgets["normal"].max_output_tokens):
                raise ConfigurationError(
                    "extended budget must allow at least as many output tokens as normal"
                )
        gen = self._roles.get("generator")
        ver = self._roles.get("verifier")
        if gen and ver and (gen.provider_id, gen.model_id) == (ver.provider_id, ver.model_id):
            raise SameModelConfigError(
                "verifier must run on a different provider/model than the generator"
            )

    def describe_role(self, name: str) -> ModelRole:
        role = self._roles.get(name)
        if role is None:
            raise ConfigurationError(f"role {name!r} is not configured")
        return role

    def budget(self, name: str) -> BudgetTier:
        tier = self._budgets.get(name)
        if tier is None:
            raise ConfigurationError(f"budget tier {name!r} is not configured")
        return tier

    def complete(self, role_name: str, prompt: str, budget: str | BudgetTier | None = None
                 ) -> Completion:
        if not prompt.strip():
            raise ConfigurationError("prompt must be non-empty")
        role = self.describe_role(role_name)
        tier = self._resolve_budget(role, budget)
        provider = self._providers[role.provider_id]

        start = time.perf_counter()
        attempts = 0
        while True:
            try:
                text = provider.complete(
                    role.name, role.model_id, prompt, tier.max_output_tokens,
                    tier.reasoning_effort_hint,
                )
                break
            except (TransientProviderError, ProviderTimeout) as exc:
                attempts += 1
                if attempts > self._retries:
                    latency = time.perf_counter() - start
                    self._record(role, tier, latency, prompt, "", ok=False)
                    if isinstance(exc, ProviderTimeout):
                        raise ProviderTimeout(
                            f"role {role_name!r} timed out after {attempts} attempts"
                        ) from exc
                    raise ProviderError(
                        f"role {role_name!r} failed after {attempts} attempts: {exc}"
                    ) from exc
                self._sleep(self._backoff * (2 ** (attempts - 1)))
            except ProviderError:
                latency = time.perf_counter() - start
                self._record(role, tier, latency, prompt, "", ok=False)
                raise

        latency = time.perf_counter() - start
        record = self._record(role, tier, latency, prompt, text, ok=True)
        if estimate_tokens(text) > tier.max_output_tokens:
            raise BudgetExceeded(
                f"role {role_name!r} produced {estimate_tokens(text)} tokens, "
                f"budget {tier.tier!r} allows {tier.max_output_tokens}"
            )
        return Completion(text=text, record=record)

    def embed(self, texts: list[str]) -> list[tuple[float, ...]]:
        if not texts:
            raise ConfigurationError("embed requires at least one text")
        role = self.describe_role("embedder")
        tier = self._resolve_budget(role, None)
        provider = self._providers[role.provider_id]
        start = time.perf_counter()
        try:
            vectors = provider.embed(role.model_id, texts, self.embedding_dim,
                                     self.embedding_seed)
        except ProviderError:
            self._record(role, tier, time.perf_counter() - start,
                         " ".join(texts), "", ok=False)
            raise
        self._record(role, tier, time.perf_counter() - start, " ".join(texts), "", ok=True)
        return vectors

    def _resolve_budget(self, role: ModelRole, budget: str | BudgetTier | None) -> BudgetTier:
        if budget is None:
            return self.budget(role.default_budget)
        if isinstance(budget, BudgetTier):
            return budget
        return self.budget(budget)

    def _record(self, role: ModelRole, tier: BudgetTier, latency: float, prompt: str,
                text: str, ok: bool) -> CallRecord:
        prices = self._price_table.get(role.model_id, {})
        input_tokens = estimate_tokens(prompt)
        output_tokens = estimate_tokens(text)
        cost = (
            input_tokens / 1000.0 * prices.get("input_per_1k", 0.0)
            + output_tokens / 1000.0 * prices.get("output_per_1k", 0.0)
        )
        record = CallRecord(
            role=role.name,
            model_id=role.model_id,
            budget=tier.tier,
            latency_seconds=latency,
            cost_usd=cost,
            input_tokens=input_tokens,
            output_tokens=output_tokens,
            timestamp=datetime.now(timezone.utc),
            ok=ok,
        )
        with self._log_lock:
            self._records.append(record)
        collector = getattr(self._spans, "stack", None)
        if collector:
            for span in collector:
                span.append(record)
        return record

    @contextlib.contextmanager
    def collect(self):
        """Collect the CallRecords made on this thread inside the block."""
        span: list[CallRecord] = []
        stack = getattr(self._spans, "stack", None)
        if stack is None:
            stack = []
            self._spans.stack = stack
        stack.append(span)
        try:
            yield span
        finally:
            stack.remove(span)

    def records(self) -> list[CallRecord]:
        with self._log_lock:
            return list(self._records)

    def call_count(self, role: str | None = None) -> int:
        with self._log_lock:
            if role is None:
                return len(self._records)
            return sum(1 for r in self._records if r.role == role)

    def usage_summary(self, since: datetime | None = None, until: datetime | None = None
                      ) -> UsageSummary:
        with self._log_lock:
            window = [
                r for r in self._records
                if (since is None or r.timestamp >= since)
                and (until is None or r.timestamp <= until)
            ]
        if not window:
            return UsageSummary(0, None, None, None, 0.0, {})
        latencies = [r.latency_seconds for r in window]
        per_role: dict[str, dict] = {}
        for r in window:
            slot = per_role.setdefault(
                r.role, {"count": 0, "total_cost": 0.0, "total_latency": 0.0}
            )
            slot["count"] += 1
            slot["total_cost"] += r.cost_usd
            slot["total_latency"] += r.latency_seconds
        for slot in per_role.values():
            slot["avg_latency"] = slot.pop("total_latency") / slot["count"]
        return UsageSummary(
            count=len(window),
            avg_latency=sum(latencies) / len(latencies),
            min_latency=min(latencies),
            max_latency=max(latencies),
            total_cost=sum(r.cost_usd for r in window),
            per_role=per_role,
        )
