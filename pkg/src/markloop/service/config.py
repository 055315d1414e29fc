"""Service configuration and component wiring.

One JSON file describes providers, role routing, budgets, prices, the loop
settings, memory and pipeline knobs, and the static user/token table.
`build_runtime` turns a config into the live object graph the API uses.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..classroom import CurriculumStore, Directory, User
from ..domain import LoopConfig
from ..errors import ConfigurationError
from ..feedback import FeedbackEngine
from ..assessor import Assessor
from ..gateway import (
    BudgetTier,
    Gateway,
    HTTPProvider,
    ModelRole,
    ScriptedProvider,
)
from ..memory import ConceptStore


@dataclass
class AppConfig:
    storage_path: str = "markloop.db"
    providers: dict = field(default_factory=dict)
    roles: dict = field(default_factory=dict)
    budgets: dict = field(default_factory=dict)
    price_table: dict = field(default_factory=dict)
    embedding: dict = field(default_factory=lambda: {"dim": 64, "seed": 7})
    retry: dict = field(default_factory=lambda: {"retries": 2, "backoff_seconds": 0.05})
    loop: dict = field(default_factory=dict)
    memory: dict = field(default_factory=lambda: {"k": 5, "student_scoped": True})
    pipeline: dict = field(default_factory=lambda: {"workers": 2, "retries": 1,
                                                    "fanout_parallelism": 4})
    users: list = field(default_factory=list)
    ui_dist: str | None = None

    @classmethod
    def from_file(cls, path: str | Path) -> "AppConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls.from_dict(data, base_dir=Path(path).parent)

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "AppConfig":
        config = cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})
        if base_dir is not None:
            config.storage_path = str((base_dir / config.storage_path).resolve())
            for spec in config.providers.values():
                if "script_path" in spec:
                    spec["script_path"] = str((base_dir / spec["script_path"]).resolve())
        return config

    def loop_config(self) -> LoopConfig:
        if not self.loop:
            return LoopConfig()
        return LoopConfig(
            criteria=tuple(self.loop.get("criteria",
                                         ("accuracy", "specificity", "clarity"))),
            tau=self.loop.get("tau", 4),
            t_max=self.loop.get("t_max", 3),
            generator_role=self.loop.get("generator_role", "generator"),
            verifier_role=self.loop.get("verifier_role", "verifier"),
            safety_role=self.loop.get("safety_role", "safety"),
        )


def build_provider(spec: dict):
    kind = spec.get("type", "scripted")
    if kind == "scripted":
        script_path = spec.get("script_path")
        if script_path:
            return ScriptedProvider.from_file(script_path)
        return ScriptedProvider(default=spec.get("default"))
    if kind == "http":
        return HTTPProvider(
            base_url=spec["base_url"],
            auth_env_var=spec.get("auth_env_var", ""),
            timeout_seconds=spec.get("timeout_seconds", 30.0),
            hash_embeddings=spec.get("hash_embeddings", True),
        )
    raise ConfigurationError(f"unknown provider type {kind!r}")


def build_gateway(config: AppConfig) -> Gateway:
    if not config.providers or not config.roles:
        raise ConfigurationError("config must define providers and role routing")
    providers = {pid: build_provider(spec) for pid, spec in config.providers.items()}
    roles = {
        name: ModelRole(
            name=name,
            provider_id=spec["provider_id"],
            model_id=spec["model_id"],
            default_budget=spec.get("default_budget", "normal"),
        )
        for name, spec in config.roles.items()
    }
    budgets = None
    if config.budgets:
        budgets = {
            name: BudgetTier(
                tier=name,
                max_output_tokens=spec["max_output_tokens"],
                reasoning_effort_hint=spec.get("reasoning_effort_hint", ""),
            )
            for name, spec in config.budgets.items()
        }
    return Gateway(
        roles=roles,
        providers=providers,
        budgets=budgets,
        price_table=config.price_table,
        embedding_dim=config.embedding.get("dim", 64),
        embedding_seed=config.embedding.get("seed", 7),
        retries=config.retry.get("retries", 2),
        backoff_seconds=config.retry.get("backoff_seconds", 0.05),
    )


@dataclass
class Runtime:
    config: AppConfig
    gateway: Gateway
    assessor: Assessor
    engine: FeedbackEngine
    concept_store: ConceptStore
    directory: Directory
    tokens: dict[str, str]
    curriculum: CurriculumStore


def build_runtime(config: AppConfig) -> Runtime:
    gateway = build_gateway(config)
    engine = FeedbackEngine(
        gateway,
        config.loop_config(),
        fanout_parallelism=config.pipeline.get("fanout_parallelism", 4),
    )
    concept_store = ConceptStore(
        embedder=lambda text: gateway.embed([text])[0],
        student_scoped=config.memory.get("student_scoped", True),
    )
    directory = Directory()
    tokens: dict[str, str] = {}
    for entry in config.users:
        directory.add(User(entry["id"], entry["role"], entry.get("name", "")))
        token = entry.get("token")
        if token:
            tokens[token] = entry["id"]
    return Runtime(
        config=config,
        gateway=gateway,
        assessor=Assessor(gateway),
        engine=engine,
        concept_store=concept_store,
        directory=directory,
        tokens=tokens,
        curriculum=CurriculumStore(),
    )
