from __future__ import annotations

import pytest

from markloop.gateway import (
    DEFAULT_BUDGETS,
    Gateway,
    ModelRole,
    ScriptedProvider,
    ScriptRule,
)

ROLE_MODELS = {
    "assessor_judge": "judge-1",
    "markscheme_author": "author-1",
    "generator": "gen-1",
    "verifier": "ver-1",
    "safety": "safety-1",
    "question_author": "qgen-1",
    "embedder": "embed-1",
}


def build_gateway(
    rules: list[ScriptRule] | None = None,
    default: str | None = None,
    price_table: dict | None = None,
    retries: int = 2,
    budgets: dict | None = None,
) -> Gateway:
    provider = ScriptedProvider(rules or [], default=default)
    roles = {
        name: ModelRole(name=name, provider_id="scripted", model_id=model)
        for name, model in ROLE_MODELS.items()
    }
    return Gateway(
        roles=roles,
        providers={"scripted": provider},
        budgets=budgets or DEFAULT_BUDGETS,
        price_table=price_table,
        retries=retries,
        backoff_seconds=0.0,
        sleeper=lambda _: None,
    )


@pytest.fixture
def gateway_factory():
    return build_gateway


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    reports = []
    for status in ("passed", "failed", "error"):
        reports.extend(terminalreporter.stats.get(status, []))
    acceptance = [
        r for r in reports
        if getattr(r, "when", "call") == "call" and "test_acceptance" in r.nodeid
    ]
    if not acceptance:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for report in sorted(acceptance, key=lambda r: r.nodeid):
        name = report.nodeid.split("::")[-1]
        status = "PASS" if report.passed else "FAIL"
        terminalreporter.write_line(f"{status}: {name}")
