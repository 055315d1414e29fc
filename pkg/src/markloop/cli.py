"""Command-line entry points: serve, seed-fixtures, run-batch, memory export/import."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .metrics import load_corpus, run_batch
from .service.config import AppConfig, build_runtime
from .service.seeding import seed_directory
from .service.storage import Store


@click.group()
def main() -> None:
    """Rubric-aligned scoring and verified feedback service."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--ui-dist", default=None, type=click.Path(),
              help="Directory of built frontend assets to serve at /")
def serve(config_path: str, host: str, port: int, ui_dist: str | None) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service.app import create_app

    config = AppConfig.from_file(config_path)
    if ui_dist:
        config.ui_dist = ui_dist
    uvicorn.run(create_app(config), host=host, port=port)


@main.command("seed-fixtures")
@click.option("--dir", "target", required=True, type=click.Path())
@click.option("--corpus-n", default=100, show_default=True, type=int)
def seed_fixtures(target: str, corpus_n: int) -> None:
    """Write config, scripted provider, corpus and a seeded database."""
    config_path = seed_directory(target, corpus_n=corpus_n)
    click.echo(f"seeded fixtures under {target}")
    click.echo(f"config: {config_path}")


@main.command("run-batch")
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--parallelism", default=4, show_default=True, type=int)
@click.option("--output", "output_path", default=None, type=click.Path())
def run_batch_cmd(corpus_path: str, config_path: str, parallelism: int,
                  output_path: str | None) -> None:
    """Score a corpus and print the metrics report."""
    config = AppConfig.from_file(config_path)
    runtime = build_runtime(config)
    corpus = load_corpus(corpus_path)
    report = run_batch(corpus, runtime.assessor, runtime.gateway,
                       parallelism=parallelism)
    click.echo(report.table())
    if report.failure_count:
        click.echo(f"excluded {report.failure_count} failed items", err=True)
    if output_path:
        Path(output_path).write_text(
            json.dumps(report.as_doc(), indent=2, sort_keys=True), encoding="utf-8"
        )
        click.echo(f"report written to {output_path}")


@main.command("export-memory")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", required=True, type=click.Path())
def export_memory(config_path: str, output_path: str) -> None:
    """Dump the memory store as line-delimited node documents."""
    config = AppConfig.from_file(config_path)
    runtime = build_runtime(config)
    store = Store(config.storage_path)
    from .memory import node_from_doc

    for doc in store.list_docs("memory_node"):
        runtime.concept_store.add_record(node_from_doc(doc))
    Path(output_path).write_text(runtime.concept_store.export_lines(), encoding="utf-8")
    store.close()
    click.echo(f"exported {len(runtime.concept_store)} nodes to {output_path}")


@main.command("import-memory")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
def import_memory(config_path: str, input_path: str) -> None:
    """Load node documents into the memory store and persist them."""
    config = AppConfig.from_file(config_path)
    runtime = build_runtime(config)
    store = Store(config.storage_path)
    from .memory import node_doc, node_from_doc

    for doc in store.list_docs("memory_node"):
        runtime.concept_store.add_record(node_from_doc(doc))
    text = Path(input_path).read_text(encoding="utf-8")
    count = 0
    for line in text.splitlines():
        if not line.strip():
            continue
        node = node_from_doc(json.loads(line))
        runtime.concept_store.add_record(node)
        store.put_doc("memory_node", node.id, node_doc(node))
        count += 1
    store.close()
    click.echo(f"imported {count} nodes")


if __name__ == "__main__":
    sys.exit(main())
