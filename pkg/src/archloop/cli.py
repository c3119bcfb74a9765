"""Command-line entry points: ingest, run, report.

Exit codes: 0 success, 1 configuration error, 2 aborted run.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .corpus import CorpusStore
from .errors import ConfigError
from .gateway import (
    CommandGenerator,
    SidecarClient,
    SimulatedEvaluator,
    SimulatedEvaluatorConfig,
    SimulatedGenerator,
    SimulatedGeneratorConfig,
)
from .orchestrator import RunConfig, load_cycle_stats, run
from .stats import emit_plot_data, emit_report


@click.group()
def main() -> None:
    """Closed-loop architecture-synthesis harness."""


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--tau", default=0.90, show_default=True)
@click.option("--k", default=10, show_default=True)
@click.option("--num-perm", default=256, show_default=True)
@click.option("--seed", default=0, show_default=True, type=int)
def ingest(input_path, out_dir, tau, k, num_perm, seed):
    """Deduplicate and convert a seed snippet stream (JSONL) into a corpus."""
    store = CorpusStore(out_dir, k=k, num_perm=num_perm, seed=seed, tau=tau)

    def snippets():
        with open(input_path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                try:
                    yield json.loads(line)
                except json.JSONDecodeError:
                    yield {"malformed": True}

    report = store.ingest_seed(snippets())
    click.echo(
        f"total={report.total} malformed={report.malformed} "
        f"unique_after_dedup={report.unique_after_dedup} "
        f"converted={report.converted} dropped={report.dropped} "
        f"pairs={report.pairs}"
    )


def _build_generator(spec: str):
    if spec == "simulated":
        return SimulatedGenerator(SimulatedGeneratorConfig())
    if spec.startswith("command:"):
        return CommandGenerator(spec.removeprefix("command:"))
    raise ConfigError(f"unknown generator: {spec!r}")


def _build_evaluator(spec: str, seed: int):
    if spec == "simulated":
        return SimulatedEvaluator(SimulatedEvaluatorConfig(seed=seed))
    if spec.startswith("sidecar:"):
        return SidecarClient(spec.removeprefix("sidecar:"))
    raise ConfigError(f"unknown evaluator: {spec!r}")


@main.command(name="run")
@click.option("--corpus", "corpus_dir", required=True, type=click.Path())
@click.option("--out", "out_dir", default=None, type=click.Path(),
              help="Run directory [default: <corpus>/runs/seed-<seed>]")
@click.option("--cycles", default=22, show_default=True)
@click.option("--samples", default=50, show_default=True)
@click.option("--threshold", default=0.40, show_default=True)
@click.option("--tau", default=0.90, show_default=True)
@click.option("--k", default=10, show_default=True)
@click.option("--num-perm", default=256, show_default=True)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--no-novelty-filter", is_flag=True)
@click.option("--no-accuracy-threshold", is_flag=True)
@click.option("--no-iteration", is_flag=True)
@click.option("--evaluator", "evaluator_spec", default="simulated", show_default=True)
@click.option("--generator", "generator_spec", default="simulated", show_default=True)
@click.option("--workers", default=1, show_default=True)
def run_command(
    corpus_dir, out_dir, cycles, samples, threshold, tau, k, num_perm, seed,
    no_novelty_filter, no_accuracy_threshold, no_iteration,
    evaluator_spec, generator_spec, workers,
):
    """Execute the generate-evaluate-select loop over the given corpus."""
    try:
        config = RunConfig(
            cycles=cycles,
            samples_per_cycle=samples,
            accuracy_threshold=threshold,
            tau=tau,
            k=k,
            num_perm=num_perm,
            seed=seed,
            novelty_filter_enabled=not no_novelty_filter,
            accuracy_threshold_enabled=not no_accuracy_threshold,
            iteration_enabled=not no_iteration,
            workers=workers,
        )
        config.validate()
        generator = _build_generator(generator_spec)
        evaluator = _build_evaluator(evaluator_spec, seed)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(1)

    store = CorpusStore(corpus_dir, k=k, num_perm=num_perm, seed=seed, tau=tau)
    out = Path(out_dir) if out_dir else Path(corpus_dir) / "runs" / f"seed-{seed}"
    try:
        report = run(config, store, generator, evaluator, out_dir=out)
    finally:
        if isinstance(evaluator, SidecarClient):
            evaluator.close()
    click.echo(
        f"cycles={len(report.cycle_stats)} accepted={report.total_accepted} "
        f"pairs={store.pair_count} out={out}"
    )
    if report.aborted:
        click.echo(f"run aborted in cycle {report.incomplete_cycle}", err=True)
        sys.exit(2)


@main.command()
@click.option("--run", "run_dir", required=True, type=click.Path(exists=True))
@click.option("--format", "fmt", default="csv", show_default=True,
              type=click.Choice(["csv", "md"]))
@click.option("--figures/--no-figures", default=True, show_default=True)
def report(run_dir, fmt, figures):
    """Render the per-cycle table, plot data, and metric figures."""
    stats = load_cycle_stats(run_dir)
    if not stats:
        click.echo("run contains no completed cycles", err=True)
        sys.exit(1)
    run_path = Path(run_dir)
    table = emit_report(stats, fmt)
    out_file = run_path / f"report.{fmt}"
    out_file.write_text(table, encoding="utf-8")
    (run_path / "plot_data.csv").write_text(emit_plot_data(stats), encoding="utf-8")
    if figures:
        from .figures import render_figures

        render_figures(stats, run_path / "figures")
    click.echo(table, nl=False)


if __name__ == "__main__":
    main()
