"""The generate-evaluate-select-fine-tune cycle loop.

Each cycle samples candidates, applies the staged pipeline (validity,
one-epoch training, accuracy threshold, novelty), appends accepted
candidates to the corpus, and emits per-cycle statistics plus a
fine-tune manifest. Three ablation switches mirror the selection
components: novelty filter, accuracy threshold, and iteration.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

from . import __version__
from .corpus import CorpusRecord, CorpusStore
from .errors import ConfigError, EvaluatorUnavailableError
from .gateway import EvalResult, TrainingFailure, ValidityReport
from .novelty import CycleArchive, NoveltyVerdict, assess
from .stats import CycleStats, summarize_cycle

DISPOSITIONS = ("invalid", "below_threshold", "near_duplicate", "accepted")


@dataclass(frozen=True)
class RunConfig:
    cycles: int = 22
    samples_per_cycle: int = 50
    accuracy_threshold: float = 0.40
    tau: float = 0.90
    k: int = 10
    num_perm: int = 256
    seed: int = 0
    novelty_filter_enabled: bool = True
    accuracy_threshold_enabled: bool = True
    iteration_enabled: bool = True
    workers: int = 1
    archive_accepted_only: bool = False
    retry_budget: int = 2

    def validate(self) -> None:
        if self.cycles < 1:
            raise ConfigError(f"cycles must be >= 1, got {self.cycles}")
        if self.samples_per_cycle < 1:
            raise ConfigError(
                f"samples_per_cycle must be >= 1, got {self.samples_per_cycle}"
            )
        for name in ("accuracy_threshold", "tau"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {value}")
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.num_perm < 16:
            raise ConfigError(f"num_perm must be >= 16, got {self.num_perm}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")


@dataclass
class CandidateRecord:
    id: str
    cycle: int
    source_code: str
    validity: ValidityReport
    eval: EvalResult | None = None
    novelty: NoveltyVerdict | None = None
    disposition: str = "invalid"

    @property
    def is_valid(self) -> bool:
        # "valid" means the candidate passed every validity stage *and*
        # completed its training epoch
        return self.validity.valid and self.eval is not None

    def to_log_dict(self) -> dict:
        entry = {
            "id": self.id,
            "cycle": self.cycle,
            "disposition": self.disposition,
            "parse_ok": self.validity.parse_ok,
            "instantiate_ok": self.validity.instantiate_ok,
            "forward_ok": self.validity.forward_ok,
            "contract_ok": self.validity.contract_ok,
            "failure_stage": self.validity.failure_stage,
            "accuracy": None if self.eval is None else round(self.eval.accuracy, 6),
            "wall_time_s": None if self.eval is None else self.eval.wall_time,
        }
        if self.novelty is not None:
            entry.update(self.novelty.log_fields())
        return entry


@dataclass
class RunReport:
    config: RunConfig
    cycle_stats: list[CycleStats] = field(default_factory=list)
    records: list[CandidateRecord] = field(default_factory=list)
    total_accepted: int = 0
    aborted: bool = False
    incomplete_cycle: int | None = None


class CycleAborted(Exception):
    """Evaluator stayed unavailable past the retry budget."""

    def __init__(self, cycle: int, partial: list[CandidateRecord]):
        super().__init__(f"cycle {cycle} aborted: evaluator unavailable")
        self.cycle = cycle
        self.partial = partial


def _call_with_retries(fn, retries: int):
    attempt = 0
    while True:
        try:
            return fn()
        except EvaluatorUnavailableError:
            attempt += 1
            if attempt > retries:
                raise


def _evaluate_one(evaluator, source: str, progress: float, retries: int):
    """Validity check followed by the one-epoch proxy; None eval = not trained."""
    validity = _call_with_retries(lambda: evaluator.validate(source), retries)
    if not validity.valid:
        return validity, None
    try:
        result = _call_with_retries(
            lambda: evaluator.train_one_epoch(source, progress), retries
        )
    except TrainingFailure:
        return validity, None  # runtime failure at the training stage
    return validity, result


def run_cycle(
    config: RunConfig,
    cycle: int,
    corpus: CorpusStore,
    generator,
    evaluator,
    generator_state: int = 0,
) -> tuple[CycleStats, list[CandidateRecord]]:
    """Execute one cycle; returns its stats and per-candidate records.

    Evaluation fans out across workers; the novelty pass runs serialized
    in candidate-id order so commits are deterministic regardless of
    worker completion order.
    """
    progress = (cycle - 1) / max(1, config.cycles - 1)
    sources = generator.generate(
        config.samples_per_cycle, cycle, config.seed, generator_state
    )
    records: list[CandidateRecord] = []
    archive = CycleArchive(cycle, corpus.index)
    rejections_since_accept = 0

    for i, source in enumerate(sources):
        if source:
            validity = ValidityReport.failed_at("parse", "not yet evaluated")
        else:
            validity = ValidityReport.failed_at("parse", "generation failed")
            source = ""
        records.append(
            CandidateRecord(
                id=f"c{cycle:03d}-{i:04d}",
                cycle=cycle,
                source_code=source,
                validity=validity,
            )
        )

    evaluable = [r for r in records if r.source_code]
    try:
        if config.workers > 1:
            from concurrent.futures import ThreadPoolExecutor

            with ThreadPoolExecutor(max_workers=config.workers) as pool:
                results = list(
                    pool.map(
                        lambda r: _evaluate_one(
                            evaluator, r.source_code, progress, config.retry_budget
                        ),
                        evaluable,
                    )
                )
        else:
            results = [
                _evaluate_one(evaluator, r.source_code, progress, config.retry_budget)
                for r in evaluable
            ]
    except EvaluatorUnavailableError:
        raise CycleAborted(cycle, records)
    for record, (validity, result) in zip(evaluable, results):
        record.validity = validity
        record.eval = result

    for record in records:
        if not record.is_valid:
            record.disposition = "invalid"
            continue
        source = record.source_code

        # novelty is assessed for every trained candidate so similarity
        # fields stay in the log across all ablations
        sig = corpus.signature_of(source)
        verdict = assess(
            sig,
            corpus.index,
            archive,
            tau=config.tau,
            filter_enabled=config.novelty_filter_enabled,
        )
        record.novelty = verdict.with_rejection_count(rejections_since_accept)

        above = record.eval.accuracy >= config.accuracy_threshold
        if not config.accuracy_threshold_enabled:
            above = True
        if not above:
            record.disposition = "below_threshold"
        elif not record.novelty.accepted:
            record.disposition = "near_duplicate"
            rejections_since_accept += 1
        else:
            record.disposition = "accepted"
            rejections_since_accept = 0
            if config.iteration_enabled:
                corpus.append_accepted(
                    CorpusRecord(
                        id=record.id,
                        source_code=source,
                        origin="generated",
                        cycle_added=cycle,
                        accuracy=record.eval.accuracy,
                        j_train_at_accept=record.novelty.j_train,
                        j_gen_at_accept=record.novelty.j_gen,
                        pair_count=1,
                    ),
                    sig,
                )
        if not config.archive_accepted_only or record.disposition == "accepted":
            archive.commit(record.id, sig)

    stats = summarize_cycle(
        records, config.accuracy_threshold, corpus_size_after=corpus.pair_count
    )
    return stats, records


def run(
    config: RunConfig,
    corpus: CorpusStore,
    generator,
    evaluator,
    out_dir: str | Path | None = None,
) -> RunReport:
    """Execute all cycles sequentially and persist the run artifacts."""
    config.validate()
    report = RunReport(config=config)
    generator_state = 0
    for cycle in range(1, config.cycles + 1):
        try:
            stats, records = run_cycle(
                config, cycle, corpus, generator, evaluator, generator_state
            )
        except CycleAborted as aborted:
            report.records.extend(aborted.partial)
            report.aborted = True
            report.incomplete_cycle = cycle
            break
        report.cycle_stats.append(stats)
        report.records.extend(records)
        generator_state += stats.n_unique_accepted
        if out_dir is not None and config.iteration_enabled:
            corpus.export_finetune_manifest(
                Path(out_dir) / "manifests" / f"cycle_{cycle:03d}.json", cycle
            )
    report.total_accepted = generator_state
    corpus.checkpoint()
    if out_dir is not None:
        write_run_artifacts(report, out_dir)
    return report


def write_run_artifacts(report: RunReport, out_dir: str | Path) -> None:
    """Run manifest, candidate log, and per-cycle stats (all deterministic)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "tool": "archloop",
        "version": __version__,
        "config": asdict(report.config),
        "aborted": report.aborted,
        "incomplete_cycle": report.incomplete_cycle,
        "completed_cycles": len(report.cycle_stats),
        "total_accepted": report.total_accepted,
    }
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "candidates.jsonl", "w", encoding="utf-8") as fh:
        for record in report.records:
            fh.write(json.dumps(record.to_log_dict(), sort_keys=True))
            fh.write("\n")
    with open(out / "cycles.json", "w", encoding="utf-8") as fh:
        json.dump(
            [asdict(s) for s in report.cycle_stats], fh, indent=2, sort_keys=True
        )
        fh.write("\n")


def load_cycle_stats(run_dir: str | Path) -> list[CycleStats]:
    with open(Path(run_dir) / "cycles.json", encoding="utf-8") as fh:
        rows = json.load(fh)
    out = []
    for row in rows:
        for key in ("valid_rate_ci", "mean_acc_ci", "frac_above_threshold_ci"):
            if row.get(key) is not None:
                row[key] = tuple(row[key])
        out.append(CycleStats(**row))
    return out
