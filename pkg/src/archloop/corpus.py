"""Persistent training-corpus store.

Records live in an append-only line-delimited JSON file with a periodic
binary snapshot of the near-duplicate index; reloading the directory
reproduces identical index query results. Sizes are reported in
prompt-code pairs (the training unit), with records as a secondary count.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, asdict, field
from pathlib import Path
from typing import Iterable

from .errors import ConversionError, DuplicateIdError
from .lexshingle import DEFAULT_SHINGLE_K, shingle_source, tokenize
from .novelty import DEFAULT_TAU
from .sketch import DEFAULT_NUM_PERM, LshIndex, MinHasher, MinHashSignature

SYSTEM_MESSAGE = (
    "You are an expert PyTorch architecture designer. Produce a single "
    "compact nn.Module definition that learns quickly under tight "
    "parameter budgets; output code only."
)

USER_MESSAGE_VARIANT_A = (
    "Design a convolutional network for MNIST digit classification. "
    "Implement class Net(nn.Module) with __init__, forward, train_setup, "
    "learn, and a function supported_hyperparameters() returning "
    '{"lr", "momentum"}. Stay under 500,000 parameters.'
)

USER_MESSAGE_VARIANT_B = (
    "Design a convolutional network for CIFAR-10 classification mapping "
    "(N, 3, 32, 32) inputs to 10 logits. Implement class Net(nn.Module) "
    "with __init__, forward, train_setup, learn, and a function "
    'supported_hyperparameters() returning {"lr", "momentum"}. '
    "Stay under 500,000 parameters."
)

# recorded verbatim for the external fine-tuning stage; never executed here
FINETUNE_HYPERPARAMETERS = {
    "adapter_rank": 32,
    "adapter_alpha": 32,
    "adapter_dropout": 0.05,
    "epochs": 5,
    "learning_rate": 1e-5,
    "effective_batch_size": 4,
    "lr_schedule": "cosine",
    "warmup_steps": 20,
    "weight_decay": 0.01,
    "max_grad_norm": 1.0,
}

_RECORDS_FILE = "records.jsonl"
_META_FILE = "meta.json"
_SNAPSHOT_FILE = "index.snapshot"


@dataclass(frozen=True)
class CorpusRecord:
    id: str
    source_code: str
    origin: str  # "seed" | "generated"
    cycle_added: int = 0
    accuracy: float | None = None
    j_train_at_accept: float | None = None
    j_gen_at_accept: float | None = None
    pair_count: int = 1


@dataclass(frozen=True)
class ChatPair:
    system_message: str
    user_message: str
    assistant_code: str
    variant: str  # "description-A" | "description-B"


@dataclass
class IngestReport:
    total: int = 0
    malformed: int = 0
    unique_after_dedup: int = 0
    converted: int = 0
    dropped: int = 0
    pairs: int = 0


def to_chat_pairs(record: CorpusRecord) -> list[ChatPair]:
    """Seed records yield the two-description variants; generated yield one."""
    has_class = any(
        t.kind == "keyword" and t.text == "class"
        for t in tokenize(record.source_code).tokens
    )
    if not has_class:
        raise ConversionError(f"record {record.id}: no class definition")
    if record.origin == "seed":
        return [
            ChatPair(SYSTEM_MESSAGE, USER_MESSAGE_VARIANT_A, record.source_code, "description-A"),
            ChatPair(SYSTEM_MESSAGE, USER_MESSAGE_VARIANT_B, record.source_code, "description-B"),
        ]
    return [
        ChatPair(SYSTEM_MESSAGE, USER_MESSAGE_VARIANT_B, record.source_code, "description-B")
    ]


def _canonical_line(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n"


class CorpusStore:
    """Single-writer corpus directory with an LSH index over record code."""

    def __init__(
        self,
        directory: str | Path,
        k: int = DEFAULT_SHINGLE_K,
        num_perm: int = DEFAULT_NUM_PERM,
        seed: int = 0,
        tau: float = DEFAULT_TAU,
        snapshot_every: int = 64,
    ):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.k = k
        self.tau = tau
        self.snapshot_every = snapshot_every
        self.hasher = MinHasher(num_perm=num_perm, seed=seed)
        self.index = LshIndex(num_perm=num_perm, seed=seed)
        self.records: dict[str, CorpusRecord] = {}
        self._appends_since_snapshot = 0
        self._load()

    # -- sizes ---------------------------------------------------------------

    @property
    def pair_count(self) -> int:
        return sum(r.pair_count for r in self.records.values())

    @property
    def record_count(self) -> int:
        return len(self.records)

    # -- persistence ---------------------------------------------------------

    def _records_path(self) -> Path:
        return self.directory / _RECORDS_FILE

    def _load(self) -> None:
        path = self._records_path()
        if not path.exists():
            return
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                data = json.loads(line)
                record = CorpusRecord(**data)
                self.records[record.id] = record
        snapshot = self.directory / _SNAPSHOT_FILE
        if snapshot.exists():
            loaded = LshIndex.load(snapshot)
            if set(loaded.entries) == set(self.records):
                self.index = loaded
                return
        for record in self.records.values():
            sig = self.signature_of(record.source_code)
            self.index.insert(record.id, sig)

    def _append_line(self, record: CorpusRecord) -> None:
        with open(self._records_path(), "a", encoding="utf-8") as fh:
            fh.write(_canonical_line(asdict(record)))
            fh.flush()
            os.fsync(fh.fileno())

    def checkpoint(self) -> None:
        """Write the index snapshot and metadata."""
        self.index.save(self.directory / _SNAPSHOT_FILE)
        meta = {
            "records": self.record_count,
            "pairs": self.pair_count,
            "k": self.k,
            "num_perm": self.index.num_perm,
            "seed": self.index.seed,
            "tau": self.tau,
        }
        with open(self.directory / _META_FILE, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
        self._appends_since_snapshot = 0

    # -- operations ----------------------------------------------------------

    def signature_of(self, source: str) -> MinHashSignature:
        return self.hasher.signature(shingle_source(source, self.k))

    def append_accepted(
        self, record: CorpusRecord, sig: MinHashSignature | None = None
    ) -> int:
        """Durably append one record; returns the new pair count."""
        if record.id in self.records:
            raise DuplicateIdError(f"corpus already has record {record.id!r}")
        recomputed = self.signature_of(record.source_code)
        if sig is not None and sig != recomputed:
            raise ValueError(
                f"record {record.id}: stored signature does not match source"
            )
        self._append_line(record)
        self.records[record.id] = record
        self.index.insert(record.id, recomputed)
        self._appends_since_snapshot += 1
        if self._appends_since_snapshot >= self.snapshot_every:
            self.checkpoint()
        return self.pair_count

    def ingest_seed(self, snippets: Iterable[dict | str]) -> IngestReport:
        """Dedup + convert a seed stream; conversion failures are counted.

        Each item is either raw source text or a mapping with a ``source``
        field and optional ``id``.
        """
        report = IngestReport()
        for i, item in enumerate(snippets):
            report.total += 1
            if isinstance(item, str):
                source, snippet_id = item, None
            elif isinstance(item, dict) and isinstance(item.get("source"), str):
                source, snippet_id = item["source"], item.get("id")
            else:
                report.malformed += 1
                continue
            sig = self.signature_of(source)
            _, best = self.index.max_jaccard(sig)
            if best > self.tau:
                continue  # near-duplicate of an earlier record
            report.unique_after_dedup += 1
            record = CorpusRecord(
                id=snippet_id or f"seed-{i:06d}",
                source_code=source,
                origin="seed",
                cycle_added=0,
                pair_count=2,
            )
            try:
                pairs = to_chat_pairs(record)
            except ConversionError:
                report.dropped += 1
                continue
            self.append_accepted(record, sig)
            report.converted += 1
            report.pairs += len(pairs)
        self.checkpoint()
        return report

    def all_chat_pairs(self) -> list[ChatPair]:
        pairs: list[ChatPair] = []
        for record in self.records.values():
            pairs.extend(to_chat_pairs(record))
        return pairs

    def export_finetune_manifest(self, path: str | Path, cycle: int) -> None:
        """Pair list plus the recorded adaptation hyperparameter block."""
        manifest = {
            "cycle": cycle,
            "pair_count": self.pair_count,
            "record_count": self.record_count,
            "hyperparameters": FINETUNE_HYPERPARAMETERS,
            "pairs": [asdict(p) for p in self.all_chat_pairs()],
        }
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
