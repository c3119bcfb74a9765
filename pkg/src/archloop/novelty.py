"""Dual-reference novelty assessment with rejection accounting.

A candidate is compared against the persistent training corpus and against
a cycle-local archive of earlier candidates from the same cycle. Either
similarity strictly above the threshold marks it a near-duplicate; an
estimate exactly at the threshold is accepted (the documented tie rule).
"""

from __future__ import annotations

from dataclasses import dataclass

from .sketch import LshIndex, MinHashSignature

DEFAULT_TAU = 0.90

# exact field names used in candidate log records
LOG_FIELDS = (
    "nn_jaccard_train",
    "near_dup_text_train",
    "nn_jaccard_gen",
    "near_dup_text_gen",
    "rejection_count",
)


@dataclass(frozen=True)
class NoveltyVerdict:
    j_train: float
    j_gen: float
    near_dup_text_train: bool
    near_dup_text_gen: bool
    accepted: bool
    rejection_count: int = 0
    nearest_train_id: str | None = None
    nearest_gen_id: str | None = None

    def with_rejection_count(self, count: int) -> "NoveltyVerdict":
        return NoveltyVerdict(
            self.j_train,
            self.j_gen,
            self.near_dup_text_train,
            self.near_dup_text_gen,
            self.accepted,
            count,
            self.nearest_train_id,
            self.nearest_gen_id,
        )

    def log_fields(self) -> dict:
        """Serialize with the canonical log field names, 4-decimal j values."""
        return {
            "nn_jaccard_train": round(self.j_train, 4),
            "near_dup_text_train": self.near_dup_text_train,
            "nn_jaccard_gen": round(self.j_gen, 4),
            "near_dup_text_gen": self.near_dup_text_gen,
            "rejection_count": self.rejection_count,
        }


class CycleArchive:
    """In-memory index of signatures seen earlier in the current cycle."""

    def __init__(self, cycle_index: int, train_index: LshIndex):
        self.cycle_index = cycle_index
        self.index = LshIndex(
            num_perm=train_index.num_perm,
            band_count=train_index.band_count,
            rows_per_band=train_index.rows_per_band,
            retrieval_threshold=train_index.retrieval_threshold,
            seed=train_index.seed,
        )

    def __len__(self) -> int:
        return len(self.index)

    def commit(self, candidate_id: str, sig: MinHashSignature) -> None:
        self.index.insert(candidate_id, sig)


def assess(
    candidate_sig: MinHashSignature,
    train_index: LshIndex,
    archive: CycleArchive,
    tau: float = DEFAULT_TAU,
    filter_enabled: bool = True,
) -> NoveltyVerdict:
    """Compute both max-Jaccard similarities and the acceptance decision.

    With the filter disabled (ablation) similarities are still computed and
    logged, but acceptance is forced so downstream logs stay comparable.
    """
    nearest_train_id, j_train = train_index.max_jaccard(candidate_sig)
    nearest_gen_id, j_gen = archive.index.max_jaccard(candidate_sig)
    near_dup_train = j_train > tau
    near_dup_gen = j_gen > tau
    accepted = True if not filter_enabled else not (near_dup_train or near_dup_gen)
    return NoveltyVerdict(
        j_train=j_train,
        j_gen=j_gen,
        near_dup_text_train=near_dup_train,
        near_dup_text_gen=near_dup_gen,
        accepted=accepted,
        nearest_train_id=nearest_train_id,
        nearest_gen_id=nearest_gen_id,
    )
