"""MinHash signatures and a banded LSH index for approximate max-Jaccard.

The hash family is seeded universal hashing h_i(x) = (a_i * x + b_i) mod p
with p the Mersenne prime 2^31 - 1. Shingle hashes (64-bit) are folded
into [0, p) first so every product fits in uint64 and the whole signature
is computed with exact vectorized integer arithmetic.
"""

from __future__ import annotations

import random
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DuplicateIdError, IncompatibleSignatureError
from .lexshingle import ShingleSet

MERSENNE_PRIME = np.uint64((1 << 31) - 1)
EMPTY_SENTINEL = np.uint64(0xFFFFFFFFFFFFFFFF)

DEFAULT_NUM_PERM = 256
DEFAULT_BAND_COUNT = 16
DEFAULT_ROWS_PER_BAND = 16
# banding operating point (1/16)^(1/16) = 0.841, the closest achievable
# split of 256 permutations to the 0.85 retrieval threshold
DEFAULT_RETRIEVAL_THRESHOLD = 0.85

_SNAPSHOT_MAGIC = b"ALSHSNAP"
_SNAPSHOT_VERSION = 1


@dataclass(frozen=True)
class MinHashSignature:
    values: np.ndarray  # uint64, length num_perm
    seed: int

    @property
    def num_perm(self) -> int:
        return len(self.values)

    @property
    def is_empty(self) -> bool:
        return bool(self.values[0] == EMPTY_SENTINEL)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MinHashSignature):
            return NotImplemented
        return self.seed == other.seed and np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash((self.seed, self.values.tobytes()))


class MinHasher:
    """Seeded family of num_perm universal hash functions."""

    def __init__(self, num_perm: int = DEFAULT_NUM_PERM, seed: int = 0):
        if num_perm < 16:
            raise ValueError(f"num_perm must be >= 16, got {num_perm}")
        self.num_perm = num_perm
        self.seed = seed
        rng = random.Random(seed)
        p = int(MERSENNE_PRIME)
        self._a = np.array(
            [rng.randrange(1, p) for _ in range(num_perm)], dtype=np.uint64
        )
        self._b = np.array(
            [rng.randrange(0, p) for _ in range(num_perm)], dtype=np.uint64
        )

    def signature(self, shingles: ShingleSet) -> MinHashSignature:
        if len(shingles) == 0:
            values = np.full(self.num_perm, EMPTY_SENTINEL, dtype=np.uint64)
            return MinHashSignature(values, self.seed)
        xs = np.fromiter(shingles.shingles, dtype=np.uint64, count=len(shingles))
        xs %= MERSENNE_PRIME
        # (num_perm, m) products stay below 2^62, exact in uint64
        hashed = (self._a[:, None] * xs[None, :] + self._b[:, None]) % MERSENNE_PRIME
        return MinHashSignature(hashed.min(axis=1), self.seed)


def estimate_jaccard(a: MinHashSignature, b: MinHashSignature) -> float:
    """Fraction of coordinate-wise equal minima; estimates set Jaccard."""
    if a.num_perm != b.num_perm or a.seed != b.seed:
        raise IncompatibleSignatureError(
            f"signatures differ in length or seed: "
            f"({a.num_perm}, {a.seed}) vs ({b.num_perm}, {b.seed})"
        )
    if a.is_empty or b.is_empty:
        return 1.0 if (a.is_empty and b.is_empty) else 0.0
    return float(np.count_nonzero(a.values == b.values)) / a.num_perm


@dataclass
class LshIndex:
    """Append-only banded index over MinHash signatures."""

    num_perm: int = DEFAULT_NUM_PERM
    band_count: int = DEFAULT_BAND_COUNT
    rows_per_band: int = DEFAULT_ROWS_PER_BAND
    retrieval_threshold: float = DEFAULT_RETRIEVAL_THRESHOLD
    seed: int = 0
    entries: dict[str, MinHashSignature] = field(default_factory=dict)
    _bands: list[dict[bytes, list[str]]] = field(default_factory=list, repr=False)

    def __post_init__(self) -> None:
        if self.band_count * self.rows_per_band != self.num_perm:
            raise ValueError(
                f"band_count * rows_per_band must equal num_perm: "
                f"{self.band_count} * {self.rows_per_band} != {self.num_perm}"
            )
        if not self._bands:
            self._bands = [{} for _ in range(self.band_count)]
        for entry_id, sig in self.entries.items():
            self._bucket(entry_id, sig)

    def __len__(self) -> int:
        return len(self.entries)

    def _check_compatible(self, sig: MinHashSignature) -> None:
        if sig.num_perm != self.num_perm or sig.seed != self.seed:
            raise IncompatibleSignatureError(
                f"signature ({sig.num_perm}, seed {sig.seed}) incompatible with "
                f"index ({self.num_perm}, seed {self.seed})"
            )

    def _band_keys(self, sig: MinHashSignature) -> list[bytes]:
        r = self.rows_per_band
        return [
            sig.values[i * r : (i + 1) * r].astype("<u8").tobytes()
            for i in range(self.band_count)
        ]

    def _bucket(self, entry_id: str, sig: MinHashSignature) -> None:
        for band, key in zip(self._bands, self._band_keys(sig)):
            band.setdefault(key, []).append(entry_id)

    def insert(self, entry_id: str, sig: MinHashSignature) -> None:
        self._check_compatible(sig)
        if entry_id in self.entries:
            raise DuplicateIdError(f"id already indexed: {entry_id!r}")
        self.entries[entry_id] = sig
        self._bucket(entry_id, sig)

    def query_candidates(self, sig: MinHashSignature) -> set[str]:
        self._check_compatible(sig)
        found: set[str] = set()
        for band, key in zip(self._bands, self._band_keys(sig)):
            found.update(band.get(key, ()))
        return found

    def max_jaccard(self, sig: MinHashSignature) -> tuple[str | None, float]:
        """LSH retrieval followed by MinHash-estimate verification."""
        best_id: str | None = None
        best = 0.0
        for candidate_id in self.query_candidates(sig):
            est = estimate_jaccard(sig, self.entries[candidate_id])
            if est > best or best_id is None:
                best_id, best = candidate_id, est
        if best_id is None:
            return None, 0.0
        return best_id, best

    # -- snapshot persistence ------------------------------------------------

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(_SNAPSHOT_MAGIC)
            fh.write(
                struct.pack(
                    "<IIIIdQQ",
                    _SNAPSHOT_VERSION,
                    self.num_perm,
                    self.band_count,
                    self.rows_per_band,
                    self.retrieval_threshold,
                    self.seed,
                    len(self.entries),
                )
            )
            for entry_id, sig in self.entries.items():
                raw_id = entry_id.encode("utf-8")
                fh.write(struct.pack("<I", len(raw_id)))
                fh.write(raw_id)
                fh.write(sig.values.astype("<u8").tobytes())

    @classmethod
    def load(cls, path) -> "LshIndex":
        with open(path, "rb") as fh:
            magic = fh.read(len(_SNAPSHOT_MAGIC))
            if magic != _SNAPSHOT_MAGIC:
                raise ValueError(f"not an index snapshot: {path}")
            header = struct.unpack("<IIIIdQQ", fh.read(struct.calcsize("<IIIIdQQ")))
            version, num_perm, bands, rows, threshold, seed, count = header
            if version != _SNAPSHOT_VERSION:
                raise ValueError(f"unsupported snapshot version {version}")
            entries: dict[str, MinHashSignature] = {}
            for _ in range(count):
                (id_len,) = struct.unpack("<I", fh.read(4))
                entry_id = fh.read(id_len).decode("utf-8")
                values = np.frombuffer(fh.read(8 * num_perm), dtype="<u8").astype(
                    np.uint64
                )
                entries[entry_id] = MinHashSignature(values, seed)
        return cls(
            num_perm=num_perm,
            band_count=bands,
            rows_per_band=rows,
            retrieval_threshold=threshold,
            seed=seed,
            entries=entries,
        )
