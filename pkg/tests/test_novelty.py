import random

import pytest

from archloop.errors import DuplicateIdError
from archloop.novelty import LOG_FIELDS, CycleArchive, NoveltyVerdict, assess
from archloop.sketch import LshIndex, MinHasher
from helpers import pair_with_exact_jaccard, synthetic_shingles

SEED = 77


@pytest.fixture
def hasher():
    return MinHasher(seed=SEED)


@pytest.fixture
def train_index():
    return LshIndex(seed=SEED)


def _random_sig(hasher, rng, size=60):
    return hasher.signature(
        synthetic_shingles(rng.getrandbits(64) for _ in range(size))
    )


class TestAssess:
    def test_exact_training_duplicate_rejected(self, hasher, train_index):
        rng = random.Random(0)
        sig = _random_sig(hasher, rng)
        train_index.insert("t0", sig)
        verdict = assess(sig, train_index, CycleArchive(1, train_index))
        assert verdict.j_train == 1.0
        assert verdict.near_dup_text_train
        assert not verdict.accepted
        assert verdict.nearest_train_id == "t0"

    def test_first_candidate_empty_archive(self, hasher, train_index):
        rng = random.Random(1)
        verdict = assess(
            _random_sig(hasher, rng), train_index, CycleArchive(1, train_index)
        )
        assert verdict.j_gen == 0.0
        assert not verdict.near_dup_text_gen
        assert verdict.accepted

    def test_tie_at_tau_accepted(self, hasher, train_index):
        # strictly-greater-than semantics: estimate exactly tau passes
        rng = random.Random(2)
        sig = _random_sig(hasher, rng)
        train_index.insert("t0", sig)
        verdict = assess(sig, train_index, CycleArchive(1, train_index), tau=1.0)
        assert verdict.j_train == 1.0
        assert not verdict.near_dup_text_train
        assert verdict.accepted

    def test_filter_disabled_forces_acceptance_but_logs(self, hasher, train_index):
        rng = random.Random(3)
        sig = _random_sig(hasher, rng)
        train_index.insert("t0", sig)
        verdict = assess(
            sig, train_index, CycleArchive(1, train_index), filter_enabled=False
        )
        assert verdict.near_dup_text_train  # similarity still computed
        assert verdict.accepted

    def test_bounds(self, hasher, train_index):
        rng = random.Random(4)
        archive = CycleArchive(1, train_index)
        for i in range(10):
            train_index.insert(f"t{i}", _random_sig(hasher, rng))
            archive.commit(f"g{i}", _random_sig(hasher, rng))
        verdict = assess(_random_sig(hasher, rng), train_index, archive)
        assert 0.0 <= verdict.j_train <= 1.0
        assert 0.0 <= verdict.j_gen <= 1.0


class TestArchive:
    def test_commit_then_assess_same_signature(self, hasher, train_index):
        rng = random.Random(5)
        sig = _random_sig(hasher, rng)
        archive = CycleArchive(1, train_index)
        archive.commit("g0", sig)
        verdict = assess(sig, train_index, archive)
        assert verdict.j_gen == 1.0
        assert verdict.near_dup_text_gen
        assert verdict.nearest_gen_id == "g0"

    def test_cycle_boundary_resets_archive(self, hasher, train_index):
        rng = random.Random(6)
        sig = _random_sig(hasher, rng)
        archive = CycleArchive(1, train_index)
        archive.commit("g0", sig)
        next_archive = CycleArchive(2, train_index)
        verdict = assess(sig, train_index, next_archive)
        assert verdict.j_gen == 0.0

    def test_order_dependence_for_similar_pair(self, hasher, train_index):
        rng = random.Random(7)
        a, b, exact = pair_with_exact_jaccard(rng, 96, 100)
        assert exact >= 0.95
        sig_a, sig_b = hasher.signature(a), hasher.signature(b)
        archive = CycleArchive(1, train_index)
        first = assess(sig_a, train_index, archive)
        assert first.accepted
        archive.commit("c1", sig_a)
        second = assess(sig_b, train_index, archive)
        assert not second.accepted
        assert second.near_dup_text_gen

    def test_duplicate_commit_rejected(self, hasher, train_index):
        rng = random.Random(8)
        sig = _random_sig(hasher, rng)
        archive = CycleArchive(1, train_index)
        archive.commit("g0", sig)
        with pytest.raises(DuplicateIdError):
            archive.commit("g0", sig)

    def test_monotone_archive_effect(self, hasher, train_index):
        # committing more references never lowers a later candidate's j_gen
        rng = random.Random(9)
        probe = _random_sig(hasher, rng)
        archive = CycleArchive(1, train_index)
        previous = 0.0
        for i in range(20):
            archive.commit(f"g{i}", _random_sig(hasher, rng))
            current = assess(probe, train_index, archive).j_gen
            assert current >= previous
            previous = current


class TestVerdictSerialization:
    def test_log_field_names_and_rounding(self):
        verdict = NoveltyVerdict(
            j_train=0.0,
            j_gen=0.804687512,
            near_dup_text_train=False,
            near_dup_text_gen=False,
            accepted=True,
            rejection_count=1,
        )
        fields = verdict.log_fields()
        assert tuple(fields) == LOG_FIELDS
        assert fields["nn_jaccard_gen"] == 0.8047
        assert fields["nn_jaccard_train"] == 0.0
        assert fields["rejection_count"] == 1

    def test_high_j_gen_below_tau_accepted(self, hasher, train_index):
        # j_train 0, j_gen below tau=0.90: accepted despite high j_gen
        rng = random.Random(10)
        a, b, exact = pair_with_exact_jaccard(rng, 80, 100)
        archive = CycleArchive(1, train_index)
        archive.commit("g0", hasher.signature(a))
        verdict = assess(hasher.signature(b), train_index, archive, tau=0.90)
        assert verdict.j_train == 0.0
        assert 0.0 < verdict.j_gen <= 0.90 or not verdict.near_dup_text_gen
        assert verdict.accepted == (not verdict.near_dup_text_gen)
