import math

import numpy as np
import pytest

from ldpfair.hashing import (
    EntropyReport,
    HashFn,
    balanced_counts,
    entropy,
    entropy_from_counts,
    fairness_ratio,
    hash_bucket,
    hash_buckets,
    max_attainable_entropy,
    mix64,
    mix64_array,
    optimal_entropy,
    preimage_set,
)

MASK = 0xFFFFFFFFFFFFFFFF


def reference_mix(z: int) -> int:
    """Independent re-statement of the mixer, kept separate from the package."""
    z &= MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return (z ^ (z >> 31)) & MASK


def test_mix64_matches_reference():
    for z in [0, 1, 2, 42, 1337, 2**32, 2**63, 2**64 - 1, 0xDEADBEEF]:
        assert mix64(z) == reference_mix(z)


def test_mix64_array_matches_scalar():
    zs = np.array([0, 1, 42, 2**63, 2**64 - 1, 12345678901234567890], dtype=np.uint64)
    out = mix64_array(zs)
    for z, o in zip(zs, out):
        assert int(o) == mix64(int(z))


def test_hash_bucket_reference_value():
    # (seed=0, g=8, v=0): direct evaluation of the mixer arithmetic
    expected = reference_mix(0 ^ reference_mix(1)) % 8
    assert hash_bucket(HashFn(0, 8), 0) == expected


def test_hash_bucket_range_and_determinism():
    fn = HashFn(987654321, 8)
    for v in range(200):
        b = hash_bucket(fn, v)
        assert 0 <= b < 8
        assert b == hash_bucket(fn, v)


def test_hash_buckets_matches_scalar():
    fn = HashFn(2**61 + 5, 21)
    vec = hash_buckets(fn, 64)
    for v in range(64):
        assert int(vec[v]) == hash_bucket(fn, v)


def test_hashfn_validation():
    with pytest.raises(ValueError):
        HashFn(0, 1)
    with pytest.raises(ValueError):
        HashFn(-1, 4)
    with pytest.raises(ValueError):
        HashFn(2**64, 4)


def test_entropy_single_bucket_is_zero():
    # find a seed sending all of a 2-value domain to one bucket (g=2)
    seed = next(
        s for s in range(1000)
        if hash_bucket(HashFn(s, 2), 0) == hash_bucket(HashFn(s, 2), 1)
    )
    rep = entropy(HashFn(seed, 2), 2)
    assert rep.e_comp == 0.0
    assert sorted(rep.counts.tolist()) == [0, 2]


def test_entropy_uniform_counts():
    rep = EntropyReport(e_comp=math.log(8), counts=np.full(8, 1))
    assert rep.e_comp == pytest.approx(2.0794415416798357, abs=1e-15)
    # direct evaluation of the counting loop on a bijective assignment
    counts = np.ones(8, dtype=np.int64)
    assert entropy_from_counts(counts) == pytest.approx(math.log(8), abs=1e-12)


def test_entropy_counts_3_1():
    # -(0.75 ln 0.75 + 0.25 ln 0.25), evaluated directly
    expected = -(0.75 * math.log(0.75) + 0.25 * math.log(0.25))
    assert expected == pytest.approx(0.5623351446188083, abs=1e-15)
    assert entropy_from_counts(np.array([3, 1])) == pytest.approx(expected, abs=1e-15)


def test_entropy_counts_sum_and_bounds():
    for seed in range(25):
        fn = HashFn(seed * 7919 + 1, 8)
        rep = entropy(fn, 100)
        assert rep.counts.sum() == 100
        assert 0.0 <= rep.e_comp <= optimal_entropy(8) + 1e-12


def test_optimal_entropy_closed_form():
    assert optimal_entropy(8) == pytest.approx(math.log(8), abs=0)
    assert optimal_entropy(2) == pytest.approx(math.log(2), abs=0)
    assert optimal_entropy(5) == pytest.approx(math.log(5), abs=0)
    with pytest.raises(ValueError):
        optimal_entropy(1)


def test_max_attainable_entropy():
    assert max_attainable_entropy(128, 8) == pytest.approx(math.log(8), abs=1e-15)
    # |D|=100, g=8: four buckets of 13, four of 12, evaluated directly
    counts = np.array([13, 13, 13, 13, 12, 12, 12, 12])
    probs = counts / 100
    expected = float(-(probs * np.log(probs)).sum())
    assert max_attainable_entropy(100, 8) == pytest.approx(expected, abs=1e-15)
    assert max_attainable_entropy(1, 4) == 0.0


def test_max_attainable_below_optimal_iff_not_divisible():
    for d in range(2, 60):
        for g in (2, 4, 8):
            attainable = max_attainable_entropy(d, g)
            if d % g == 0:
                assert attainable == pytest.approx(optimal_entropy(g), abs=1e-12)
            else:
                assert attainable < optimal_entropy(g)


def test_balanced_counts_shapes():
    assert balanced_counts(100, 8).tolist() == [13, 13, 13, 13, 12, 12, 12, 12]
    assert balanced_counts(128, 8).tolist() == [16] * 8


def test_preimage_sets_partition_domain():
    fn = HashFn(31337, 8)
    d = 100
    seen = np.concatenate([preimage_set(fn, d, b) for b in range(8)])
    assert len(seen) == d
    assert sorted(seen.tolist()) == list(range(d))


def test_preimage_set_bijective_and_constant_cases():
    # g = d = 4 with a bijective seed: each preimage is a singleton
    seed = next(
        s for s in range(10_000)
        if sorted(hash_bucket(HashFn(s, 4), v) for v in range(4)) == [0, 1, 2, 3]
    )
    fn = HashFn(seed, 4)
    for b in range(4):
        assert len(preimage_set(fn, 4, b)) == 1
    with pytest.raises(ValueError):
        preimage_set(fn, 4, 4)


def test_fairness_ratio():
    assert fairness_ratio(math.log(8), math.log(8)) == 1.0
    assert fairness_ratio(math.log(8), 0.0) == math.inf
    e_comp = 0.5623351446188083
    assert fairness_ratio(math.log(8), e_comp) == pytest.approx(
        math.log(8) / e_comp, abs=1e-15
    )
    with pytest.raises(ValueError):
        fairness_ratio(0.0, 1.0)


def test_fairness_ratio_at_least_one_for_real_hashes():
    for seed in range(40):
        fn = HashFn(seed * 104729 + 3, 8)
        rep = entropy(fn, 64)
        assert fairness_ratio(optimal_entropy(8), rep.e_comp) >= 1.0 - 1e-12
