"""Seeded hash family and its fairness analytics.

Every protocol, attack, and experiment in this package ultimately reduces to
one primitive: a seeded hash mapping domain indices ``[0, d)`` into buckets
``[0, g)``.  The family is a SplitMix64-style finalizer, chosen so that the
same ``(seed, g, v)`` triple yields the same bucket on every platform and in
every language, with no external hashing dependency.

The analytics layer quantifies how "fair" an individual family member is:
bucket-count entropy, preimage sets, and the ratio of optimal to computed
entropy used as the acceptance threshold in hash selection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
_MULT1 = 0xBF58476D1CE4E5B9
_MULT2 = 0x94D049BB133111EB

#: Comparison tolerance on the fairness ratio.  A strict inequality is
#: numerically brittle exactly at the thresholds that matter (ratio == 1).
RHO_TOL = 1e-12

_NP_MULT1 = np.uint64(_MULT1)
_NP_MULT2 = np.uint64(_MULT2)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python int, modulo 2**64."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MULT1) & MASK64
    z = ((z ^ (z >> 27)) * _MULT2) & MASK64
    return (z ^ (z >> 31)) & MASK64


def mix64_array(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer applied elementwise to a uint64 array.

    Bit-identical to :func:`mix64`; uint64 arithmetic wraps modulo 2**64.
    """
    z = z.astype(np.uint64, copy=True)
    z ^= z >> _S30
    z *= _NP_MULT1
    z ^= z >> _S27
    z *= _NP_MULT2
    z ^= z >> _S31
    return z


@dataclass(frozen=True)
class HashFn:
    """One member of the hash family: a 64-bit seed and an output range g."""

    seed: int
    g: int

    def __post_init__(self) -> None:
        if not (0 <= self.seed <= MASK64):
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.g < 2:
            raise ValueError("g must be >= 2")


def hash_bucket(fn: HashFn, v: int) -> int:
    """Bucket of domain index v: mix(seed XOR mix(v + 1)) mod g.

    Total and deterministic; the ``v + 1`` offset keeps a zero input from
    colliding with a zero seed.
    """
    return mix64(fn.seed ^ mix64(v + 1)) % fn.g


def domain_mixes(domain_size: int) -> np.ndarray:
    """Precomputed mix(v + 1) for v in [0, domain_size); reusable across seeds."""
    return mix64_array(np.arange(1, domain_size + 1, dtype=np.uint64))


def hash_buckets(fn: HashFn, domain_size: int, _mixes: np.ndarray | None = None) -> np.ndarray:
    """Buckets of every domain index under fn, as an int64 array."""
    mixes = domain_mixes(domain_size) if _mixes is None else _mixes
    return (mix64_array(np.uint64(fn.seed) ^ mixes) % np.uint64(fn.g)).astype(np.int64)


@dataclass(frozen=True)
class EntropyReport:
    """Bucket-count entropy of one hash function over a finite domain."""

    e_comp: float
    counts: np.ndarray

    def __post_init__(self) -> None:
        if self.e_comp < 0:
            raise ValueError("entropy cannot be negative")


def entropy_from_counts(counts: np.ndarray) -> np.ndarray | float:
    """Shannon entropy (nats) of bucket counts, with 0 * ln 0 := 0.

    Accepts a (g,) vector or an (n, g) matrix of counts; the reduction is the
    same numpy sum in either case so scalar and batched callers agree on the
    exact float.
    """
    counts = np.asarray(counts)
    total = counts.sum(axis=-1, keepdims=True)
    probs = counts / total
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(probs > 0, probs * np.log(probs), 0.0)
    e = -terms.sum(axis=-1)
    return float(e) if e.ndim == 0 else e


def entropy(fn: HashFn, domain_size: int) -> EntropyReport:
    """Bucket counts over [0, domain_size) and their entropy."""
    if domain_size < 1:
        raise ValueError("domain_size must be >= 1")
    buckets = hash_buckets(fn, domain_size)
    counts = np.bincount(buckets, minlength=fn.g)
    return EntropyReport(e_comp=float(entropy_from_counts(counts)), counts=counts)


def optimal_entropy(g: int) -> float:
    """Entropy of a perfectly uniform assignment into g buckets: ln g."""
    if g < 2:
        raise ValueError("g must be >= 2")
    return math.log(g)


def balanced_counts(domain_size: int, g: int) -> np.ndarray:
    """Most-balanced partition of domain_size items into g buckets."""
    q, r = divmod(domain_size, g)
    return np.array([q + 1] * r + [q] * (g - r), dtype=np.int64)


def max_attainable_entropy(domain_size: int, g: int) -> float:
    """Entropy of the most-balanced partition; equals ln g iff g | domain_size."""
    if domain_size < 1:
        raise ValueError("domain_size must be >= 1")
    if g < 2:
        raise ValueError("g must be >= 2")
    return float(entropy_from_counts(balanced_counts(domain_size, g)))


def preimage_set(fn: HashFn, domain_size: int, bucket: int) -> np.ndarray:
    """Domain indices hashing to the given bucket; the g sets partition [0, d)."""
    if not (0 <= bucket < fn.g):
        raise ValueError("bucket out of range")
    buckets = hash_buckets(fn, domain_size)
    return np.nonzero(buckets == bucket)[0]


def fairness_ratio(e_opt: float, e_comp: float) -> float:
    """Ratio e_opt / e_comp; +inf marks the infeasible zero-entropy case.

    The marker compares greater than any finite threshold, so a degenerate
    hash is rejected by every finite rho.
    """
    if e_opt <= 0:
        raise ValueError("e_opt must be positive")
    if e_comp < 0:
        raise ValueError("e_comp cannot be negative")
    if e_comp == 0.0:
        return math.inf
    return e_opt / e_comp
