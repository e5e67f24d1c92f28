"""Deterministic counter-based random streams.

Reproducibility contract: every random decision in a simulation is drawn from
a stream identified by (master seed, repetition, user index, purpose).  The
stream is the SplitMix64 sequence, so the k-th draw is a pure function
``mix64(stream_seed + k * GAMMA)`` -- random access by counter.  That makes a
per-user scalar code path and a vectorized whole-population code path produce
bit-identical draws, which is what lets experiment outputs stay byte-identical
under any parallel schedule.
"""

from __future__ import annotations

import numpy as np

from .hashing import MASK64, mix64, mix64_array

#: SplitMix64 stream increment (the golden-ratio gamma).
GAMMA = 0x9E3779B97F4A7C15

_NP_GAMMA = np.uint64(GAMMA)

# Purpose tags keep the streams of unrelated decisions disjoint.
PURPOSE_DATASET = 1
PURPOSE_REPORT = 2          # hash selection + perturbation, observation round r uses tag + r
PURPOSE_BIA_TIEBREAK = 64
PURPOSE_ATTACKER_SELECT = 65
PURPOSE_MGA_CRAFT = 66
PURPOSE_ADVISOR = 67


def stream_seed(master_seed: int, repetition: int, user_index: int, purpose_tag: int) -> int:
    """Seed of the (repetition, user, purpose) stream, derived via the mixer."""
    return mix64(
        (master_seed & MASK64)
        ^ mix64(repetition + 1)
        ^ mix64(user_index + 1)
        ^ mix64(purpose_tag)
    )


def stream_seeds(master_seed: int, repetition: int, n_users: int, purpose_tag: int) -> np.ndarray:
    """Vectorized :func:`stream_seed` for users 0..n_users-1."""
    base = np.uint64((master_seed & MASK64) ^ mix64(repetition + 1) ^ mix64(purpose_tag))
    user_mix = mix64_array(np.arange(1, n_users + 1, dtype=np.uint64))
    return mix64_array(base ^ user_mix)


def draw_at(seeds: np.ndarray, counter: int | np.ndarray) -> np.ndarray:
    """The counter-th uint64 draw of each stream (counters start at 1)."""
    if isinstance(counter, np.ndarray):
        inc = counter.astype(np.uint64) * _NP_GAMMA
    else:
        inc = np.uint64((counter * GAMMA) & MASK64)
    return mix64_array(seeds + inc)


def u64_to_below(draws: np.ndarray, n: int) -> np.ndarray:
    """Map uint64 draws to integers in [0, n) by fixed-point multiply-shift.

    Bias is below n / 2**40, invisible at any sample size used here; exact
    integer arithmetic keeps scalar and vectorized callers identical.
    """
    return (((draws >> np.uint64(24)) * np.uint64(n)) >> np.uint64(40)).astype(np.int64)


def u64_to_unit(draws: np.ndarray) -> np.ndarray:
    """Map uint64 draws to floats in (0, 1), never exactly 0 or 1."""
    return ((draws >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


class Stream:
    """Sequential view of one derived stream, for per-user scalar code."""

    __slots__ = ("seed", "counter")

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self.counter = 0

    def next_u64(self) -> int:
        self.counter += 1
        return mix64((self.seed + self.counter * GAMMA) & MASK64)

    def below(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n < 1:
            raise ValueError("n must be >= 1")
        return ((self.next_u64() >> 24) * n) >> 40

    def uniform(self) -> float:
        """Uniform float in (0, 1)."""
        return ((self.next_u64() >> 11) + 0.5) * 2.0**-53


def derive_stream(master_seed: int, repetition: int, user_index: int, purpose_tag: int) -> Stream:
    """Stream for one (repetition, user, purpose); identical triples, identical draws."""
    return Stream(stream_seed(master_seed, repetition, user_index, purpose_tag))
