"""Inference and poisoning attacks against OLH-style reports.

The Bayesian inference attack scores each candidate value by how many
observed reports it is consistent with (membership in the reported bucket's
preimage) and predicts an argmax, breaking ties uniformly at random.

The maximal gain attack crafts a poisoned report: over a number of candidate
hash draws, keep the (hash, bucket) pair that captures the most target items
in one bucket.  A fixed-hash variant keeps a given hash function and only
optimizes the reported bucket, which preserves the attacker's subpopulation
identity in fairness experiments.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .hashing import HashFn, domain_mixes, mix64_array
from .protocols import Report
from .rng import Stream


@dataclass(frozen=True)
class ObservationSet:
    """Protocol outputs observed from one user: (seed, bucket) pairs."""

    observations: tuple[tuple[int, int], ...]
    g: int

    def __post_init__(self) -> None:
        if not self.observations:
            raise ValueError("need at least one observation")
        for _, bucket in self.observations:
            if not (0 <= bucket < self.g):
                raise ValueError("observed bucket out of range")


@dataclass(frozen=True)
class AttackOutcome:
    """Prediction plus how contested the argmax was."""

    prediction: int
    top_score: int
    tie_size: int


def bia_scores(obs: ObservationSet, domain_size: int) -> np.ndarray:
    """score(v) = number of observations whose reported bucket contains v."""
    mixes = domain_mixes(domain_size)
    scores = np.zeros(domain_size, dtype=np.int64)
    for seed, bucket in obs.observations:
        buckets = mix64_array(np.uint64(seed) ^ mixes) % np.uint64(obs.g)
        scores += buckets == np.uint64(bucket)
    return scores


def bia_predict(obs: ObservationSet, domain_size: int, rng: Stream) -> AttackOutcome:
    """Predict the user's value as a uniformly drawn member of the argmax set."""
    scores = bia_scores(obs, domain_size)
    top = int(scores.max())
    tied = np.nonzero(scores == top)[0]
    pick = rng.below(len(tied))
    return AttackOutcome(prediction=int(tied[pick]), top_score=top, tie_size=len(tied))


def _target_bucket_counts(seed: int, g: int, target_mixes: np.ndarray) -> np.ndarray:
    buckets = (mix64_array(np.uint64(seed) ^ target_mixes) % np.uint64(g)).astype(np.int64)
    return np.bincount(buckets, minlength=g)


def mga_craft(
    domain_size: int,
    targets: Sequence[int],
    kappa: int,
    g: int,
    rng: Stream,
    seed_source: Callable[[Stream], int] | None = None,
) -> Report:
    """Craft a poisoned report maximizing one bucket's target capture.

    Over kappa independently drawn candidate hashes, keeps the first
    (seed, bucket) whose captured-target count strictly exceeds the best so
    far.  seed_source customizes how candidate seeds are drawn (e.g. fair
    selection under F-OLH); the default draws uniformly from the family.
    """
    targets = np.asarray(sorted(set(targets)), dtype=np.int64)
    if targets.size == 0:
        raise ValueError("targets must be non-empty")
    if kappa < 1:
        raise ValueError("kappa must be >= 1")
    target_mixes = mix64_array(targets.astype(np.uint64) + np.uint64(1))
    best_seed = -1
    best_bucket = 0
    best_count = 0
    for _ in range(kappa):
        seed = rng.next_u64() if seed_source is None else seed_source(rng)
        counts = _target_bucket_counts(seed, g, target_mixes)
        mp = int(counts.max())
        if mp > best_count:
            best_count = mp
            best_seed = seed
            best_bucket = int(counts.argmax())
    return Report(seed=best_seed, perturbed=best_bucket, draws_used=kappa)


def mga_target_hits(report: Report, targets: Sequence[int], g: int) -> int:
    """Number of targets captured by the report's bucket (for diagnostics)."""
    targets = np.asarray(sorted(set(targets)), dtype=np.int64)
    target_mixes = mix64_array(targets.astype(np.uint64) + np.uint64(1))
    counts = _target_bucket_counts(report.seed, g, target_mixes)
    return int(counts[report.perturbed])


def mga_craft_fixed_hash(fn: HashFn, targets: Sequence[int]) -> Report:
    """Craft with a fixed hash: report the bucket capturing the most targets.

    Ties resolve to the lowest bucket index.  Used when the attacker's own
    assigned hash function must be kept (subpopulation experiments).
    """
    targets_arr = np.asarray(sorted(set(targets)), dtype=np.int64)
    if targets_arr.size == 0:
        raise ValueError("targets must be non-empty")
    target_mixes = mix64_array(targets_arr.astype(np.uint64) + np.uint64(1))
    counts = _target_bucket_counts(fn.seed, fn.g, target_mixes)
    return Report(seed=fn.seed, perturbed=int(counts.argmax()), draws_used=1)


def gain(f_before: np.ndarray, f_after: np.ndarray, targets: Iterable[int]) -> float:
    """Total estimated-frequency gain over the target set."""
    f_before = np.asarray(f_before, dtype=np.float64)
    f_after = np.asarray(f_after, dtype=np.float64)
    if f_before.shape != f_after.shape:
        raise ValueError("frequency tables must have the same length")
    idx = np.asarray(sorted(set(targets)), dtype=np.int64)
    return float((f_after[idx] - f_before[idx]).sum())


BIA_CSV_HEADER = ["user_id", "true_value", "predicted_value", "top_score", "tie_size"]
MGA_CSV_HEADER = ["user_id", "seed", "perturbed", "target_hits"]


def write_bia_csv(path: str, rows: Iterable[tuple[int, int, int, int, int]]) -> None:
    """Per-user BIA results: user_id,true_value,predicted_value,top_score,tie_size."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(BIA_CSV_HEADER)
        w.writerows(rows)


def write_mga_csv(path: str, rows: Iterable[tuple[int, int, int, int]]) -> None:
    """Per-attacker MGA reports: user_id,seed,perturbed,target_hits."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(MGA_CSV_HEADER)
        w.writerows(rows)
