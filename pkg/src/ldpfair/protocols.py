"""User-side OLH / F-OLH report generation and server-side estimation.

OLH: the user hashes their value into g buckets with a freshly drawn seeded
hash, then randomizes the bucket (keep with probability e^eps/(e^eps+g-1),
otherwise report one of the other g-1 buckets uniformly).  F-OLH additionally
rejects drawn hash functions whose entropy ratio to the optimum exceeds a
fairness threshold rho before perturbing.

The server estimates item frequencies from support counts: Sup(v) is the
number of reports whose perturbed bucket equals the reporter's hash of v.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import balanced
from .hashing import (
    RHO_TOL,
    HashFn,
    balanced_counts,
    domain_mixes,
    entropy,
    entropy_from_counts,
    fairness_ratio,
    hash_bucket,
    max_attainable_entropy,
    mix64,
    mix64_array,
    optimal_entropy,
)
from .rng import Stream


class InfeasibleRho(Exception):
    """No member of the hash family can satisfy rho for this domain/g."""


class DrawBudgetExceeded(Exception):
    """Hash selection hit max_draws without finding a compliant function."""


def derive_g(epsilon: float) -> int:
    """Default hash range for a privacy budget: round(e^eps) + 1, at least 2.

    Rounding is half-up; validated against the (eps=1.5, g=5) and
    (eps=2.2, g=10) operating points and g=8 at eps=2.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    return max(2, int(math.floor(math.exp(epsilon) + 0.5)) + 1)


@dataclass(frozen=True)
class ProtocolParams:
    """Privacy budget plus derived mechanism constants.

    rho is the F-OLH fairness threshold; absent (None) means plain OLH.
    g defaults to derive_g(epsilon) and may be overridden for experiments
    that fix g while sweeping the domain size.
    """

    epsilon: float
    g: int = 0
    rho: float | None = None
    max_draws: int = 10**6

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.g == 0:
            object.__setattr__(self, "g", derive_g(self.epsilon))
        if self.g < 2:
            raise ValueError("g must be >= 2")
        if self.rho is not None and self.rho < 1.0:
            raise ValueError("rho must be >= 1")
        if self.max_draws < 1:
            raise ValueError("max_draws must be >= 1")

    @property
    def p_keep(self) -> float:
        """Probability of reporting the true bucket."""
        e = math.exp(self.epsilon)
        return e / (e + self.g - 1)

    @property
    def q_other(self) -> float:
        """Probability of reporting one specific other bucket."""
        e = math.exp(self.epsilon)
        return 1.0 / (e + self.g - 1)

    @property
    def keep_threshold(self) -> int:
        """u64 threshold such that draw < threshold keeps the true bucket."""
        return int(self.p_keep * 2.0**64)


@dataclass(frozen=True)
class Report:
    """One user's transmitted tuple: hash seed and perturbed bucket."""

    seed: int
    perturbed: int
    draws_used: int = 1


def _perturb(x: int, params: ProtocolParams, rng: Stream) -> int:
    """Randomize bucket x per the OLH mechanism, consuming 1-2 draws."""
    if rng.next_u64() < params.keep_threshold:
        return x
    other = rng.below(params.g - 1)
    return other + 1 if other >= x else other


def olh_report(params: ProtocolParams, v: int, rng: Stream) -> Report:
    """Generate one OLH report for true value v.

    Draw order on the stream: hash seed, keep/flip decision, flip choice
    (the last only when flipping).
    """
    seed = rng.next_u64()
    x = hash_bucket(HashFn(seed, params.g), v)
    return Report(seed=seed, perturbed=_perturb(x, params, rng), draws_used=1)


def min_fairness_ratio(domain_size: int, g: int) -> float:
    """Smallest fairness ratio any family member can achieve for this shape."""
    return optimal_entropy(g) / max_attainable_entropy(domain_size, g)


def check_rho_feasible(domain_size: int, g: int, rho: float) -> None:
    """Raise InfeasibleRho when no hash function can meet the threshold."""
    if rho + RHO_TOL < min_fairness_ratio(domain_size, g):
        raise InfeasibleRho(
            f"rho={rho} is below the attainable minimum "
            f"{min_fairness_ratio(domain_size, g):.12f} for |D|={domain_size}, g={g}"
        )


def strict_uniform_only(domain_size: int, g: int, rho: float) -> bool:
    """True when only exactly-balanced partitions satisfy the threshold.

    In that regime the acceptance probability of a random seed can be tiny
    (about 2.7e-7 for |D|=128, g=8), so selection switches to a precomputed
    table of exactly-balanced seeds when one is available.
    """
    if domain_size % g != 0:
        return False
    counts = balanced_counts(domain_size, g)
    counts[0] += 1
    counts[-1] -= 1  # nearest non-uniform partition
    second = float(entropy_from_counts(counts))
    if second == 0.0:
        return True
    return rho + RHO_TOL < optimal_entropy(g) / second


def select_fair_hash(
    params: ProtocolParams, domain_size: int, rng: Stream
) -> tuple[int, int]:
    """Draw hash seeds until the fairness threshold accepts one.

    Returns (seed, draws_used).  When the threshold admits only exactly
    balanced partitions and a balanced-seed table is known for this shape,
    the selection draws one seed uniformly from that table instead of
    rejection-sampling the full family (draws_used is 1; the rejected scan
    is amortized into the table construction).
    """
    rho = params.rho
    if rho is None:
        raise ValueError("params.rho must be set for fair hash selection")
    g = params.g
    check_rho_feasible(domain_size, g, rho)

    if strict_uniform_only(domain_size, g, rho):
        table = balanced.balanced_seed_table(domain_size, g)
        if table is not None:
            return table[rng.below(len(table))], 1

    e_opt = optimal_entropy(g)
    for k in range(1, params.max_draws + 1):
        seed = rng.next_u64()
        rep = entropy(HashFn(seed, g), domain_size)
        if fairness_ratio(e_opt, rep.e_comp) <= rho + RHO_TOL:
            return seed, k
    raise DrawBudgetExceeded(
        f"no hash met rho={rho} within {params.max_draws} draws "
        f"(|D|={domain_size}, g={g})"
    )


def folh_report(params: ProtocolParams, v: int, domain_size: int, rng: Stream) -> Report:
    """Generate one F-OLH report: fair hash selection, then OLH perturbation."""
    seed, draws = select_fair_hash(params, domain_size, rng)
    x = hash_bucket(HashFn(seed, params.g), v)
    return Report(seed=seed, perturbed=_perturb(x, params, rng), draws_used=draws)


def support_count(reports: list[Report], v: int, g: int) -> int:
    """Sup(v): reports whose perturbed bucket equals their hash of v."""
    if not reports:
        return 0
    seeds = np.array([r.seed for r in reports], dtype=np.uint64)
    perturbed = np.array([r.perturbed for r in reports], dtype=np.int64)
    hv = np.uint64(mix64(v + 1))
    buckets = (mix64_array(seeds ^ hv) % np.uint64(g)).astype(np.int64)
    return int(np.count_nonzero(buckets == perturbed))


def estimate_from_support(
    sup: int | np.ndarray, n_reports: int, params: ProtocolParams
) -> float | np.ndarray:
    """Unbiased frequency estimate from a support count.

    (e^eps + g - 1) (g Sup - n) / ((e^eps - 1) (g - 1) n); negative outputs
    are legal and preserved.
    """
    e = math.exp(params.epsilon)
    g = params.g
    out = (e + g - 1) * (g * np.asarray(sup, dtype=np.float64) - n_reports) / (
        (e - 1) * (g - 1) * n_reports
    )
    return float(out) if np.ndim(out) == 0 else out


def estimate_frequency(reports: list[Report], v: int, params: ProtocolParams) -> float:
    """Estimated frequency of one item from a batch of reports."""
    if not reports:
        raise ValueError("need at least one report")
    return float(estimate_from_support(support_count(reports, v, params.g), len(reports), params))


def estimate_all(
    reports: list[Report], domain_size: int, params: ProtocolParams
) -> np.ndarray:
    """Estimated frequencies for every item (a FrequencyTable).

    Single pass over reports with the hash evaluations batched; the result is
    value-identical to applying estimate_frequency per item.
    """
    if not reports:
        raise ValueError("need at least one report")
    seeds = np.array([r.seed for r in reports], dtype=np.uint64)
    perturbed = np.array([r.perturbed for r in reports], dtype=np.int64)
    sup = support_counts_arrays(seeds, perturbed, domain_size, params.g)
    return estimate_from_support(sup, len(reports), params)


def support_counts_arrays(
    seeds: np.ndarray, perturbed: np.ndarray, domain_size: int, g: int
) -> np.ndarray:
    """Sup(v) for all v from parallel seed/perturbed arrays, chunked."""
    mixes = domain_mixes(domain_size)
    sup = np.zeros(domain_size, dtype=np.int64)
    step = max(1, 24_000_000 // max(1, domain_size))
    for i in range(0, len(seeds), step):
        buckets = mix64_array(seeds[i : i + step, None] ^ mixes[None, :]) % np.uint64(g)
        sup += (buckets == perturbed[i : i + step, None].astype(np.uint64)).sum(axis=0)
    return sup


REPORT_CSV_HEADER = ["user_id", "seed", "perturbed", "draws_used"]


def write_reports_csv(path: str, reports: list[Report]) -> None:
    """Serialize reports, one row per user, seeds as unsigned decimals."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(REPORT_CSV_HEADER)
        for uid, r in enumerate(reports):
            w.writerow([uid, r.seed, r.perturbed, r.draws_used])


def read_reports_csv(path: str) -> list[Report]:
    """Read reports written by write_reports_csv."""
    out: list[Report] = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != REPORT_CSV_HEADER:
            raise ValueError(f"unexpected report header: {header}")
        for row in reader:
            out.append(Report(seed=int(row[1]), perturbed=int(row[2]), draws_used=int(row[3])))
    return out
