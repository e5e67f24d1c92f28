"""Attack-success and utility metrics, plus preimage statistics for choosing rho.

ASR is the fraction of users whose inferred value matches their true value.
ULoss is the l1 distance between estimated and true frequency tables, with
negative estimates kept as-is.  The rho advisor simulates hash selection at
candidate thresholds before any data collection and reports how the preimage
size distribution tightens as rho approaches 1.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .populations import UserRecord
from .protocols import InfeasibleRho, ProtocolParams
from .rng import PURPOSE_ADVISOR, Stream, draw_at, stream_seeds, u64_to_below
from .simulate import _select_hashes_folh, _select_hashes_olh, per_user_stats


class LengthMismatch(Exception):
    """Paired sequences differ in length."""


def asr(predictions: Sequence[int], truths: Sequence[int]) -> float:
    """Attack success rate: fraction of exact prediction matches."""
    predictions = np.asarray(predictions)
    truths = np.asarray(truths)
    if predictions.shape != truths.shape or predictions.size == 0:
        raise LengthMismatch(f"{predictions.shape} vs {truths.shape}")
    return float(np.count_nonzero(predictions == truths) / predictions.size)


def uloss(f_est: np.ndarray, f_true: np.ndarray) -> float:
    """l1 distance between frequency tables (no clipping of negatives)."""
    f_est = np.asarray(f_est, dtype=np.float64)
    f_true = np.asarray(f_true, dtype=np.float64)
    if f_est.shape != f_true.shape:
        raise LengthMismatch(f"{f_est.shape} vs {f_true.shape}")
    return float(np.abs(f_est - f_true).sum())


def clipped_uloss(f_est: np.ndarray, f_true: np.ndarray) -> float:
    """ULoss after the common non-negativity post-processing of estimates.

    Clipping hides downward distortions on rare items, so poisoning that
    deflates estimates scores near zero here while inflation scores fully;
    the disparity experiments report this variant alongside the raw one.
    """
    f_est = np.asarray(f_est, dtype=np.float64)
    return uloss(np.clip(f_est, 0.0, None), f_true)


@dataclass(frozen=True)
class PreimageStats:
    """Observed and theoretical preimage-size extremes for a user sample."""

    p_min: int
    p_max: int
    p_avg: float
    theoretical_min: int
    theoretical_max: int
    theoretical_avg: float

    @classmethod
    def from_sizes(cls, sizes: np.ndarray, domain_size: int, g: int) -> "PreimageStats":
        sizes = np.asarray(sizes, dtype=np.int64)
        if sizes.size == 0:
            raise ValueError("need at least one user")
        return cls(
            p_min=int(sizes.min()),
            p_max=int(sizes.max()),
            p_avg=float(sizes.mean()),
            theoretical_min=1,
            theoretical_max=domain_size,
            theoretical_avg=domain_size / g,
        )


def preimage_stats(users: Sequence[UserRecord], domain_size: int, g: int) -> PreimageStats:
    """Min / max / mean preimage size over users plus the theoretical triple."""
    sizes = np.array([u.preimage_size for u in users], dtype=np.int64)
    return PreimageStats.from_sizes(sizes, domain_size, g)


@dataclass(frozen=True)
class AdvisorRow:
    """One advisor table row; rho None marks the plain-OLH baseline."""

    rho: float | None
    stats: PreimageStats | None
    mean_draws: float
    infeasible: bool = False


def rho_advisor(
    domain_size: int,
    epsilon: float,
    rho_candidates: Sequence[float],
    sample_users: int,
    rng: Stream,
    values: np.ndarray | None = None,
    max_draws: int = 10**6,
) -> list[AdvisorRow]:
    """Simulate hash selection per candidate rho and report preimage stats.

    Rows come back in candidate order with a plain-OLH baseline row appended.
    True values are sampled uniformly unless a dataset's values are supplied
    (pre-collection simulation either way).  Infeasible candidates yield a
    marked row instead of failing the whole table.
    """
    if sample_users < 100:
        raise ValueError("sample_users must be >= 100")
    master = rng.next_u64()
    candidates: list[float | None] = list(rho_candidates) + [None]
    rows: list[AdvisorRow] = []
    for row_index, rho in enumerate(candidates):
        vals = _advisor_values(master, row_index, sample_users, domain_size, values)
        params = ProtocolParams(epsilon=epsilon, rho=rho, max_draws=max_draws)
        ss = stream_seeds(master, row_index, sample_users, PURPOSE_ADVISOR + 1)
        try:
            if rho is None:
                seeds, draws = _select_hashes_olh(ss)
            else:
                seeds, draws = _select_hashes_folh(ss, params, domain_size)
        except InfeasibleRho:
            rows.append(AdvisorRow(rho=rho, stats=None, mean_draws=0.0, infeasible=True))
            continue
        _, _, _, sizes = per_user_stats(seeds, vals, domain_size, params.g)
        rows.append(
            AdvisorRow(
                rho=rho,
                stats=PreimageStats.from_sizes(sizes, domain_size, params.g),
                mean_draws=float(draws.mean()),
            )
        )
    return rows


def _advisor_values(
    master: int, row_index: int, n: int, domain_size: int, values: np.ndarray | None
) -> np.ndarray:
    ss = stream_seeds(master, row_index, n, PURPOSE_ADVISOR)
    draws = draw_at(ss, 1)
    if values is None:
        return u64_to_below(draws, domain_size)
    values = np.asarray(values, dtype=np.int64)
    return values[u64_to_below(draws, len(values))]


ADVISOR_CSV_HEADER = ["rho", "p_min", "p_max", "p_avg", "theoretical_avg", "mean_draws", "infeasible"]


def write_advisor_csv(path: str, rows: Sequence[AdvisorRow]) -> None:
    """Advisor table: rho,p_min,p_max,p_avg,theoretical_avg,mean_draws,infeasible."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(ADVISOR_CSV_HEADER)
        for r in rows:
            label = "olh" if r.rho is None else repr(float(r.rho))
            if r.infeasible or r.stats is None:
                w.writerow([label, "", "", "", "", "", "true"])
            else:
                w.writerow(
                    [
                        label,
                        r.stats.p_min,
                        r.stats.p_max,
                        repr(r.stats.p_avg),
                        repr(r.stats.theoretical_avg),
                        repr(r.mean_draws),
                        "false",
                    ]
                )
