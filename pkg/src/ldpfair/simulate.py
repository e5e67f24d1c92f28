"""Vectorized population-scale simulation.

The scalar operations (olh_report, folh_report, bia_predict, mga_craft) are
the contract; this module reproduces them draw-for-draw across a whole
population using the counter-based streams, so simulating 10^5 users is a
handful of numpy passes instead of 10^5 Python loops.  Equivalence against
the scalar path is asserted in the test suite, not assumed.

Chunking keeps the (users x domain) bucket matrices bounded; nothing here
retains a full matrix across calls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import balanced
from .hashing import RHO_TOL, domain_mixes, entropy_from_counts, mix64_array, optimal_entropy
from .protocols import (
    DrawBudgetExceeded,
    ProtocolParams,
    Report,
    check_rho_feasible,
    strict_uniform_only,
    support_counts_arrays,
)
from .rng import (
    PURPOSE_ATTACKER_SELECT,
    PURPOSE_BIA_TIEBREAK,
    PURPOSE_MGA_CRAFT,
    PURPOSE_REPORT,
    draw_at,
    stream_seeds,
    u64_to_below,
)

_CHUNK_CELLS = 8_000_000


def _row_chunks(n_rows: int, row_width: int) -> list[tuple[int, int]]:
    step = max(1, _CHUNK_CELLS // max(1, row_width))
    return [(i, min(i + step, n_rows)) for i in range(0, n_rows, step)]


def bucket_rows(seeds: np.ndarray, mixes: np.ndarray, g: int) -> np.ndarray:
    """(n, d) bucket matrix for the given seeds; caller controls chunk size."""
    return (mix64_array(seeds[:, None] ^ mixes[None, :]) % np.uint64(g)).astype(np.int64)


def rows_bucket_counts(bucket_matrix: np.ndarray, g: int) -> np.ndarray:
    """Per-row bucket counts via one flat bincount."""
    n = bucket_matrix.shape[0]
    offsets = (np.arange(n, dtype=np.int64) * g)[:, None]
    flat = np.bincount((bucket_matrix + offsets).ravel(), minlength=n * g)
    return flat.reshape(n, g)


def per_user_stats(
    seeds: np.ndarray, values: np.ndarray, domain_size: int, g: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """true bucket, bucket counts, entropy, preimage size for each user."""
    n = len(seeds)
    mixes = domain_mixes(domain_size)
    x = np.empty(n, dtype=np.int64)
    counts = np.empty((n, g), dtype=np.int64)
    for lo, hi in _row_chunks(n, domain_size):
        B = bucket_rows(seeds[lo:hi], mixes, g)
        counts[lo:hi] = rows_bucket_counts(B, g)
        x[lo:hi] = B[np.arange(hi - lo), values[lo:hi]]
    e_comp = entropy_from_counts(counts)
    pis = counts[np.arange(n), x]
    return x, counts, e_comp, pis


@dataclass
class SimulatedReports:
    """Population-wide protocol outputs plus the per-user hash analytics."""

    params: ProtocolParams
    domain_size: int
    seeds: np.ndarray
    draws_used: np.ndarray
    true_buckets: np.ndarray
    perturbed: np.ndarray
    bucket_counts: np.ndarray
    e_comp: np.ndarray
    preimage_sizes: np.ndarray

    @property
    def n_users(self) -> int:
        return int(self.seeds.size)

    def reports(self) -> list[Report]:
        return [
            Report(seed=int(s), perturbed=int(p), draws_used=int(d))
            for s, p, d in zip(self.seeds, self.perturbed, self.draws_used)
        ]


def _select_hashes_olh(ss: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    seeds = draw_at(ss, 1)
    return seeds, np.ones(len(ss), dtype=np.int64)


def _select_hashes_folh(
    ss: np.ndarray, params: ProtocolParams, domain_size: int
) -> tuple[np.ndarray, np.ndarray]:
    rho = params.rho
    g = params.g
    check_rho_feasible(domain_size, g, rho)
    n = len(ss)

    if strict_uniform_only(domain_size, g, rho):
        table = balanced.balanced_seed_table(domain_size, g)
        if table is not None:
            table_arr = np.asarray(table, dtype=np.uint64)
            idx = u64_to_below(draw_at(ss, 1), len(table_arr))
            return table_arr[idx], np.ones(n, dtype=np.int64)

    e_min = optimal_entropy(g) / (rho + RHO_TOL)
    mixes = domain_mixes(domain_size)
    seeds = np.zeros(n, dtype=np.uint64)
    draws = np.zeros(n, dtype=np.int64)
    active = np.arange(n)
    counter = 0
    while active.size:
        # batch several counters per round once the active set is small
        width = 1 if active.size > 1024 else 64
        if counter + width > params.max_draws:
            width = params.max_draws - counter
            if width <= 0:
                raise DrawBudgetExceeded(
                    f"{active.size} users found no hash meeting rho={rho} "
                    f"within {params.max_draws} draws"
                )
        ss_active = ss[active]
        accepted = np.zeros(active.size, dtype=bool)
        chosen = np.zeros(active.size, dtype=np.uint64)
        chosen_k = np.zeros(active.size, dtype=np.int64)
        for w in range(width):
            k = counter + 1 + w
            cand = draw_at(ss_active, k)
            pending = ~accepted
            if not pending.any():
                break
            cand_p = cand[pending]
            e = np.empty(len(cand_p), dtype=np.float64)
            for lo, hi in _row_chunks(len(cand_p), domain_size):
                B = bucket_rows(cand_p[lo:hi], mixes, g)
                e[lo:hi] = entropy_from_counts(rows_bucket_counts(B, g))
            ok = e >= e_min
            idx_pending = np.nonzero(pending)[0][ok]
            accepted[idx_pending] = True
            chosen[idx_pending] = cand_p[ok]
            chosen_k[idx_pending] = k
        counter += width
        done = active[accepted]
        seeds[done] = chosen[accepted]
        draws[done] = chosen_k[accepted]
        active = active[~accepted]
    return seeds, draws


def simulate_reports(
    values: np.ndarray,
    domain_size: int,
    params: ProtocolParams,
    master_seed: int,
    repetition: int,
    round_no: int = 0,
) -> SimulatedReports:
    """All users' reports for one collection round.

    Equivalent to calling olh_report / folh_report per user with the stream
    derived from (master_seed, repetition, user, PURPOSE_REPORT + round_no).
    """
    values = np.asarray(values, dtype=np.int64)
    n = len(values)
    ss = stream_seeds(master_seed, repetition, n, PURPOSE_REPORT + round_no)
    if params.rho is None:
        seeds, draws = _select_hashes_olh(ss)
    else:
        seeds, draws = _select_hashes_folh(ss, params, domain_size)

    x, counts, e_comp, pis = per_user_stats(seeds, values, domain_size, params.g)
    keep = draw_at(ss, draws + 1) < np.uint64(params.keep_threshold)
    other = u64_to_below(draw_at(ss, draws + 2), params.g - 1)
    perturbed = np.where(keep, x, np.where(other >= x, other + 1, other))
    return SimulatedReports(
        params=params,
        domain_size=domain_size,
        seeds=seeds,
        draws_used=draws,
        true_buckets=x,
        perturbed=perturbed,
        bucket_counts=counts,
        e_comp=e_comp,
        preimage_sizes=pis,
    )


def bia_attack(
    rounds: list[SimulatedReports],
    domain_size: int,
    master_seed: int,
    repetition: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-user BIA over one or more observation rounds.

    Returns (predictions, top_scores, tie_sizes); matches bia_predict with
    the tie-break stream (master, repetition, user, PURPOSE_BIA_TIEBREAK).
    """
    n = rounds[0].n_users
    g = rounds[0].params.g
    mixes = domain_mixes(domain_size)
    ss_tb = stream_seeds(master_seed, repetition, n, PURPOSE_BIA_TIEBREAK)
    tie_draws = draw_at(ss_tb, 1)

    predictions = np.empty(n, dtype=np.int64)
    top_scores = np.empty(n, dtype=np.int64)
    tie_sizes = np.empty(n, dtype=np.int64)
    for lo, hi in _row_chunks(n, domain_size):
        scores = np.zeros((hi - lo, domain_size), dtype=np.int16)
        for r in rounds:
            B = bucket_rows(r.seeds[lo:hi], mixes, g)
            scores += B == r.perturbed[lo:hi, None]
        top = scores.max(axis=1)
        tied = scores == top[:, None]
        ties = tied.sum(axis=1)
        pick = (((tie_draws[lo:hi] >> np.uint64(24)) * ties.astype(np.uint64)) >> np.uint64(40)).astype(
            np.int64
        )
        # index of the (pick+1)-th tied column, counting left to right
        cum = np.cumsum(tied, axis=1)
        predictions[lo:hi] = np.argmax(cum == (pick + 1)[:, None], axis=1)
        top_scores[lo:hi] = top
        tie_sizes[lo:hi] = ties
    return predictions, top_scores, tie_sizes


def select_members(
    group_ids: np.ndarray, count: int, master_seed: int, repetition: int, salt: int = 0
) -> np.ndarray:
    """Deterministic uniform sample without replacement from a user-id set."""
    ids = np.sort(np.asarray(list(group_ids), dtype=np.int64))
    if count > ids.size:
        raise ValueError(f"cannot sample {count} from a group of {ids.size}")
    base = stream_seeds(master_seed, repetition, 1, PURPOSE_ATTACKER_SELECT + salt)
    keys = draw_at(np.full(ids.size, base[0], dtype=np.uint64), np.arange(1, ids.size + 1))
    order = np.argsort(keys, kind="stable")
    return ids[order[:count]]


def craft_fixed_hash_self(run: SimulatedReports, attacker_ids: np.ndarray) -> np.ndarray:
    """Fixed-hash crafting with each attacker targeting their own value.

    The captured bucket is the attacker's own true bucket, so the poisoned
    support is exactly the attacker's preimage set.
    """
    return run.true_buckets[attacker_ids]


def craft_fixed_hash_targets(
    run: SimulatedReports, attacker_ids: np.ndarray, targets: np.ndarray
) -> np.ndarray:
    """Fixed-hash crafting over an explicit target set (argmax capture)."""
    targets = np.asarray(targets, dtype=np.int64)
    if targets.size == run.domain_size:
        return np.argmax(run.bucket_counts[attacker_ids], axis=1)
    g = run.params.g
    mixes = domain_mixes(run.domain_size)[targets]
    B = bucket_rows(run.seeds[attacker_ids], mixes, g)
    counts = rows_bucket_counts(B, g)
    return np.argmax(counts, axis=1)


def craft_search(
    attacker_ids: np.ndarray,
    targets: np.ndarray,
    kappa: int,
    params: ProtocolParams,
    domain_size: int,
    master_seed: int,
    repetition: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Free-search crafting (kappa candidate hashes per attacker).

    Under F-OLH params (rho set) every candidate is drawn through fair hash
    selection, so crafted reports stay threshold-compliant.  Returns crafted
    (seeds, buckets, target_hits) aligned with attacker_ids; matches
    mga_craft with streams (master, repetition, user, PURPOSE_MGA_CRAFT).
    """
    targets = np.asarray(sorted(set(int(t) for t in targets)), dtype=np.int64)
    g = params.g
    n = len(attacker_ids)
    ss = stream_seeds_for(attacker_ids, master_seed, repetition, PURPOSE_MGA_CRAFT)
    target_mixes = domain_mixes(domain_size)[targets]

    best_seed = np.zeros(n, dtype=np.uint64)
    best_bucket = np.zeros(n, dtype=np.int64)
    best_count = np.zeros(n, dtype=np.int64)
    counters = np.zeros(n, dtype=np.int64)
    if params.rho is not None:
        check_rho_feasible(domain_size, g, params.rho)
        strict = strict_uniform_only(domain_size, g, params.rho)
        table = balanced.balanced_seed_table(domain_size, g) if strict else None
        e_min = optimal_entropy(g) / (params.rho + RHO_TOL)
        full_mixes = domain_mixes(domain_size)

    for _ in range(kappa):
        if params.rho is None:
            counters += 1
            cand = draw_at(ss, counters)
        elif table is not None:
            counters += 1
            table_arr = np.asarray(table, dtype=np.uint64)
            cand = table_arr[u64_to_below(draw_at(ss, counters), len(table_arr))]
        else:
            cand = np.zeros(n, dtype=np.uint64)
            pending = np.arange(n)
            while pending.size:
                counters[pending] += 1
                if np.any(counters[pending] > params.max_draws):
                    raise DrawBudgetExceeded("crafting exceeded the selection draw budget")
                c = draw_at(ss[pending], counters[pending])
                e = np.empty(pending.size, dtype=np.float64)
                for lo, hi in _row_chunks(pending.size, domain_size):
                    B = bucket_rows(c[lo:hi], full_mixes, g)
                    e[lo:hi] = entropy_from_counts(rows_bucket_counts(B, g))
                ok = e >= e_min
                cand[pending[ok]] = c[ok]
                pending = pending[~ok]
        B = bucket_rows(cand, target_mixes, g)
        counts = rows_bucket_counts(B, g)
        mp = counts.max(axis=1)
        improved = mp > best_count
        best_count[improved] = mp[improved]
        best_seed[improved] = cand[improved]
        best_bucket[improved] = np.argmax(counts[improved], axis=1)
    return best_seed, best_bucket, best_count


def stream_seeds_for(
    user_ids: np.ndarray, master_seed: int, repetition: int, purpose_tag: int
) -> np.ndarray:
    """Stream seeds for an arbitrary id subset (same values as stream_seeds)."""
    from .hashing import MASK64, mix64

    base = np.uint64((master_seed & MASK64) ^ mix64(repetition + 1) ^ mix64(purpose_tag))
    user_mix = mix64_array(np.asarray(user_ids, dtype=np.uint64) + np.uint64(1))
    return mix64_array(base ^ user_mix)


def estimate_from_run(
    run: SimulatedReports,
    seeds: np.ndarray | None = None,
    perturbed: np.ndarray | None = None,
) -> np.ndarray:
    """Frequency table from a run, optionally with substituted report arrays."""
    from .protocols import estimate_from_support

    seeds = run.seeds if seeds is None else seeds
    perturbed = run.perturbed if perturbed is None else perturbed
    sup = support_counts_arrays(seeds, perturbed, run.domain_size, run.params.g)
    return estimate_from_support(sup, len(seeds), run.params)
