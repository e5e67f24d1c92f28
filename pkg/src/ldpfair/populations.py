"""Subpopulation construction from realized per-user hash behavior.

Users are grouped by how their assigned hash function treats the domain:
High-ENT holds the top decile by bucket-count entropy, Low-PIS / High-PIS the
bottom / top decile by the size of the preimage set containing the user's own
true value.  Ties break by ascending user id so repeated runs produce the
same groups.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .hashing import HashFn

HIGH_ENT = "HIGH_ENT"
LOW_PIS = "LOW_PIS"
HIGH_PIS = "HIGH_PIS"
NONE_GROUP = "NONE"

GROUP_NAMES = (HIGH_ENT, LOW_PIS, HIGH_PIS)


class EmptyPopulation(Exception):
    """The requested fraction selects zero users."""


@dataclass(frozen=True)
class UserRecord:
    """One user's realized protocol state, as the analyst sees it."""

    user_id: int
    true_value: int
    fn: HashFn
    e_comp: float
    preimage_size: int

    def __post_init__(self) -> None:
        if self.preimage_size < 1:
            raise ValueError("preimage_size must be >= 1 (contains the value itself)")


@dataclass(frozen=True)
class SubpopulationAssignment:
    """The three analytic subpopulations, as sets of user ids."""

    high_ent: frozenset[int]
    low_pis: frozenset[int]
    high_pis: frozenset[int]
    fraction: float


def _top_k(keys: np.ndarray, user_ids: np.ndarray, k: int, descending: bool) -> frozenset[int]:
    order = np.lexsort((user_ids, -keys if descending else keys))
    return frozenset(int(u) for u in user_ids[order[:k]])


def assign_from_arrays(
    user_ids: np.ndarray,
    e_comp: np.ndarray,
    preimage_sizes: np.ndarray,
    fraction: float = 0.10,
) -> SubpopulationAssignment:
    """Array-based assignment used by both the record API and the simulator."""
    n = len(user_ids)
    if n < 10:
        raise EmptyPopulation(f"population of {n} is too small to split")
    if not (0.0 < fraction <= 1.0):
        raise ValueError("fraction must be in (0, 1]")
    k = int(np.floor(fraction * n))
    if k == 0:
        raise EmptyPopulation(f"fraction {fraction} of {n} users selects nobody")
    ids = np.asarray(user_ids, dtype=np.int64)
    return SubpopulationAssignment(
        high_ent=_top_k(np.asarray(e_comp, dtype=np.float64), ids, k, descending=True),
        low_pis=_top_k(np.asarray(preimage_sizes, dtype=np.int64), ids, k, descending=False),
        high_pis=_top_k(np.asarray(preimage_sizes, dtype=np.int64), ids, k, descending=True),
        fraction=fraction,
    )


def assign_subpopulations(
    users: Sequence[UserRecord], fraction: float = 0.10
) -> SubpopulationAssignment:
    """Split a population into High-ENT / Low-PIS / High-PIS groups.

    Each group has exactly floor(fraction * |U|) members; selection sorts by
    the relevant statistic with ascending user_id as the tie-break.
    """
    return assign_from_arrays(
        np.array([u.user_id for u in users], dtype=np.int64),
        np.array([u.e_comp for u in users], dtype=np.float64),
        np.array([u.preimage_size for u in users], dtype=np.int64),
        fraction=fraction,
    )


ASSIGNMENT_CSV_HEADER = ["user_id", "e_comp", "preimage_size", "group"]


def write_assignment_csv(
    path: str, users: Sequence[UserRecord], assignment: SubpopulationAssignment
) -> None:
    """One row per user; overlapping memberships collapse to the first of
    HIGH_ENT, LOW_PIS, HIGH_PIS in that precedence order."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(ASSIGNMENT_CSV_HEADER)
        for u in users:
            if u.user_id in assignment.high_ent:
                group = HIGH_ENT
            elif u.user_id in assignment.low_pis:
                group = LOW_PIS
            elif u.user_id in assignment.high_pis:
                group = HIGH_PIS
            else:
                group = NONE_GROUP
            w.writerow([u.user_id, repr(u.e_comp), u.preimage_size, group])
