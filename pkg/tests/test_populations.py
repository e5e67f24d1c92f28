import numpy as np
import pytest

from ldpfair.hashing import HashFn
from ldpfair.populations import (
    EmptyPopulation,
    SubpopulationAssignment,
    UserRecord,
    assign_from_arrays,
    assign_subpopulations,
    write_assignment_csv,
)


def make_users(n, e_comp=None, pis=None):
    e_comp = e_comp if e_comp is not None else [1.0 + 0.001 * i for i in range(n)]
    pis = pis if pis is not None else [1 + (i % 10) for i in range(n)]
    return [
        UserRecord(user_id=i, true_value=i % 10, fn=HashFn(i + 1, 4),
                   e_comp=float(e_comp[i]), preimage_size=int(pis[i]))
        for i in range(n)
    ]


def test_group_sizes_at_default_fraction():
    users = make_users(100)
    asg = assign_subpopulations(users)
    assert len(asg.high_ent) == len(asg.low_pis) == len(asg.high_pis) == 10


def test_hand_assigned_preimage_sizes():
    # sizes 1..10: Low-PIS must be the size-1 user, High-PIS the size-10 user
    users = make_users(10, pis=list(range(1, 11)))
    asg = assign_subpopulations(users, fraction=0.10)
    assert asg.low_pis == frozenset({0})
    assert asg.high_pis == frozenset({9})


def test_degenerate_ties_fall_back_to_user_id():
    users = make_users(100, e_comp=[1.0] * 100, pis=[4] * 100)
    asg = assign_subpopulations(users)
    assert asg.high_ent == frozenset(range(10))
    assert asg.low_pis == frozenset(range(10))
    assert asg.high_pis == frozenset(range(10))


def test_deterministic_under_reruns():
    users = make_users(200)
    a1 = assign_subpopulations(users)
    a2 = assign_subpopulations(users)
    assert a1 == a2


def test_empty_population_errors():
    users = make_users(12)
    with pytest.raises(EmptyPopulation):
        assign_subpopulations(users, fraction=0.05)  # floor(0.6) == 0
    with pytest.raises(EmptyPopulation):
        assign_subpopulations(users[:5])


def test_disjoint_low_and_high_for_distinct_sizes():
    rng = np.random.default_rng(3)
    pis = rng.permutation(np.arange(1, 201))
    users = make_users(200, pis=pis)
    asg = assign_subpopulations(users, fraction=0.10)
    assert not (asg.low_pis & asg.high_pis)


def test_order_statistics_of_selection():
    rng = np.random.default_rng(5)
    n = 300
    e_comp = rng.uniform(0.5, 2.0, n)
    pis = rng.integers(1, 40, n)
    users = make_users(n, e_comp=e_comp, pis=pis)
    asg = assign_subpopulations(users)
    min_low = min(pis[i] for i in asg.low_pis)
    min_ent = min(pis[i] for i in asg.high_ent)
    max_high = max(pis[i] for i in asg.high_pis)
    max_ent = max(pis[i] for i in asg.high_ent)
    assert min_low <= min_ent
    assert max_high >= max_ent


def test_boundary_ties_break_by_ascending_id():
    # two users tie at the selection boundary; the smaller id wins
    pis = [5] * 10
    pis[3] = 1
    pis[7] = 1  # users 3 and 7 tie for the single Low-PIS slot... fraction 0.1 of 10 = 1
    users = make_users(10, pis=pis)
    asg = assign_subpopulations(users, fraction=0.10)
    assert asg.low_pis == frozenset({3})


def test_assign_from_arrays_matches_record_api():
    users = make_users(50)
    a1 = assign_subpopulations(users, fraction=0.2)
    a2 = assign_from_arrays(
        np.arange(50),
        np.array([u.e_comp for u in users]),
        np.array([u.preimage_size for u in users]),
        fraction=0.2,
    )
    assert a1 == a2


def test_assignment_csv(tmp_path):
    users = make_users(20)
    asg = assign_subpopulations(users, fraction=0.10)
    path = tmp_path / "groups.csv"
    write_assignment_csv(str(path), users, asg)
    lines = path.read_text().splitlines()
    assert lines[0] == "user_id,e_comp,preimage_size,group"
    assert len(lines) == 21
    groups = {line.split(",")[3] for line in lines[1:]}
    assert groups <= {"HIGH_ENT", "LOW_PIS", "HIGH_PIS", "NONE"}


def test_user_record_validation():
    with pytest.raises(ValueError):
        UserRecord(user_id=0, true_value=0, fn=HashFn(1, 4), e_comp=1.0, preimage_size=0)


def test_fraction_validation():
    users = make_users(100)
    with pytest.raises(ValueError):
        assign_subpopulations(users, fraction=1.5)
    asg = assign_subpopulations(users, fraction=1.0)
    assert isinstance(asg, SubpopulationAssignment)
    assert len(asg.high_ent) == 100
