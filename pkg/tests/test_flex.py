import numpy as np
import pytest

from flexsched import Instance, IntervalSchedule, canonicalize, check_feasible, total_flexibility, zero_count
from flexsched.flex import DimensionMismatch, InfeasibleFlexibilities, max_task_flexibility, tight_schedule
from flexsched.ingest import generate
from flexsched.instance import temporal_profile

import oracles

EQ = np.array([0.12, 0.36, 2.36, 0.12])
MAXIMAL = np.array([0.0, 0.6, 2.6, 0.0])


def test_check_feasible(ref4):
    prof = temporal_profile(ref4)
    assert check_feasible(tight_schedule(prof), ref4, 6.6) == []
    a = prof.est.copy()
    b = a.copy()
    b[0] = 1.0
    problems = check_feasible(IntervalSchedule(a, b), ref4, 6.6)
    assert any(p.startswith("edge (0,1)") for p in problems)
    assert any(p.startswith("edge (0,2)") for p in problems)
    with pytest.raises(DimensionMismatch):
        check_feasible(IntervalSchedule(a[:3], b[:3]), ref4, 6.6)


def test_check_feasible_reports_each_kind(ref4):
    sched = IntervalSchedule(np.array([-1.0, 2, 2, 5]), np.array([-1.0, 1.5, 2, 6]))
    text = " | ".join(check_feasible(sched, ref4, 6.6))
    assert "< 0" in text and "> b=" in text and "deadline" in text


def test_max_task_flexibility(ref4):
    assert np.allclose(max_task_flexibility(temporal_profile(ref4)), [0.6, 0.6, 2.6, 0.6])
    chain = Instance([2, 3, 4], [(0, 1), (1, 2)])
    assert np.allclose(max_task_flexibility(temporal_profile(chain, 1.0)), 0)
    assert np.allclose(max_task_flexibility(temporal_profile(Instance([5], []), 1.1)), [0.5])


def test_max_task_flexibility_is_per_task_lp():
    for seed in range(40):
        inst = generate(5, 1 + seed % 5, (1, 9), seed=seed)
        prof = temporal_profile(inst, 1.1)
        F = max_task_flexibility(prof)
        P, s = oracles.path_system(inst.durations.tolist(), inst.edges, prof.deadline)
        for t in range(inst.n_tasks):
            assert F[t] == pytest.approx(s[P[:, t] > 0].min(), abs=1e-9)


def test_canonicalize_ref4(ref4):
    sched = canonicalize(EQ, ref4, 6.6)
    assert np.allclose(sched.a, [0, 2.12, 2.12, 5.48])
    assert np.allclose(sched.b, [0.12, 2.48, 4.48, 5.6])
    assert check_feasible(sched, ref4, 6.6) == []
    zero = canonicalize(np.zeros(4), ref4, 6.6)
    assert np.allclose(zero.a, [0, 2, 2, 5]) and np.allclose(zero.b, zero.a)
    with pytest.raises(InfeasibleFlexibilities):
        canonicalize(np.ones(4), ref4, 6.6)
    with pytest.raises(DimensionMismatch):
        canonicalize(np.ones(3), ref4, 6.6)


def test_canonicalize_is_earliest_placement():
    rng = np.random.default_rng(0)
    for seed in range(40):
        inst = generate(5, 1 + seed % 4, (1, 6), seed=seed)
        prof = temporal_profile(inst, 1.3)
        phi = oracles.max_min(inst.durations.tolist(), inst.edges, prof.deadline)
        f = rng.uniform(0, phi, size=inst.n_tasks)
        sched = canonicalize(f, inst, prof.deadline)
        est, _ = oracles.est_lst((inst.durations + f).tolist(), inst.edges, prof.deadline)
        assert np.allclose(sched.a, est, atol=1e-12)
        assert total_flexibility(sched) == pytest.approx(f.sum(), abs=1e-12)


def test_totals_and_zeros(ref4):
    eq = canonicalize(EQ, ref4, 6.6)
    assert total_flexibility(eq) == pytest.approx(2.96)
    assert zero_count(eq) == 0
    tight = tight_schedule(temporal_profile(ref4))
    assert total_flexibility(tight) == 0 and zero_count(tight) == 4
    mx = canonicalize(MAXIMAL, ref4, 6.6)
    assert total_flexibility(mx) == pytest.approx(3.2)
    assert zero_count(mx) == 2
