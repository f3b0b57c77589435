import math

import numpy as np
import pytest

from cffed import model
from cffed.oracles import (
    enumerate_milp, joint_enumeration, run_oracle_suite, single_link_power, tableau_lp, tiny_problem,
)
from cffed.orchestrator import solve


def test_quick_suite_passes():
    lines = []
    report = run_oracle_suite(n_socp=10, n_milp=4, n_lp=3, joint_seeds=(0,), echo=lines.append)
    assert report.passed, report.lines()
    assert any("heuristic=" in ln and "exact=" in ln for ln in lines)
    assert len(report.checks) == 6


@pytest.mark.filterwarnings("ignore:invalid value encountered")
def test_sign_flipped_threshold_fails_loudly(monkeypatch):
    real = model.sinr_threshold
    monkeypatch.setattr(model, "sinr_threshold", lambda *a: -real(*a))
    report = run_oracle_suite(n_socp=2, n_milp=2, n_lp=1, joint_seeds=())
    assert not report.passed
    assert not report.checks[0].passed


def test_size_limit_cap():
    with pytest.raises(ValueError):
        run_oracle_suite(size_limit=17)


def test_single_link_power_closed_form():
    assert math.isinf(single_link_power(1.0, 0.5, 1.0, 2.0, 12, 12))
    rho = single_link_power(1e-8, 1e-8, 4e-13, 1.0, 16, 12)
    sinr = (16 / 12) * rho**2 * 1e-8 / (rho**2 * 1e-8 + 4e-13)
    assert sinr == pytest.approx(1.0, rel=1e-12)


def test_joint_oracle_is_a_lower_bound():
    problem = tiny_problem(1)
    exact, a, rho = joint_enumeration(problem)
    rep = model.verify_solution(a, model.PowerAllocation(rho), problem)
    assert rep.feasible
    assert rep.objective_j == pytest.approx(exact, rel=1e-12)
    sol = solve(problem)
    assert sol.objective_j >= exact * (1 - 1e-6)


def test_tableau_and_enumeration_agree_on_small_case():
    from cffed.mipsolve import MilpInstance
    from cffed.simplex import LpInstance

    inst = MilpInstance(LpInstance(np.array([-1.0, -1.0]), np.array([[1.0, 1.0]]), np.array(["L"]),
                                   np.array([1.5]), np.zeros(2), np.ones(2)), np.arange(2))
    status, x, obj = tableau_lp(inst.lp)
    assert status == "optimal" and obj == pytest.approx(-1.5)
    best, _ = enumerate_milp(inst)
    assert best == -1.0


@pytest.mark.parametrize("seed", range(4))
def test_bounded_enumeration_matches_every_leaf(seed):
    import itertools

    from cffed.oracles import random_binary_milp
    from cffed.simplex import LpInstance

    inst = random_binary_milp(np.random.default_rng(seed), n_bin=6)
    lp, ints = inst.lp, inst.integer_vars
    naive = math.inf
    for bits in itertools.product((0.0, 1.0), repeat=ints.size):
        lb, ub = lp.lb.copy(), lp.ub.copy()
        lb[ints] = ub[ints] = bits
        status, _, obj = tableau_lp(LpInstance(lp.c, lp.A, lp.senses, lp.b, lb, ub))
        if status == "optimal":
            naive = min(naive, obj)
    best, _ = enumerate_milp(inst)
    assert best == pytest.approx(naive, rel=1e-12) or (math.isinf(best) and math.isinf(naive))
