import math

import numpy as np
import pytest

from cffed.mipsolve import (
    NODE_LIMIT, MilpInstance, MilpOptions, build_assignment_milp, dump_milp, load_milp, solve_milp,
)
from cffed.model import Assignment
from cffed.oracles import enumerate_milp, random_assignment_milp, random_binary_milp
from cffed.simplex import LpInstance

from .helpers import drop_problem, fixed_problem


def knapsack():
    c = -np.array([3.0, 4.0, 5.0, 4.0])
    A = np.array([[2.0, 3.0, 4.0, 5.0]])
    return MilpInstance(LpInstance(c, A, np.array(["L"]), np.array([9.0]), np.zeros(4), np.ones(4)), np.arange(4))


def test_knapsack_matches_enumeration():
    inst = knapsack()
    exact, _ = enumerate_milp(inst)
    sol = solve_milp(inst)
    # weights 2+3+4 = 9 pick values 3+4+5
    assert exact == -12.0
    assert sol.status == "optimal" and sol.objective == pytest.approx(-12.0)
    assert np.allclose(sol.values, [1, 1, 1, 0])


def test_integral_relaxation_needs_one_node():
    inst = MilpInstance(LpInstance(np.array([1.0, 1.0]), np.array([[1.0, 1.0]]), np.array(["G"]),
                                   np.array([1.0]), np.zeros(2), np.ones(2)), np.arange(2))
    sol = solve_milp(inst)
    assert sol.nodes_explored == 1
    assert sol.objective == pytest.approx(1.0)


def test_infeasible_milp():
    inst = MilpInstance(LpInstance(np.array([1.0, 1.0]), np.array([[2.0, 2.0]]), np.array(["E"]),
                                   np.array([1.0]), np.zeros(2), np.ones(2)), np.arange(2))
    assert solve_milp(inst).status == "infeasible"


@pytest.mark.parametrize("seed", range(12))
def test_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    inst = random_assignment_milp(rng) if seed % 2 == 0 else random_binary_milp(rng)
    exact, _ = enumerate_milp(inst, 14)
    sol = solve_milp(inst)
    if math.isinf(exact):
        assert sol.status == "infeasible"
    else:
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(exact, rel=1e-9, abs=1e-9)
        assert inst.is_integral(sol.values) and inst.is_feasible(sol.values)
        assert sol.bound <= sol.objective + 1e-9 * max(1.0, abs(sol.objective))


def test_deterministic_node_count():
    inst = random_assignment_milp(np.random.default_rng(3))
    a, b = solve_milp(inst), solve_milp(inst)
    assert a.nodes_explored == b.nodes_explored
    assert np.array_equal(a.values, b.values)


def test_node_limit_keeps_incumbent():
    rng = np.random.default_rng(5)
    n = 30
    w = rng.integers(3, 20, n).astype(float)
    v = w + rng.integers(0, 4, n)
    inst = MilpInstance(LpInstance(-v, w[None, :], np.array(["L"]), np.array([w.sum() / 2 + 0.5]),
                                   np.zeros(n), np.ones(n)), np.arange(n))
    sol = solve_milp(inst, MilpOptions(node_limit=3), heuristic=lambda x: [np.zeros(n)])
    assert sol.status == NODE_LIMIT
    assert np.isfinite(sol.objective) and sol.gap >= 0


def test_milp_rejects_non_binary_integers():
    with pytest.raises(ValueError):
        MilpInstance(LpInstance(np.ones(1), np.ones((1, 1)), np.array(["L"]), np.ones(1),
                                np.zeros(1), np.full(1, 2.0)), np.arange(1))


def test_assignment_milp_dimensions():
    problem = drop_problem(seed=1, num_csps=15)
    K, S, F, n_e = 24, 15, 2, 5
    milp = build_assignment_milp(np.zeros((S, F)), problem, 1.0)
    m, n = milp.instance.lp.shape
    assert n == K * F + S * F + n_e + S * F + K * F
    assert m == K * F + S * F + S + K + F
    assert milp.instance.integer_vars.size == K * F + S * F + n_e


def test_zero_threshold_zero_power_activates_nothing():
    problem = drop_problem(rate_mbps=0.0, seed=1, num_csps=15)
    milp = build_assignment_milp(np.zeros((15, 2)), problem, 1.0)
    sol = solve_milp(milp.instance)
    a = milp.decode(sol.values)
    assert sol.objective == pytest.approx(0.0, abs=1e-12)
    assert a.y.sum() == 0 and a.z.sum() == 0
    assert (a.x.sum(axis=1) == 1).all() and (a.x.sum(axis=0) <= 12).all()


def test_single_link_activates_only_that_csp():
    problem = fixed_problem([[1e-8, 1e-12]], [[1e-8, 1e-12]], 1.0, num_ecsps=2)
    rho = np.array([[1.0], [0.0]])
    milp = build_assignment_milp(rho, problem, 1e3)
    sol = solve_milp(milp.instance)
    exact, _ = enumerate_milp(milp.instance)
    a = milp.decode(sol.values)
    assert a.y[:, 0].tolist() == [1, 0] and a.z.tolist() == [1, 0]
    assert sol.objective == pytest.approx(exact, rel=1e-12)


def test_encode_decode_roundtrip():
    problem = drop_problem(seed=2, num_csps=15)
    x = np.zeros((24, 2)); x[:12, 0] = 1; x[12:, 1] = 1
    y = np.zeros((15, 2)); y[:8, 0] = 1; y[8:, 1] = 1
    a = Assignment(x, y, np.ones(5))
    milp = build_assignment_milp(np.full((15, 2), 0.5) * y, problem, 1.0)
    point = milp.encode(a)
    assert milp.instance.is_feasible(point)
    assert milp.decode(point).same_as(a)


def test_milp_dump_roundtrip(tmp_path):
    inst = random_assignment_milp(np.random.default_rng(11))
    dump_milp(inst, tmp_path / "m.txt")
    back = load_milp(tmp_path / "m.txt")
    assert np.array_equal(back.lp.c, inst.lp.c) and np.array_equal(back.lp.A, inst.lp.A)
    assert np.array_equal(back.lp.b, inst.lp.b) and np.array_equal(back.integer_vars, inst.integer_vars)
    assert solve_milp(back).objective == solve_milp(inst).objective
