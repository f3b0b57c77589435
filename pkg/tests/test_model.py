import itertools
import math

import numpy as np
import pytest

from cffed.channel import ChannelRealization
from cffed.model import (
    Assignment, PowerAllocation, Tolerances, achieved_rate_se, achieved_sinr, achieved_sinr_all,
    federation_sinr, rate_se, sinr_threshold, verify_solution,
)

from .helpers import drop_problem, fixed_problem


def test_sinr_threshold_goldens():
    assert sinr_threshold(0.0, 20e6, 200, 12) == 0.0
    assert sinr_threshold(96e6, 20e6, 200, 12) == pytest.approx(33.4, abs=0.05)
    assert sinr_threshold(20e6, 20e6, 200, 12) == pytest.approx(1.091, abs=1e-3)
    assert sinr_threshold(20e6, 20e6, 200, 12) == pytest.approx(1.0904735465674, rel=1e-12)


def test_sinr_threshold_rejects_negative_rate():
    with pytest.raises(ValueError):
        sinr_threshold(-1.0, 20e6, 200, 12)


def _single_link():
    ch = ChannelRealization(np.array([[1e-8]]), np.array([[1e-8]]), np.array([[True]]), 3.98e-13)
    a = Assignment(np.ones((1, 1)), np.ones((1, 1)), np.ones(1))
    p = PowerAllocation(np.array([[math.sqrt(3.0)]]))
    return a, p, ch


def test_achieved_sinr_fixture():
    a, p, ch = _single_link()
    s = achieved_sinr(0, a, p, ch, 16, 12)
    assert s == pytest.approx((16 / 12) * 3e-8 / (3e-8 + 3.98e-13), rel=1e-14)
    assert s == pytest.approx(1.333, abs=5e-4)


def test_rate_fixture():
    a, p, ch = _single_link()
    se = achieved_rate_se(0, a, p, ch, 16, 12, 200)
    assert se == pytest.approx(1.149, abs=5e-4)
    assert rate_se(0.0, 200, 12) == 0.0


def test_rate_and_threshold_are_inverse():
    thr = sinr_threshold(37e6, 20e6, 200, 12)
    assert rate_se(thr, 200, 12) == pytest.approx(37e6 / 20e6, rel=1e-13)


def test_sinr_zero_power_and_scaling_limit():
    a, _, ch = _single_link()
    assert achieved_sinr(0, a, PowerAllocation(np.zeros((1, 1))), ch, 16, 12) == 0.0
    vals = [achieved_sinr(0, a, PowerAllocation(np.array([[t]])), ch, 16, 12) for t in (0.1, 1, 10, 1e4)]
    assert all(np.diff(vals) > 0)
    assert vals[-1] < 16 / 12


def test_vectorized_sinr_matches_scalar():
    problem = drop_problem(seed=1, num_csps=15)
    rng = np.random.default_rng(0)
    x = np.zeros((24, 2)); x[:12, 0] = 1; x[12:, 1] = 1
    y = np.zeros((15, 2)); y[:8, 0] = 1; y[8:, 1] = 1
    a = Assignment(x, y, np.ones(5))
    p = PowerAllocation(rng.uniform(0, 1.7, (15, 2)) * y)
    vec = achieved_sinr_all(a, p, problem.channel, 16, 12)
    for k in range(24):
        assert vec[k] == pytest.approx(achieved_sinr(k, a, p, problem.channel, 16, 12), rel=1e-12)
        f = int(np.argmax(x[k]))
        assert vec[k] == pytest.approx(federation_sinr(k, f, p.rho, problem.channel, 16, 12), rel=1e-12)


def test_label_permutation_leaves_sinr_and_objective():
    problem = drop_problem(seed=2, num_csps=15)
    rng = np.random.default_rng(1)
    x = np.zeros((24, 2)); x[::2, 0] = 1; x[1::2, 1] = 1
    y = np.zeros((15, 2)); y[:7, 1] = 1; y[7:, 0] = 1
    rho = rng.uniform(0, 1.7, (15, 2)) * y
    r1 = verify_solution(Assignment(x, y, np.ones(5)), PowerAllocation(rho), problem)
    r2 = verify_solution(Assignment(x[:, ::-1], y[:, ::-1], np.ones(5)), PowerAllocation(rho[:, ::-1]), problem)
    assert np.allclose(r1.sinr, r2.sinr, rtol=1e-13)
    assert r1.objective_j == pytest.approx(r2.objective_j, rel=1e-14)


def test_subconstraint_form_matches_aggregate_on_enumeration():
    # with binary x the aggregated SINR equals the own-federation SINR
    problem = fixed_problem(np.full((2, 3), 1e-8), np.full((2, 3), 5e-9), 1.0, num_federations=2, pilot_len=2)
    rng = np.random.default_rng(3)
    rho = rng.uniform(0, 1.7, (3, 2))
    for labels in itertools.product(range(2), repeat=2):
        x = np.zeros((2, 2)); x[[0, 1], labels] = 1
        a = Assignment(x, np.ones((3, 2)), np.ones(1))
        agg = achieved_sinr_all(a, PowerAllocation(rho), problem.channel, problem.M, problem.tau_p)
        for k, f in enumerate(labels):
            assert agg[k] == pytest.approx(federation_sinr(k, f, rho, problem.channel, problem.M, problem.tau_p))


def _valid_case():
    problem = fixed_problem([[1e-8]], [[1e-8]], 1.0)
    a = Assignment(np.ones((1, 1)), np.ones((1, 1)), np.ones(1))
    return problem, a


def test_verifier_accepts_valid_solution():
    problem, a = _valid_case()
    rep = verify_solution(a, PowerAllocation(np.array([[1.0]])), problem)
    assert rep.feasible and rep.failed == []


def test_verifier_flags_ue_in_two_federations():
    problem = fixed_problem([[1e-8]], [[1e-8]], 0.0, num_federations=2)
    a = Assignment(np.array([[1, 1]]), np.array([[1, 0]]), np.ones(1))
    rep = verify_solution(a, PowerAllocation(np.array([[1.0, 0.0]])), problem)
    assert not rep.feasible and "7e" in rep.failed


def test_verifier_flags_power_cap():
    problem, a = _valid_case()
    rep = verify_solution(a, PowerAllocation(np.array([[math.sqrt(3.0) + 1e-6]])), problem, Tolerances())
    assert "7c" in rep.failed


def test_verifier_flags_sinr_shortfall_and_ecsp():
    problem, _ = _valid_case()
    a = Assignment(np.ones((1, 1)), np.ones((1, 1)), np.zeros(1))
    rep = verify_solution(a, PowerAllocation(np.array([[1e-4]])), problem)
    assert {"7b", "7d"} <= set(rep.failed)


def test_verifier_rejects_bad_shapes():
    problem, a = _valid_case()
    with pytest.raises(ValueError):
        verify_solution(a, PowerAllocation(np.zeros((2, 1))), problem)


def test_report_serializes():
    problem, a = _valid_case()
    doc = verify_solution(a, PowerAllocation(np.array([[1.0]])), problem).to_dict()
    assert doc["feasible"] is True and set(doc["violations"]) == {"7b", "7c", "7d", "7e", "7f", "binary"}
