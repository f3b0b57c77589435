import math

import numpy as np
import pytest

from cffed.energy import (
    EnergyParams, block_duration, csp_block_energies, dac_power, ecsp_energy,
    objective_coefficients, objective_energy, op_energy, pa_power,
)

P = EnergyParams()


def test_dac_power_golden():
    assert dac_power(P) == pytest.approx(34.4e-15 * 4096 * 600e6, rel=1e-12)
    assert dac_power(P) == pytest.approx(0.0845, rel=1e-3)


def test_op_energy_golden():
    assert op_energy(P) == pytest.approx(12.0e-12, rel=1e-12)


def test_op_energy_reduces_to_mac():
    p = EnergyParams(zeta=1.0, alpha_sram=0.0, gamma_dram=0.0)
    assert op_energy(p) == P.e_mac_j


def test_op_energy_linear_in_zeta():
    p = EnergyParams(zeta=2 * P.zeta)
    assert op_energy(p) == pytest.approx(2 * op_energy(P), rel=1e-15)


def test_ecsp_energy_golden():
    assert ecsp_energy(P, 200) == pytest.approx(92e-6, rel=1e-12)


@pytest.mark.parametrize("p_t, expected", [(3.0, 3.0 / 0.34), (0.75, math.sqrt(3) * math.sqrt(0.75) / 0.34), (0.0, 0.0)])
def test_pa_power(p_t, expected):
    assert pa_power(p_t, P) == pytest.approx(expected, rel=1e-12)


def test_pa_power_rejects_over_cap():
    with pytest.raises(ValueError):
        pa_power(3.1, P)


def test_csp_block_energy_chain():
    b = csp_block_energies(P, M=16, K_served=12, tau_c=200, tau_p=12)
    assert b.e_ce == pytest.approx(2 * 16 * 12 * 12e-12 * 12, rel=1e-12)
    assert b.e_ce == pytest.approx(55.3e-9, rel=1e-3)
    assert b.e_lp == pytest.approx(866e-9, rel=1e-3)
    # frozen: 1.06448e-4 J, i.e. about 10.6 W averaged over the block
    assert b.per_csp_static == pytest.approx(1.0644825e-4, rel=1e-6)
    assert b.per_csp_static / block_duration(P, 200) == pytest.approx(10.64, rel=1e-3)


def test_csp_block_energies_rejects_bad_pilot():
    with pytest.raises(ValueError):
        csp_block_energies(P, M=16, K_served=12, tau_c=12, tau_p=12)


def test_objective_single_csp_example():
    y = np.array([[1, 0]])
    z = np.array([1])
    rho = np.array([[math.sqrt(3.0), 0.0]])
    val = objective_energy(y, z, rho, P, M=16, tau_c=200, tau_p=12)
    expected = 1.0644825e-4 + 92e-6 + (3 / 0.34) * 188 / 20e6
    assert val.total_j == pytest.approx(expected, rel=1e-6)
    assert val.total_j == pytest.approx(2.82e-4, rel=3e-3)
    assert val.avg_power_w * block_duration(P, 200) == pytest.approx(val.total_j, rel=1e-14)


def test_objective_zero():
    val = objective_energy(np.zeros((3, 2)), np.zeros(2), np.zeros((3, 2)), P, 16, 200, 12)
    assert val.total_j == 0.0


def test_objective_label_permutation():
    rng = np.random.default_rng(0)
    y = np.array([[1, 0], [0, 1], [0, 0]])
    z = np.array([1, 1])
    rho = rng.uniform(0, 1.7, (3, 2)) * y
    a = objective_energy(y, z, rho, P, 16, 200, 12).total_j
    b = objective_energy(y[:, ::-1], z, rho[:, ::-1], P, 16, 200, 12).total_j
    assert a == pytest.approx(b, rel=1e-15)


def test_pa_concavity_prefers_concentration():
    coef = objective_coefficients(P, 16, 200, 12)
    one = coef.pa_j_per_sqrt_w * math.sqrt(2.0)
    split = coef.pa_j_per_sqrt_w * 2 * math.sqrt(1.0)
    assert one < split
