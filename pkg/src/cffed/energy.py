"""Hardware energy model for CSPs and ECSPs.

All energies are Joules per coherence block; powers are Watts.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import NamedTuple

import numpy as np


@dataclass(frozen=True)
class EnergyParams:
    eta_max: float = 0.34          # PA efficiency at pt_max_w
    pt_max_w: float = 3.0
    pa_exponent: float = 0.5
    fom_w: float = 34.4e-15        # DAC figure of merit, J/step
    bits: int = 12
    fs_hz: float = 600e6           # RF sampling rate
    f_bb_hz: float = 20e6          # baseband sampling rate
    p_eth_w: float = 7.0
    p_sync_w: float = 2.2
    e_mac_j: float = 3.1e-12
    e_sram_j: float = 5e-12
    e_dram_j: float = 640e-12
    zeta: float = 1.2
    alpha_sram: float = 0.10
    gamma_dram: float = 0.01

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            # memory access fractions may be zero, everything else is a rate or a cost
            if f.name in ("alpha_sram", "gamma_dram"):
                if not 0 <= value <= 1:
                    raise ValueError(f"{f.name} must lie in [0, 1]")
            elif not value > 0:
                raise ValueError(f"{f.name} must be strictly positive")
        if self.eta_max > 1:
            raise ValueError("eta_max must lie in (0, 1]")
        if not 0.4 <= self.pa_exponent <= 0.5:
            raise ValueError("pa_exponent must lie in [0.4, 0.5]")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EnergyBreakdown:
    e_op: float
    e_ce: float
    e_lp: float
    e_pa: float
    e_dac: float
    e_ecsp: float
    per_csp_static: float
    total_j: float
    avg_power_w: float


class ObjectiveValue(NamedTuple):
    total_j: float
    avg_power_w: float


class ObjectiveCoefficients(NamedTuple):
    """Linear weights of the energy objective."""

    csp_static_j: float      # per active CSP, PA excluded
    ecsp_j: float            # per active ECSP
    pa_j_per_sqrt_w: float   # multiplies sqrt(P_t) of each CSP
    block_s: float           # coherence block duration


def pa_power(p_t: float, params: EnergyParams) -> float:
    """Power drawn by the PA when radiating ``p_t`` Watts."""
    if p_t < 0 or p_t > params.pt_max_w * (1 + 1e-12):
        raise ValueError(f"transmit power {p_t} W outside [0, {params.pt_max_w}]")
    if p_t == 0:
        return 0.0
    return (params.pt_max_w / p_t) ** params.pa_exponent * p_t / params.eta_max


def dac_power(params: EnergyParams) -> float:
    return params.fom_w * 2.0 ** params.bits * params.fs_hz


def op_energy(params: EnergyParams) -> float:
    return params.zeta * (
        params.e_mac_j + params.alpha_sram * params.e_sram_j + params.gamma_dram * params.e_dram_j
    )


def ecsp_energy(params: EnergyParams, tau_c: int) -> float:
    return (params.p_eth_w + params.p_sync_w) * tau_c / params.f_bb_hz


def block_duration(params: EnergyParams, tau_c: int) -> float:
    return tau_c / params.f_bb_hz


def csp_block_energies(
    params: EnergyParams, M: int, K_served: int, tau_c: int, tau_p: int, p_t: float = 0.0
) -> EnergyBreakdown:
    """Energy of one CSP over one coherence block, broken down by process."""
    if not tau_p < tau_c:
        raise ValueError("pilot length must be shorter than the coherence block")
    if K_served < 0:
        raise ValueError("K_served must be non-negative")
    e_op = op_energy(params)
    e_ce = 2 * M * K_served * e_op * tau_p
    e_lp = 2 * M * K_served * e_op * (tau_c - tau_p)
    e_pa = pa_power(p_t, params) * (tau_c - tau_p) / params.f_bb_hz
    e_dac = M * dac_power(params) * tau_c / params.f_bb_hz
    e_ecsp = ecsp_energy(params, tau_c)
    total = e_lp + e_ce + e_pa + e_ecsp + e_dac
    return EnergyBreakdown(
        e_op=e_op,
        e_ce=e_ce,
        e_lp=e_lp,
        e_pa=e_pa,
        e_dac=e_dac,
        e_ecsp=e_ecsp,
        per_csp_static=total - e_pa,
        total_j=total,
        avg_power_w=total / block_duration(params, tau_c),
    )


def objective_coefficients(params: EnergyParams, M: int, tau_c: int, tau_p: int) -> ObjectiveCoefficients:
    # every federation is sized for tau_p UEs, which keeps the static term constant
    static = csp_block_energies(params, M, tau_p, tau_c, tau_p).per_csp_static
    pa = (tau_c - tau_p) / params.f_bb_hz * math.sqrt(params.pt_max_w) / params.eta_max
    return ObjectiveCoefficients(
        csp_static_j=static,
        ecsp_j=ecsp_energy(params, tau_c),
        pa_j_per_sqrt_w=pa,
        block_s=block_duration(params, tau_c),
    )


def objective_energy(y, z, rho, params: EnergyParams, M: int, tau_c: int, tau_p: int) -> ObjectiveValue:
    """Total network energy per block for binaries ``y`` (S x F), ``z`` (ECSPs)
    and amplitudes ``rho`` (S x F, in sqrt(W)).

    The PA term uses ``sqrt(sum_f rho^2)`` as the per-CSP transmit amplitude,
    which is only meaningful with the 0.5 PA exponent.
    """
    coef = objective_coefficients(params, M, tau_c, tau_p)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    rho = np.asarray(rho, dtype=float)
    amp = np.sqrt(np.sum(rho**2, axis=1))
    total = coef.csp_static_j * y.sum() + coef.ecsp_j * z.sum() + coef.pa_j_per_sqrt_w * amp.sum()
    return ObjectiveValue(float(total), float(total / coef.block_s))
