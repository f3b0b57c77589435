"""Decision variables, SINR/rate mathematics and an independent verifier."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization
from .energy import EnergyParams, ObjectiveCoefficients, objective_coefficients, objective_energy
from .scenario import Scenario

# constraint families, labelled after the problem statement
FAMILIES = ("7b", "7c", "7d", "7e", "7f", "binary")


@dataclass(frozen=True, eq=False)
class Assignment:
    x: np.ndarray   # K x F, UE -> federation
    y: np.ndarray   # S x F, CSP -> federation
    z: np.ndarray   # ECSP active

    def __post_init__(self):
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int8))

    @property
    def F(self) -> int:
        return self.x.shape[1]

    def federation_of_ues(self) -> np.ndarray:
        return np.argmax(self.x, axis=1)

    def active_csps(self) -> np.ndarray:
        return np.flatnonzero(self.y.sum(axis=1) > 0)

    def same_as(self, other: "Assignment") -> bool:
        return (
            np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y) and np.array_equal(self.z, other.z)
        )

    def check(self, tau_p: int, csp_to_ecsp) -> None:
        """Raise if the structural invariants do not hold."""
        if not (self.x.sum(axis=1) == 1).all():
            raise ValueError("every UE must belong to exactly one federation")
        if (self.y.sum(axis=1) > 1).any():
            raise ValueError("a CSP may join at most one federation")
        if (self.x.sum(axis=0) > tau_p).any():
            raise ValueError("federation holds more UEs than pilots")
        if (self.y.sum(axis=1) > self.z[np.asarray(csp_to_ecsp)]).any():
            raise ValueError("active CSP behind an inactive ECSP")

    def to_dict(self) -> dict:
        return {"x": self.x.tolist(), "y": self.y.tolist(), "z": self.z.tolist()}


@dataclass(frozen=True, eq=False)
class PowerAllocation:
    rho: np.ndarray   # S x F amplitudes in sqrt(W)

    def __post_init__(self):
        object.__setattr__(self, "rho", np.asarray(self.rho, dtype=float))

    def transmit_power_w(self) -> np.ndarray:
        return np.sum(self.rho**2, axis=1)


@dataclass(frozen=True, eq=False)
class RateRequirement:
    r_thr_se: np.ndarray
    sinr_thr: np.ndarray

    @classmethod
    def uniform(cls, rate_bps: float, K: int, bandwidth_hz: float, tau_c: int, tau_p: int) -> "RateRequirement":
        se = rate_bps / bandwidth_hz
        thr = sinr_threshold(rate_bps, bandwidth_hz, tau_c, tau_p)
        return cls(r_thr_se=np.full(K, se), sinr_thr=np.full(K, thr))


@dataclass(frozen=True)
class Tolerances:
    sinr_rel: float = 1e-6
    power_abs: float = 1e-9
    binary: float = 1e-6


@dataclass
class SolutionReport:
    feasible: bool
    violations: dict
    sinr: np.ndarray
    se: np.ndarray
    objective_j: float
    avg_power_w: float
    failed: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "violations": {k: float(v) for k, v in self.violations.items()},
            "failed": list(self.failed),
            "sinr": self.sinr.tolist(),
            "se_bps_hz": self.se.tolist(),
            "objective_j": self.objective_j,
            "avg_power_w": self.avg_power_w,
        }


@dataclass(frozen=True, eq=False)
class FederationProblem:
    """Everything the solvers need about one drop."""

    scenario: Scenario
    channel: ChannelRealization
    requirements: RateRequirement
    energy: EnergyParams = EnergyParams()

    @property
    def K(self) -> int:
        return self.scenario.K

    @property
    def S(self) -> int:
        return self.scenario.S

    @property
    def F(self) -> int:
        return self.scenario.config.num_federations

    @property
    def M(self) -> int:
        return self.scenario.config.antennas_per_csp

    @property
    def tau_p(self) -> int:
        return self.scenario.config.pilot_len

    @property
    def tau_c(self) -> int:
        return self.scenario.config.coherence_len

    @property
    def p_max(self) -> float:
        return self.energy.pt_max_w

    @property
    def coefficients(self) -> ObjectiveCoefficients:
        return objective_coefficients(self.energy, self.M, self.tau_c, self.tau_p)

    @classmethod
    def from_rate(cls, scenario: Scenario, channel: ChannelRealization, rate_bps: float,
                  energy: EnergyParams = EnergyParams()) -> "FederationProblem":
        cfg = scenario.config
        req = RateRequirement.uniform(rate_bps, scenario.K, energy.f_bb_hz, cfg.coherence_len, cfg.pilot_len)
        return cls(scenario, channel, req, energy)


def sinr_threshold(rate_bps: float, bandwidth_hz: float, tau_c: int, tau_p: int) -> float:
    if rate_bps < 0:
        raise ValueError("rate must be non-negative")
    se = rate_bps / bandwidth_hz
    return 2.0 ** (se * tau_c / (tau_c - tau_p)) - 1.0


def federation_sinr(k: int, f: int, rho, channel: ChannelRealization, M: int, tau_p: int) -> float:
    """SINR UE ``k`` would see if served by federation ``f``."""
    r = np.asarray(rho, dtype=float)[:, f]
    signal = (M / tau_p) * float(r @ np.sqrt(channel.gamma[k])) ** 2
    return signal / (float(r**2 @ channel.beta[k]) + channel.noise_power_w)


def achieved_sinr(k: int, assignment: Assignment, powers: PowerAllocation, channel: ChannelRealization,
                  M: int, tau_p: int) -> float:
    x = assignment.x[k].astype(float)
    rho = powers.rho
    num = float(np.sum(x[None, :] * rho * np.sqrt(channel.gamma[k])[:, None])) ** 2
    den = float(np.sum(x[None, :] * rho**2 * channel.beta[k][:, None])) + channel.noise_power_w
    return (M / tau_p) * num / den


def achieved_sinr_all(assignment: Assignment, powers: PowerAllocation, channel: ChannelRealization,
                      M: int, tau_p: int) -> np.ndarray:
    rho = powers.rho
    # amplitude of federation f at UE k, then pick each UE's own federation
    amp = np.sqrt(channel.gamma) @ rho                   # K x F
    rx = channel.beta @ rho**2                           # K x F
    x = assignment.x.astype(float)
    num = np.sum(x * amp, axis=1) ** 2
    den = np.sum(x * rx, axis=1) + channel.noise_power_w
    return (M / tau_p) * num / den


def rate_se(sinr, tau_c: int, tau_p: int):
    return (tau_c - tau_p) / tau_c * np.log2(1 + np.asarray(sinr, dtype=float))


def achieved_rate_se(k: int, assignment: Assignment, powers: PowerAllocation, channel: ChannelRealization,
                     M: int, tau_p: int, tau_c: int) -> float:
    return float(rate_se(achieved_sinr(k, assignment, powers, channel, M, tau_p), tau_c, tau_p))


def verify_solution(assignment: Assignment, powers: PowerAllocation, problem: FederationProblem,
                    tol: Tolerances = Tolerances()) -> SolutionReport:
    """Check every constraint family of the original (unpenalized) problem."""
    K, S, F = problem.K, problem.S, problem.F
    n_ecsp = problem.scenario.num_ecsps
    shapes = {"x": (K, F), "y": (S, F), "z": (n_ecsp,)}
    for name, shape in shapes.items():
        if getattr(assignment, name).shape != shape:
            raise ValueError(f"{name} has shape {getattr(assignment, name).shape}, expected {shape}")
    if powers.rho.shape != (S, F):
        raise ValueError(f"rho has shape {powers.rho.shape}, expected {(S, F)}")

    x = assignment.x.astype(float)
    y = assignment.y.astype(float)
    z = assignment.z.astype(float)
    rho = powers.rho
    thr = problem.requirements.sinr_thr
    ch = problem.channel
    owner = problem.scenario.csp_to_ecsp

    v = {}
    # per-federation form: only the federation hosting UE k constrains it
    worst = 0.0
    for k in range(K):
        for f in range(F):
            if x[k, f] < 0.5 or thr[k] <= 0:
                continue
            s = federation_sinr(k, f, rho, ch, problem.M, problem.tau_p)
            worst = max(worst, (thr[k] - s) / thr[k])
    v["7b"] = worst
    v["7c"] = float(max(0.0, np.max(rho - math.sqrt(problem.p_max) * y), np.max(-rho)))
    v["7d"] = float(max(0.0, np.max(y.sum(axis=1) - z[owner])))
    v["7e"] = float(np.max(np.abs(x.sum(axis=1) - 1)))
    v["7f"] = float(max(0.0, np.max(x.sum(axis=0) - problem.tau_p)))
    all_bin = np.concatenate([x.ravel(), y.ravel(), z.ravel()])
    v["binary"] = float(np.max(np.abs(all_bin - np.round(all_bin)))) if all_bin.size else 0.0

    limits = {"7b": tol.sinr_rel, "7c": tol.power_abs, "7d": 0.0, "7e": 0.0, "7f": 0.0, "binary": tol.binary}
    failed = [fam for fam in FAMILIES if v[fam] > limits[fam]]

    sinr = achieved_sinr_all(assignment, powers, ch, problem.M, problem.tau_p)
    obj = objective_energy(y, z, rho, problem.energy, problem.M, problem.tau_c, problem.tau_p)
    return SolutionReport(
        feasible=not failed,
        violations=v,
        sinr=sinr,
        se=rate_se(sinr, problem.tau_c, problem.tau_p),
        objective_j=obj.total_j,
        avg_power_w=obj.avg_power_w,
        failed=failed,
    )
