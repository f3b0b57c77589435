"""Independent reference solvers used to check the production ones.

Everything here favours obviousness over speed: a dense two-phase tableau
simplex, brute-force enumeration of binaries, and closed-form power levels.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization, mmse_variance
from .conesolve import build_power_socp, hard_power_allocation, solve_power
from .energy import EnergyParams, objective_energy
from .mipsolve import MilpInstance, build_assignment_milp, solve_milp
from .model import Assignment, FederationProblem, RateRequirement
from .scenario import ScenarioConfig, build_scenario
from .simplex import LpInstance, solve_lp
from .socp import OPTIMAL


# -- dense tableau simplex ----------------------------------------------------------

def tableau_lp(inst: LpInstance, tol: float = 1e-10):
    """Two-phase tableau simplex with Bland's rule.

    Returns (status, x, objective) with status in {optimal, infeasible, unbounded}.
    """
    c, A, b = inst.c, inst.A, inst.b
    m, n = A.shape
    # substitute bounded/free variables by nonnegative ones: x = shift + T u
    cols, shift = [], np.zeros(n)
    extra_rows = []
    for j in range(n):
        lo, hi = inst.lb[j], inst.ub[j]
        if np.isfinite(lo):
            shift[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                extra_rows.append((len(cols) - 1, hi - lo))
        elif np.isfinite(hi):
            shift[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    nu = len(cols)
    T = np.zeros((n, nu))
    for i, (j, s) in enumerate(cols):
        T[j, i] = s
    rows_A = [A @ T]
    rhs = [b - A @ shift]
    senses = list(inst.senses)
    for i, cap in extra_rows:
        r = np.zeros((1, nu))
        r[0, i] = 1.0
        rows_A.append(r)
        rhs.append(np.array([cap]))
        senses.append("L")
    Au = np.vstack(rows_A)
    bu = np.concatenate(rhs)
    cu = c @ T
    mm = Au.shape[0]
    # slack columns turn every row into an equality
    n_slack = sum(s != "E" for s in senses)
    S = np.zeros((mm, n_slack))
    k = 0
    for i, s in enumerate(senses):
        if s == "L":
            S[i, k] = 1.0
            k += 1
        elif s == "G":
            S[i, k] = -1.0
            k += 1
    M = np.hstack([Au, S])
    cost = np.concatenate([cu, np.zeros(n_slack)])
    neg = bu < 0
    M[neg] *= -1
    bu = np.where(neg, -bu, bu)
    N = M.shape[1]
    # phase 1 with one artificial per row
    tab = np.hstack([M, np.eye(mm), bu[:, None]])
    basis = list(range(N, N + mm))

    def pivot(r, j):
        tab[r] /= tab[r, j]
        for i in range(tab.shape[0]):
            if i != r and tab[i, j] != 0:
                tab[i] -= tab[i, j] * tab[r]
        basis[r] = j

    def run(cost_vec, allowed):
        while True:
            cb = cost_vec[basis]
            red = cost_vec - cb @ tab[:, :-1]
            enter = None
            for j in range(len(cost_vec)):
                if allowed[j] and red[j] < -tol:
                    enter = j
                    break
            if enter is None:
                return "optimal"
            colv = tab[:, enter]
            best, leave = np.inf, None
            for i in range(mm):
                if colv[i] > tol:
                    ratio = tab[i, -1] / colv[i]
                    if ratio < best - tol or (abs(ratio - best) <= tol and basis[i] < basis[leave]):
                        best, leave = ratio, i
            if leave is None:
                return "unbounded"
            pivot(leave, enter)

    phase1_cost = np.concatenate([np.zeros(N), np.ones(mm)])
    run(phase1_cost, np.ones(N + mm, dtype=bool))
    if tab[:, -1] @ (np.array(basis) >= N) > 1e-7 * max(1.0, np.abs(bu).max(initial=0.0)):
        return "infeasible", None, math.inf
    # push remaining (zero-level) artificials out of the basis where possible
    for r in range(mm):
        if basis[r] >= N:
            for j in range(N):
                if abs(tab[r, j]) > 1e-9:
                    pivot(r, j)
                    break
    allowed = np.concatenate([np.ones(N, dtype=bool), np.zeros(mm, dtype=bool)])
    full_cost = np.concatenate([cost, np.zeros(mm)])
    status = run(full_cost, allowed)
    if status == "unbounded":
        return "unbounded", None, -math.inf
    w = np.zeros(N + mm)
    for r, j in enumerate(basis):
        w[j] = tab[r, -1]
    x = shift + T @ w[:nu]
    return "optimal", x, float(c @ x)


# -- MILP enumeration ---------------------------------------------------------------

def enumerate_milp(inst: MilpInstance, max_binaries: int = 16):
    """Exhaustive search over the binaries with an LP per surviving leaf.

    Leaves are screened row by row with the best activity the continuous
    variables could contribute, which is exact as a necessary condition.
    Survivors are visited by a lower bound on their cost and the search stops
    once that bound exceeds the incumbent, so no leaf that could win is skipped.
    """
    lp = inst.lp
    ints = inst.integer_vars
    nb = ints.size
    if nb > max_binaries:
        raise ValueError(f"{nb} binaries exceed the enumeration limit {max_binaries}")
    cont = np.setdiff1d(np.arange(lp.c.size), ints)
    grid = np.array(list(itertools.product((0.0, 1.0), repeat=nb))).reshape(-1, nb)
    Ai, Ac = lp.A[:, ints], lp.A[:, cont]
    lo, hi = lp.lb[cont], lp.ub[cont]
    with np.errstate(invalid="ignore"):
        min_c = np.where(Ac > 0, Ac * lo, Ac * hi).sum(axis=1) if cont.size else np.zeros(lp.A.shape[0])
        max_c = np.where(Ac > 0, Ac * hi, Ac * lo).sum(axis=1) if cont.size else np.zeros(lp.A.shape[0])
    min_c = np.nan_to_num(min_c, nan=-np.inf)
    max_c = np.nan_to_num(max_c, nan=np.inf)
    act = grid @ Ai.T
    ok = np.ones(len(grid), dtype=bool)
    slack = 1e-9
    for i, s in enumerate(lp.senses):
        if s in ("L", "E"):
            ok &= act[:, i] + min_c[i] <= lp.b[i] + slack
        if s in ("G", "E"):
            ok &= act[:, i] + max_c[i] >= lp.b[i] - slack
    ok &= np.all((grid >= lp.lb[ints] - slack) & (grid <= lp.ub[ints] + slack), axis=1)
    # exact lower bound per leaf: binary cost plus the cheapest continuous cost
    cc = lp.c[cont]
    with np.errstate(invalid="ignore"):
        cont_floor = np.nan_to_num(np.minimum(cc * lo, cc * hi), nan=-np.inf).sum() if cont.size else 0.0
    leaves = grid[ok]
    floor = leaves @ lp.c[ints] + cont_floor
    order = np.argsort(floor, kind="stable")
    best, best_x = math.inf, None
    for bits, bound in zip(leaves[order], floor[order]):
        if bound > best + 1e-9 * max(1.0, abs(best)):
            break
        lb, ub = lp.lb.copy(), lp.ub.copy()
        lb[ints] = bits
        ub[ints] = bits
        sub = LpInstance(lp.c, lp.A, lp.senses, lp.b, lb, ub)
        status, x, obj = tableau_lp(sub)
        if status == "optimal" and obj < best:
            best, best_x = obj, x
    return best, best_x


# -- closed-form single-link power ------------------------------------------------

def single_link_power(beta: float, gamma: float, noise: float, thr: float, M: int, tau_p: int):
    """Smallest amplitude meeting the SINR threshold for one UE and one CSP."""
    denom = (M / tau_p) * gamma - thr * beta
    if denom <= 0:
        return math.inf
    return math.sqrt(thr * noise / denom)


def single_link_problem(beta: float, gamma: float, noise: float, thr: float, M: int, tau_p: int,
                        energy: EnergyParams = EnergyParams()) -> FederationProblem:
    cfg = ScenarioConfig(num_csps=1, num_ecsps=1, antennas_per_csp=M, num_ues=1, num_federations=1,
                         pilot_len=tau_p)
    scenario = build_scenario(cfg)
    channel = ChannelRealization(np.array([[beta]]), np.array([[gamma]]), np.array([[True]]), noise)
    se = math.log2(1 + thr) * (cfg.coherence_len - tau_p) / cfg.coherence_len
    req = RateRequirement(np.array([se]), np.array([thr]))
    return FederationProblem(scenario, channel, req, energy)


# -- joint tiny-instance oracle --------------------------------------------------

def joint_enumeration(problem: FederationProblem):
    """Exact optimum over all binaries with a slack-free power solve each.

    Candidates are visited in order of their static energy; since power
    amplifier energy is non-negative the search stops once the static part
    alone reaches the best total found.  Returns (objective_j, assignment, rho).
    """
    K, S, F = problem.K, problem.S, problem.F
    owner = np.asarray(problem.scenario.csp_to_ecsp)
    coef = problem.coefficients
    xs = []
    for labels in itertools.product(range(F), repeat=K):
        counts = np.bincount(labels, minlength=F)
        if counts.max() <= problem.tau_p:
            x = np.zeros((K, F), dtype=int)
            x[np.arange(K), labels] = 1
            xs.append(x)
    cands = []
    for labels in itertools.product(range(F + 1), repeat=S):
        y = np.zeros((S, F), dtype=int)
        for s, f in enumerate(labels):
            if f < F:
                y[s, f] = 1
        z = np.zeros(problem.scenario.num_ecsps, dtype=int)
        z[owner[y.sum(axis=1) > 0]] = 1
        static = coef.csp_static_j * y.sum() + coef.ecsp_j * z.sum()
        for x in xs:
            cands.append((static, len(cands), x, y, z))
    cands.sort(key=lambda t: (t[0], t[1]))
    best, best_a, best_rho = math.inf, None, None
    for static, _, x, y, z in cands:
        if static >= best:
            break
        a = Assignment(x, y, z)
        rho = hard_power_allocation(a, problem)
        if rho is None:
            continue
        total = objective_energy(y, z, rho, problem.energy, problem.M, problem.tau_c, problem.tau_p).total_j
        if total < best:
            best, best_a, best_rho = total, a, rho
    return best, best_a, best_rho


def tiny_problem(seed: int, rate_mbps: float | None = None):
    """S=4, two ECSPs, K=3, F=2, tau_p=2, rate cycling through 20/40/60 Mbit/s."""
    from .channel import ChannelParams, realize_channel
    from .scenario import spawn_streams

    rate = (20.0, 40.0, 60.0)[seed % 3] if rate_mbps is None else rate_mbps
    cfg = ScenarioConfig(num_csps=4, num_ecsps=2, num_ues=3, num_federations=2, pilot_len=2,
                         rate_thr_bps=rate * 1e6, seed=seed)
    scenario = build_scenario(cfg)
    channel = realize_channel(scenario, ChannelParams(), spawn_streams(seed)["channel"])
    return FederationProblem.from_rate(scenario, channel, cfg.rate_thr_bps)


# -- suite ----------------------------------------------------------------------------

@dataclass
class OracleCheck:
    name: str
    passed: bool
    residual: float
    detail: str = ""

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.name}: residual={self.residual:.3e} {self.detail}".rstrip()


@dataclass
class OracleReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list:
        return [c.line() for c in self.checks]


def _threshold_check() -> OracleCheck:
    from .model import sinr_threshold

    worst = 0.0
    for rate in (0.0, 5e6, 20e6, 50e6, 96e6):
        for tau_p in (6, 12, 24):
            expected = 2.0 ** (rate / 20e6 * 200 / (200 - tau_p)) - 1.0
            got = sinr_threshold(rate, 20e6, 200, tau_p)
            worst = max(worst, abs(got - expected) / max(1.0, expected))
    return OracleCheck("sinr threshold formula", worst <= 1e-12, worst)


def _energy_check() -> OracleCheck:
    from .energy import dac_power, ecsp_energy, op_energy, pa_power

    p = EnergyParams()
    expected = {
        "dac": 34.4e-15 * 2**12 * 600e6,
        "op": 1.2 * (3.1e-12 + 0.10 * 5e-12 + 0.01 * 640e-12),
        "ecsp": (7.0 + 2.2) * 200 / 20e6,
        "pa": (1 / 0.34) * math.sqrt(3.0 / 3.0) * 3.0,
    }
    got = {"dac": dac_power(p), "op": op_energy(p), "ecsp": ecsp_energy(p, 200), "pa": pa_power(3.0, p)}
    worst = max(abs(got[k] - v) / v for k, v in expected.items())
    return OracleCheck("energy table arithmetic", worst <= 1e-9, worst)


def _socp_check(n: int, rng: np.random.Generator) -> OracleCheck:
    noise = 3.98e-13
    worst, bad = 0.0, 0
    for _ in range(n):
        M = int(rng.choice([8, 16, 32]))
        tau_p = int(rng.choice([6, 12]))
        beta = 10 ** rng.uniform(-11, -6)
        gamma = mmse_variance(beta, tau_p, 0.1 / noise)
        rate = rng.uniform(1e6, 100e6)
        thr = 2.0 ** (rate / 20e6 * 200 / (200 - tau_p)) - 1.0
        problem = single_link_problem(beta, gamma, noise, thr, M, tau_p)
        expected = single_link_power(beta, gamma, noise, thr, M, tau_p)
        a = Assignment(np.ones((1, 1)), np.ones((1, 1)), np.ones(1))
        sub = build_power_socp(a, problem, 1e4)
        sol = solve_power(sub)
        rho = sub.rho_matrix(sol.values)[0, 0]
        slack = sub.slacks(sol.values, 1)[0]
        feasible = expected <= math.sqrt(problem.p_max)
        if feasible:
            err = abs(rho - expected) / expected
            worst = max(worst, err)
            bad += err > 1e-6 or sol.status != OPTIMAL
        else:
            bad += not (slack > 0) or hard_power_allocation(a, problem) is not None
    return OracleCheck("socp closed form", bad == 0, worst, f"instances={n} mismatches={bad}")


def random_assignment_milp(rng: np.random.Generator):
    """Assignment MILP with random amplitudes: S=3, K=3, F=2, two ECSPs (14 binaries)."""
    from .channel import ChannelParams, realize_channel

    seed = int(rng.integers(2**31))
    cfg = ScenarioConfig(num_csps=3, num_ecsps=2, num_ues=3, num_federations=2, pilot_len=2,
                         rate_thr_bps=float(rng.choice([5e6, 20e6, 40e6])), seed=seed)
    scenario = build_scenario(cfg)
    channel = realize_channel(scenario, ChannelParams(), np.random.default_rng(seed))
    problem = FederationProblem.from_rate(scenario, channel, cfg.rate_thr_bps)
    rho = rng.uniform(0, math.sqrt(problem.p_max), size=(3, 2)) * (rng.random((3, 2)) < 0.6)
    lam = float(10 ** rng.uniform(-5, -2))
    return build_assignment_milp(rho, problem, lam).instance


def random_binary_milp(rng: np.random.Generator, n_bin: int = 10, n_cont: int = 3):
    n = n_bin + n_cont
    m = int(rng.integers(2, 7))
    A = rng.integers(-5, 6, size=(m, n)).astype(float)
    senses = rng.choice(["L", "G", "E"], size=m, p=[0.6, 0.3, 0.1])
    x0 = np.concatenate([rng.integers(0, 2, n_bin), rng.uniform(0, 3, n_cont)])
    b = A @ x0 + np.where(senses == "L", 1.0, np.where(senses == "G", -1.0, 0.0)) * rng.integers(0, 4, m)
    c = rng.integers(-9, 10, n).astype(float)
    lb = np.zeros(n)
    ub = np.concatenate([np.ones(n_bin), np.full(n_cont, 4.0)])
    return MilpInstance(LpInstance(c, A, senses, b, lb, ub), np.arange(n_bin))


def _milp_check(n: int, rng: np.random.Generator, size_limit: int) -> OracleCheck:
    worst, bad = 0.0, 0
    for i in range(n):
        inst = random_assignment_milp(rng) if i % 2 == 0 else random_binary_milp(rng, min(10, size_limit))
        if inst.integer_vars.size > size_limit:
            continue
        exact, _ = enumerate_milp(inst, size_limit)
        sol = solve_milp(inst)
        if math.isinf(exact):
            bad += sol.status != "infeasible"
            continue
        err = abs(sol.objective - exact) / max(1.0, abs(exact))
        worst = max(worst, err)
        bad += err > 1e-7
    return OracleCheck("milp vs enumeration", bad == 0, worst, f"instances={n} mismatches={bad}")


def _lp_check(n: int, rng: np.random.Generator) -> OracleCheck:
    worst, bad = 0.0, 0
    for _ in range(n):
        A = rng.normal(size=(20, 40))
        x0 = rng.uniform(0, 1, 40)
        b = A @ x0 + rng.uniform(0, 1, 20)
        inst = LpInstance(rng.normal(size=40), A, np.full(20, "L"), b, np.zeros(40), np.full(40, 2.0))
        status, _, ref = tableau_lp(inst)
        sol = solve_lp(inst)
        if status != sol.status:
            bad += 1
            continue
        err = abs(sol.objective - ref) / max(1.0, abs(ref))
        worst = max(worst, err)
        bad += err > 1e-8
    return OracleCheck("lp vs tableau", bad == 0, worst, f"instances={n} mismatches={bad}")


def _joint_check(seeds, echo) -> OracleCheck:
    from .orchestrator import solve

    worst, bad = 0.0, 0
    for seed in seeds:
        problem = tiny_problem(seed)
        exact, _, _ = joint_enumeration(problem)
        sol = solve(problem)
        heur = sol.objective_j if sol.feasible else math.inf
        if echo:
            echo(f"  joint seed={seed}: heuristic={heur:.9e} J exact={exact:.9e} J")
        if math.isinf(exact):
            continue
        if math.isinf(heur):
            bad += 1
            continue
        under = (exact - heur) / exact
        worst = max(worst, under)
        bad += under > 1e-6
    return OracleCheck("joint tiny instance", bad == 0, worst, f"seeds={len(seeds)} violations={bad}")


def run_oracle_suite(size_limit: int = 14, n_socp: int = 100, n_milp: int = 20, n_lp: int = 10,
                     joint_seeds=(0, 1, 2), seed: int = 2024, echo=None) -> OracleReport:
    if size_limit > 16:
        raise ValueError("size_limit caps enumeration at 16 binaries")
    rng = np.random.default_rng(seed)
    report = OracleReport()
    steps = (
        _threshold_check,
        _energy_check,
        lambda: _socp_check(n_socp, rng),
        lambda: _lp_check(n_lp, rng),
        lambda: _milp_check(n_milp, rng, size_limit),
        lambda: _joint_check(list(joint_seeds), echo),
    )
    for step in steps:
        check = step()
        report.checks.append(check)
        if echo:
            echo(check.line())
    return report
