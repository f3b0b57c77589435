"""Alternating minimization between the power SOCP and the assignment MILP,
plus the random-activation baseline and the final min-of-both selection."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .conesolve import build_power_socp, hard_power_allocation, normalized_gains, power_feasible, solve_power
from .mipsolve import MilpOptions, build_assignment_milp, solve_milp
from .model import (
    Assignment,
    FederationProblem,
    PowerAllocation,
    SolutionReport,
    Tolerances,
    verify_solution,
)
from .scenario import Scenario, StructuralInfeasibilityError, spawn_streams
from .socp import OPTIMAL, SocpOptions

SUCCESS = "success"
INFEASIBLE = "infeasible"
METHODS = ("alternation", "random", "refined")


@dataclass(frozen=True)
class SolveOptions:
    lam: float | None = None          # None: scaled from the static energies, see default_lambda
    max_outer_iters: int = 20
    tol_obj: float = 1e-4
    slack_tol: float = 1e-6
    random_trials: int = 50
    seed: int | None = None           # None: the scenario's solver stream
    milp: MilpOptions = MilpOptions()
    socp: SocpOptions = SocpOptions()
    tolerances: Tolerances = Tolerances()

    def __post_init__(self):
        if self.lam is not None and self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.tol_obj <= 0:
            raise ValueError("tol_obj must be positive")
        if self.max_outer_iters < 1 or self.random_trials < 1:
            raise ValueError("max_outer_iters and random_trials must be at least 1")
        if self.slack_tol < 0:
            raise ValueError("slack_tol must be non-negative")

    def to_dict(self) -> dict:
        return {
            "lam": self.lam,
            "max_outer_iters": self.max_outer_iters,
            "tol_obj": self.tol_obj,
            "slack_tol": self.slack_tol,
            "random_trials": self.random_trials,
            "seed": self.seed,
            "node_limit": self.milp.node_limit,
        }


@dataclass
class FederationSolution:
    status: str
    assignment: Assignment | None
    powers: PowerAllocation | None
    report: SolutionReport | None
    objective_j: float
    avg_power_w: float
    method_tag: str
    history: list = field(default_factory=list)
    outer_iters: int = 0
    milp_nodes: int = 0

    @property
    def feasible(self) -> bool:
        return self.status == SUCCESS

    @property
    def active_csps(self) -> int:
        return 0 if self.assignment is None else int(self.assignment.y.sum())

    @property
    def active_ecsps(self) -> int:
        return 0 if self.assignment is None else int(self.assignment.z.sum())

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "method_tag": self.method_tag,
            "objective_j": None if not self.feasible else self.objective_j,
            "avg_power_w": None if not self.feasible else self.avg_power_w,
            "outer_iters": self.outer_iters,
            "milp_nodes": self.milp_nodes,
            "assignment": None if self.assignment is None else self.assignment.to_dict(),
            "rho": None if self.powers is None else self.powers.rho.tolist(),
            "report": None if self.report is None else self.report.to_dict(),
            "history": self.history,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _infeasible(method: str, history=None, outer_iters=0, milp_nodes=0) -> FederationSolution:
    return FederationSolution(INFEASIBLE, None, None, None, math.nan, math.nan, method,
                              history or [], outer_iters, milp_nodes)


def default_lambda(problem: FederationProblem) -> float:
    """Penalty per unit of noise-normalized SINR slack, in joules."""
    coef = problem.coefficients
    return 1e4 * (coef.csp_static_j + coef.ecsp_j)


def eps_weights(problem: FederationProblem, lam: float) -> np.ndarray:
    """Per-CSP weight on the power-cap slack.

    Dropping CSP s from a federation removes at most
    sqrt(M/tau_p) * sum_k sqrt(g_ks) * rho of signal amplitude across its UEs,
    so weighting the cap slack by that factor keeps a cap violation at least
    as expensive as the SINR slack it would turn into at the next power step.
    """
    _, g_hat = normalized_gains(problem)
    gain = math.sqrt(problem.M / problem.tau_p)
    return lam * np.maximum(1.0, gain * np.sqrt(g_hat).sum(axis=0))


def _centroids(scenario: Scenario, x: np.ndarray) -> np.ndarray:
    F = x.shape[1]
    cent = np.full((F, 2), np.nan)
    for f in range(F):
        members = x[:, f] > 0
        if members.any():
            cent[f] = scenario.ue_positions[members, :2].mean(axis=0)
    return cent


def _attach_csps(scenario: Scenario, x: np.ndarray, csps) -> np.ndarray:
    """Put each listed CSP in the federation with the nearest UE centroid."""
    F = x.shape[1]
    y = np.zeros((scenario.S, F), dtype=int)
    cent = _centroids(scenario, x)
    csps = np.asarray(csps, dtype=int)
    if csps.size == 0:
        return y
    d = np.linalg.norm(scenario.csp_positions[csps, None, :2] - cent[None], axis=2)
    d = np.where(np.isnan(d), np.inf, d)
    home = np.argmin(d, axis=1)              # argmin: ties go to the lower index
    # a federation with UEs but no CSP can never be served, and the power step
    # pins its amplitudes at zero, so lend it the nearest CSP of a shared group
    for f in range(F):
        if x[:, f].sum() == 0 or (home == f).any():
            continue
        counts = np.bincount(home, minlength=F)
        spare = np.flatnonzero(counts[home] > 1)
        if spare.size:
            home[spare[np.argmin(d[spare, f])]] = f
    y[csps, home] = 1
    return y


def _z_for(scenario: Scenario, y: np.ndarray) -> np.ndarray:
    z = np.zeros(scenario.num_ecsps, dtype=int)
    z[np.asarray(scenario.csp_to_ecsp)[y.sum(axis=1) > 0]] = 1
    return z


def initial_assignment(scenario: Scenario, channel=None, F: int | None = None) -> Assignment:
    """Chunk UEs along the hall length; every CSP joins the nearest group."""
    cfg = scenario.config
    F = cfg.num_federations if F is None else F
    K = scenario.K
    if K > F * cfg.pilot_len:
        raise StructuralInfeasibilityError(f"{K} UEs exceed {F} federations x {cfg.pilot_len} pilots")
    order = np.argsort(scenario.ue_positions[:, 1], kind="stable")
    x = np.zeros((K, F), dtype=int)
    for f, chunk in enumerate(np.array_split(order, F)):
        x[chunk, f] = 1
    y = _attach_csps(scenario, x, np.arange(scenario.S))
    return Assignment(x, y, _z_for(scenario, y))


def penalized_objective(problem: FederationProblem, assignment: Assignment, rho, sinr_slack, lam: float,
                        eps_w) -> float:
    coef = problem.coefficients
    y = assignment.y.astype(float)
    cap = np.maximum(0.0, np.asarray(rho) - math.sqrt(problem.p_max) * y)
    return float(
        coef.csp_static_j * y.sum()
        + coef.ecsp_j * assignment.z.sum()
        + coef.pa_j_per_sqrt_w * np.sum(rho)
        + lam * np.sum(sinr_slack)
        + np.sum(np.asarray(eps_w)[:, None] * cap)
    )


def _finalize(assignment: Assignment, rho, problem: FederationProblem, method: str, tol: Tolerances,
              **extra) -> FederationSolution | None:
    """Drop CSPs that carry no power, then verify; None if verification fails."""
    scenario = problem.scenario
    rho = np.asarray(rho, dtype=float)
    y = assignment.y * (rho > 0)
    a = Assignment(assignment.x, y, _z_for(scenario, y))
    p = PowerAllocation(rho * y)
    report = verify_solution(a, p, problem, tol)
    if report.failed == ["7b"]:
        # interior-point answers can sit a hair under the threshold; a tiny
        # uniform scale-up raises every SINR without touching the structure
        bumped = np.minimum(p.rho * (1 + 10 * tol.sinr_rel), math.sqrt(problem.p_max))
        p = PowerAllocation(bumped)
        report = verify_solution(a, p, problem, tol)
    if not report.feasible:
        return None
    return FederationSolution(SUCCESS, a, p, report, report.objective_j, report.avg_power_w, method, **extra)


def alternate(problem: FederationProblem, options: SolveOptions = SolveOptions(),
              start: Assignment | None = None) -> FederationSolution:
    scenario = problem.scenario
    lam = options.lam if options.lam is not None else default_lambda(problem)
    eps_w = eps_weights(problem, lam)
    pa = problem.coefficients.pa_j_per_sqrt_w
    a = start if start is not None else initial_assignment(scenario)
    history = []
    nodes = 0
    prev = math.inf
    it = 0
    for it in range(1, options.max_outer_iters + 1):
        sub = build_power_socp(a, problem, lam)
        sol = solve_power(sub, options.socp)
        if sol.status != OPTIMAL:
            history.append({"iter": it, "step": "power", "status": sol.status})
            break
        rho = np.clip(sub.rho_matrix(sol.values), 0.0, math.sqrt(problem.p_max))
        slack = sub.slacks(sol.values, problem.K)
        obj = penalized_objective(problem, a, rho, slack, lam, eps_w)
        history.append({"iter": it, "step": "power", "objective_j": obj, "slack": float(slack.sum())})

        milp = build_assignment_milp(rho, problem, lam, eps_w)
        ms = solve_milp(milp.instance, options.milp, heuristic=milp.rounding_candidates,
                        incumbent=milp.encode(a))
        nodes += ms.nodes_explored
        if not np.isfinite(ms.objective):
            history.append({"iter": it, "step": "assignment", "status": ms.status})
            break
        new_a = milp.decode(ms.values)
        slack_sum = float(milp.block(ms.values, "eps_t").sum() + milp.block(ms.values, "eps").sum())
        obj = milp.objective_j(ms.values) + pa * float(np.sum(rho))
        history.append({"iter": it, "step": "assignment", "objective_j": obj, "slack": slack_sum,
                        "milp_status": ms.status, "nodes": ms.nodes_explored})
        changed = not new_a.same_as(a)
        a = new_a
        if not changed and slack_sum < options.slack_tol:
            break
        if abs(prev - obj) <= options.tol_obj * max(abs(obj), 1e-300):
            break
        prev = obj

    rho = hard_power_allocation(a, problem, options.socp)
    if rho is None:
        return _infeasible("alternation", history, it, nodes)
    out = _finalize(a, rho, problem, "alternation", options.tolerances,
                    history=history, outer_iters=it, milp_nodes=nodes)
    return out if out is not None else _infeasible("alternation", history, it, nodes)


def random_activation(problem: FederationProblem, rng: np.random.Generator, trials: int = 50,
                      options: SolveOptions = SolveOptions()) -> FederationSolution:
    """Grow random CSP subsets until a slack-free power allocation exists."""
    scenario = problem.scenario
    base = initial_assignment(scenario)
    S = scenario.S
    tried = 0

    def attempt(csps):
        y = _attach_csps(scenario, base.x, csps)
        a = Assignment(base.x, y, _z_for(scenario, y))
        rho = hard_power_allocation(a, problem, options.socp)
        if rho is None:
            return None
        return _finalize(a, rho, problem, "random", options.tolerances)

    if not (problem.requirements.sinr_thr > 0).any():
        out = attempt([])
        if out is not None:
            return out
    # federations share no variables, so letting every CSP serve every
    # federation at once relaxes all subsets; failing it rules them all out
    relaxed = Assignment(base.x, np.ones((S, base.F), dtype=int), np.ones(scenario.num_ecsps, dtype=int))
    if not power_feasible(relaxed, problem, options.socp):
        return _infeasible("random", [{"subsets_tried": 0}])
    for n in range(1, S + 1):
        seen = set()
        for _ in range(trials):
            subset = tuple(sorted(int(s) for s in rng.choice(S, size=n, replace=False)))
            if subset in seen:
                continue
            seen.add(subset)
            tried += 1
            out = attempt(subset)
            if out is not None:
                out.history = [{"subset_size": n, "subsets_tried": tried}]
                return out
    return _infeasible("random", [{"subsets_tried": tried}])


def solver_rng(problem: FederationProblem, options: SolveOptions) -> np.random.Generator:
    if options.seed is not None:
        return np.random.default_rng(options.seed)
    return spawn_streams(problem.scenario.config.seed)["solver"]


def solve(problem: FederationProblem, options: SolveOptions = SolveOptions()) -> FederationSolution:
    """Alternation and random activation; the cheaper verified answer wins."""
    alt = alternate(problem, options)
    rnd = random_activation(problem, solver_rng(problem, options), options.random_trials, options)
    if alt.feasible and rnd.feasible:
        if rnd.objective_j < alt.objective_j:
            return replace(rnd, method_tag="refined", history=alt.history + rnd.history,
                           outer_iters=alt.outer_iters, milp_nodes=alt.milp_nodes)
        return alt
    if alt.feasible:
        return alt
    if rnd.feasible:
        return replace(rnd, outer_iters=alt.outer_iters, milp_nodes=alt.milp_nodes,
                       history=alt.history + rnd.history)
    return _infeasible("alternation", alt.history + rnd.history, alt.outer_iters, alt.milp_nodes)
