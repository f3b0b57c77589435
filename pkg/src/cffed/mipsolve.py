"""Binary assignment step: MILP construction and best-first branch-and-bound.

With the amplitudes held fixed every SINR constraint becomes linear in the
binaries, so the federation / CSP / ECSP choice is a small MILP.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .conesolve import normalized_gains
from .model import Assignment, FederationProblem
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, LpInstance, SimplexEngine

NODE_LIMIT = "node-limit"
KEEP_INVERSE_NODES = 256   # open nodes that keep a basis inverse for warm starts


@dataclass(eq=False)
class MilpInstance:
    lp: LpInstance
    integer_vars: np.ndarray

    def __post_init__(self):
        self.integer_vars = np.asarray(self.integer_vars, dtype=int)
        idx = self.integer_vars
        if idx.size and (idx.min() < 0 or idx.max() >= self.lp.c.size):
            raise ValueError("integer variable index out of range")
        if (self.lp.lb[idx] < 0).any() or (self.lp.ub[idx] > 1).any():
            raise ValueError("integer variables must be binary")

    def is_integral(self, values, tol=1e-6) -> bool:
        v = np.asarray(values)[self.integer_vars]
        return bool(np.all(np.abs(v - np.round(v)) <= tol))

    def is_feasible(self, values, tol=1e-9) -> bool:
        return self.is_integral(values, tol) and self.lp.max_violation(values) <= tol


@dataclass(frozen=True)
class MilpOptions:
    node_limit: int = 200_000
    gap_tol: float = 1e-6
    int_tol: float = 1e-6


@dataclass
class MilpSolution:
    values: np.ndarray
    objective: float
    status: str
    gap: float
    nodes_explored: int
    bound: float = -np.inf


def _rel_gap(incumbent: float, bound: float) -> float:
    if not np.isfinite(incumbent):
        return np.inf
    return max(0.0, incumbent - bound) / max(1.0, abs(incumbent))


def solve_milp(inst: MilpInstance, options: MilpOptions = MilpOptions(),
               heuristic: Callable[[np.ndarray], Iterable[np.ndarray]] | None = None,
               incumbent: np.ndarray | None = None) -> MilpSolution:
    """Best-first branch-and-bound over LP relaxations.

    ``heuristic`` maps a relaxation point to candidate integral points;
    ``incumbent`` seeds the search with a known feasible point.  Children are
    solved as soon as they are created (warm-started dual simplex), so every
    heap entry carries its own relaxation value.
    """
    lp = inst.lp
    ints = inst.integer_vars
    engine = SimplexEngine(lp)
    best_x, best_obj = None, np.inf

    def offer(v):
        nonlocal best_x, best_obj
        v = np.array(v, dtype=float)
        v[ints] = np.round(v[ints])
        if not inst.is_feasible(v):
            return
        obj = float(lp.c @ v)
        if obj < best_obj - 1e-12 * max(1.0, abs(obj)):
            best_x, best_obj = v, obj

    if incumbent is not None:
        offer(incumbent)

    root = engine.solve()
    nodes = 1
    if root.status == INFEASIBLE:
        return MilpSolution(np.full(lp.c.size, np.nan), np.inf, INFEASIBLE, np.inf, nodes)
    if root.status == UNBOUNDED:
        return MilpSolution(np.full(lp.c.size, np.nan), -np.inf, UNBOUNDED, np.inf, nodes)
    if root.status != OPTIMAL:
        # retry would hit the same pivots; report what is known
        return MilpSolution(best_x if best_x is not None else np.full(lp.c.size, np.nan), best_obj,
                            root.status, np.inf, nodes)

    seq = 0
    heap = [(root.objective, seq, lp.lb.copy(), lp.ub.copy(), root)]
    bound = root.objective

    def prune_level():
        return best_obj - 1e-9 * max(1.0, abs(best_obj))

    while heap:
        bound = heap[0][0]
        if _rel_gap(best_obj, bound) <= options.gap_tol:
            break
        if nodes >= options.node_limit:
            status = NODE_LIMIT
            return MilpSolution(best_x if best_x is not None else np.full(lp.c.size, np.nan), best_obj,
                                status, _rel_gap(best_obj, bound), nodes, bound)
        obj, _, lb, ub, sol = heapq.heappop(heap)
        if obj >= prune_level():
            continue
        x = sol.x
        frac = np.abs(x[ints] - np.round(x[ints]))
        if frac.max(initial=0.0) <= options.int_tol:
            offer(x)
            continue
        if heuristic is not None:
            for cand in heuristic(x):
                offer(cand)
            if obj >= prune_level():
                continue
        # most fractional; argmin keeps the lowest index among ties
        score = np.abs(x[ints] - np.floor(x[ints]) - 0.5)
        j = int(ints[np.argmin(np.round(score, 12))])
        for lo, hi in ((lb[j], math.floor(x[j])), (math.ceil(x[j]), ub[j])):
            clb, cub = lb.copy(), ub.copy()
            clb[j], cub[j] = lo, hi
            child = engine.solve(clb, cub, sol.basis)
            nodes += 1
            if child.status not in (OPTIMAL, INFEASIBLE):
                child = engine.solve(clb, cub)
            if child.status != OPTIMAL or child.objective >= prune_level():
                continue
            seq += 1
            if len(heap) >= KEEP_INVERSE_NODES and child.basis is not None:
                child.basis.inverse = None      # bounded memory; the child refactorizes instead
            heapq.heappush(heap, (child.objective, seq, clb, cub, child))

    if best_x is None:
        return MilpSolution(np.full(lp.c.size, np.nan), np.inf, INFEASIBLE, np.inf, nodes, bound)
    final_bound = min(bound, best_obj) if heap else best_obj
    return MilpSolution(best_x, best_obj, OPTIMAL, _rel_gap(best_obj, final_bound), nodes, final_bound)


# -- the assignment problem --------------------------------------------------------

@dataclass(eq=False)
class AssignmentMilp:
    """Assignment MILP plus what is needed to read its solutions back.

    Variable order: x (k*F+f), y (s*F+f), z, eps (s*F+f), eps_tilde (k*F+f).
    The objective is divided by ``scale`` (the static CSP energy) so that its
    coefficients are of order one.
    """

    instance: MilpInstance
    K: int
    S: int
    F: int
    n_ecsp: int
    scale: float
    gap_coef: np.ndarray       # K x F: B - A, the normalized SINR shortfall when x_kf = 1
    rho: np.ndarray
    sqrt_pmax: float
    owner: np.ndarray
    tau_p: int
    offsets: dict = field(default_factory=dict)

    def __post_init__(self):
        K, S, F, E = self.K, self.S, self.F, self.n_ecsp
        o = {}
        o["x"] = 0
        o["y"] = o["x"] + K * F
        o["z"] = o["y"] + S * F
        o["eps"] = o["z"] + E
        o["eps_t"] = o["eps"] + S * F
        o["end"] = o["eps_t"] + K * F
        self.offsets = o

    def block(self, values, name):
        o = self.offsets
        nxt = {"x": "y", "y": "z", "z": "eps", "eps": "eps_t", "eps_t": "end"}[name]
        v = np.asarray(values)[o[name]: o[nxt]]
        if name in ("x", "eps_t"):
            return v.reshape(self.K, self.F)
        if name in ("y", "eps"):
            return v.reshape(self.S, self.F)
        return v

    def decode(self, values) -> Assignment:
        return Assignment(
            np.round(self.block(values, "x")).astype(int),
            np.round(self.block(values, "y")).astype(int),
            np.round(self.block(values, "z")).astype(int),
        )

    def encode(self, assignment: Assignment) -> np.ndarray:
        """Feasible point for given binaries with the smallest slacks."""
        x = assignment.x.astype(float)
        y = assignment.y.astype(float)
        eps = np.maximum(0.0, self.rho - self.sqrt_pmax * y)
        eps_t = np.maximum(0.0, self.gap_coef) * x
        return np.concatenate([x.ravel(), y.ravel(), assignment.z.astype(float), eps.ravel(), eps_t.ravel()])

    def objective_j(self, values) -> float:
        return float(self.instance.lp.c @ values) * self.scale

    def rounding_candidates(self, values):
        """Round y at 0.5 (and by ceiling), assign UEs greedily, repair z."""
        yf = self.block(values, "y")
        xf = self.block(values, "x")
        out = []
        for thresh in (0.5, 1e-6):
            y = np.zeros((self.S, self.F), dtype=int)
            best_f = np.argmax(yf, axis=1)
            keep = yf[np.arange(self.S), best_f] >= thresh
            y[np.flatnonzero(keep), best_f[keep]] = 1
            x = np.zeros((self.K, self.F), dtype=int)
            load = np.zeros(self.F, dtype=int)
            order = sorted(range(self.K), key=lambda k: (-xf[k].max(), k))
            ok = True
            for k in order:
                prefs = sorted(range(self.F), key=lambda f: (-xf[k, f], f))
                placed = False
                for f in prefs:
                    if load[f] < self.tau_p:
                        x[k, f] = 1
                        load[f] += 1
                        placed = True
                        break
                ok &= placed
            if not ok:
                continue
            z = np.zeros(self.n_ecsp, dtype=int)
            z[self.owner[y.sum(axis=1) > 0]] = 1
            out.append(self.encode(Assignment(x, y, z)))
        return out


def build_assignment_milp(rho: np.ndarray, problem: FederationProblem, lam: float,
                          eps_weight: np.ndarray | None = None) -> AssignmentMilp:
    """MILP over the binaries with the amplitudes ``rho`` (S x F) held fixed.

    ``eps_weight`` is the per-CSP penalty on the power-cap slack; it defaults
    to ``lam``.
    """
    rho = np.asarray(rho, dtype=float)
    K, S, F = problem.K, problem.S, problem.F
    E = problem.scenario.num_ecsps
    owner = np.asarray(problem.scenario.csp_to_ecsp)
    sqrt_p = math.sqrt(problem.p_max)
    if rho.shape != (S, F):
        raise ValueError(f"rho has shape {rho.shape}, expected {(S, F)}")
    if (rho < 0).any() or (rho > sqrt_p + 1e-9).any():
        raise ValueError("amplitudes must lie in [0, sqrt(P_max)]")
    rho = np.minimum(rho, sqrt_p)
    coef = problem.coefficients
    thr = problem.requirements.sinr_thr
    b_hat, g_hat = normalized_gains(problem)
    gain = math.sqrt(problem.M / problem.tau_p)
    A_kf = gain * np.sqrt(g_hat) @ rho                               # K x F
    B_kf = np.sqrt(thr)[:, None] * np.sqrt(b_hat @ rho**2 + 1.0)     # K x F
    B_kf[thr <= 0] = 0.0
    gap = B_kf - A_kf
    eps_weight = np.full(S, lam) if eps_weight is None else np.asarray(eps_weight, dtype=float)

    n_x, n_y, n_e = K * F, S * F, E
    n = 2 * n_x + 2 * n_y + n_e
    ox, oy, oz, oe, ot = 0, n_x, n_x + n_y, n_x + n_y + n_e, n_x + 2 * n_y + n_e
    scale = coef.csp_static_j
    c = np.zeros(n)
    c[oy: oy + n_y] = coef.csp_static_j / scale
    c[oz: oz + n_e] = coef.ecsp_j / scale
    c[oe: oe + n_y] = np.repeat(eps_weight, F) / scale
    c[ot: ot + n_x] = lam / scale

    lb = np.zeros(n)
    ub = np.ones(n)
    ub[oe: oe + n_y] = sqrt_p
    ub[ot: ot + n_x] = np.maximum(B_kf, 0.0).ravel()

    rows, senses, rhs = [], [], []

    def row():
        r = np.zeros(n)
        rows.append(r)
        return r

    for k in range(K):                      # SINR rows
        for f in range(F):
            r = row()
            r[ox + k * F + f] = gap[k, f]
            r[ot + k * F + f] = -1.0
            senses.append("L")
            rhs.append(0.0)
    for s in range(S):                      # power cap rows
        for f in range(F):
            r = row()
            r[oy + s * F + f] = -sqrt_p
            r[oe + s * F + f] = -1.0
            senses.append("L")
            rhs.append(-rho[s, f])
    for s in range(S):                      # CSP needs its ECSP, at most one federation
        r = row()
        r[oy + s * F: oy + (s + 1) * F] = 1.0
        r[oz + owner[s]] = -1.0
        senses.append("L")
        rhs.append(0.0)
    for k in range(K):                      # one federation per UE
        r = row()
        r[ox + k * F: ox + (k + 1) * F] = 1.0
        senses.append("E")
        rhs.append(1.0)
    for f in range(F):                      # pilot capacity
        r = row()
        r[ox + f: ox + n_x: F] = 1.0
        senses.append("L")
        rhs.append(float(problem.tau_p))

    lp = LpInstance(c, np.array(rows), np.array(senses), np.array(rhs), lb, ub)
    ints = np.arange(oz + n_e)
    return AssignmentMilp(MilpInstance(lp, ints), K, S, F, E, scale, gap, rho, sqrt_p, owner, problem.tau_p)


# -- sparse triplet dump -----------------------------------------------------------

def dump_milp(inst: MilpInstance, path) -> None:
    lp = inst.lp
    m, n = lp.shape
    with open(path, "w") as fh:
        fh.write(f"milp rows={m} cols={n}\n")
        for j in np.flatnonzero(lp.c):
            fh.write(f"c {j} {float(lp.c[j])!r}\n")
        for i in range(m):
            fh.write(f"b {i} {lp.senses[i]} {float(lp.b[i])!r}\n")
        for i, j in zip(*np.nonzero(lp.A)):
            fh.write(f"a {i} {j} {float(lp.A[i, j])!r}\n")
        for j in range(n):
            fh.write(f"bnd {j} {float(lp.lb[j])!r} {float(lp.ub[j])!r}\n")
        for j in inst.integer_vars:
            fh.write(f"int {j}\n")


def load_milp(path) -> MilpInstance:
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    head = dict(tok.split("=") for tok in lines[0][1:])
    m, n = int(head["rows"]), int(head["cols"])
    c, A = np.zeros(n), np.zeros((m, n))
    senses, b = np.full(m, "L"), np.zeros(m)
    lb, ub, ints = np.zeros(n), np.zeros(n), []
    for tok in lines[1:]:
        tag = tok[0]
        if tag == "c":
            c[int(tok[1])] = float(tok[2])
        elif tag == "b":
            senses[int(tok[1])] = tok[2]
            b[int(tok[1])] = float(tok[3])
        elif tag == "a":
            A[int(tok[1]), int(tok[2])] = float(tok[3])
        elif tag == "bnd":
            lb[int(tok[1])], ub[int(tok[1])] = float(tok[2]), float(tok[3])
        elif tag == "int":
            ints.append(int(tok[1]))
        else:
            raise ValueError(f"{path}: unexpected record {tag!r}")
    return MilpInstance(LpInstance(c, A, senses, b, lb, ub), np.array(ints, dtype=int))
