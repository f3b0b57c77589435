"""Bounded-variable revised simplex.

Rows ``a_i x (<=|=|>=) b_i`` get one slack column each, giving ``[A I] w = b``
with box bounds on every column.  The basis inverse is kept explicitly and
updated by elementary row operations, with a periodic refactorisation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
MAX_ITER = "max_iter"
NUMERICAL = "numerical_failure"

AT_LOWER, AT_UPPER, FREE, BASIC = 0, 1, 2, -1


@dataclass(eq=False)
class LpInstance:
    c: np.ndarray
    A: np.ndarray
    senses: np.ndarray      # 'L' (<=), 'E' (=), 'G' (>=) per row
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n)
        self.senses = np.asarray(self.senses, dtype="<U1")
        self.b = np.asarray(self.b, dtype=float)
        self.lb = np.asarray(self.lb, dtype=float)
        self.ub = np.asarray(self.ub, dtype=float)
        m = self.A.shape[0]
        if self.senses.shape != (m,) or self.b.shape != (m,):
            raise ValueError("row data does not match the constraint matrix")
        if self.lb.shape != (n,) or self.ub.shape != (n,):
            raise ValueError("bounds do not match the variable count")
        if not set(self.senses.tolist()) <= {"L", "E", "G"}:
            raise ValueError("row senses must be L, E or G")
        if (self.lb > self.ub).any():
            raise ValueError("lower bound above upper bound")

    @property
    def shape(self):
        return self.A.shape

    def row_activity(self, x) -> np.ndarray:
        return self.A @ x

    def max_violation(self, x) -> float:
        act = self.A @ x
        viol = np.where(self.senses == "L", act - self.b, np.where(self.senses == "G", self.b - act, np.abs(act - self.b)))
        bound = np.maximum(self.lb - x, x - self.ub)
        return float(max(viol.max(initial=0.0), bound.max(initial=0.0), 0.0))


@dataclass
class Basis:
    basic: np.ndarray
    status: np.ndarray
    inverse: np.ndarray | None = None   # basis inverse, reused by warm starts

    def copy(self) -> "Basis":
        inv = None if self.inverse is None else self.inverse.copy()
        return Basis(self.basic.copy(), self.status.copy(), inv)


@dataclass
class LpSolution:
    x: np.ndarray
    objective: float
    status: str
    iterations: int
    basis: Basis | None = None


class SimplexEngine:
    """Reusable solver for one constraint matrix under varying bounds."""

    def __init__(self, inst: LpInstance, ftol=1e-9, otol=1e-9, ptol=1e-9, refactor_every=64, max_iter=50_000):
        self.inst = inst
        m, n = inst.shape
        self.m, self.n = m, n
        self.A = np.hstack([inst.A, np.eye(m)])
        self.c = np.concatenate([inst.c, np.zeros(m)])
        self.b = inst.b.copy()
        slo = np.where(inst.senses == "G", -np.inf, 0.0)
        shi = np.where(inst.senses == "L", np.inf, 0.0)
        self.slack_lo, self.slack_hi = slo, shi
        self.ftol, self.otol, self.ptol = ftol, otol, ptol
        self.refactor_every = refactor_every
        self.max_iter = max_iter

    # -- state helpers ---------------------------------------------------------

    def _setup(self, lb, ub, basis: Basis | None):
        self.l = np.concatenate([lb, self.slack_lo])
        self.u = np.concatenate([ub, self.slack_hi])
        N = self.n + self.m
        if basis is None:
            self.basic = np.arange(self.n, N)
            self.status = np.empty(N, dtype=np.int8)
            self.status[: self.n] = np.where(
                np.isfinite(lb), AT_LOWER, np.where(np.isfinite(ub), AT_UPPER, FREE)
            )
            self.status[self.n:] = BASIC
        else:
            self.basic = basis.basic.copy()
            self.status = basis.status.copy()
            nb = self.status != BASIC
            # keep nonbasic statuses consistent with possibly new bounds
            lo_ok = np.isfinite(self.l)
            hi_ok = np.isfinite(self.u)
            st = self.status
            st[nb & (st == AT_LOWER) & ~lo_ok] = np.where(hi_ok, AT_UPPER, FREE)[nb & (st == AT_LOWER) & ~lo_ok]
            st[nb & (st == AT_UPPER) & ~hi_ok] = np.where(lo_ok, AT_LOWER, FREE)[nb & (st == AT_UPPER) & ~hi_ok]
        self.x = np.zeros(N)
        if basis is not None and basis.inverse is not None:
            self.Binv = basis.inverse.copy()
            self._recompute_basics()
            self.since_refactor = 0
        else:
            self._refactor()

    def _nonbasic_values(self):
        st = self.status
        self.x[st == AT_LOWER] = self.l[st == AT_LOWER]
        self.x[st == AT_UPPER] = self.u[st == AT_UPPER]
        self.x[st == FREE] = 0.0

    def _rhs(self):
        nb = self.status != BASIC
        return self.b - self.A[:, nb] @ self.x[nb]

    def _recompute_basics(self):
        self._nonbasic_values()
        self.x[self.basic] = self.Binv @ self._rhs()

    def _refactor(self):
        self.Binv = np.linalg.inv(self.A[:, self.basic])
        self._recompute_basics()
        self.since_refactor = 0

    def _accurate(self) -> bool:
        rhs = self._rhs()
        resid = self.A[:, self.basic] @ self.x[self.basic] - rhs
        return float(np.abs(resid).max(initial=0.0)) <= 1e-9 * max(1.0, float(np.abs(rhs).max(initial=0.0)))

    def _pivot(self, r: int, j: int, col: np.ndarray):
        piv = col[r]
        row = self.Binv[r] / piv
        self.Binv -= np.outer(col, row)
        self.Binv[r] = row
        self.basic[r] = j
        self.status[j] = BASIC
        self.since_refactor += 1
        if self.since_refactor >= self.refactor_every:
            self._refactor()

    def _basis(self) -> Basis:
        return Basis(self.basic.copy(), self.status.copy(), self.Binv.copy())

    def _primal_infeasibility(self):
        xb = self.x[self.basic]
        lo, hi = self.l[self.basic], self.u[self.basic]
        return xb < lo - self.ftol, xb > hi + self.ftol

    def _movable(self):
        return (self.status != BASIC) & (self.u - self.l > 0)

    # -- primal simplex (composite phase 1 / phase 2) --------------------------

    def _primal(self) -> str:
        degenerate = 0
        bland = False
        while True:
            if self.iterations >= self.max_iter:
                return MAX_ITER
            below, above = self._primal_infeasibility()
            phase1 = below.any() or above.any()
            if phase1:
                cB = below * -1.0 + above * 1.0
                pi = cB @ self.Binv
                d = -(pi @ self.A)
            else:
                pi = self.c[self.basic] @ self.Binv
                d = self.c - pi @ self.A
            mov = self._movable()
            st = self.status
            elig = mov & (
                ((st == AT_LOWER) & (d < -self.otol))
                | ((st == AT_UPPER) & (d > self.otol))
                | ((st == FREE) & (np.abs(d) > self.otol))
            )
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return INFEASIBLE if phase1 else OPTIMAL
            j = int(cand[0]) if bland else int(cand[np.argmax(np.abs(d[cand]))])
            direction = 1.0 if d[j] < 0 else -1.0
            col = self.Binv @ self.A[:, j]
            delta = -direction * col
            xb = self.x[self.basic]
            lo, hi = self.l[self.basic], self.u[self.basic]

            ratios = np.full(self.m, np.inf)
            hit_upper = np.zeros(self.m, dtype=bool)
            dec = delta < -self.ptol
            inc = delta > self.ptol
            with np.errstate(divide="ignore", invalid="ignore"):
                # decreasing basics stop at the first bound they meet
                m1 = dec & above
                ratios[m1] = (xb[m1] - hi[m1]) / -delta[m1]
                hit_upper[m1] = True
                m2 = dec & ~above & ~below & np.isfinite(lo)
                ratios[m2] = (xb[m2] - lo[m2]) / -delta[m2]
                m3 = inc & below
                ratios[m3] = (lo[m3] - xb[m3]) / delta[m3]
                m4 = inc & ~below & ~above & np.isfinite(hi)
                ratios[m4] = (hi[m4] - xb[m4]) / delta[m4]
                hit_upper[m4] = True
            ratios = np.maximum(ratios, 0.0)
            flip = self.u[j] - self.l[j]
            tmin = ratios.min(initial=np.inf)
            if not np.isfinite(tmin) and not np.isfinite(flip):
                return UNBOUNDED if not phase1 else NUMERICAL
            self.iterations += 1
            if flip <= tmin:
                t = flip
                self.x[self.basic] += t * delta
                self.x[j] += direction * t
                self.status[j] = AT_UPPER if direction > 0 else AT_LOWER
                degenerate = 0 if t > 1e-12 else degenerate + 1
                continue
            ties = np.flatnonzero(ratios <= tmin + 1e-12)
            if bland:
                r = int(ties[np.argmin(self.basic[ties])])
            else:
                r = int(ties[np.argmax(np.abs(col[ties]))])
            t = ratios[r]
            self.x[self.basic] += t * delta
            self.x[j] += direction * t
            leaving = self.basic[r]
            self.status[leaving] = AT_UPPER if hit_upper[r] else AT_LOWER
            self.x[leaving] = self.u[leaving] if hit_upper[r] else self.l[leaving]
            self._pivot(r, j, col)
            if t <= 1e-12:
                degenerate += 1
                if degenerate > 50:
                    bland = True
            else:
                degenerate = 0
                bland = False

    # -- dual simplex for warm starts ------------------------------------------

    def _dual_feasible(self) -> bool:
        pi = self.c[self.basic] @ self.Binv
        d = self.c - pi @ self.A
        st = self.status
        mov = self._movable()
        bad = mov & (
            ((st == AT_LOWER) & (d < -self.otol))
            | ((st == AT_UPPER) & (d > self.otol))
            | ((st == FREE) & (np.abs(d) > self.otol))
        )
        return not bad.any()

    def _dual(self) -> str:
        while True:
            if self.iterations >= self.max_iter:
                return MAX_ITER
            xb = self.x[self.basic]
            lo, hi = self.l[self.basic], self.u[self.basic]
            viol = np.maximum(lo - xb, xb - hi)
            r = int(np.argmax(viol))
            if viol[r] <= self.ftol:
                return OPTIMAL
            to_lower = xb[r] < lo[r]
            bound = lo[r] if to_lower else hi[r]
            alpha = self.Binv[r] @ self.A
            pi = self.c[self.basic] @ self.Binv
            d = self.c - pi @ self.A
            st = self.status
            mov = self._movable()
            if to_lower:
                cand = mov & (((st == AT_LOWER) & (alpha < -self.ptol)) | ((st == AT_UPPER) & (alpha > self.ptol)))
            else:
                cand = mov & (((st == AT_LOWER) & (alpha > self.ptol)) | ((st == AT_UPPER) & (alpha < -self.ptol)))
            cand |= mov & (st == FREE) & (np.abs(alpha) > self.ptol)
            idx = np.flatnonzero(cand)
            if idx.size == 0:
                return INFEASIBLE
            ratio = np.abs(d[idx]) / np.abs(alpha[idx])
            best = ratio.min()
            ties = idx[ratio <= best + 1e-12]
            q = int(ties[np.argmax(np.abs(alpha[ties]))])
            col = self.Binv @ self.A[:, q]
            step = (xb[r] - bound) / col[r]
            self.iterations += 1
            self.x[self.basic] -= step * col
            self.x[q] += step
            leaving = self.basic[r]
            self.status[leaving] = AT_LOWER if to_lower else AT_UPPER
            self.x[leaving] = bound
            self._pivot(r, q, col)

    # -- public ----------------------------------------------------------------

    def solve(self, lb=None, ub=None, basis: Basis | None = None) -> LpSolution:
        lb = self.inst.lb if lb is None else np.asarray(lb, dtype=float)
        ub = self.inst.ub if ub is None else np.asarray(ub, dtype=float)
        self.iterations = 0
        try:
            self._setup(lb, ub, basis)
            if basis is not None and self._dual_feasible():
                status = self._dual()
                if status == INFEASIBLE:
                    return LpSolution(self.x[: self.n].copy(), np.inf, INFEASIBLE, self.iterations, None)
            status = self._primal()
            if status == OPTIMAL:
                # guard against drift in the updated inverse
                if not self._accurate():
                    self._refactor()
                below, above = self._primal_infeasibility()
                if below.any() or above.any() or not self._dual_feasible():
                    status = self._primal()
        except np.linalg.LinAlgError:
            return LpSolution(self.x[: self.n].copy(), np.nan, NUMERICAL, self.iterations, None)
        x = self.x[: self.n].copy()
        obj = float(self.inst.c @ x) if status == OPTIMAL else (np.inf if status == INFEASIBLE else np.nan)
        if status == UNBOUNDED:
            obj = -np.inf
        return LpSolution(x, obj, status, self.iterations, self._basis() if status == OPTIMAL else None)


def solve_lp(inst: LpInstance, basis: Basis | None = None) -> LpSolution:
    return SimplexEngine(inst).solve(basis=basis)
