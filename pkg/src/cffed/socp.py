"""Primal-dual interior-point solver for second-order cone programs.

Problems are stated as

    minimize    c'v
    subject to  ||A_i v + b_i||_2 <= c_i'v + d_i      (cones)
                F v <= g                                (linear rows)
                lb <= v <= ub

and solved through the homogeneous self-dual embedding of the standard form
``G v + s = h, s in K``, so infeasible instances terminate with a certificate
instead of stalling.  Search directions use Nesterov-Todd scaling with a
Mehrotra predictor-corrector step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
MAX_ITER = "max_iter"
NUMERICAL = "numerical_failure"


@dataclass(frozen=True, eq=False)
class Cone:
    """``||A v + b|| <= c'v + d``."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: float = 0.0


@dataclass(eq=False)
class SocpInstance:
    c: np.ndarray
    cones: list = field(default_factory=list)
    lin_A: np.ndarray | None = None
    lin_b: np.ndarray | None = None
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None
    labels: list = field(default_factory=list)

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.size
        self.lb = np.full(n, -np.inf) if self.lb is None else np.asarray(self.lb, dtype=float)
        self.ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float)
        if self.lin_A is None:
            self.lin_A = np.zeros((0, n))
            self.lin_b = np.zeros(0)
        self.lin_b = np.asarray(self.lin_b, dtype=float).ravel()
        self.lin_A = np.asarray(self.lin_A, dtype=float).reshape(self.lin_b.size, n)
        for cone in self.cones:
            if cone.A.shape[1] != n or cone.c.size != n or cone.b.size != cone.A.shape[0]:
                raise ValueError("cone dimensions do not match the variable count")
        if (self.lb > self.ub).any():
            raise ValueError("lower bound above upper bound")

    @property
    def n(self) -> int:
        return self.c.size

    def residuals(self, v) -> np.ndarray:
        """Signed violation of each cone, ``||A v + b|| - (c'v + d)``."""
        return np.array([np.linalg.norm(k.A @ v + k.b) - (k.c @ v + k.d) for k in self.cones])


@dataclass
class SocpSolution:
    values: np.ndarray
    objective: float
    status: str
    kkt_residual: float
    iterations: int = 0
    gap: float = np.nan


@dataclass(frozen=True)
class SocpOptions:
    max_iter: int = 100
    feastol: float = 1e-9
    abstol: float = 1e-13
    reltol: float = 1e-9
    step: float = 0.99
    refine: int = 2
    accept_resid: float = 1e-5   # best iterate accepted after a breakdown


# -- standard form ----------------------------------------------------------------

def _standard_form(inst: SocpInstance):
    """Return (c, G, h, l, q, scale_c) with rows equilibrated."""
    n = inst.n
    rows, rhs = [inst.lin_A], [inst.lin_b]
    eye = np.eye(n)
    fin_lb = np.isfinite(inst.lb)
    fin_ub = np.isfinite(inst.ub)
    rows += [-eye[fin_lb], eye[fin_ub]]
    rhs += [-inst.lb[fin_lb], inst.ub[fin_ub]]
    G_lin = np.vstack(rows)
    h_lin = np.concatenate(rhs)
    norms = np.abs(G_lin).max(axis=1) if G_lin.size else np.zeros(0)
    norms[norms == 0] = 1.0
    G_lin /= norms[:, None]
    h_lin = h_lin / norms

    blocks, hs, q = [G_lin], [h_lin], []
    for cone in inst.cones:
        Gb = -np.vstack([cone.c[None, :], cone.A])
        hb = np.concatenate([[cone.d], cone.b])
        scale = max(np.abs(Gb).max(initial=0.0), np.abs(hb).max(initial=0.0)) or 1.0
        blocks.append(Gb / scale)
        hs.append(hb / scale)
        q.append(Gb.shape[0])
    G = np.vstack(blocks)
    h = np.concatenate(hs)
    cscale = np.abs(inst.c).max(initial=0.0) or 1.0
    return inst.c / cscale, G, h, G_lin.shape[0], q, cscale


# -- cone algebra -----------------------------------------------------------------

class _Cones:
    """Nonnegative orthant of size ``l`` followed by second-order cones.

    Every cone operation is vectorized over cones with segment sums; cone
    ``i`` occupies positions ``heads[i]`` (its scalar part) and the
    contiguous run ``tails[tail_starts[i]:...]``.
    """

    def __init__(self, l: int, q: list):
        if any(m < 2 for m in q):
            raise ValueError("second-order cones need dimension at least 2")
        self.l = l
        self.q = list(q)
        self.m = l + sum(q)
        self.degree = l + len(q)
        sizes = np.asarray(q, dtype=int)
        starts = l + np.concatenate([[0], np.cumsum(sizes)[:-1]]) if len(q) else np.zeros(0, dtype=int)
        self.heads = starts.astype(int)
        self.tails = np.concatenate([np.arange(a + 1, a + m) for a, m in zip(self.heads, sizes)]) \
            if len(q) else np.zeros(0, dtype=int)
        self.tail_starts = np.concatenate([[0], np.cumsum(sizes - 1)[:-1]]).astype(int) if len(q) else self.heads
        self.tail_cone = np.repeat(np.arange(len(q)), sizes - 1)
        self.nq = len(q)

    def seg(self, v):
        """Sum of ``v`` (indexed like ``tails``) per cone."""
        if self.nq == 0:
            return np.zeros((0,) + v.shape[1:])
        return np.add.reduceat(v, self.tail_starts, axis=0)

    def identity(self):
        e = np.zeros(self.m)
        e[: self.l] = 1.0
        e[self.heads] = 1.0
        return e

    def det(self, u):
        """u0^2 - |u1|^2 per cone."""
        ut = u[self.tails]
        return u[self.heads] ** 2 - self.seg(ut * ut)

    def jprod(self, u, v):
        out = np.empty(self.m)
        out[: self.l] = u[: self.l] * v[: self.l]
        h, t, c = self.heads, self.tails, self.tail_cone
        out[h] = u[h] * v[h] + self.seg(u[t] * v[t])
        out[t] = u[h][c] * v[t] + v[h][c] * u[t]
        return out

    def jdiv(self, lam, d):
        """Solve ``lam o x = d`` for x."""
        out = np.empty(self.m)
        out[: self.l] = d[: self.l] / lam[: self.l]
        h, t, c = self.heads, self.tails, self.tail_cone
        l0, d0 = lam[h], d[h]
        det = l0 * l0 - self.seg(lam[t] * lam[t])
        x0 = (l0 * d0 - self.seg(lam[t] * d[t])) / det
        out[h] = x0
        out[t] = (d[t] - x0[c] * lam[t]) / l0[c]
        return out

    def shift_inside(self, u):
        """Push ``u`` into the cone interior if it is not already there."""
        u = u.copy()
        alpha = -np.inf
        if self.l:
            alpha = max(alpha, float(-u[: self.l].min()))
        if self.nq:
            ut = u[self.tails]
            alpha = max(alpha, float(np.max(np.sqrt(self.seg(ut * ut)) - u[self.heads])))
        if alpha >= 0:
            u += (1.0 + alpha) * self.identity()
        return u

    def max_step(self, u, du):
        alpha = np.inf
        if self.l:
            neg = du[: self.l] < 0
            if neg.any():
                alpha = float(np.min(-u[: self.l][neg] / du[: self.l][neg]))
        if self.nq:
            h, t = self.heads, self.tails
            a = du[h] ** 2 - self.seg(du[t] * du[t])
            b = u[h] * du[h] - self.seg(u[t] * du[t])
            c = np.maximum(u[h] ** 2 - self.seg(u[t] * u[t]), 0.0)
            disc = b * b - a * c
            denom = -b + np.sqrt(np.maximum(disc, 0.0))
            blocked = ~((a >= 0) & ((b >= 0) | (disc < 0))) & (denom > 0)
            if blocked.any():
                alpha = min(alpha, float(np.min(c[blocked] / denom[blocked])))
        return alpha

    def scaling(self, s, z):
        return _NTScaling(self, s, z)


class _NTScaling:
    """Symmetric Nesterov-Todd scaling W with ``W z = W^{-1} s = lam``."""

    def __init__(self, cones: _Cones, s, z):
        self.cones = cones
        l = cones.l
        self.d = np.sqrt(s[:l] / z[:l])
        h, t, c = cones.heads, cones.tails, cones.tail_cone
        sn = np.sqrt(np.maximum(cones.det(s), 1e-300))
        zn = np.sqrt(np.maximum(cones.det(z), 1e-300))
        sh, zh = s[h] / sn, z[h] / zn
        st, zt = s[t] / sn[c], z[t] / zn[c]
        gam = np.sqrt(np.maximum((1.0 + sh * zh + cones.seg(st * zt)) / 2.0, 1e-300))
        self.w0 = (sh + zh) / (2.0 * gam)
        self.wt = (st - zt) / (2.0 * gam[c])
        self.eta = np.sqrt(sn / zn)
        self.lam = self.apply(z)

    def apply(self, v, inverse=False):
        """W v (or W^{-1} v); ``v`` may be a vector or a matrix of row vectors."""
        cones = self.cones
        l = cones.l
        h, t, c = cones.heads, cones.tails, cones.tail_cone
        out = np.empty_like(v, dtype=float)
        col = (slice(None),) + (None,) * (v.ndim - 1)
        out[:l] = v[:l] / self.d[col] if inverse else v[:l] * self.d[col]
        if cones.nq == 0:
            return out
        sign = -1.0 if inverse else 1.0
        scale = (1.0 / self.eta if inverse else self.eta)[col]
        vh, vt = v[h], v[t]
        wt = self.wt[col]
        w0 = self.w0[col]
        tt = cones.seg(wt * vt)
        out[h] = scale * (w0 * vh + sign * tt)
        coef = sign * vh + tt / (1.0 + w0)
        out[t] = scale[c] * (vt + wt * coef[c])
        return out


class _KKT:
    """Factorization of [[0, G'], [G, -W^2]] by eliminating the cone block."""

    def __init__(self, G, W: _NTScaling, refine: int):
        self.G = G
        self.W = W
        self.refine = refine
        Gs = W.apply(G, inverse=True)
        H = Gs.T @ Gs
        H[np.diag_indices_from(H)] += 1e-14 * max(1.0, np.trace(H) / H.shape[0])
        self.Gs = Gs
        self.chol = sla.cho_factor(H, lower=True, check_finite=False)

    def _solve_once(self, r1, r3):
        t = self.W.apply(r3, inverse=True)
        u = sla.cho_solve(self.chol, r1 + self.Gs.T @ t, check_finite=False)
        w = self.W.apply(self.Gs @ u - t, inverse=True)
        return u, w

    def solve(self, r1, r3):
        u, w = self._solve_once(r1, r3)
        for _ in range(self.refine):
            e1 = r1 - self.G.T @ w
            e3 = r3 - (self.G @ u - self.W.apply(self.W.apply(w)))
            du, dw = self._solve_once(e1, e3)
            u += du
            w += dw
        return u, w


# -- driver -----------------------------------------------------------------------

def solve_socp(inst: SocpInstance, options: SocpOptions = SocpOptions()) -> SocpSolution:
    n = inst.n
    if n == 0:
        ok = all(np.linalg.norm(k.b) <= k.d for k in inst.cones) and (inst.lin_b >= 0).all()
        return SocpSolution(np.zeros(0), 0.0, OPTIMAL if ok else INFEASIBLE, 0.0)
    c, G, h, l, q, cscale = _standard_form(inst)
    cones = _Cones(l, q)
    try:
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            status, x, obj, resid, it, gap = _hsde(c, G, h, cones, options)
    except (np.linalg.LinAlgError, FloatingPointError, ValueError):
        return SocpSolution(np.full(n, np.nan), np.nan, NUMERICAL, np.inf)
    if status in (NUMERICAL, MAX_ITER) and resid <= options.accept_resid:
        # the scaling degenerates close to the optimum; the best iterate is good enough
        status = OPTIMAL
    return SocpSolution(x, obj * cscale if np.isfinite(obj) else obj, status, resid, it, gap)


def _hsde(c, G, h, cones: _Cones, opt: SocpOptions):
    n = c.size
    e = cones.identity()
    # initial point from two least-squares style KKT solves with W = I
    W0 = cones.scaling(e, e)
    kkt = _KKT(G, W0, opt.refine)
    x, zz = kkt.solve(np.zeros(n), h)
    s = cones.shift_inside(-zz)
    _, zd = kkt.solve(-c, np.zeros(cones.m))
    z = cones.shift_inside(zd)
    tau, kappa = 1.0, 1.0

    hnorm = max(1.0, np.linalg.norm(h))
    cnorm = max(1.0, np.linalg.norm(c))
    D = cones.degree
    best = (MAX_ITER, x / tau, np.nan, np.inf, 0, np.nan)

    for it in range(opt.max_iter + 1):
        if not (np.isfinite(x).all() and np.isfinite(s).all() and np.isfinite(z).all() and np.isfinite(tau)):
            return (NUMERICAL,) + best[1:]
        rx = G.T @ z + c * tau
        rz = s + G @ x - h * tau
        cx, hz = c @ x, h @ z
        rt = kappa + cx + hz
        mu = (s @ z + tau * kappa) / (D + 1)

        pres = np.linalg.norm(rz) / (tau * hnorm)
        dres = np.linalg.norm(rx) / (tau * cnorm)
        pcost, dcost = cx / tau, -hz / tau
        gap = s @ z / tau**2
        relgap = gap / max(min(abs(pcost), abs(dcost)), 1e-300)
        resid = max(pres, dres, relgap)
        if resid < best[3]:
            best = (MAX_ITER, x / tau, pcost, resid, it, gap)
        tiny = gap < opt.abstol and max(abs(pcost), abs(dcost)) < opt.abstol
        if pres < opt.feastol and dres < opt.feastol and (relgap < opt.reltol or tiny):
            return OPTIMAL, x / tau, pcost, resid, it, gap
        if hz < 0 and np.linalg.norm(G.T @ z) / -hz < opt.feastol:
            return INFEASIBLE, np.full(n, np.nan), np.inf, resid, it, gap
        if cx < 0 and np.linalg.norm(G @ x + s) / -cx < opt.feastol:
            return UNBOUNDED, np.full(n, np.nan), -np.inf, resid, it, gap
        if it == opt.max_iter:
            break

        W = cones.scaling(s, z)
        lam = W.lam
        kkt = _KKT(G, W, opt.refine)
        x1, z1 = kkt.solve(-c, h)
        denom_base = c @ x1 + h @ z1 - kappa / tau

        def direction(dx, dz, dt, ds, dk):
            x2, z2 = kkt.solve(dx, dz - W.apply(cones.jdiv(lam, ds)))
            dtau = (dt - dk / tau - (c @ x2 + h @ z2)) / denom_base
            Dx = x2 + dtau * x1
            Dz = z2 + dtau * z1
            Ds = W.apply(cones.jdiv(lam, ds) - W.apply(Dz))
            Dk = (dk - kappa * dtau) / tau
            return Dx, Dz, Ds, dtau, Dk

        def step_length(Ds, Dz, dtau, Dk):
            a = min(cones.max_step(s, Ds), cones.max_step(z, Dz))
            if dtau < 0:
                a = min(a, -tau / dtau)
            if Dk < 0:
                a = min(a, -kappa / Dk)
            return a

        # predictor
        ds_aff = -cones.jprod(lam, lam)
        Dx, Dz, Ds, dtau, Dk = direction(-rx, -rz, -rt, ds_aff, -kappa * tau)
        a_aff = min(1.0, step_length(Ds, Dz, dtau, Dk))
        sigma = (1.0 - a_aff) ** 3

        # corrector
        corr = cones.jprod(W.apply(Ds, inverse=True), W.apply(Dz))
        ds = -cones.jprod(lam, lam) - corr + sigma * mu * e
        dk = -kappa * tau - Dk * dtau + sigma * mu
        f = 1.0 - sigma
        Dx, Dz, Ds, dtau, Dk = direction(-f * rx, -f * rz, -f * rt, ds, dk)
        alpha = min(1.0, opt.step * step_length(Ds, Dz, dtau, Dk))

        x = x + alpha * Dx
        z = z + alpha * Dz
        s = s + alpha * Ds
        tau = tau + alpha * dtau
        kappa = kappa + alpha * Dk
        if tau <= 0 or kappa < 0:
            return (NUMERICAL,) + best[1:]
    return best
