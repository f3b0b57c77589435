"""Power allocation with the binaries held fixed (alternation step 1).

Channel gains enter the cones divided by the noise power, so SINR slacks are
measured in units of the noise standard deviation.  With that normalisation
the cone for UE k in federation f reads

    || (sqrt(thr_k) sqrt(b_ks) rho_s)_s , sqrt(thr_k) ||
        <= sqrt(M/tau_p) sum_s sqrt(g_ks) rho_s + eps_k

where b = beta/sigma^2 and g = gamma/sigma^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Assignment, FederationProblem
from .socp import INFEASIBLE, OPTIMAL, Cone, SocpInstance, SocpOptions, SocpSolution, solve_socp

SUPPORT_LADDER = (1e-2, 1e-3, 1e-4)   # fractions of the largest amplitude tried as zero cut-offs
SUPPORT_ACCEPT = 1e-6                 # relative objective loss tolerated when zeroing them


@dataclass(eq=False)
class PowerSubproblem:
    instance: SocpInstance
    rho_index: list          # (s, f) per amplitude variable
    slack_index: list        # k per slack variable
    S: int
    F: int

    def rho_matrix(self, values) -> np.ndarray:
        rho = np.zeros((self.S, self.F))
        for i, (s, f) in enumerate(self.rho_index):
            rho[s, f] = values[i]
        return rho

    def slacks(self, values, K: int) -> np.ndarray:
        out = np.zeros(K)
        off = len(self.rho_index)
        for j, k in enumerate(self.slack_index):
            out[k] = values[off + j]
        return out


def normalized_gains(problem: FederationProblem):
    sigma2 = problem.channel.noise_power_w
    return problem.channel.beta / sigma2, problem.channel.gamma / sigma2


def slack_caps(problem: FederationProblem, assignment: Assignment) -> np.ndarray:
    """Largest useful SINR slack per UE: the shortfall at full power, zero signal."""
    b_hat, _ = normalized_gains(problem)
    thr = problem.requirements.sinr_thr
    y = assignment.y.astype(float)
    fed = assignment.federation_of_ues()
    rx = (b_hat @ y) * problem.p_max        # K x F
    return np.sqrt(thr) * np.sqrt(rx[np.arange(problem.K), fed] + 1.0)


def build_power_socp(assignment: Assignment, problem: FederationProblem, lam: float | None,
                     with_slack: bool = True) -> PowerSubproblem:
    """SOCP over the amplitudes of active (CSP, federation) pairs.

    Amplitudes of inactive pairs are pinned at zero and never become
    variables.  With ``with_slack=False`` the SINR cones are hard.
    """
    b_hat, g_hat = normalized_gains(problem)
    thr = problem.requirements.sinr_thr
    coef = problem.coefficients
    F = assignment.F
    rho_index = [(int(s), int(f)) for s, f in zip(*np.nonzero(assignment.y))]
    col = {sf: i for i, sf in enumerate(rho_index)}
    fed = assignment.federation_of_ues()
    served = [k for k in range(problem.K) if thr[k] > 0]
    slack_index = served if with_slack else []
    n_rho = len(rho_index)
    n = n_rho + len(slack_index)
    gain = math.sqrt(problem.M / problem.tau_p)

    c = np.zeros(n)
    c[:n_rho] = coef.pa_j_per_sqrt_w
    lb = np.zeros(n)
    ub = np.full(n, math.sqrt(problem.p_max))
    if with_slack:
        c[n_rho:] = lam
        ub[n_rho:] = slack_caps(problem, assignment)[slack_index]

    cones = []
    for j, k in enumerate(served):
        f = fed[k]
        members = [s for (s, ff) in rho_index if ff == f]
        A = np.zeros((len(members) + 1, n))
        bvec = np.zeros(len(members) + 1)
        cvec = np.zeros(n)
        root = math.sqrt(thr[k])
        for r, s in enumerate(members):
            A[r, col[(s, f)]] = root * math.sqrt(b_hat[k, s])
            cvec[col[(s, f)]] = gain * math.sqrt(g_hat[k, s])
        bvec[-1] = root
        if with_slack:
            cvec[n_rho + j] = 1.0
        cones.append(Cone(A, bvec, cvec, 0.0))
    labels = [f"rho[{s},{f}]" for s, f in rho_index] + [f"eps[{k}]" for k in slack_index]
    inst = SocpInstance(c, cones, lb=lb, ub=ub, labels=labels)
    return PowerSubproblem(inst, rho_index, slack_index, problem.S, F)


def _restricted(sub: PowerSubproblem, zero_cols) -> SocpInstance:
    inst = sub.instance
    ub = inst.ub.copy()
    keep = np.ones(inst.n, dtype=bool)
    keep[list(zero_cols)] = False
    cones = [Cone(k.A[:, keep], k.b, k.c[keep], k.d) for k in inst.cones]
    return SocpInstance(inst.c[keep], cones, lb=inst.lb[keep], ub=ub[keep]), keep


def solve_power(sub: PowerSubproblem, options: SocpOptions = SocpOptions()) -> SocpSolution:
    """Solve and then try to snap near-zero amplitudes to exact zeros.

    The interior-point iterate never reaches the boundary, so unused CSPs come
    back with tiny positive amplitudes.  Those are zeroed and the problem is
    re-solved; the sparser answer is kept only if it costs essentially nothing.
    """
    sol = solve_socp(sub.instance, options)
    if sol.status != OPTIMAL:
        return sol
    n_rho = len(sub.rho_index)
    rho = sol.values[:n_rho]
    if n_rho == 0:
        return sol
    top = rho.max()
    limit = sol.objective + SUPPORT_ACCEPT * max(abs(sol.objective), 1e-30)
    tried = set()
    for rel in SUPPORT_LADDER:
        small = np.flatnonzero(rho <= rel * top) if top > 0 else np.arange(n_rho)
        key = tuple(small)
        if small.size == 0 or key in tried:
            continue
        tried.add(key)
        inst, keep = _restricted(sub, small)
        sol2 = solve_socp(inst, options)
        if sol2.status == OPTIMAL and sol2.objective <= limit:
            values = np.zeros(sub.instance.n)
            values[keep] = sol2.values
            values[:n_rho] = np.clip(values[:n_rho], 0.0, None)
            return SocpSolution(values, sol2.objective, OPTIMAL, sol2.kkt_residual,
                                sol.iterations + sol2.iterations, sol2.gap)
    sol.values[:n_rho] = np.clip(rho, 0.0, None)
    return sol


def _necessary_conditions(assignment: Assignment, problem: FederationProblem) -> bool:
    """Cheap screens; failing either proves the hard SOCP infeasible.

    For UE k served by set A, Cauchy-Schwarz bounds its SINR by
    (M/tau_p) sum_A gamma/beta, and dropping interference bounds it by
    (M/tau_p) (sum_A sqrt(P_max gamma))^2 / sigma^2.
    """
    thr = problem.requirements.sinr_thr
    ch = problem.channel
    y = assignment.y.astype(float)
    fed = assignment.federation_of_ues()
    ratio = (ch.gamma / ch.beta) @ y                                  # K x F
    amp = np.sqrt(problem.p_max * ch.gamma) @ y
    idx = np.arange(problem.K)
    mf = problem.M / problem.tau_p
    cs_bound = mf * ratio[idx, fed]
    snr_bound = mf * amp[idx, fed] ** 2 / ch.noise_power_w
    need = thr > 0
    return bool(np.all(cs_bound[need] >= thr[need]) and np.all(snr_bound[need] >= thr[need]))


def hard_power_allocation(assignment: Assignment, problem: FederationProblem,
                          options: SocpOptions = SocpOptions()):
    """Minimum-PA-energy amplitudes with hard SINR cones, or None if infeasible."""
    if not _necessary_conditions(assignment, problem):
        return None
    sub = build_power_socp(assignment, problem, None, with_slack=False)
    if not sub.instance.cones:
        return np.zeros((problem.S, assignment.F))
    sol = solve_power(sub, options)
    if sol.status != OPTIMAL:
        return None
    return np.clip(sub.rho_matrix(sol.values), 0.0, math.sqrt(problem.p_max))


def power_feasible(assignment: Assignment, problem: FederationProblem,
                   options: SocpOptions = SocpOptions()) -> bool:
    if not _necessary_conditions(assignment, problem):
        return False
    sub = build_power_socp(assignment, problem, None, with_slack=False)
    if not sub.instance.cones:
        return True
    sol = solve_socp(sub.instance, options)
    if sol.status == INFEASIBLE:
        return False
    return sol.status == OPTIMAL and bool(np.all(sol.values <= math.sqrt(problem.p_max) + 1e-9))


# -- plain-text dump -------------------------------------------------------------

def dump_socp(inst: SocpInstance, path) -> None:
    def row(name, arr):
        return name + " " + " ".join(repr(float(v)) for v in np.ravel(arr)) + "\n"

    with open(path, "w") as fh:
        fh.write(f"socp n={inst.n} cones={len(inst.cones)} lin={inst.lin_A.shape[0]}\n")
        fh.write(row("c", inst.c))
        fh.write(row("lb", inst.lb))
        fh.write(row("ub", inst.ub))
        for i in range(inst.lin_A.shape[0]):
            fh.write(row("lin", np.concatenate([inst.lin_A[i], [inst.lin_b[i]]])))
        for cone in inst.cones:
            fh.write(f"cone rows={cone.A.shape[0]} d={float(cone.d)!r}\n")
            fh.write(row("cc", cone.c))
            for r in range(cone.A.shape[0]):
                fh.write(row("a", np.concatenate([cone.A[r], [cone.b[r]]])))


def load_socp(path) -> SocpInstance:
    with open(path) as fh:
        lines = [ln.split() for ln in fh if ln.strip()]
    head = dict(tok.split("=") for tok in lines[0][1:])
    n = int(head["n"])

    def vec(tokens):
        return np.array([float(t) for t in tokens[1:]])

    c, lb, ub = vec(lines[1]), vec(lines[2]), vec(lines[3])
    lin, cones = [], []
    i = 4
    while i < len(lines):
        tag = lines[i][0]
        if tag == "lin":
            lin.append(vec(lines[i]))
            i += 1
        elif tag == "cone":
            meta = dict(tok.split("=") for tok in lines[i][1:])
            rows = int(meta["rows"])
            cc = vec(lines[i + 1])
            ab = np.array([vec(lines[i + 2 + r]) for r in range(rows)]).reshape(rows, n + 1)
            cones.append(Cone(ab[:, :n], ab[:, n], cc, float(meta["d"])))
            i += 2 + rows
        else:
            raise ValueError(f"{path}: unexpected record {tag!r}")
    lin_arr = np.array(lin).reshape(-1, n + 1)
    return SocpInstance(c, cones, lin_A=lin_arr[:, :n], lin_b=lin_arr[:, n], lb=lb, ub=ub)
