"""Minimization of the l1-penalized surrogate risk.

The objective ``mean_i phi_d(y_i f_lam(x_i)) + 2 r_n |lam|_1`` is convex and
piecewise linear.  The main path runs proximal subgradient descent with
soft-thresholding, then polishes with exact coordinate-wise piecewise-linear
line searches, and finally takes Polyak-stepped subgradient iterations toward
a certified lower bound.  On small instances the lower bound is the exact
optimum of the equivalent linear program (via the max-form of the surrogate,
solved by HiGHS); otherwise a dual-feasible point supplies an honest bound.
A result that cannot be certified within budget reports ``converged=False``
with its true gap bound; it never silently claims optimality.

Everything here works on a weighted-row problem, so the same code path
minimizes empirical risks (uniform weights) and exact population risks
(finite-support rows weighted by ``p_k * eta_k`` and ``p_k * (1 - eta_k)``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .losses import CostModel, phi_d
from .model import Coefficients, Dictionary
from .risk import Dataset, FiniteDistribution

LP_CAP_DEFAULT = 10_000


class CapExceededError(ValueError):
    """Instance too large for the exact LP oracle."""


@dataclass(frozen=True)
class SolveConfig:
    """Penalty level, optional l1-ball radius, and optimization budget.

    ``seed`` is recorded for reproducibility of any randomized step; the
    default pipeline is fully deterministic and does not consume it.
    """

    r_n: float
    c_lambda: float | None = None
    tol: float = 1e-8
    max_iter: int = 4000
    seed: int = 0
    lp_cap: int = LP_CAP_DEFAULT

    def __post_init__(self) -> None:
        if self.r_n < 0.0:
            raise ValueError("r_n must be nonnegative")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if self.c_lambda is not None and self.c_lambda <= 0.0:
            raise ValueError("c_lambda must be positive when given")


@dataclass(frozen=True)
class SolveResult:
    lam_hat: Coefficients
    objective: float
    gap_bound: float
    iterations: int
    converged: bool
    lower_bound: float


@dataclass(frozen=True)
class WeightedProblem:
    """Margins matrix ``margins[i, j] = y_i f_j(x_i)`` with row weights."""

    margins: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        m = np.atleast_2d(np.asarray(self.margins, dtype=float))
        w = np.asarray(self.weights, dtype=float).ravel()
        if m.shape[0] != w.shape[0]:
            raise ValueError("margins rows and weights must align")
        if m.shape[0] == 0:
            raise ValueError("problem has no rows")
        if np.any(w < 0.0):
            raise ValueError("weights must be nonnegative")
        object.__setattr__(self, "margins", m)
        object.__setattr__(self, "weights", w)

    @property
    def n_rows(self) -> int:
        return self.margins.shape[0]

    @property
    def m(self) -> int:
        return self.margins.shape[1]


def problem_from_dataset(data: Dataset, dictionary: Dictionary) -> WeightedProblem:
    feats = dictionary.evaluate_matrix(data.x)
    return WeightedProblem(
        margins=data.y[:, None] * feats,
        weights=np.full(data.n, 1.0 / data.n),
    )


def problem_from_distribution(
    dist: FiniteDistribution, dictionary: Dictionary
) -> WeightedProblem:
    """Expand a finite distribution into weighted rows, one per (point, label)."""
    feats = dictionary.evaluate_matrix(dist.points)
    rows, weights = [], []
    for k in range(dist.size):
        w_plus = dist.p[k] * dist.eta[k]
        w_minus = dist.p[k] * (1.0 - dist.eta[k])
        if w_plus > 0.0:
            rows.append(feats[k])
            weights.append(w_plus)
        if w_minus > 0.0:
            rows.append(-feats[k])
            weights.append(w_minus)
    return WeightedProblem(margins=np.array(rows), weights=np.array(weights))


def weighted_phi_risk(problem: WeightedProblem, cm: CostModel, lam: np.ndarray) -> float:
    z = problem.margins @ lam
    return float(np.dot(problem.weights, phi_d(z, cm)))


def weighted_objective(
    problem: WeightedProblem, cm: CostModel, r_n: float, lam: np.ndarray
) -> float:
    return weighted_phi_risk(problem, cm, lam) + 2.0 * r_n * float(np.abs(lam).sum())


def penalized_objective(
    data: Dataset,
    dictionary: Dictionary,
    lam: Coefficients,
    cm: CostModel,
    r_n: float,
) -> float:
    """Empirical surrogate risk plus 2 * r_n * |lam|_1."""
    if r_n < 0.0:
        raise ValueError("r_n must be nonnegative")
    problem = problem_from_dataset(data, dictionary)
    return weighted_objective(problem, cm, r_n, lam.as_array())


def project_l1_ball(v: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto {x : |x|_1 <= radius} via simplex reduction."""
    if radius < 0.0:
        raise ValueError("radius must be nonnegative")
    v = np.asarray(v, dtype=float)
    if np.abs(v).sum() <= radius:
        return v.copy()
    u = np.sort(np.abs(v))[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, len(u) + 1)
    rho = np.nonzero(u - (css - radius) / idx > 0.0)[0][-1]
    theta = (css[rho] - radius) / (rho + 1.0)
    return np.sign(v) * np.maximum(np.abs(v) - theta, 0.0)


# ---------------------------------------------------------------------------
# Exact LP oracle
# ---------------------------------------------------------------------------


def lp_oracle_weighted(
    problem: WeightedProblem,
    cm: CostModel,
    r_n: float,
    c_lambda: float | None = None,
    cap: int = LP_CAP_DEFAULT,
) -> tuple[Coefficients, float]:
    """Exact minimizer via the equivalent linear program.

    Uses the max-form of the surrogate: with slack ``xi_i >= max(0, 1 - z_i,
    1 - a z_i)`` and the usual positive/negative split ``lam = lp - ln`` the
    objective becomes linear.  Solved by HiGHS (deterministic dual simplex).
    """
    n, m = problem.n_rows, problem.m
    if n * m > cap:
        raise CapExceededError(f"instance size n*M = {n * m} exceeds cap {cap}")
    a = cm.a
    A = problem.margins
    n_var = 2 * m + n
    c = np.concatenate(
        [np.full(2 * m, 2.0 * r_n), problem.weights]
    )
    rows = []
    rhs = []
    eye = np.eye(n)
    # xi_i >= 1 - z_i  and  xi_i >= 1 - a z_i
    for scale in (1.0, a):
        block = np.hstack([-scale * A, scale * A, -eye])
        rows.append(block)
        rhs.append(np.full(n, -1.0))
    if c_lambda is not None:
        ball = np.concatenate([np.ones(2 * m), np.zeros(n)])
        rows.append(ball[None, :])
        rhs.append(np.array([c_lambda]))
    res = linprog(
        c,
        A_ub=np.vstack(rows),
        b_ub=np.concatenate(rhs),
        bounds=[(0.0, None)] * n_var,
        method="highs",
    )
    if res.status != 0:
        raise RuntimeError(f"LP oracle failed with status {res.status}: {res.message}")
    lam = res.x[:m] - res.x[m : 2 * m]
    return Coefficients.from_array(lam), float(res.fun)


def lp_oracle(
    data: Dataset,
    dictionary: Dictionary,
    cm: CostModel,
    r_n: float,
    c_lambda: float | None = None,
    cap: int = LP_CAP_DEFAULT,
) -> tuple[Coefficients, float]:
    """Exact penalized empirical minimizer for small instances."""
    if r_n < 0.0:
        raise ValueError("r_n must be nonnegative")
    problem = problem_from_dataset(data, dictionary)
    return lp_oracle_weighted(problem, cm, r_n, c_lambda=c_lambda, cap=cap)


# ---------------------------------------------------------------------------
# Dual-feasible lower bound (used when the instance exceeds the LP cap)
# ---------------------------------------------------------------------------


def _dual_lower_bound(
    problem: WeightedProblem,
    cm: CostModel,
    r_n: float,
    c_lambda: float | None,
    z: np.ndarray,
) -> float:
    """Lower bound from a dual-feasible point built off the active pieces at z.

    The surrogate satisfies ``phi_d(t) = max_{v in [0, a]} (min(v, 1) - v t)``.
    Choosing v per row from the piece active at ``z`` and rescaling into the
    dual feasible region gives a valid bound by weak duality.
    """
    a = cm.a
    v = np.where(z < 0.0, a, np.where(z < 1.0, 1.0, 0.0))
    s = problem.margins.T @ (problem.weights * v)
    worst = float(np.max(np.abs(s))) if s.size else 0.0
    if c_lambda is None:
        if worst > 2.0 * r_n:
            if r_n <= 0.0:
                return 0.0
            v = v * (2.0 * r_n / worst)
        return float(np.dot(problem.weights, np.minimum(v, 1.0)))
    value = float(np.dot(problem.weights, np.minimum(v, 1.0)))
    return value - c_lambda * max(0.0, worst - 2.0 * r_n)


# ---------------------------------------------------------------------------
# Iterative solver
# ---------------------------------------------------------------------------


def _risk_subgradient(problem: WeightedProblem, cm: CostModel, z: np.ndarray) -> np.ndarray:
    dphi = np.where(z < 0.0, -cm.a, np.where(z < 1.0, -1.0, 0.0))
    return problem.margins.T @ (problem.weights * dphi)


_KINK_TOL = 1e-11


def _min_norm_subgradient(
    problem: WeightedProblem, cm: CostModel, r_n: float, lam: np.ndarray, z: np.ndarray
) -> np.ndarray:
    """Approximate minimum-norm element of the full subdifferential.

    At kink margins (z near 0 or 1) and at zero coefficients the
    subdifferential is a box-parameterized set; the minimum-norm element is
    found by exact coordinate descent on the induced small QP.  Its negation
    is a descent direction whenever the point is not optimal, which is what
    lets exact line searches escape coordinate-wise-optimal stalls.
    """
    a = cm.a
    neg = z < -_KINK_TOL
    at_zero = (z >= -_KINK_TOL) & (z <= _KINK_TOL)
    mid = (z > _KINK_TOL) & (z < 1.0 - _KINK_TOL)
    at_one = (z >= 1.0 - _KINK_TOL) & (z <= 1.0 + _KINK_TOL)
    lo = np.zeros_like(z)
    hi = np.zeros_like(z)
    lo[neg] = -a
    hi[neg] = -a
    lo[at_zero] = -a
    hi[at_zero] = -1.0
    lo[mid] = -1.0
    hi[mid] = -1.0
    lo[at_one] = -1.0
    hi[at_one] = 0.0
    v = np.clip(np.where(z < 0.5, -1.0, 0.0), lo, hi)
    s_lo = np.where(np.abs(lam) <= _KINK_TOL, -1.0, np.sign(lam))
    s_hi = np.where(np.abs(lam) <= _KINK_TOL, 1.0, np.sign(lam))
    s = np.clip(np.zeros_like(lam), s_lo, s_hi)

    w = problem.weights
    A = problem.margins
    g = A.T @ (w * v) + 2.0 * r_n * s
    free_v = np.nonzero(lo < hi)[0]
    free_s = np.nonzero(s_lo < s_hi)[0] if r_n > 0.0 else np.array([], dtype=int)
    for _ in range(200):
        delta = 0.0
        for i in free_v:
            b = w[i] * A[i]
            denom = float(np.dot(b, b))
            if denom <= 0.0:
                continue
            new = float(np.clip(v[i] - np.dot(b, g) / denom, lo[i], hi[i]))
            if new != v[i]:
                g = g + (new - v[i]) * b
                delta = max(delta, abs(new - v[i]))
                v[i] = new
        for j in free_s:
            new = float(np.clip(s[j] - g[j] / (2.0 * r_n), s_lo[j], s_hi[j]))
            if new != s[j]:
                g[j] = g[j] + 2.0 * r_n * (new - s[j])
                delta = max(delta, abs(new - s[j]))
                s[j] = new
        if delta < 1e-13:
            break
    return g


def _exact_line_search(
    problem: WeightedProblem,
    cm: CostModel,
    r_n: float,
    c_lambda: float | None,
    lam: np.ndarray,
    z: np.ndarray,
    direction: np.ndarray,
) -> tuple[bool, np.ndarray, np.ndarray]:
    """Exact minimization along a ray of the piecewise-linear objective.

    The restriction to the ray is convex piecewise linear, so its minimum is
    attained at a breakpoint (a margin crossing 0 or 1 or a coefficient
    crossing 0); all of them are evaluated and only a strict improvement is
    accepted.
    """
    w = problem.weights
    u = problem.margins @ direction
    cand = [np.array([0.0])]
    nz = u != 0.0
    if np.any(nz):
        cand.append(-z[nz] / u[nz])
        cand.append((1.0 - z[nz]) / u[nz])
    dz = direction != 0.0
    if np.any(dz):
        cand.append(-lam[dz] / direction[dz])
    ts = np.unique(np.concatenate(cand))
    ts = ts[(ts >= 0.0) & np.isfinite(ts)]
    if c_lambda is not None:
        feasible = np.abs(lam[None, :] + ts[:, None] * direction[None, :]).sum(axis=1)
        ts = ts[feasible <= c_lambda + 1e-12]
    if ts.size == 0:
        return False, lam, z
    zmat = z[None, :] + ts[:, None] * u[None, :]
    pen = 2.0 * r_n * np.abs(lam[None, :] + ts[:, None] * direction[None, :]).sum(axis=1)
    vals = phi_d(zmat, cm) @ w + pen
    h0 = float(np.dot(w, phi_d(z, cm))) + 2.0 * r_n * float(np.abs(lam).sum())
    best = float(vals.min())
    if best >= h0 - 1e-15 * (1.0 + abs(h0)):
        return False, lam, z
    t = float(ts[np.argmin(vals)])
    new_lam = lam + t * direction
    return True, new_lam, z + t * u


def _coordinate_polish(
    problem: WeightedProblem,
    cm: CostModel,
    r_n: float,
    c_lambda: float | None,
    lam: np.ndarray,
    max_sweeps: int = 40,
) -> tuple[np.ndarray, int]:
    """Exact cyclic coordinate minimization of the piecewise-linear objective.

    Each one-dimensional subproblem is convex piecewise linear, so its
    minimum sits on a breakpoint (a margin crossing 0 or 1, the penalty kink
    at 0, or a ball-constraint endpoint); evaluating all of them is exact.
    """
    A, w = problem.margins, problem.weights
    lam = lam.copy()
    z = A @ lam
    sweeps = 0
    for _ in range(max_sweeps):
        sweeps += 1
        improved = False
        for j in range(problem.m):
            b = A[:, j]
            base = z - b * lam[j]
            nz = b != 0.0
            cands = [np.array([0.0, lam[j]])]
            if np.any(nz):
                cands.append(-base[nz] / b[nz])
                cands.append((1.0 - base[nz]) / b[nz])
            cand = np.unique(np.concatenate(cands))
            if c_lambda is not None:
                slack = c_lambda - (np.abs(lam).sum() - abs(lam[j]))
                slack = max(slack, 0.0)
                cand = np.clip(cand, -slack, slack)
                cand = np.unique(np.concatenate([cand, [-slack, slack]]))
            zmat = base[None, :] + cand[:, None] * b[None, :]
            vals = phi_d(zmat, cm) @ w + 2.0 * r_n * np.abs(cand)
            cur = float(np.dot(w, phi_d(z, cm))) + 2.0 * r_n * abs(lam[j])
            best = float(vals.min())
            if best < cur - 1e-15 * (1.0 + abs(cur)):
                near = vals <= best + 1e-15 * (1.0 + abs(best))
                tied = cand[near]
                t = tied[np.lexsort((tied, np.abs(tied)))][0]
                lam[j] = t
                z = base + b * t
                improved = True
        if not improved:
            break
    return lam, sweeps


def solve_weighted(
    problem: WeightedProblem, cm: CostModel, cfg: SolveConfig
) -> SolveResult:
    """Minimize ``weighted risk + 2 r_n |lam|_1`` (optionally inside an l1 ball)."""
    if cfg.r_n == 0.0 and cfg.c_lambda is None:
        raise ValueError("r_n = 0 requires an l1-ball radius; otherwise unbounded set")
    A, w = problem.margins, problem.weights
    m = problem.m
    r_n = cfg.r_n
    iterations = 0

    def objective(lam: np.ndarray) -> float:
        return weighted_objective(problem, cm, r_n, lam)

    best = np.zeros(m)
    best_val = objective(best)

    def consider(lam: np.ndarray) -> None:
        nonlocal best, best_val
        val = objective(lam)
        if val < best_val:
            best, best_val = lam.copy(), val

    # In the shrinkage regime the dual certificate proves the zero vector
    # optimal outright; skip the iterative phases entirely.
    lower0 = _dual_lower_bound(problem, cm, r_n, cfg.c_lambda, np.zeros(problem.n_rows))
    if best_val - lower0 <= cfg.tol:
        return SolveResult(
            lam_hat=Coefficients.zeros(m),
            objective=best_val,
            gap_bound=max(best_val - lower0, 0.0),
            iterations=0,
            converged=True,
            lower_bound=float(lower0),
        )

    # Phase 1: proximal subgradient with soft-thresholding and 1/sqrt(t) steps.
    radius0 = 1.0 / (2.0 * r_n) if r_n > 0.0 else cfg.c_lambda
    if cfg.c_lambda is not None:
        radius0 = min(radius0, cfg.c_lambda)
    col_scale = float(np.max(np.abs(A).T @ w)) if A.size else 0.0
    grad_scale = max(cm.a * col_scale + 2.0 * r_n, 1e-12)
    lam = np.zeros(m)
    t1 = min(250, cfg.max_iter)
    for t in range(t1):
        z = A @ lam
        g = _risk_subgradient(problem, cm, z)
        step = radius0 / (grad_scale * np.sqrt(t + 1.0))
        raw = lam - step * g
        lam = np.sign(raw) * np.maximum(np.abs(raw) - 2.0 * r_n * step, 0.0)
        if cfg.c_lambda is not None:
            lam = project_l1_ball(lam, cfg.c_lambda)
        consider(lam)
        iterations += 1

    # Phase 2: exact coordinate polish.
    lam, sweeps = _coordinate_polish(problem, cm, r_n, cfg.c_lambda, best)
    iterations += sweeps
    consider(lam)

    # Certification target: the dual bound at the incumbent when it already
    # closes the gap, else the exact LP value when the instance is small
    # enough, else the dual bound alone (honest but possibly loose).
    lower = _dual_lower_bound(problem, cm, r_n, cfg.c_lambda, A @ best)
    if best_val - lower > cfg.tol and problem.n_rows * m <= cfg.lp_cap:
        try:
            _, lower = lp_oracle_weighted(
                problem, cm, r_n, c_lambda=cfg.c_lambda, cap=cfg.lp_cap
            )
        except RuntimeError:
            pass

    # Phase 3: min-norm-subgradient descent with exact line searches, which
    # escapes coordinate-wise-optimal stalls; Polyak steps toward the
    # certified bound serve as the fallback when a search makes no progress.
    lam = best.copy()
    z = A @ lam
    since_polish = 0
    while best_val - lower > cfg.tol and iterations < cfg.max_iter:
        g = _min_norm_subgradient(problem, cm, r_n, lam, z)
        gnorm2 = float(np.dot(g, g))
        if gnorm2 <= 1e-30:
            break
        moved, lam, z = _exact_line_search(problem, cm, r_n, cfg.c_lambda, lam, z, -g)
        iterations += 1
        if moved:
            consider(lam)
            lam, sweeps = _coordinate_polish(problem, cm, r_n, cfg.c_lambda, lam)
            iterations += sweeps
            consider(lam)
            z = A @ lam
            since_polish = 0
            continue
        step = (objective(lam) - lower) / gnorm2
        lam = lam - step * g
        if cfg.c_lambda is not None:
            lam = project_l1_ball(lam, cfg.c_lambda)
        consider(lam)
        z = A @ lam
        since_polish += 1
        if since_polish >= 25:
            lam, sweeps = _coordinate_polish(problem, cm, r_n, cfg.c_lambda, lam)
            iterations += sweeps
            consider(lam)
            z = A @ lam
            since_polish = 0

    lam, sweeps = _coordinate_polish(problem, cm, r_n, cfg.c_lambda, best)
    iterations += sweeps
    consider(lam)

    if not np.isfinite(lower):
        lower = _dual_lower_bound(problem, cm, r_n, cfg.c_lambda, A @ best)
    gap = max(best_val - lower, 0.0)
    return SolveResult(
        lam_hat=Coefficients.from_array(best),
        objective=best_val,
        gap_bound=gap,
        iterations=iterations,
        converged=bool(gap <= cfg.tol),
        lower_bound=float(lower),
    )


def solve(data: Dataset, dictionary: Dictionary, cm: CostModel, cfg: SolveConfig) -> SolveResult:
    """Penalized empirical risk minimization with a certified optimality gap."""
    return solve_weighted(problem_from_dataset(data, dictionary), cm, cfg)


def solve_on_support_weighted(
    problem: WeightedProblem,
    cm: CostModel,
    support,
    c_lambda: float | None,
    cap: int = LP_CAP_DEFAULT,
) -> Coefficients:
    """Minimize the unpenalized weighted risk over coefficients vanishing off
    ``support``, subject to the l1 ball when a radius is given."""
    support = tuple(support)
    if not support:
        raise ValueError("support must be nonempty")
    if len(set(support)) != len(support):
        raise ValueError("support indices must be distinct")
    if min(support) < 0 or max(support) >= problem.m:
        raise ValueError(f"support indices out of range for M={problem.m}")
    sub = WeightedProblem(margins=problem.margins[:, support], weights=problem.weights)
    if sub.n_rows * sub.m <= cap:
        lam_sub, _ = lp_oracle_weighted(sub, cm, r_n=0.0, c_lambda=c_lambda, cap=cap)
        values = lam_sub.values
    else:
        if c_lambda is None:
            raise CapExceededError(
                "instance exceeds LP cap; unpenalized solve needs an l1 ball"
            )
        cfg = SolveConfig(r_n=0.0, c_lambda=c_lambda, lp_cap=cap)
        values = solve_weighted(sub, cm, cfg).lam_hat.values
    full = np.zeros(problem.m)
    for idx, j in enumerate(support):
        full[j] = values[idx]
    return Coefficients.from_array(full)


def solve_on_support(
    data: Dataset,
    dictionary: Dictionary,
    cm: CostModel,
    support,
    c_lambda: float | None,
    cap: int = LP_CAP_DEFAULT,
) -> Coefficients:
    """Empirical-risk minimization restricted to a candidate support."""
    problem = problem_from_dataset(data, dictionary)
    return solve_on_support_weighted(problem, cm, support, c_lambda, cap=cap)


def basic_inequality_check(
    data: Dataset,
    dictionary: Dictionary,
    cm: CostModel,
    r_n: float,
    result: SolveResult,
    probes,
    tol: float = 1e-8,
) -> bool:
    """True iff the solution beats every probe's penalized objective within tol.

    Probing the zero vector yields the usual consequence
    ``|lam_hat|_1 <= phi(0) / (2 r_n)``.
    """
    obj_hat = penalized_objective(data, dictionary, result.lam_hat, cm, r_n)
    for probe in probes:
        if obj_hat > penalized_objective(data, dictionary, probe, cm, r_n) + tol:
            return False
    return True
