"""Exact theoretical quantities on finite-support distributions.

Everything the supporting theory promises is computable here without
sampling error: the weighting measure ``mu = eta (1 - eta) dP`` and its Gram
matrix, local mutual coherence diagnostics, margin constants, the oracle
coefficient vector balancing approximation error against a sparsity
complexity term, certified lower bounds on the normalized-deviation supremum
that the penalty level must dominate, and closed-form tuning recipes for the
penalty level.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .losses import CostModel, bayes_scores
from .model import Coefficients, Dictionary
from .risk import (
    Dataset,
    FiniteDistribution,
    bayes_phi_risk,
    excess_risks,
    population_phi_risk,
)
from .solver import (
    LP_CAP_DEFAULT,
    problem_from_dataset,
    problem_from_distribution,
    solve_on_support_weighted,
    weighted_phi_risk,
)


@dataclass(frozen=True)
class MeasureMu:
    """Per-point masses ``eta (1 - eta) p`` with the dictionary Gram matrix."""

    weights: np.ndarray
    gram: np.ndarray
    norms: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        g = np.asarray(self.gram, dtype=float)
        if np.any(w < 0.0):
            raise ValueError("measure weights must be nonnegative")
        if w.sum() > 0.25 + 1e-12:
            raise ValueError(f"total mass {w.sum()} exceeds 1/4")
        if not np.allclose(g, g.T, atol=1e-10):
            raise ValueError("Gram matrix must be symmetric")
        if np.linalg.eigvalsh(g).min() < -1e-10:
            raise ValueError("Gram matrix must be positive semidefinite")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "gram", g)
        object.__setattr__(self, "norms", np.asarray(self.norms, dtype=float))

    @property
    def c_mu(self) -> float:
        """Smallest dictionary-function norm under mu."""
        return float(self.norms.min())


def measure_mu(dist: FiniteDistribution, dictionary: Dictionary) -> MeasureMu:
    """Build the weighting measure and the exact dictionary Gram matrix."""
    w = dist.eta * (1.0 - dist.eta) * dist.p
    feats = dictionary.evaluate_matrix(dist.points)
    gram = feats.T @ (w[:, None] * feats)
    norms = np.sqrt(np.clip(np.diag(gram), 0.0, None))
    return MeasureMu(weights=w, gram=gram, norms=norms)


@dataclass(frozen=True)
class CoherenceReport:
    """Correlation diagnostics for a candidate oracle support."""

    c_mu: float
    correlations: np.ndarray
    rho_star: float
    support: tuple[int, ...]
    condition2_holds: bool


def coherence(mu: MeasureMu, dictionary: Dictionary, support) -> CoherenceReport:
    """Largest off-diagonal correlation reaching into ``support``.

    The local coherence condition requires ``12 * rho_star * |support|`` to
    stay below the smallest function norm.
    """
    support = tuple(sorted(set(int(j) for j in support)))
    if mu.c_mu <= 0.0:
        raise ValueError("degenerate measure: some dictionary norm is zero")
    if support and (min(support) < 0 or max(support) >= dictionary.m):
        raise ValueError("support indices out of range")
    denom = np.outer(mu.norms, mu.norms)
    corr = mu.gram / denom
    if np.any(np.abs(corr) > 1.0 + 1e-12):
        raise ArithmeticError("correlation magnitude exceeds 1 beyond tolerance")
    rho_star = 0.0
    for i in support:
        row = np.abs(corr[i]).copy()
        row[i] = 0.0
        rho_star = max(rho_star, float(row.max()))
    holds = 12.0 * rho_star * len(support) <= mu.c_mu
    return CoherenceReport(
        c_mu=mu.c_mu,
        correlations=corr,
        rho_star=rho_star,
        support=support,
        condition2_holds=holds,
    )


@dataclass(frozen=True)
class MarginParams:
    """Margin-condition constants and the derived link constants.

    ``beta = alpha / (2 + 2 alpha)`` and ``c_delta_mu`` tie the mu-distance
    between a discriminant and the optimal rule to a power of the surrogate
    excess risk, for coefficient vectors inside the l1 ball of radius
    ``c_lambda``.
    """

    a_margin: float
    alpha: float
    beta: float
    c_delta_mu: float
    c_lambda: float
    c_f: float

    def __post_init__(self) -> None:
        if self.a_margin < 1.0:
            raise ValueError("margin constant A must be >= 1")
        if self.alpha < 0.0:
            raise ValueError("margin exponent alpha must be >= 0")
        if not 0.0 <= self.beta < 0.5:
            raise ValueError(f"beta={self.beta} outside [0, 1/2)")
        if abs(self.beta - self.alpha / (2.0 + 2.0 * self.alpha)) > 1e-12:
            raise ValueError("beta inconsistent with alpha")
        if self.c_delta_mu <= 0.0:
            raise ValueError("c_delta_mu must be positive")


def margin_constants(
    cm: CostModel, a_margin: float, alpha: float, c_lambda: float, c_f: float
) -> MarginParams:
    """Closed-form link constants from the margin condition parameters."""
    if a_margin < 1.0:
        raise ValueError("margin constant A must be >= 1")
    if alpha < 0.0 or not math.isfinite(alpha):
        raise ValueError("alpha must be finite and >= 0")
    if c_lambda <= 0.0 or c_f <= 0.0:
        raise ValueError("c_lambda and c_f must be positive")
    beta = alpha / (2.0 + 2.0 * alpha)
    prod = 1.0 + c_lambda * c_f
    c_delta_mu = (
        prod ** ((1.0 + alpha) / (2.0 + 2.0 * alpha))
        * (2.0 * cm.d) ** (alpha / (2.0 + 2.0 * alpha))
        * (4.0 * a_margin * prod) ** (1.0 / (2.0 + 2.0 * alpha))
    )
    return MarginParams(
        a_margin=a_margin,
        alpha=alpha,
        beta=beta,
        c_delta_mu=c_delta_mu,
        c_lambda=c_lambda,
        c_f=c_f,
    )


def rate_exponent(alpha: float) -> float:
    """Exponent (1 + alpha)/(2 + alpha) of the sparsity complexity term."""
    if alpha < 0.0:
        raise ValueError("alpha must be >= 0")
    return (1.0 + alpha) / (2.0 + alpha)


@dataclass(frozen=True)
class MarginCheck:
    holds: bool
    violating_t: float | None
    a_margin: float
    alpha: float


def verify_margin_condition(
    dist: FiniteDistribution,
    cm: CostModel,
    a_margin: float,
    alpha: float,
    t_grid=None,
) -> MarginCheck:
    """Check ``P{|eta - c| <= t} <= A t^alpha`` at both critical values c.

    With no explicit grid the check runs at every jump location of the two
    exact tail functions, which certifies the inequality for all t > 0 on a
    finite support (both sides are monotone between jumps).
    """
    crits = (cm.d, 1.0 - cm.d)
    if t_grid is None:
        t_grid = np.array(sorted({abs(e - c) for e in dist.eta for c in crits}))
    else:
        t_grid = np.asarray(t_grid, dtype=float)
        if np.any(t_grid < 0.0):
            raise ValueError("t grid must be nonnegative")
    for t in t_grid:
        bound = a_margin * float(t) ** alpha
        for c in crits:
            mass = float(dist.p[np.abs(dist.eta - c) <= t].sum())
            if mass > bound + 1e-12:
                return MarginCheck(
                    holds=False, violating_t=float(t), a_margin=a_margin, alpha=alpha
                )
    return MarginCheck(holds=True, violating_t=None, a_margin=a_margin, alpha=alpha)


def mu_distance_to_bayes(
    dist: FiniteDistribution, dictionary: Dictionary, lam: Coefficients, cm: CostModel
) -> float:
    """Exact L2(mu) distance between the discriminant and the optimal rule."""
    w = dist.eta * (1.0 - dist.eta) * dist.p
    scores = dictionary.evaluate_matrix(dist.points) @ lam.as_array()
    f0 = bayes_scores(dist.eta, cm)
    return float(np.sqrt(np.dot(w, (scores - f0) ** 2)))


@dataclass(frozen=True)
class Condition1Report:
    holds: bool
    distance: float
    excess: float
    bound: float
    rho_eta_mean: float
    eq20_holds: bool | None
    eq20_bound: float | None


def condition1_check(
    dist: FiniteDistribution,
    dictionary: Dictionary,
    lam: Coefficients,
    cm: CostModel,
    mp: MarginParams,
) -> Condition1Report:
    """Verify the distance-to-excess link and its underlying lower bound.

    Checks ``||f_lam - f_0||_mu <= c_delta_mu * excess^beta`` and, for
    alpha > 0, the pointwise-weighted lower bound on the excess risk whose
    weights drop to eta (resp. 1 - eta) where the discriminant overshoots an
    already-certain region.  The latter is skipped at alpha = 0, where its
    exponent 1/alpha is undefined.
    """
    if lam.l1_norm() > mp.c_lambda + 1e-9:
        raise ValueError(
            f"|lam|_1 = {lam.l1_norm()} exceeds the ball radius {mp.c_lambda}"
        )
    distance = mu_distance_to_bayes(dist, dictionary, lam, cm)
    excess = max(population_phi_risk(dist, dictionary, lam, cm) - bayes_phi_risk(dist, cm), 0.0)
    bound = mp.c_delta_mu * excess**mp.beta
    holds = distance <= bound + 1e-9

    scores = dictionary.evaluate_matrix(dist.points) @ lam.as_array()
    f0 = bayes_scores(dist.eta, cm)
    gap = np.abs(scores - f0)
    weight = np.ones(dist.size)
    low = (dist.eta < cm.d) & (scores < -1.0)
    high = (dist.eta > 1.0 - cm.d) & (scores > 1.0)
    weight[low] = dist.eta[low]
    weight[high] = 1.0 - dist.eta[high]
    rho_eta_mean = float(np.dot(dist.p, weight * gap))

    eq20_holds: bool | None = None
    eq20_bound: float | None = None
    if mp.alpha > 0.0:
        denom = 2.0 * cm.d * (4.0 * mp.a_margin * (1.0 + lam.l1_norm() * mp.c_f)) ** (
            1.0 / mp.alpha
        )
        eq20_bound = rho_eta_mean ** ((1.0 + mp.alpha) / mp.alpha) / denom
        eq20_holds = excess >= eq20_bound - 1e-12
    return Condition1Report(
        holds=holds,
        distance=distance,
        excess=excess,
        bound=bound,
        rho_eta_mean=rho_eta_mean,
        eq20_holds=eq20_holds,
        eq20_bound=eq20_bound,
    )


def complexity_term(mp: MarginParams, c_mu: float, r_n: float, l0: int) -> float:
    """Sparsity complexity ``2 (8 C / c_mu)^{1/(1-b)} (r_n^2 l0)^{1/(2-2b)}``."""
    if c_mu <= 0.0:
        raise ValueError("c_mu must be positive")
    if l0 == 0 or r_n == 0.0:
        return 0.0
    b = mp.beta
    return 2.0 * (8.0 * mp.c_delta_mu / c_mu) ** (1.0 / (1.0 - b)) * (
        r_n**2 * l0
    ) ** (1.0 / (2.0 - 2.0 * b))


def oracle_criterion(
    dist: FiniteDistribution,
    dictionary: Dictionary,
    lam: Coefficients,
    cm: CostModel,
    mp: MarginParams,
    c_mu: float,
    r_n: float,
    zero_tol: float = 1e-9,
) -> float:
    """Oracle objective: three times the excess risk plus the complexity term."""
    excess = max(population_phi_risk(dist, dictionary, lam, cm) - bayes_phi_risk(dist, cm), 0.0)
    return 3.0 * excess + complexity_term(mp, c_mu, r_n, lam.l0_count(zero_tol))


@dataclass(frozen=True)
class OracleSearchResult:
    lam_star: Coefficients
    support: tuple[int, ...]
    criterion: float
    excess: float


def oracle_search(
    dist: FiniteDistribution,
    dictionary: Dictionary,
    cm: CostModel,
    mp: MarginParams,
    r_n: float,
    k_max: int,
    c_lambda: float | None = None,
    max_supports: int = 4096,
    lp_cap: int = LP_CAP_DEFAULT,
) -> OracleSearchResult:
    """Exhaustive oracle computation over supports of size at most ``k_max``.

    For each candidate support the exact population excess risk is minimized
    (weighted-row reduction of the finite distribution) inside the effective
    l1 ball, and the oracle criterion is evaluated with the minimizer's
    nonzero count.  Ties go to the first support in (size, lexicographic)
    order, so results are deterministic.
    """
    m = dictionary.m
    total = sum(math.comb(m, k) for k in range(min(k_max, m) + 1))
    if total > max_supports:
        raise ValueError(f"enumeration budget exceeded: {total} supports > {max_supports}")
    radius: float | None = None
    if r_n > 0.0:
        radius = 1.0 / (2.0 * r_n)
    if c_lambda is not None:
        radius = c_lambda if radius is None else min(radius, c_lambda)

    problem = problem_from_distribution(dist, dictionary)
    b_phi = bayes_phi_risk(dist, cm)
    mu = measure_mu(dist, dictionary)

    best: OracleSearchResult | None = None
    for k in range(min(k_max, m) + 1):
        for support in itertools.combinations(range(m), k):
            if k == 0:
                lam = Coefficients.zeros(m)
            else:
                lam = solve_on_support_weighted(problem, cm, support, radius, cap=lp_cap)
            excess = max(weighted_phi_risk(problem, cm, lam.as_array()) - b_phi, 0.0)
            crit = 3.0 * excess + complexity_term(mp, mu.c_mu, r_n, lam.l0_count())
            if best is None or crit < best.criterion - 1e-12:
                best = OracleSearchResult(
                    lam_star=lam, support=support, criterion=crit, excess=excess
                )
    assert best is not None
    return best


@dataclass(frozen=True)
class RhatLowerBound:
    """Certified lower bound on the normalized-deviation supremum."""

    value: float
    cap: float

    def __post_init__(self) -> None:
        if self.value < 0.0 or self.value > self.cap + 1e-9:
            raise ArithmeticError(
                f"deviation ratio {self.value} outside [0, {self.cap}]"
            )


def rhat_lower_bound(
    data: Dataset,
    dist: FiniteDistribution,
    dictionary: Dictionary,
    cm: CostModel,
    lam_star: Coefficients,
    r_n: float,
    n_candidates: int = 64,
    seed: int = 0,
    extra: tuple[Coefficients, ...] = (),
    structured: bool = True,
) -> RhatLowerBound:
    """Evaluate the deviation ratio at structured candidates and return the max.

    The supremum runs over the full l1 ball of radius ``1/(2 r_n)``, which is
    not exactly computable; evaluating at the oracle vector's perturbations,
    the ball vertices (``structured=True``), seeded random interior points,
    and any supplied solver iterates yields a certified lower bound.  The
    universal cap ``2 C_phi C_F`` is returned alongside.
    """
    if r_n <= 0.0:
        raise ValueError("r_n must be positive")
    m = dictionary.m
    radius = 1.0 / (2.0 * r_n)
    eps_n = 1.0 / (data.n * r_n)
    emp = problem_from_dataset(data, dictionary)
    pop = problem_from_distribution(dist, dictionary)
    star = lam_star.as_array()

    def centered(lam: np.ndarray) -> float:
        return weighted_phi_risk(emp, cm, lam) - weighted_phi_risk(pop, cm, lam)

    def clip_ball(lam: np.ndarray) -> np.ndarray:
        norm = float(np.abs(lam).sum())
        return lam if norm <= radius else lam * (radius / norm)

    candidates: list[np.ndarray] = [star.copy()]
    if structured:
        for j in range(m):
            for sign in (1.0, -1.0):
                vertex = np.zeros(m)
                vertex[j] = sign * radius
                candidates.append(vertex)
            for delta in (radius / 4.0, radius / 16.0):
                for sign in (1.0, -1.0):
                    pert = star.copy()
                    pert[j] += sign * delta
                    candidates.append(clip_ball(pert))
    rng = np.random.default_rng(seed)
    for _ in range(n_candidates):
        mags = rng.dirichlet(np.ones(m))
        signs = rng.choice((-1.0, 1.0), size=m)
        scale = rng.uniform(0.0, 1.0)
        candidates.append(signs * mags * radius * scale)
    candidates.extend(clip_ball(c.as_array()) for c in extra)

    base = centered(star)
    value = 0.0
    for lam in candidates:
        num = abs(centered(lam) - base)
        den = float(np.abs(lam - star).sum()) + eps_n
        value = max(value, num / den)
    return RhatLowerBound(value=value, cap=2.0 * cm.c_phi * dictionary.c_f)


def j_n(n: int) -> int:
    """Smallest integer J with 2**J >= n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return (n - 1).bit_length()


def rhat_mean_bound(n: int, m: int, cm: CostModel, c_f: float) -> float:
    """Closed-form bound on the mean of the deviation supremum.

    ``(7 C_phi C_F / sqrt(n)) sqrt(2 log(2 (M v n))) + J_n C_phi C_F /
    (2 (M v n)^2)`` with ``J_n`` the smallest integer power of two reaching n.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    c = cm.c_phi * c_f
    big = max(m, n)
    first = 7.0 * c / math.sqrt(n) * math.sqrt(2.0 * math.log(2.0 * big))
    second = j_n(n) * c / (2.0 * big**2)
    return first + second


@dataclass(frozen=True)
class TuningReport:
    """Everything needed to audit a penalty-level choice."""

    rn_recommended: float
    eps_n: float
    mean_bound: float
    rhat_cap: float
    j_n: int
    delta: float
    n: int
    m: int
    rhat_lb: float | None = None

    def __post_init__(self) -> None:
        if self.rn_recommended <= 0.0 or self.eps_n <= 0.0:
            raise ValueError("recommended r_n and eps_n must be positive")
        if self.rhat_lb is not None and not (
            -1e-12 <= self.rhat_lb <= self.rhat_cap + 1e-9
        ):
            raise ValueError(f"rhat_lb={self.rhat_lb} outside [0, {self.rhat_cap}]")


def recommended_rn(n: int, m: int, cm: CostModel, c_f: float, delta: float) -> TuningReport:
    """Penalty level: mean bound plus the concentration deviation term.

    Taking ``r_n = mean_bound + C_phi C_F sqrt(2 log(1/delta) / n)`` makes
    the event ``r_n >= rhat`` hold with probability at least ``1 - delta``.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta={delta} must lie strictly in (0, 1)")
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    mean_bound = rhat_mean_bound(n, m, cm, c_f)
    c = cm.c_phi * c_f
    rn = mean_bound + c * math.sqrt(2.0 * math.log(1.0 / delta) / n)
    return TuningReport(
        rn_recommended=rn,
        eps_n=1.0 / (n * rn),
        mean_bound=mean_bound,
        rhat_cap=2.0 * c,
        j_n=j_n(n),
        delta=delta,
        n=n,
        m=m,
    )


@dataclass(frozen=True)
class InequalitySides:
    """Both sides of the oracle inequality, for empirical checking.

    ``lhs_surrogate`` uses the surrogate excess of the estimate;
    ``lhs_reject`` substitutes the reject-loss excess, which the surrogate
    excess dominates in the enforced cost regime.
    """

    lhs_surrogate: float
    lhs_reject: float
    rhs: float
    l1_distance: float
    excess_star: float
    complexity: float


def oracle_inequality_sides(
    dist: FiniteDistribution,
    dictionary: Dictionary,
    cm: CostModel,
    mp: MarginParams,
    lam_hat: Coefficients,
    lam_star: Coefficients,
    r_n: float,
    n: int,
) -> InequalitySides:
    """Evaluate lhs = excess(lam_hat) + r_n |lam_hat - lam_star|_1 against
    rhs = 3 excess(lam_star) + complexity + 2 phi(0)/n, exactly."""
    if n < 1:
        raise ValueError("n must be >= 1")
    report = excess_risks(dist, dictionary, lam_hat, cm)
    excess_star = max(
        population_phi_risk(dist, dictionary, lam_star, cm) - report.bayes_phi, 0.0
    )
    c_mu = measure_mu(dist, dictionary).c_mu
    comp = complexity_term(mp, c_mu, r_n, lam_star.l0_count())
    l1_dist = float(np.abs(lam_hat.as_array() - lam_star.as_array()).sum())
    rhs = 3.0 * excess_star + comp + 2.0 / n
    return InequalitySides(
        lhs_surrogate=report.excess_phi + r_n * l1_dist,
        lhs_reject=report.excess_reject + r_n * l1_dist,
        rhs=rhs,
        l1_distance=l1_dist,
        excess_star=excess_star,
        complexity=comp,
    )


@dataclass(frozen=True)
class ConcentrationCurve:
    """Empirical exceedance frequencies against the sub-Gaussian tail bound."""

    thresholds: np.ndarray
    empirical: np.ndarray
    bound: np.ndarray
    slack: np.ndarray
    ok: np.ndarray

    @property
    def all_ok(self) -> bool:
        return bool(np.all(self.ok))


def concentration_tail(
    rhat_samples,
    cm: CostModel,
    c_f: float,
    n: int,
    thresholds=None,
) -> ConcentrationCurve:
    """Compare centered-sample tails with ``exp(-n t^2 / (2 C_phi^2 C_F^2))``.

    Flags any threshold where the empirical exceedance frequency beats the
    bound by more than three binomial standard deviations.
    """
    samples = np.asarray(rhat_samples, dtype=float)
    if samples.size < 100:
        raise ValueError(f"need >= 100 samples, got {samples.size}")
    c = cm.c_phi * c_f
    cap = 2.0 * c
    if thresholds is None:
        thresholds = np.unique(
            np.concatenate([np.linspace(0.0, cap, 25)[1:], np.linspace(0.0, cap / 8.0, 9)[1:]])
        )
    thresholds = np.asarray(thresholds, dtype=float)
    centered = samples - samples.mean()
    emp = np.array([float(np.mean(centered >= t)) for t in thresholds])
    bound = np.exp(-0.5 * n * thresholds**2 / c**2)
    slack = 3.0 * np.sqrt(bound * (1.0 - bound) / samples.size)
    ok = emp <= bound + slack
    return ConcentrationCurve(
        thresholds=thresholds, empirical=emp, bound=bound, slack=slack, ok=ok
    )
