"""Synthetic scenarios and Monte Carlo verification suites.

A scenario fixes a finite-support distribution, a dictionary, a cost model,
and a tuning mode, and the runners here draw seeded replicates to check the
oracle inequality and the concentration claims empirically.  Replicate RNG
streams derive from (scenario seed, sample size, replicate index), so every
record reproduces bit for bit; wall-clock timings are recorded for context
but excluded from that guarantee.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field

import numpy as np

from .losses import CostModel
from .model import Coefficients, Dictionary, PointIndicator, SignStump
from .risk import Dataset, FiniteDistribution, excess_risks
from .solver import SolveConfig, lp_oracle, solve
from .theory import (
    MarginParams,
    OracleSearchResult,
    coherence,
    concentration_tail,
    margin_constants,
    measure_mu,
    oracle_inequality_sides,
    oracle_search,
    recommended_rn,
    rhat_lower_bound,
    rhat_mean_bound,
    verify_margin_condition,
)

_INEQ_TOL = 1e-12


@dataclass(frozen=True)
class DistributionSpec:
    """Recipe for a finite-support law with a verified margin condition."""

    kind: str
    size: int
    d: float
    a_margin: float
    alpha: float
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DictionarySpec:
    kind: str  # "indicator" | "stumps"
    m: int
    c_f: float = 1.0


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete description of one verification scenario."""

    name: str
    distribution: DistributionSpec
    dictionary: DictionarySpec
    d: float
    tau: float
    sample_sizes: tuple[int, ...]
    replicates: int
    delta: float
    rn_mode: str = "recommended"  # "recommended" | "fixed" | "cv"
    rn_fixed: float | None = None
    c_lambda: float | None = None
    k_max: int = 3
    seed: int = 0
    min_pass_rate: float = 0.9

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise ValueError("replicate count must be >= 1")
        if any(n < 1 for n in self.sample_sizes):
            raise ValueError("sample sizes must be positive")
        if self.rn_mode not in ("recommended", "fixed", "cv"):
            raise ValueError(f"unknown rn_mode {self.rn_mode!r}")
        if self.rn_mode == "fixed" and (self.rn_fixed is None or self.rn_fixed <= 0.0):
            raise ValueError("fixed rn_mode needs a positive rn_fixed")
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))

    def cost_model(self) -> CostModel:
        return CostModel(d=self.d, tau=self.tau)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        doc = dict(doc)
        doc["distribution"] = DistributionSpec(**doc["distribution"])
        doc["dictionary"] = DictionarySpec(**doc["dictionary"])
        doc["sample_sizes"] = tuple(doc["sample_sizes"])
        return cls(**doc)


# ---------------------------------------------------------------------------
# Synthetic distributions
# ---------------------------------------------------------------------------


def _scalar_points(k: int) -> np.ndarray:
    return np.arange(k, dtype=float)[:, None]


def synth_distribution(spec: DistributionSpec) -> FiniteDistribution:
    """Build a finite-support law whose eta profile satisfies the requested
    margin condition; raises if the (A, alpha) pair cannot certify it."""
    k = spec.size
    d = spec.d
    params = spec.params
    if spec.kind == "sparse_realizable":
        # Few points with eta outside the abstention band; the rest sit at
        # 1/2, so the optimal rule is sparse in an indicator dictionary.
        n_plus = int(params.get("n_plus", 1))
        n_minus = int(params.get("n_minus", 1))
        eta_hi = float(params.get("eta_hi", 0.9))
        eta_lo = float(params.get("eta_lo", 0.1))
        if n_plus + n_minus > k:
            raise ValueError("more decisive points than support points")
        eta = np.full(k, 0.5)
        eta[:n_plus] = eta_hi
        eta[n_plus : n_plus + n_minus] = eta_lo
        p = np.full(k, 1.0 / k)
    elif spec.kind == "pure_noise":
        eta = np.full(k, 0.5)
        p = np.full(k, 1.0 / k)
    elif spec.kind == "two_sided":
        # Two blocks of decisive points (lo on the left, hi on the right), so
        # a single threshold function realizes the optimal rule.
        eta_hi = float(params.get("eta_hi", 0.95))
        eta_lo = float(params.get("eta_lo", 0.05))
        eta = np.where(np.arange(k) < k // 2, eta_lo, eta_hi)
        p = np.full(k, 1.0 / k)
    elif spec.kind == "uniform_grid":
        lo = float(params.get("eta_min", 0.01))
        hi = float(params.get("eta_max", 0.99))
        eta = np.linspace(lo, hi, k)
        p = np.full(k, 1.0 / k)
    elif spec.kind == "margin_ramp":
        # Mass accumulates toward the critical value d at the rate the margin
        # condition allows: atoms at distances t_i carry increments of A t^a.
        ramp = int(params.get("ramp_points", max(2, k // 2)))
        if ramp >= k:
            raise ValueError("ramp needs at least one far point")
        t_max = float(params.get("t_max", min(0.5 - d, d) * 0.9))
        near_mass = float(params.get("near_mass", 0.5))
        t = t_max * (np.arange(1, ramp + 1) / ramp)
        cdf = spec.a_margin * t**spec.alpha
        cdf = cdf / cdf[-1] * near_mass
        incr = np.diff(np.concatenate([[0.0], cdf]))
        side = np.where(np.arange(ramp) % 2 == 0, 1.0, -1.0)
        eta_near = d + side * t
        far = k - ramp
        eta_far = np.full(far, 0.5)
        p_far = np.full(far, (1.0 - near_mass) / far)
        eta = np.concatenate([eta_near, eta_far])
        p = np.concatenate([incr, p_far])
    elif spec.kind == "atom_at_critical":
        # An atom exactly at eta = d; admissible only when alpha = 0.
        eta = np.concatenate([[d], np.linspace(0.45, 0.55, k - 1)])
        p = np.full(k, 1.0 / k)
    else:
        raise ValueError(f"unknown distribution kind {spec.kind!r}")

    dist = FiniteDistribution(points=_scalar_points(k), p=p / p.sum(), eta=eta)
    cm = CostModel(d=d, tau=d)
    check = verify_margin_condition(dist, cm, spec.a_margin, spec.alpha)
    if not check.holds:
        raise ValueError(
            f"margin condition (A={spec.a_margin}, alpha={spec.alpha}) fails "
            f"at t={check.violating_t} for kind={spec.kind!r}"
        )
    return dist


def build_dictionary(spec: DictionarySpec, dist: FiniteDistribution) -> Dictionary:
    if spec.kind == "indicator":
        if spec.m > dist.size:
            raise ValueError("indicator dictionary larger than the support")
        fns = [PointIndicator(point=tuple(dist.points[j])) for j in range(spec.m)]
    elif spec.kind == "stumps":
        # Thresholds between consecutive scalar support points; the first
        # stump fires everywhere, so the set is deliberately correlated.
        fns = [SignStump(dim=0, threshold=j - 0.5) for j in range(spec.m)]
    else:
        raise ValueError(f"unknown dictionary kind {spec.kind!r}")
    return Dictionary(fns, c_f=spec.c_f, support=dist.points)


def sample_dataset(dist: FiniteDistribution, n: int, seed) -> Dataset:
    """n i.i.d. draws: support point by p, label +1 with probability eta."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    idx = rng.choice(dist.size, size=n, p=dist.p)
    y = np.where(rng.random(n) < dist.eta[idx], 1.0, -1.0)
    return Dataset(x=dist.points[idx], y=y)


# ---------------------------------------------------------------------------
# Cross-validation for the penalty level
# ---------------------------------------------------------------------------


def default_rn_grid(cm: CostModel, c_f: float, points: int = 25) -> np.ndarray:
    """Log-spaced grid on (0, 2 C_phi C_F]; zero is excluded (r_n > 0)."""
    cap = 2.0 * cm.c_phi * c_f
    return np.geomspace(1e-3 * cap, cap, points)


@dataclass(frozen=True)
class CvResult:
    r_n: float
    grid: np.ndarray
    cv_risks: np.ndarray


def cross_validate_rn(
    data: Dataset,
    dictionary: Dictionary,
    cm: CostModel,
    grid=None,
    folds: int = 5,
    seed: int = 0,
    c_lambda: float | None = None,
) -> CvResult:
    """k-fold selection of the penalty level by held-out reject risk.

    The reject loss is the risk with the real statistical meaning, so it is
    the selection criterion; ties break toward larger penalties (sparser
    models).
    """
    if folds < 2 or folds > data.n:
        raise ValueError(f"need 2 <= folds <= n, got folds={folds}, n={data.n}")
    grid = default_rn_grid(cm, dictionary.c_f) if grid is None else np.asarray(grid, float)
    if np.any(grid <= 0.0) or np.any(grid > 2.0 * cm.c_phi * dictionary.c_f + 1e-12):
        raise ValueError("grid must lie in (0, 2 C_phi C_F]")
    rng = np.random.default_rng(seed)
    order = rng.permutation(data.n)
    fold_ids = np.arange(data.n) % folds
    cv = np.zeros(len(grid))
    from .risk import empirical_reject_risk

    for f in range(folds):
        test_idx = order[fold_ids == f]
        train_idx = order[fold_ids != f]
        train = Dataset(x=data.x[train_idx], y=data.y[train_idx])
        test = Dataset(x=data.x[test_idx], y=data.y[test_idx])
        for gi, rn in enumerate(grid):
            fit = solve(train, dictionary, cm, SolveConfig(r_n=float(rn), c_lambda=c_lambda))
            cv[gi] += empirical_reject_risk(test, dictionary, fit.lam_hat, cm)
    cv /= folds
    best = cv.min()
    chosen = float(grid[cv <= best + _INEQ_TOL].max())
    return CvResult(r_n=chosen, grid=grid, cv_risks=cv)


# ---------------------------------------------------------------------------
# Monte Carlo suites
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentRecord:
    """One replicate of the oracle-inequality experiment; fully auditable."""

    scenario: str
    n: int
    replicate: int
    seed: int
    dataset_digest: str
    r_n: float
    lhs_surrogate: float
    lhs_reject: float
    rhs: float
    rhat_lb: float
    rhat_cap: float
    tuning_dominates: bool
    condition2_holds: bool
    surrogate_holds: bool
    reject_holds: bool
    excess_phi: float
    excess_reject: float
    l1_hat: float
    l0_hat: int
    l0_star: int
    converged: bool
    timing_s: float

    def comparable(self) -> tuple:
        """All fields except the wall-clock timing, for determinism checks."""
        return tuple(
            getattr(self, f.name) for f in dataclasses.fields(self) if f.name != "timing_s"
        )


@dataclass(frozen=True)
class ScenarioContext:
    """Population objects shared by every replicate at one penalty level."""

    dist: FiniteDistribution
    dictionary: Dictionary
    cm: CostModel
    mp: MarginParams
    star: OracleSearchResult
    condition2_holds: bool
    r_n: float


def _symbols_for_rn(config: ScenarioConfig, dist, dictionary, cm, r_n: float) -> ScenarioContext:
    radius = 1.0 / (2.0 * r_n)
    if config.c_lambda is not None:
        radius = min(radius, config.c_lambda)
    mp = margin_constants(
        cm,
        a_margin=config.distribution.a_margin,
        alpha=config.distribution.alpha,
        c_lambda=radius,
        c_f=dictionary.c_f,
    )
    star = oracle_search(
        dist, dictionary, cm, mp, r_n, k_max=config.k_max, c_lambda=config.c_lambda
    )
    mu = measure_mu(dist, dictionary)
    cond2 = coherence(mu, dictionary, star.lam_star.support()).condition2_holds
    return ScenarioContext(
        dist=dist,
        dictionary=dictionary,
        cm=cm,
        mp=mp,
        star=star,
        condition2_holds=cond2,
        r_n=r_n,
    )


@dataclass(frozen=True)
class OracleExperimentResult:
    config: ScenarioConfig
    records: tuple[ExperimentRecord, ...]
    summary: dict


def run_oracle_experiment(
    config: ScenarioConfig,
    sample_sizes: tuple[int, ...] | None = None,
    replicates: int | None = None,
) -> OracleExperimentResult:
    """Replicate the fit, evaluate both oracle-inequality variants, and track
    the tuning event ``r_n > rhat_lb`` per replicate."""
    sizes = tuple(sample_sizes) if sample_sizes is not None else config.sample_sizes
    reps = int(replicates) if replicates is not None else config.replicates
    dist = synth_distribution(config.distribution)
    dictionary = build_dictionary(config.dictionary, dist)
    cm = config.cost_model()

    contexts: dict[float, ScenarioContext] = {}

    def context_for(r_n: float) -> ScenarioContext:
        if r_n not in contexts:
            contexts[r_n] = _symbols_for_rn(config, dist, dictionary, cm, r_n)
        return contexts[r_n]

    records: list[ExperimentRecord] = []
    for n in sizes:
        for rep in range(reps):
            t0 = time.perf_counter()
            rep_seed = [config.seed, n, rep]
            data = sample_dataset(dist, n, seed=rep_seed)
            if config.rn_mode == "recommended":
                r_n = recommended_rn(n, dictionary.m, cm, dictionary.c_f, config.delta).rn_recommended
            elif config.rn_mode == "fixed":
                r_n = float(config.rn_fixed)
            else:
                r_n = cross_validate_rn(
                    data, dictionary, cm, seed=rep_seed + [1], c_lambda=config.c_lambda
                ).r_n
            ctx = context_for(r_n)
            fit = solve(data, dictionary, cm, SolveConfig(r_n=r_n, c_lambda=config.c_lambda))
            sides = oracle_inequality_sides(
                dist, dictionary, cm, ctx.mp, fit.lam_hat, ctx.star.lam_star, r_n, n
            )
            rhat = rhat_lower_bound(
                data,
                dist,
                dictionary,
                cm,
                ctx.star.lam_star,
                r_n,
                seed=rep_seed + [2],
                extra=(fit.lam_hat,),
            )
            report = excess_risks(dist, dictionary, fit.lam_hat, cm)
            records.append(
                ExperimentRecord(
                    scenario=config.name,
                    n=n,
                    replicate=rep,
                    seed=config.seed,
                    dataset_digest=data.digest(),
                    r_n=r_n,
                    lhs_surrogate=sides.lhs_surrogate,
                    lhs_reject=sides.lhs_reject,
                    rhs=sides.rhs,
                    rhat_lb=rhat.value,
                    rhat_cap=rhat.cap,
                    tuning_dominates=bool(r_n > rhat.value),
                    condition2_holds=ctx.condition2_holds,
                    surrogate_holds=bool(sides.lhs_surrogate <= sides.rhs + _INEQ_TOL),
                    reject_holds=bool(sides.lhs_reject <= sides.rhs + _INEQ_TOL),
                    excess_phi=report.excess_phi,
                    excess_reject=report.excess_reject,
                    l1_hat=fit.lam_hat.l1_norm(),
                    l0_hat=fit.lam_hat.l0_count(),
                    l0_star=ctx.star.lam_star.l0_count(),
                    converged=fit.converged,
                    timing_s=time.perf_counter() - t0,
                )
            )
    return OracleExperimentResult(
        config=config, records=tuple(records), summary=summarize_records(records)
    )


def summarize_records(records) -> dict:
    """Pass rates per sample size, unconditionally and on the tuning event."""
    records = list(records)
    if not records:
        raise ValueError("no records to summarize")
    out: dict = {"scenario": records[0].scenario, "total_replicates": len(records), "by_n": {}}
    for n in sorted({r.n for r in records}):
        sub = [r for r in records if r.n == n]
        on_event = [r for r in sub if r.tuning_dominates]
        entry = {
            "replicates": len(sub),
            "surrogate_pass_rate": float(np.mean([r.surrogate_holds for r in sub])),
            "reject_pass_rate": float(np.mean([r.reject_holds for r in sub])),
            "event_rate": float(np.mean([r.tuning_dominates for r in sub])),
            "condition2_rate": float(np.mean([r.condition2_holds for r in sub])),
            "median_lhs_surrogate": float(np.median([r.lhs_surrogate for r in sub])),
            "median_rhs": float(np.median([r.rhs for r in sub])),
            "median_rhat_lb": float(np.median([r.rhat_lb for r in sub])),
            "mean_r_n": float(np.mean([r.r_n for r in sub])),
            "converged_rate": float(np.mean([r.converged for r in sub])),
        }
        if on_event:
            entry["surrogate_pass_rate_on_event"] = float(
                np.mean([r.surrogate_holds for r in on_event])
            )
            entry["reject_pass_rate_on_event"] = float(
                np.mean([r.reject_holds for r in on_event])
            )
        out["by_n"][int(n)] = entry
    return out


@dataclass(frozen=True)
class ConcentrationResult:
    config: ScenarioConfig
    n: int
    r_n: float
    samples: np.ndarray
    sample_mean: float
    mean_bound: float
    mean_ok: bool
    range_ok: bool
    curve_thresholds: np.ndarray
    curve_empirical: np.ndarray
    curve_bound: np.ndarray
    curve_ok: bool


def run_concentration_experiment(
    config: ScenarioConfig,
    n: int | None = None,
    replicates: int | None = None,
) -> ConcentrationResult:
    """Distribution of the deviation-ratio lower bound across replicates,
    against the closed-form mean bound and the sub-Gaussian tail bound."""
    reps = int(replicates) if replicates is not None else config.replicates
    if reps < 100:
        raise ValueError("concentration experiment needs >= 100 replicates")
    n = int(n) if n is not None else config.sample_sizes[0]
    dist = synth_distribution(config.distribution)
    dictionary = build_dictionary(config.dictionary, dist)
    cm = config.cost_model()
    if config.rn_mode == "fixed":
        r_n = float(config.rn_fixed)
    else:
        r_n = recommended_rn(n, dictionary.m, cm, dictionary.c_f, config.delta).rn_recommended
    ctx = _symbols_for_rn(config, dist, dictionary, cm, r_n)
    samples = np.empty(reps)
    for rep in range(reps):
        rep_seed = [config.seed, n, rep]
        data = sample_dataset(dist, n, seed=rep_seed)
        samples[rep] = rhat_lower_bound(
            data, dist, dictionary, cm, ctx.star.lam_star, r_n, seed=rep_seed + [2]
        ).value
    cap = 2.0 * cm.c_phi * dictionary.c_f
    bound = rhat_mean_bound(n, dictionary.m, cm, dictionary.c_f)
    curve = concentration_tail(samples, cm, dictionary.c_f, n)
    return ConcentrationResult(
        config=config,
        n=n,
        r_n=r_n,
        samples=samples,
        sample_mean=float(samples.mean()),
        mean_bound=bound,
        mean_ok=bool(samples.mean() <= bound),
        range_ok=bool(np.all((samples >= 0.0) & (samples <= cap + 1e-9))),
        curve_thresholds=curve.thresholds,
        curve_empirical=curve.empirical,
        curve_bound=curve.bound,
        curve_ok=curve.all_ok,
    )


# ---------------------------------------------------------------------------
# Built-in scenario library
# ---------------------------------------------------------------------------


def _s1() -> ScenarioConfig:
    return ScenarioConfig(
        name="s1",
        distribution=DistributionSpec(
            kind="sparse_realizable", size=8, d=0.2, a_margin=3.0, alpha=1.0
        ),
        dictionary=DictionarySpec(kind="indicator", m=8),
        d=0.2,
        tau=0.3,
        sample_sizes=(100, 400, 1600),
        replicates=200,
        delta=0.05,
        seed=20240811,
    )


def _s2() -> ScenarioConfig:
    return ScenarioConfig(
        name="s2",
        distribution=DistributionSpec(
            kind="two_sided",
            size=8,
            d=0.25,
            a_margin=25.0,
            alpha=2.0,
            params={"eta_hi": 0.9, "eta_lo": 0.1},
        ),
        dictionary=DictionarySpec(kind="stumps", m=8),
        d=0.25,
        tau=0.35,
        sample_sizes=(200,),
        replicates=100,
        delta=0.05,
        rn_mode="fixed",
        rn_fixed=0.05,
        k_max=2,
        seed=20240812,
    )


def _s3() -> ScenarioConfig:
    return ScenarioConfig(
        name="s3",
        distribution=DistributionSpec(
            kind="pure_noise", size=4, d=0.2, a_margin=4.0, alpha=1.0
        ),
        dictionary=DictionarySpec(kind="indicator", m=4),
        d=0.2,
        tau=0.3,
        sample_sizes=(200,),
        replicates=100,
        delta=0.05,
        seed=20240813,
    )


def _s4(alpha_tag: str) -> ScenarioConfig:
    if alpha_tag == "alpha0":
        spec = DistributionSpec(
            kind="atom_at_critical", size=6, d=0.2, a_margin=1.0, alpha=0.0
        )
    elif alpha_tag == "alpha1":
        spec = DistributionSpec(
            kind="margin_ramp",
            size=8,
            d=0.2,
            a_margin=4.0,
            alpha=1.0,
            params={"ramp_points": 4, "near_mass": 0.4},
        )
    elif alpha_tag == "alphainf":
        spec = DistributionSpec(
            kind="two_sided",
            size=8,
            d=0.2,
            a_margin=45.0,
            alpha=2.0,
            params={"eta_hi": 0.95, "eta_lo": 0.05},
        )
    else:
        raise ValueError(f"unknown s4 variant {alpha_tag!r}")
    return ScenarioConfig(
        name=f"s4-{alpha_tag}",
        distribution=spec,
        dictionary=DictionarySpec(kind="indicator", m=6 if alpha_tag == "alpha0" else 8),
        d=0.2,
        tau=0.3,
        sample_sizes=(200,),
        replicates=100,
        delta=0.05,
        seed=20240814,
    )


def builtin_scenarios() -> dict[str, tuple[ScenarioConfig, ...]]:
    """Named suites: s1 orthogonal/realizable, s2 correlated stumps, s3 pure
    noise, s4 margin-exponent scan."""
    return {
        "s1": (_s1(),),
        "s2": (_s2(),),
        "s3": (_s3(),),
        "s4": (_s4("alpha0"), _s4("alpha1"), _s4("alphainf")),
    }


def get_scenario(name: str) -> tuple[ScenarioConfig, ...]:
    scenarios = builtin_scenarios()
    if name not in scenarios:
        raise KeyError(f"unknown scenario {name!r}; available: {sorted(scenarios)}")
    return scenarios[name]
