"""Acceptance suite: every shipped guarantee checked at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -s`` to see one pass/fail line per
criterion.  Everything is seeded and deterministic.
"""

import math

import numpy as np

from rejopt.experiments import get_scenario, run_concentration_experiment, run_oracle_experiment
from rejopt.losses import (
    CostModel,
    bayes_score,
    calibration_check,
    conditional_phi_risk,
    phi_d,
    reject_loss,
)
from rejopt.model import Coefficients, Dictionary, PointIndicator, SignStump
from rejopt.risk import (
    FiniteDistribution,
    bayes_phi_risk,
    excess_risks,
    population_phi_risk_of_scores,
)
from rejopt.solver import SolveConfig, lp_oracle, solve
from rejopt.theory import margin_constants, rate_exponent, recommended_rn


def _criterion(name: str, ok: bool, detail: str = "") -> None:
    suffix = f" ({detail})" if detail else ""
    line = f"{name}: {'PASS' if ok else 'FAIL'}{suffix}"
    print(line)
    assert ok, line


def _random_cost_model(rng) -> CostModel:
    d = float(rng.uniform(0.05, 0.5))
    lo, hi = d, 1.0 - d
    tau = float(rng.uniform(lo + 1e-6 * (hi - lo + 1.0), hi - 1e-6 * (hi - lo + 1.0)))
    return CostModel(d=d, tau=tau)


def _random_distribution(rng, k_max=6):
    k = int(rng.integers(2, k_max + 1))
    pts = np.arange(k, dtype=float)[:, None]
    return FiniteDistribution(
        points=pts, p=rng.dirichlet(np.ones(k) * 2.0), eta=rng.uniform(0.0, 1.0, size=k)
    )


def _indicator_dictionary(dist):
    return Dictionary(
        [PointIndicator(point=tuple(x)) for x in dist.points], c_f=1.0, support=dist.points
    )


def _random_stump_instance(rng):
    from rejopt.risk import Dataset

    n = int(rng.integers(10, 41))
    m = int(rng.integers(2, 9))
    pts = rng.normal(size=(n, 2))
    fns = [SignStump(dim=int(rng.integers(0, 2)), threshold=float(t)) for t in rng.normal(size=m)]
    dic = Dictionary(fns, c_f=1.0)
    base = dic.evaluate_matrix(pts)[:, 0]
    y = np.where(rng.random(n) < 0.85, base, -base)
    data = Dataset(x=pts, y=np.where(y >= 0, 1.0, -1.0))
    d = float(rng.uniform(0.05, 0.5))
    return data, dic, CostModel(d=d, tau=d)


def test_a1_dominance():
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(20):
        cm = _random_cost_model(rng)
        eps = 1e-6
        breaks = np.array([-cm.tau - eps, -cm.tau, 0.0, cm.tau, cm.tau + eps, 1.0])
        grid = np.unique(np.concatenate([np.linspace(-5.0, 5.0, 10_000), breaks]))
        gap = phi_d(grid, cm) - reject_loss(grid, cm)
        worst = min(worst, float(gap.min()))
        if not np.all(gap >= 0.0):
            break
    _criterion("A1 dominance (surrogate >= reject loss, exact)", worst >= 0.0,
               f"min gap {worst:.1e}")


def test_a2_calibration():
    rng = np.random.default_rng(102)
    failures = 0
    checked = 0
    while checked < 1000:
        d = float(rng.uniform(0.05, 0.5))
        eta = float(rng.uniform(0.0, 1.0))
        if min(abs(eta - d), abs(eta - (1.0 - d))) <= 1e-3:
            continue
        checked += 1
        cm = CostModel(d=d, tau=d)
        minimizers = calibration_check(eta, cm, grid_step=1e-3)
        target = bayes_score(eta, cm)
        if np.min(np.abs(minimizers - target)) > 5e-4 + 1e-12:
            failures += 1
    _criterion("A2 calibration (grid minimizers contain the optimal score)",
               failures == 0, f"{checked} draws, {failures} failures")


def test_a3_excess_risk_domination():
    rng = np.random.default_rng(103)
    worst = -math.inf
    for _ in range(500):
        dist = _random_distribution(rng)
        dic = _indicator_dictionary(dist)
        cm = _random_cost_model(rng)
        lam = Coefficients.from_array(rng.normal(size=len(dic)) * rng.uniform(0.0, 2.0))
        report = excess_risks(dist, dic, lam, cm)
        worst = max(worst, report.excess_reject - report.excess_phi)
    _criterion("A3 excess-risk domination (reject <= surrogate + 1e-12)",
               worst <= 1e-12, f"max violation {worst:.1e}")


def test_a4_bayes_optimality():
    rng = np.random.default_rng(104)
    grid = np.linspace(-2.0, 2.0, 4001)
    beat_random = True
    grid_gap = 0.0
    for _ in range(100):
        dist = _random_distribution(rng)
        d = float(rng.uniform(0.05, 0.5))
        cm = CostModel(d=d, tau=d)
        bayes = bayes_phi_risk(dist, cm)
        draws = rng.uniform(-2.0, 2.0, size=(1000, dist.size))
        risks = [population_phi_risk_of_scores(dist, s, cm) for s in draws]
        if bayes > min(risks) + 1e-12:
            beat_random = False
        per_point = [float(np.min(conditional_phi_risk(grid, eta, cm))) for eta in dist.eta]
        grid_gap = max(grid_gap, abs(bayes - float(np.dot(dist.p, per_point))))
    _criterion("A4 optimal-rule risk (beats 1000 random assignments, matches grid min)",
               beat_random and grid_gap <= 1e-3, f"max grid gap {grid_gap:.2e}")


def test_a5_solver_certification():
    rng = np.random.default_rng(105)
    worst_gap = 0.0
    worst_ball = 0.0
    for _ in range(50):
        data, dic, cm = _random_stump_instance(rng)
        r_n = float(rng.uniform(0.002, 0.2))
        _, oracle_obj = lp_oracle(data, dic, cm, r_n=r_n)
        res = solve(data, dic, cm, SolveConfig(r_n=r_n))
        worst_gap = max(worst_gap, abs(res.objective - oracle_obj))
        worst_ball = max(worst_ball, res.lam_hat.l1_norm() - 1.0 / (2.0 * r_n))
    _criterion("A5 solver certification (matches LP oracle to 1e-6, stays in the l1 ball)",
               worst_gap <= 1e-6 and worst_ball <= 1e-9,
               f"max |solve-oracle| {worst_gap:.1e}, max ball excess {worst_ball:.1e}")


def test_a6_shrinkage_threshold():
    rng = np.random.default_rng(106)
    ok = True
    for _ in range(20):
        data, dic, cm = _random_stump_instance(rng)
        r_n = 1.01 * cm.c_phi * dic.c_f / 2.0
        lam, obj = lp_oracle(data, dic, cm, r_n=r_n)
        ok = ok and lam.l1_norm() <= 1e-9 and abs(obj - 1.0) <= 1e-9
    _criterion("A6 shrinkage threshold (large penalty yields the zero vector)", ok)


def test_a7_oracle_inequality():
    result = run_oracle_experiment(get_scenario("s1")[0], sample_sizes=(400,), replicates=200)
    entry = result.summary["by_n"][400]
    ok = entry["surrogate_pass_rate"] >= 0.90 and entry["reject_pass_rate"] >= 0.90
    _criterion("A7 oracle inequality (both variants hold in >= 90% of 200 replicates)",
               ok,
               f"surrogate {entry['surrogate_pass_rate']:.3f}, "
               f"reject {entry['reject_pass_rate']:.3f}, event {entry['event_rate']:.3f}")


def test_a8_concentration_and_mean_bound():
    result = run_concentration_experiment(get_scenario("s1")[0], n=200, replicates=500)
    ok = result.range_ok and result.mean_ok and result.curve_ok
    _criterion("A8 concentration (range, mean bound, sub-Gaussian tail + 3-sigma slack)",
               ok,
               f"mean {result.sample_mean:.4f} <= bound {result.mean_bound:.4f}, "
               f"range_ok {result.range_ok}, tail_ok {result.curve_ok}")


def test_a9_rate_sanity():
    cm = CostModel(d=0.2, tau=0.3)
    ns = [100, 400, 1600]
    rns = [recommended_rn(n, 16, cm, 1.0, 0.05).rn_recommended for n in ns]
    decreasing = all(a > b for a, b in zip(rns, rns[1:]))
    ratio_ok = True
    for (n1, r1), (n2, r2) in zip(zip(ns, rns), zip(ns[1:], rns[1:])):
        target = math.sqrt(math.log(n1) / n1) / math.sqrt(math.log(n2) / n2)
        ratio_ok = ratio_ok and abs((r1 / r2) / target - 1.0) <= 0.20
    result = run_oracle_experiment(get_scenario("s1")[0], sample_sizes=tuple(ns), replicates=10)
    medians = [result.summary["by_n"][n]["median_lhs_surrogate"] for n in ns]
    median_ok = all(a >= b - 1e-12 for a, b in zip(medians, medians[1:]))
    _criterion("A9 rate sanity (tuned penalty tracks sqrt(log n / n); median lhs non-increasing)",
               decreasing and ratio_ok and median_ok,
               f"r_n {['%.3f' % v for v in rns]}, medians {['%.4f' % v for v in medians]}")


def test_a10_exponent_identities():
    rng = np.random.default_rng(110)
    cm = CostModel(d=0.3, tau=0.4)
    worst = 0.0
    for alpha in rng.uniform(0.0, 50.0, size=200):
        mp = margin_constants(cm, 1.0, float(alpha), 1.0, 1.0)
        b = mp.beta
        worst = max(
            worst,
            abs(1.0 / (1.0 - b) - (2.0 + 2.0 * alpha) / (2.0 + alpha)),
            abs(1.0 / (2.0 - 2.0 * b) - (1.0 + alpha) / (2.0 + alpha)),
        )
    exps = [rate_exponent(a) for a in np.linspace(0.0, 80.0, 400)]
    monotone = bool(np.all(np.diff(exps) > 0.0))
    _criterion("A10 exponent identities (to 1e-12) and rate-exponent monotonicity",
               worst <= 1e-12 and monotone, f"max identity error {worst:.1e}")
