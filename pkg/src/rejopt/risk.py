"""Empirical and exact population risks for both losses.

Population quantities are computed exactly on finite-support distributions
(no sampling), so the inequalities connecting reject-loss and surrogate
excess risks can be checked without Monte Carlo noise.
"""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass

import numpy as np

from .losses import CostModel, bayes_scores, conditional_phi_risk, phi_d, reject_loss
from .model import Coefficients, Dictionary


@dataclass(frozen=True)
class Dataset:
    """Labeled sample: feature rows ``x`` (n, dim) with labels ``y`` in {-1, +1}."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        if x.shape[0] != y.shape[0]:
            raise ValueError(f"{x.shape[0]} feature rows but {y.shape[0]} labels")
        if x.shape[0] < 1:
            raise ValueError("dataset must contain at least one row")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def to_csv(self, header: bool = False) -> str:
        """Comma-separated rows: features..., trailing label column."""
        buf = io.StringIO()
        if header:
            cols = [f"x{i}" for i in range(self.dim)] + ["y"]
            buf.write(",".join(cols) + "\n")
        for xi, yi in zip(self.x, self.y):
            buf.write(",".join(repr(float(v)) for v in xi) + f",{int(yi)}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Dataset":
        rows = _parse_numeric_csv(text)
        if rows.shape[1] < 2:
            raise ValueError("dataset rows need at least one feature and a label")
        return cls(x=rows[:, :-1], y=rows[:, -1])

    def save(self, path, header: bool = False) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv(header=header))

    @classmethod
    def load(cls, path) -> "Dataset":
        with open(path, encoding="utf-8") as fh:
            return cls.from_csv(fh.read())

    def digest(self) -> str:
        """Stable content hash used as an audit handle in experiment records."""
        return hashlib.sha256(self.to_csv().encode()).hexdigest()[:16]


@dataclass(frozen=True)
class FiniteDistribution:
    """Exact data-generating law on finitely many support points.

    ``points`` (K, dim) carry probabilities ``p`` (summing to one) and
    conditional probabilities ``eta`` of the +1 label.
    """

    points: np.ndarray
    p: np.ndarray
    eta: np.ndarray

    def __post_init__(self) -> None:
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        p = np.asarray(self.p, dtype=float).ravel()
        eta = np.asarray(self.eta, dtype=float).ravel()
        if not (pts.shape[0] == p.shape[0] == eta.shape[0]):
            raise ValueError("points, p, eta must have equal length")
        if np.any(p <= 0.0):
            raise ValueError("all support probabilities must be positive")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {p.sum()}, not 1")
        if np.any(eta < 0.0) or np.any(eta > 1.0):
            raise ValueError("eta values must lie in [0, 1]")
        if len({tuple(row) for row in pts}) != pts.shape[0]:
            raise ValueError("support points must be distinct")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "eta", eta)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def to_csv(self, header: bool = False) -> str:
        """Comma-separated rows: features..., p, eta."""
        buf = io.StringIO()
        if header:
            cols = [f"x{i}" for i in range(self.dim)] + ["p", "eta"]
            buf.write(",".join(cols) + "\n")
        for xi, pi, ei in zip(self.points, self.p, self.eta):
            feats = ",".join(repr(float(v)) for v in xi)
            buf.write(f"{feats},{float(pi)!r},{float(ei)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "FiniteDistribution":
        rows = _parse_numeric_csv(text)
        if rows.shape[1] < 3:
            raise ValueError("distribution rows need features, p and eta columns")
        return cls(points=rows[:, :-2], p=rows[:, -2], eta=rows[:, -1])

    def save(self, path, header: bool = False) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_csv(header=header))

    @classmethod
    def load(cls, path) -> "FiniteDistribution":
        with open(path, encoding="utf-8") as fh:
            return cls.from_csv(fh.read())


def _parse_numeric_csv(text: str) -> np.ndarray:
    """Parse comma-separated numeric rows; a non-numeric first token marks a header."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty document")
    first = lines[0].split(",")[0].strip()
    try:
        float(first)
    except ValueError:
        lines = lines[1:]
        if not lines:
            raise ValueError("document contains only a header") from None
    rows = [[float(tok) for tok in ln.split(",")] for ln in lines]
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"inconsistent column counts: {sorted(widths)}")
    return np.array(rows, dtype=float)


@dataclass(frozen=True)
class RiskReport:
    """Risks of a discriminant next to the corresponding optimal risks."""

    phi_risk: float
    reject_risk: float
    bayes_phi: float
    bayes_reject: float
    excess_phi: float
    excess_reject: float


_EXCESS_TOL = 1e-12


def _clamp_excess(value: float, label: str) -> float:
    if value < -_EXCESS_TOL:
        raise ArithmeticError(f"{label} excess risk is negative beyond tolerance: {value}")
    return max(value, 0.0)


def margins(data: Dataset, dictionary: Dictionary, lam: Coefficients) -> np.ndarray:
    """Per-row margins y_i * f_lam(x_i)."""
    if len(lam) != dictionary.m:
        raise ValueError("coefficient length does not match dictionary size")
    scores = dictionary.evaluate_matrix(data.x) @ lam.as_array()
    return data.y * scores


def empirical_phi_risk(
    data: Dataset, dictionary: Dictionary, lam: Coefficients, cm: CostModel
) -> float:
    """Mean surrogate loss over the sample."""
    return float(np.mean(phi_d(margins(data, dictionary, lam), cm)))


def empirical_reject_risk(
    data: Dataset, dictionary: Dictionary, lam: Coefficients, cm: CostModel
) -> float:
    """Mean reject loss over the sample."""
    return float(np.mean(reject_loss(margins(data, dictionary, lam), cm)))


def _support_scores(
    dist: FiniteDistribution, dictionary: Dictionary, lam: Coefficients
) -> np.ndarray:
    if len(lam) != dictionary.m:
        raise ValueError("coefficient length does not match dictionary size")
    return dictionary.evaluate_matrix(dist.points) @ lam.as_array()


def population_phi_risk_of_scores(
    dist: FiniteDistribution, scores: np.ndarray, cm: CostModel
) -> float:
    """Exact surrogate risk of an arbitrary score assignment on the support."""
    scores = np.asarray(scores, dtype=float)
    per_point = dist.eta * phi_d(scores, cm) + (1.0 - dist.eta) * phi_d(-scores, cm)
    return float(np.dot(dist.p, per_point))


def population_reject_risk_of_scores(
    dist: FiniteDistribution, scores: np.ndarray, cm: CostModel
) -> float:
    """Exact reject risk of an arbitrary score assignment on the support."""
    scores = np.asarray(scores, dtype=float)
    per_point = dist.eta * reject_loss(scores, cm) + (1.0 - dist.eta) * reject_loss(
        -scores, cm
    )
    return float(np.dot(dist.p, per_point))


def population_phi_risk(
    dist: FiniteDistribution, dictionary: Dictionary, lam: Coefficients, cm: CostModel
) -> float:
    """Exact surrogate risk of the discriminant, mixing over support and label."""
    return population_phi_risk_of_scores(dist, _support_scores(dist, dictionary, lam), cm)


def population_reject_risk(
    dist: FiniteDistribution, dictionary: Dictionary, lam: Coefficients, cm: CostModel
) -> float:
    """Exact reject risk of the discriminant."""
    return population_reject_risk_of_scores(dist, _support_scores(dist, dictionary, lam), cm)


def bayes_reject_risk(dist: FiniteDistribution, cm: CostModel) -> float:
    """Optimal reject risk: expectation of min(eta, 1 - eta, d)."""
    return float(np.dot(dist.p, np.minimum(np.minimum(dist.eta, 1.0 - dist.eta), cm.d)))


def bayes_phi_risk(dist: FiniteDistribution, cm: CostModel) -> float:
    """Optimal surrogate risk, attained by the three-valued optimal rule."""
    f0 = bayes_scores(dist.eta, cm)
    per_point = [
        conditional_phi_risk(z, e, cm) for z, e in zip(f0, dist.eta)
    ]
    return float(np.dot(dist.p, per_point))


def excess_risks(
    dist: FiniteDistribution, dictionary: Dictionary, lam: Coefficients, cm: CostModel
) -> RiskReport:
    """Both risks of ``lam`` with their excesses over the optimal rules.

    Raises if the reject-loss excess exceeds the surrogate excess beyond
    floating-point tolerance: with d <= tau <= 1-d that ordering is a
    theorem, so a violation means a computation bug.
    """
    phi = population_phi_risk(dist, dictionary, lam, cm)
    rej = population_reject_risk(dist, dictionary, lam, cm)
    b_phi = bayes_phi_risk(dist, cm)
    b_rej = bayes_reject_risk(dist, cm)
    excess_phi = _clamp_excess(phi - b_phi, "surrogate")
    excess_rej = _clamp_excess(rej - b_rej, "reject")
    if excess_rej > excess_phi + _EXCESS_TOL:
        raise ArithmeticError(
            f"reject excess {excess_rej} exceeds surrogate excess {excess_phi}"
        )
    return RiskReport(
        phi_risk=phi,
        reject_risk=rej,
        bayes_phi=b_phi,
        bayes_reject=b_rej,
        excess_phi=excess_phi,
        excess_reject=excess_rej,
    )
