"""Losses for classification with a reject option.

Two losses share a cost model: the discontinuous reject loss, which charges 1
for a confident mistake and ``d`` for abstaining, and its convex piecewise
linear surrogate, whose steep negative branch has slope ``-(1 - d)/d``.  The
surrogate is calibrated: minimizing its conditional risk recovers the same
three-valued decision rule (-1 / abstain / +1) that minimizes the reject
risk.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Rejection costs below this floor make the surrogate slope (1 - d)/d blow
# up; the theory needs a finite Lipschitz constant.
D_FLOOR = 1e-6


@dataclass(frozen=True)
class CostModel:
    """Rejection cost ``d`` and abstention threshold ``tau``.

    Valid models have ``D_FLOOR <= d <= 1/2`` (rejecting is never optimal for
    d > 1/2) and ``d <= tau <= 1 - d``, the regime in which the surrogate
    dominates the reject loss and excess-risk domination holds.
    """

    d: float
    tau: float
    d_floor: float = field(default=D_FLOOR, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not np.isfinite(self.d) or not np.isfinite(self.tau):
            raise ValueError("d and tau must be finite")
        if self.d < self.d_floor:
            raise ValueError(f"rejection cost d={self.d} below floor {self.d_floor}")
        if self.d > 0.5:
            raise ValueError(f"rejection cost d={self.d} must be <= 1/2")
        if not (self.d <= self.tau <= 1.0 - self.d):
            raise ValueError(
                f"threshold tau={self.tau} outside [d, 1-d] = [{self.d}, {1.0 - self.d}]"
            )

    @property
    def a(self) -> float:
        """Slope magnitude of the surrogate's negative branch, (1 - d)/d >= 1."""
        return (1.0 - self.d) / self.d

    @property
    def c_phi(self) -> float:
        """Lipschitz constant of the surrogate; equals ``a``."""
        return self.a


def reject_loss(z, cm: CostModel):
    """Reject loss: 1 if z < -tau, d if |z| <= tau, 0 if z > tau.

    Accepts scalars or arrays of margin values ``z = y * f(x)``.
    """
    z = np.asarray(z, dtype=float)
    out = np.where(z < -cm.tau, 1.0, np.where(z <= cm.tau, cm.d, 0.0))
    return float(out) if out.ndim == 0 else out


def phi_d(z, cm: CostModel):
    """Convex surrogate: 1 - a*z for z < 0, 1 - z for 0 <= z < 1, 0 for z >= 1.

    Equals ``max(0, 1 - z, 1 - a*z)`` for every real z (tested property).
    Accepts scalars or arrays.
    """
    z = np.asarray(z, dtype=float)
    out = np.where(z < 0.0, 1.0 - cm.a * z, np.where(z < 1.0, 1.0 - z, 0.0))
    return float(out) if out.ndim == 0 else out


def phi_d_subdifferential(z: float, cm: CostModel) -> tuple[float, float]:
    """Subdifferential of the surrogate at ``z`` as a closed interval.

    {-a} on z < 0, [-a, -1] at 0, {-1} on (0, 1), [-1, 0] at 1, {0} beyond.
    """
    a = cm.a
    if z < 0.0:
        return (-a, -a)
    if z == 0.0:
        return (-a, -1.0)
    if z < 1.0:
        return (-1.0, -1.0)
    if z == 1.0:
        return (-1.0, 0.0)
    return (0.0, 0.0)


def conditional_phi_risk(z, eta: float, cm: CostModel):
    """Conditional surrogate risk eta*phi(z) + (1 - eta)*phi(-z).

    ``eta`` is the conditional probability of the +1 label.  Accepts scalar
    or array scores ``z``.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta={eta} outside [0, 1]")
    return eta * phi_d(z, cm) + (1.0 - eta) * phi_d(-np.asarray(z, dtype=float), cm)


def bayes_score(eta: float, cm: CostModel) -> int:
    """Optimal three-valued score: -1 if eta < d, 0 if d <= eta <= 1-d, else +1."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta={eta} outside [0, 1]")
    if eta < cm.d:
        return -1
    if eta > 1.0 - cm.d:
        return 1
    return 0


def bayes_scores(eta: np.ndarray, cm: CostModel) -> np.ndarray:
    """Vectorized :func:`bayes_score` over an array of conditional probabilities."""
    eta = np.asarray(eta, dtype=float)
    return np.where(eta < cm.d, -1.0, np.where(eta > 1.0 - cm.d, 1.0, 0.0))


def calibration_check(
    eta: float,
    cm: CostModel,
    grid_step: float,
    z_range: tuple[float, float] = (-2.0, 2.0),
    tie_tol: float = 1e-9,
) -> np.ndarray:
    """Grid-minimize the conditional surrogate risk; return all near-minimizers.

    Minimizers of the conditional risk lie in [-1, 1]; the wider default grid
    catches slope-sign errors.  Returns every grid point whose conditional
    risk is within ``tie_tol`` of the grid minimum.  Away from the boundary
    probabilities ``d`` and ``1 - d`` the returned set contains the Bayes
    score; at the boundaries it may be a tie interval.
    """
    if grid_step <= 0.0:
        raise ValueError(f"grid_step={grid_step} must be positive")
    lo, hi = z_range
    n_pts = int(round((hi - lo) / grid_step)) + 1
    grid = np.linspace(lo, hi, n_pts)
    risks = conditional_phi_risk(grid, eta, cm)
    return grid[risks <= risks.min() + tie_tol]
