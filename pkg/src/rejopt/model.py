"""Dictionaries of bounded base functions and linear discriminants.

A discriminant is a linear combination ``sum_j lam_j * f_j(x)`` of base
functions drawn from a closed set of families (sign stumps, clipped affine
features, point indicators, tabulated values).  All families evaluate
exactly, which keeps inner products under finite-support measures exact and
makes serialization reproducible.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import yaml

from .losses import CostModel

# Near-zero threshold for reporting support sets of solver output; first
# order solvers produce near-zeros, not zeros.
ZERO_TOL = 1e-9


class RejectDecision(enum.IntEnum):
    """Three-valued classification outcome; REJECT abstains."""

    MINUS = -1
    REJECT = 0
    PLUS = 1


def _as_point(x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise ValueError(f"feature vector must be 1-D, got shape {x.shape}")
    return x


@dataclass(frozen=True)
class SignStump:
    """f(x) = +1 if x[dim] >= threshold else -1."""

    dim: int
    threshold: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "threshold", float(self.threshold))

    def evaluate(self, x) -> float:
        return 1.0 if _as_point(x)[self.dim] >= self.threshold else -1.0

    def evaluate_batch(self, xs: np.ndarray) -> np.ndarray:
        return np.where(xs[:, self.dim] >= self.threshold, 1.0, -1.0)

    def intrinsic_bound(self) -> float:
        return 1.0

    def to_fields(self) -> dict:
        return {"family": "sign_stump", "dim": self.dim, "threshold": self.threshold}


@dataclass(frozen=True)
class ClippedAffine:
    """f(x) = clip(w . x + b, -clip, clip)."""

    weights: tuple[float, ...]
    intercept: float
    clip: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(self, "clip", float(self.clip))
        if self.clip <= 0.0:
            raise ValueError("clip bound must be positive")

    def evaluate(self, x) -> float:
        x = _as_point(x)
        if len(x) != len(self.weights):
            raise ValueError(f"expected {len(self.weights)} features, got {len(x)}")
        raw = float(np.dot(self.weights, x)) + self.intercept
        return float(min(max(raw, -self.clip), self.clip))

    def evaluate_batch(self, xs: np.ndarray) -> np.ndarray:
        if xs.shape[1] != len(self.weights):
            raise ValueError(f"expected {len(self.weights)} features, got {xs.shape[1]}")
        raw = xs @ np.asarray(self.weights) + self.intercept
        return np.clip(raw, -self.clip, self.clip)

    def intrinsic_bound(self) -> float:
        return self.clip

    def to_fields(self) -> dict:
        return {
            "family": "clipped_affine",
            "weights": list(self.weights),
            "intercept": self.intercept,
            "clip": self.clip,
        }


@dataclass(frozen=True)
class PointIndicator:
    """f(x) = 1 if x equals the stored support point exactly, else 0."""

    point: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "point", tuple(float(v) for v in self.point))

    def evaluate(self, x) -> float:
        x = _as_point(x)
        return 1.0 if len(x) == len(self.point) and bool(np.all(x == self.point)) else 0.0

    def evaluate_batch(self, xs: np.ndarray) -> np.ndarray:
        if xs.shape[1] != len(self.point):
            return np.zeros(xs.shape[0])
        return np.all(xs == np.asarray(self.point), axis=1).astype(float)

    def intrinsic_bound(self) -> float:
        return 1.0

    def to_fields(self) -> dict:
        return {"family": "point_indicator", "point": list(self.point)}


@dataclass(frozen=True)
class Tabulated:
    """Explicit value per support point; evaluation off the table is an error."""

    points: tuple[tuple[float, ...], ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "points", tuple(tuple(float(v) for v in p) for p in self.points)
        )
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.points) != len(self.values):
            raise ValueError("points and values must have equal length")
        if len(set(self.points)) != len(self.points):
            raise ValueError("tabulated support points must be distinct")

    def evaluate(self, x) -> float:
        key = tuple(float(v) for v in _as_point(x))
        for pt, val in zip(self.points, self.values):
            if pt == key:
                return float(val)
        raise KeyError(f"point {key} not in tabulated support")

    def intrinsic_bound(self) -> float:
        return float(max(abs(v) for v in self.values))

    def to_fields(self) -> dict:
        return {
            "family": "tabulated",
            "points": [list(p) for p in self.points],
            "values": list(self.values),
        }


_FAMILIES = {
    "sign_stump": lambda f: SignStump(dim=int(f["dim"]), threshold=float(f["threshold"])),
    "clipped_affine": lambda f: ClippedAffine(
        weights=tuple(float(w) for w in f["weights"]),
        intercept=float(f["intercept"]),
        clip=float(f["clip"]),
    ),
    "point_indicator": lambda f: PointIndicator(point=tuple(float(v) for v in f["point"])),
    "tabulated": lambda f: Tabulated(
        points=tuple(tuple(float(v) for v in p) for p in f["points"]),
        values=tuple(float(v) for v in f["values"]),
    ),
}

BaseFunction = SignStump | ClippedAffine | PointIndicator | Tabulated


class Dictionary:
    """Ordered finite set of base functions with a declared sup-norm bound.

    The declared bound ``c_f`` enters the tuning-parameter formulas, so it is
    verified at construction: each family's intrinsic bound must not exceed
    it, and when ``support`` points are supplied every function is evaluated
    exhaustively on them.
    """

    def __init__(self, functions, c_f: float, support=None):
        functions = tuple(functions)
        if not functions:
            raise ValueError("dictionary needs at least one function")
        if c_f <= 0.0:
            raise ValueError("c_f must be positive")
        for j, fn in enumerate(functions):
            b = fn.intrinsic_bound()
            if b > c_f + 1e-12:
                raise ValueError(f"function {j} has intrinsic bound {b} > c_f={c_f}")
        if support is not None:
            for j, fn in enumerate(functions):
                for x in support:
                    v = fn.evaluate(x)
                    if abs(v) > c_f + 1e-12:
                        raise ValueError(
                            f"function {j} violates |f(x)| <= {c_f} at x={x}: {v}"
                        )
        self.functions = functions
        self.c_f = float(c_f)

    @property
    def m(self) -> int:
        return len(self.functions)

    def __len__(self) -> int:
        return len(self.functions)

    def evaluate_point(self, x) -> np.ndarray:
        """Vector of all M function values at one feature vector."""
        return np.array([fn.evaluate(x) for fn in self.functions], dtype=float)

    def evaluate_matrix(self, xs: np.ndarray) -> np.ndarray:
        """(n, M) matrix of function values over rows of ``xs``."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        cols = [
            fn.evaluate_batch(xs)
            if hasattr(fn, "evaluate_batch")
            else np.array([fn.evaluate(x) for x in xs])
            for fn in self.functions
        ]
        return np.column_stack(cols)

    def to_yaml(self) -> str:
        doc = {"c_f": self.c_f, "functions": [fn.to_fields() for fn in self.functions]}
        return yaml.safe_dump(doc, sort_keys=False)

    @classmethod
    def from_yaml(cls, text: str) -> "Dictionary":
        doc = yaml.safe_load(text)
        fns = []
        for f in doc["functions"]:
            family = f.get("family")
            if family not in _FAMILIES:
                raise ValueError(f"unknown base-function family {family!r}")
            fns.append(_FAMILIES[family](f))
        return cls(fns, c_f=float(doc["c_f"]))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_yaml())

    @classmethod
    def load(cls, path) -> "Dictionary":
        with open(path, encoding="utf-8") as fh:
            return cls.from_yaml(fh.read())


@dataclass(frozen=True)
class Coefficients:
    """Length-M coefficient vector with l1/l0 accessors."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if not all(np.isfinite(self.values)):
            raise ValueError("coefficients must be finite")

    @classmethod
    def zeros(cls, m: int) -> "Coefficients":
        return cls(values=(0.0,) * m)

    @classmethod
    def from_array(cls, arr) -> "Coefficients":
        return cls(values=tuple(float(v) for v in np.asarray(arr, dtype=float)))

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=float)

    def __len__(self) -> int:
        return len(self.values)

    def l1_norm(self) -> float:
        return float(sum(abs(v) for v in self.values))

    def l0_count(self, zero_tol: float = ZERO_TOL) -> int:
        if zero_tol < 0.0:
            raise ValueError("zero_tol must be nonnegative")
        return sum(1 for v in self.values if abs(v) > zero_tol)

    def support(self, zero_tol: float = ZERO_TOL) -> tuple[int, ...]:
        if zero_tol < 0.0:
            raise ValueError("zero_tol must be nonnegative")
        return tuple(j for j, v in enumerate(self.values) if abs(v) > zero_tol)


def l1_norm(lam: Coefficients) -> float:
    return lam.l1_norm()


def l0_count(lam: Coefficients, zero_tol: float = ZERO_TOL) -> int:
    return lam.l0_count(zero_tol)


def evaluate(dictionary: Dictionary, lam: Coefficients, x) -> float:
    """Score sum_j lam_j * f_j(x)."""
    if len(lam) != dictionary.m:
        raise ValueError(f"coefficient length {len(lam)} != dictionary size {dictionary.m}")
    return float(np.dot(lam.as_array(), dictionary.evaluate_point(x)))


def classify(score: float, cm: CostModel) -> RejectDecision:
    """PLUS if score > tau, MINUS if score < -tau, REJECT otherwise."""
    if score > cm.tau:
        return RejectDecision.PLUS
    if score < -cm.tau:
        return RejectDecision.MINUS
    return RejectDecision.REJECT
