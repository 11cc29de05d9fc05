"""
Weighted-atom cumulative distribution functions on a bounded interval [a, b].

A StepCdf is a finite list of atoms (point, mass) with strictly increasing
points inside [a, b] and positive masses summing to one. Evaluation is
right-continuous. Objects are immutable; numpy buffers are flagged read-only.
"""

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from fairpolicy.errors import (
    EmptySample,
    InvalidSupport,
    OutOfSupport,
    SupportMismatch,
    WeightMismatch,
)
from fairpolicy.settings import MASS_TOL

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SupportInterval:
    """Closed interval [a, b] carrying every cdf of a problem."""

    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (np.isfinite(a) and np.isfinite(b)) or a >= b:
            raise InvalidSupport(f"support needs finite a < b, got [{self.a}, {self.b}]")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def width(self):
        return self.b - self.a

    def contains(self, values):
        values = np.asarray(values, dtype=float)
        return bool(np.all((values >= self.a) & (values <= self.b)))


def _frozen(array):
    array = np.ascontiguousarray(array, dtype=np.float64)
    array.setflags(write=False)
    return array


def _coalesce(points, masses):
    """Merge atoms sitting at identical points and sort them."""
    unique, inverse = np.unique(points, return_inverse=True)
    summed = np.bincount(inverse.ravel(), weights=masses, minlength=unique.size)
    keep = summed > 0
    return unique[keep], summed[keep]


@dataclass(frozen=True, eq=False)
class StepCdf:
    """
    Cdf of a discrete distribution supported on [a, b].

    The constructor expects canonical atoms (sorted, distinct, positive
    masses); use StepCdf.from_atoms for arbitrary input.
    """

    support: SupportInterval
    points: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        points = _frozen(self.points)
        masses = np.asarray(self.masses, dtype=np.float64)
        if points.ndim != 1 or points.shape != masses.shape or points.size == 0:
            raise WeightMismatch("points and masses must be nonempty 1-D arrays of equal length")
        if np.any(np.diff(points) <= 0):
            raise ValueError("atom points must be strictly increasing")
        if not self.support.contains(points):
            raise OutOfSupport(
                f"atoms outside [{self.support.a}, {self.support.b}]: "
                f"min={points.min()}, max={points.max()}"
            )
        if np.any(masses <= 0):
            raise WeightMismatch("atom masses must be positive")
        total = masses.sum()
        if abs(total - 1.0) > MASS_TOL:
            raise WeightMismatch(f"atom masses sum to {total!r}, expected 1")
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "masses", _frozen(masses / total))

    @classmethod
    def from_atoms(cls, points, masses, support):
        """Build a cdf from possibly unsorted atoms, coalescing repeats."""
        points = np.asarray(points, dtype=np.float64).ravel()
        masses = np.asarray(masses, dtype=np.float64).ravel()
        if points.shape != masses.shape:
            raise WeightMismatch("points and masses must have equal length")
        if np.any(masses < 0):
            raise WeightMismatch("atom masses must be nonnegative")
        points, masses = _coalesce(points, masses)
        return cls(support, points, masses)

    @classmethod
    def from_dict(cls, document):
        support = SupportInterval(*document["support"])
        atoms = np.asarray(document["atoms"], dtype=float).reshape(-1, 2)
        return cls.from_atoms(atoms[:, 0], atoms[:, 1], support)

    def to_dict(self):
        return {
            "support": [self.support.a, self.support.b],
            "atoms": [[float(p), float(m)] for p, m in zip(self.points, self.masses)],
        }

    @property
    def atoms(self):
        return list(zip(self.points.tolist(), self.masses.tolist()))

    @cached_property
    def cumulative(self):
        cum = np.cumsum(self.masses)
        cum[-1] = 1.0
        return _frozen(cum)

    def __call__(self, y):
        y = np.asarray(y, dtype=np.float64)
        idx = np.searchsorted(self.points, y, side="right") - 1
        values = np.where(idx >= 0, self.cumulative[np.clip(idx, 0, None)], 0.0)
        values = np.where(y >= self.support.b, 1.0, values)
        values = np.where(y < self.support.a, 0.0, values)
        return float(values) if values.ndim == 0 else values

    def __eq__(self, other):
        if not isinstance(other, StepCdf):
            return NotImplemented
        return (
            self.support == other.support
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.masses, other.masses)
        )

    def __hash__(self):
        return hash((self.support, self.points.tobytes(), self.masses.tobytes()))

    def __repr__(self):
        return f"StepCdf(support=[{self.support.a}, {self.support.b}], atoms={self.points.size})"


@dataclass(frozen=True, eq=False)
class MonotoneStep:
    """
    Nonnegative, nondecreasing right-continuous step function on [a, b].

    Produced by inverse-propensity weighting before projection; its total may
    fall short of or exceed one.
    """

    support: SupportInterval
    points: np.ndarray
    increments: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=np.float64).ravel()
        increments = np.asarray(self.increments, dtype=np.float64).ravel()
        if points.shape != increments.shape:
            raise WeightMismatch("points and increments must have equal length")
        if np.any(increments < 0) or not np.all(np.isfinite(increments)):
            raise WeightMismatch("increments must be finite and nonnegative")
        if points.size and not self.support.contains(points):
            raise OutOfSupport("step points must lie in the support")
        points, increments = _coalesce(points, increments)
        object.__setattr__(self, "points", _frozen(points))
        object.__setattr__(self, "increments", _frozen(increments))

    @property
    def total(self):
        return float(self.increments.sum())

    @property
    def atoms(self):
        return list(zip(self.points.tolist(), self.increments.tolist()))

    def __call__(self, y):
        y = np.asarray(y, dtype=np.float64)
        cum = np.concatenate([[0.0], np.cumsum(self.increments)])
        values = cum[np.searchsorted(self.points, y, side="right")]
        return float(values) if values.ndim == 0 else values


def step_cdf_from_samples(values, support):
    """Empirical cdf: one atom per distinct value with its relative frequency."""
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise EmptySample("cannot build an empirical cdf from zero values")
    if not support.contains(values):
        raise OutOfSupport(
            f"sample values outside [{support.a}, {support.b}]: "
            f"min={values.min()}, max={values.max()}"
        )
    points, counts = np.unique(values, return_counts=True)
    return StepCdf(support, points, counts / values.size)


def point_mass(point, support):
    if not support.contains(point):
        raise OutOfSupport(f"point {point} outside [{support.a}, {support.b}]")
    return StepCdf(support, [float(point)], [1.0])


def mixture(components):
    """Weighted mixture of cdfs sharing one support; weights must sum to one."""
    components = list(components)
    if not components:
        raise WeightMismatch("mixture needs at least one component")
    support = components[0][0].support
    weights = np.array([float(w) for _, w in components])
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise WeightMismatch("mixture weights must be finite and nonnegative")
    if abs(weights.sum() - 1.0) > MASS_TOL:
        raise WeightMismatch(f"mixture weights sum to {weights.sum()!r}, expected 1")
    for cdf, _ in components:
        if cdf.support != support:
            raise SupportMismatch("mixture components must share one support")

    used = [(cdf, w) for cdf, w in components if w > 0]
    if len(used) == 1 and used[0][1] == 1.0:
        return used[0][0]
    points = np.concatenate([cdf.points for cdf, _ in used])
    masses = np.concatenate([w * cdf.masses for cdf, w in used])
    return StepCdf.from_atoms(points, masses, support)


def evaluate(F, y):
    return F(y)


def _check_shared(F, G):
    if F.support != G.support:
        raise SupportMismatch(
            f"cdfs live on different supports: [{F.support.a}, {F.support.b}] "
            f"vs [{G.support.a}, {G.support.b}]"
        )


def _differences(F, G):
    # F - G is constant between merged breakpoints; the left limit at a
    # breakpoint is the value at the previous one (0 below all of them).
    grid = np.union1d(F.points, G.points)
    return np.concatenate([[0.0], F(grid) - G(grid)])


def ks_distance(F, G):
    """Exact Kolmogorov-Smirnov distance sup |F - G|."""
    _check_shared(F, G)
    return float(np.max(np.abs(_differences(F, G))))


def one_sided_ks(F, G):
    """sup max(F - G, 0)."""
    _check_shared(F, G)
    return float(max(np.max(_differences(F, G)), 0.0))


def sup_distance(F, g):
    """
    Sup-distance between a StepCdf and a continuous nondecreasing cdf g.

    For continuous g the sup is attained at an atom or at its left limit, so
    only those need checking.
    """
    points = F.points
    right = np.abs(F.cumulative - g(points))
    before = np.concatenate([[0.0], F.cumulative[:-1]])
    left = np.abs(before - g(points))
    return float(max(right.max(), left.max()))


def project_mab(G):
    """
    Project a monotone step onto the cdfs on [a, b]: clamp at 1, and put any
    missing mass at b.
    """
    support = G.support
    cum = np.minimum(np.cumsum(G.increments), 1.0)
    masses = np.diff(np.concatenate([[0.0], cum]))
    keep = masses > 0
    points, masses = G.points[keep], masses[keep]
    shortfall = 1.0 - (cum[-1] if cum.size else 0.0)
    if shortfall > 1e-12:
        points = np.append(points, support.b)
        masses = np.append(masses, shortfall)
    return StepCdf.from_atoms(points, masses, support)
