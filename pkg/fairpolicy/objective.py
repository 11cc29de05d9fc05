"""
Decision rules, the cdfs they imply once rolled out, and the penalized
objective

    Omega(rule) = (1 - lambda) * T(population cdf)
                  - lambda * max_z S(group cdf z, population cdf).

Treatments are labelled 1..K everywhere in the public API; column i - 1 of
DecisionRule.probs holds the probability of treatment i.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Tuple

import numpy as np

from fairpolicy.distributions import StepCdf
from fairpolicy.errors import (
    EmptySet,
    InvalidArray,
    InvalidLambda,
    InvalidRule,
    SpaceMismatch,
    UnknownGroup,
    ZeroGroupMass,
)
from fairpolicy.settings import MASS_TOL, SIMPLEX_TOL

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CovariateSpace:
    """Finite covariate levels, group levels and the number of treatments."""

    x_levels: Tuple[str, ...]
    z_levels: Tuple[str, ...]
    k: int

    def __post_init__(self):
        x_levels = tuple(str(x) for x in self.x_levels)
        z_levels = tuple(str(z) for z in self.z_levels)
        for name, levels in (("x", x_levels), ("z", z_levels)):
            if not levels:
                raise InvalidArray(f"{name} levels must be nonempty")
            if len(set(levels)) != len(levels):
                raise InvalidArray(f"duplicate {name} levels: {levels}")
        if int(self.k) != self.k or self.k < 2:
            raise InvalidArray(f"need at least two treatments, got k={self.k}")
        object.__setattr__(self, "x_levels", x_levels)
        object.__setattr__(self, "z_levels", z_levels)
        object.__setattr__(self, "k", int(self.k))

    @property
    def treatments(self):
        return tuple(range(1, self.k + 1))

    @cached_property
    def x_index(self):
        return {x: i for i, x in enumerate(self.x_levels)}

    @cached_property
    def z_index(self):
        return {z: i for i, z in enumerate(self.z_levels)}


@dataclass(frozen=True, eq=False)
class DecisionRule:
    """One probability vector over the K treatments per covariate level."""

    space: CovariateSpace
    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64, copy=True)
        shape = (len(self.space.x_levels), self.space.k)
        if probs.shape != shape:
            raise InvalidRule(f"rule matrix has shape {probs.shape}, expected {shape}")
        if not np.all(np.isfinite(probs)) or np.any(probs < -SIMPLEX_TOL):
            raise InvalidRule("rule entries must be finite and nonnegative")
        sums = probs.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > SIMPLEX_TOL):
            raise InvalidRule(f"rule rows must sum to 1, got {sums.tolist()}")
        probs = np.clip(probs, 0.0, None)
        probs /= probs.sum(axis=1, keepdims=True)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def constant(cls, space, row):
        """Same assignment probabilities for every covariate level."""
        row = np.asarray(row, dtype=float)
        return cls(space, np.tile(row, (len(space.x_levels), 1)))

    @classmethod
    def from_treatment(cls, space, treatment):
        """Deterministic rule assigning one treatment (1-based) to everybody."""
        row = np.zeros(space.k)
        row[treatment - 1] = 1.0
        return cls.constant(space, row)

    def row(self, x):
        return self.probs[self.space.x_index[str(x)]]

    def to_dict(self):
        return {
            str(x): [float(v) for v in self.probs[i]]
            for i, x in enumerate(self.space.x_levels)
        }

    def __eq__(self, other):
        if not isinstance(other, DecisionRule):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash((self.space, self.probs.tobytes()))

    def __repr__(self):
        return f"DecisionRule({self.to_dict()})"


@dataclass(frozen=True, eq=False)
class CondCdfArray:
    """
    Conditional outcome cdfs F^i(.|x, z) for every treatment/cell, together
    with the cell probabilities p_{X,Z}(x, z).
    """

    space: CovariateSpace
    cdfs: Mapping[Tuple[int, str, str], StepCdf]
    pxz: Mapping[Tuple[str, str], float]

    def __post_init__(self):
        space = self.space
        cdfs = {}
        for i in space.treatments:
            for x in space.x_levels:
                for z in space.z_levels:
                    try:
                        cdfs[(i, x, z)] = self.cdfs[(i, x, z)]
                    except KeyError:
                        raise InvalidArray(f"missing cdf for cell (d={i}, x={x}, z={z})")
        supports = {cdf.support for cdf in cdfs.values()}
        if len(supports) != 1:
            raise InvalidArray("all cell cdfs must share one support")
        pxz = {}
        for x in space.x_levels:
            for z in space.z_levels:
                p = float(self.pxz.get((x, z), 0.0))
                if p < 0 or not np.isfinite(p):
                    raise InvalidArray(f"p(x={x}, z={z}) = {p} is not a probability")
                pxz[(x, z)] = p
        total = sum(pxz.values())
        if abs(total - 1.0) > MASS_TOL:
            raise InvalidArray(f"cell probabilities sum to {total!r}, expected 1")
        object.__setattr__(self, "cdfs", cdfs)
        object.__setattr__(self, "pxz", {key: p / total for key, p in pxz.items()})

    @property
    def support(self):
        return next(iter(self.cdfs.values())).support

    def p_x(self, x):
        return sum(self.pxz[(x, z)] for z in self.space.z_levels)

    def p_z(self, z):
        return sum(self.pxz[(x, z)] for x in self.space.x_levels)

    def p_x_given_z(self, x, z):
        pz = self.p_z(z)
        return self.pxz[(x, z)] / pz if pz > 0 else 0.0

    @cached_property
    def _table(self):
        # All cell cdfs written as mass vectors on one merged grid, so that a
        # rollout is a single weighted sum.
        space = self.space
        grid = np.unique(np.concatenate([cdf.points for cdf in self.cdfs.values()]))
        table = np.zeros((space.k, len(space.x_levels), len(space.z_levels), grid.size))
        for (i, x, z), cdf in self.cdfs.items():
            pos = np.searchsorted(grid, cdf.points)
            table[i - 1, space.x_index[x], space.z_index[z], pos] = cdf.masses
        pxz = np.array([[self.pxz[(x, z)] for z in space.z_levels] for x in space.x_levels])
        return grid, table, pxz

    def _mixture_on_grid(self, weights):
        grid, table, _ = self._table
        masses = np.einsum("ixz,ixzg->g", weights, table)
        keep = masses > 0
        return StepCdf(self.support, grid[keep], masses[keep])


def _check_space(rule, space):
    if rule.space != space:
        raise SpaceMismatch("rule and array live on different covariate spaces")


def implied_cdf(rule, arr):
    """Population cdf obtained by rolling out the rule."""
    _check_space(rule, arr.space)
    _, _, pxz = arr._table
    weights = rule.probs.T[:, :, None] * pxz[None, :, :]
    return arr._mixture_on_grid(weights)


def implied_cdf_group(rule, arr, z):
    """Cdf within group z obtained by rolling out the rule."""
    _check_space(rule, arr.space)
    z = str(z)
    if z not in arr.space.z_index:
        raise UnknownGroup(f"unknown group {z!r}; levels are {arr.space.z_levels}")
    pz = arr.p_z(z)
    if pz <= 0:
        raise ZeroGroupMass(f"group {z!r} has zero probability")
    _, _, pxz = arr._table
    col = arr.space.z_index[z]
    weights = np.zeros((arr.space.k,) + pxz.shape)
    weights[:, :, col] = rule.probs.T * (pxz[:, col] / pz)[None, :]
    return arr._mixture_on_grid(weights)


@dataclass(frozen=True)
class Rollout:
    """Population cdf and group cdfs of one rule under one model."""

    population: StepCdf
    groups: Mapping[str, StepCdf] = field(default_factory=dict)

    def target(self, t):
        return t(self.population)

    def unfairness(self, s):
        return {z: s(cdf, self.population) for z, cdf in self.groups.items()}

    def max_unfairness(self, s):
        values = self.unfairness(s)
        return max(values.values()) if values else 0.0

    def value(self, lam, t, s):
        check_lambda(lam)
        value = 0.0
        if lam < 1:
            value += (1.0 - lam) * self.target(t)
        if lam > 0:
            value -= lam * self.max_unfairness(s)
        return value


class PluginModel:
    """Rollouts computed from a conditional cdf array."""

    def __init__(self, arr):
        self.arr = arr
        self.space = arr.space
        self.active_groups = tuple(z for z in arr.space.z_levels if arr.p_z(z) > 0)

    def rollout(self, rule):
        groups = {z: implied_cdf_group(rule, self.arr, z) for z in self.active_groups}
        return Rollout(implied_cdf(rule, self.arr), groups)


def check_lambda(lam):
    if not 0.0 <= lam <= 1.0:
        raise InvalidLambda(f"preference parameter must lie in [0, 1], got {lam}")


def omega(rule, arr, lam, t, s):
    """
    Penalized objective. Groups with zero probability are left out of the
    unfairness maximum.
    """
    check_lambda(lam)
    return PluginModel(arr).rollout(rule).value(lam, t, s)


def d1(rule1, rule2):
    """Sum over covariate levels of the l1 distance between rows."""
    if rule1.space != rule2.space:
        raise SpaceMismatch("rules live on different covariate spaces")
    return float(np.abs(rule1.probs - rule2.probs).sum())


def d1_to_set(rule, rules):
    rules = list(rules)
    if not rules:
        raise EmptySet("distance to an empty set of rules")
    return min(d1(rule, other) for other in rules)
