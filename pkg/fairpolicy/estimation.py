"""
Estimators built from a training sample: the plug-in conditional cdf array
and the inverse-propensity-weighted group cdfs.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Mapping, Tuple

import numpy as np
import pandas as pd

from fairpolicy.distributions import (
    MonotoneStep,
    SupportInterval,
    mixture,
    point_mass,
    project_mab,
    step_cdf_from_samples,
)
from fairpolicy.errors import (
    EmptySample,
    InvalidArray,
    OutOfSupport,
    UnknownGroup,
    ZeroEstimatedPropensity,
    ZeroPropensity,
)
from fairpolicy.objective import CondCdfArray, CovariateSpace, Rollout, _check_space
from fairpolicy.settings import SIMPLEX_TOL

logger = logging.getLogger(__name__)

SAMPLE_COLUMNS = ["y", "x", "z", "d"]


@dataclass(frozen=True)
class TrainingRecord:
    y: float
    x: str
    z: str
    d: int


def infer_space(frame, k=None):
    """Levels in order of first appearance; K is the largest observed d unless given."""
    x_levels = tuple(pd.unique(frame["x"].astype(str)))
    z_levels = tuple(pd.unique(frame["z"].astype(str)))
    observed_k = int(frame["d"].max()) if len(frame) else 0
    return CovariateSpace(x_levels, z_levels, k if k is not None else max(observed_k, 2))


@dataclass(frozen=True, eq=False)
class TrainingSample:
    """n records (y, x, z, d) on a covariate space, held as a DataFrame."""

    space: CovariateSpace
    support: SupportInterval
    frame: pd.DataFrame

    def __post_init__(self):
        frame = self.frame
        missing = [c for c in SAMPLE_COLUMNS if c not in frame.columns]
        if missing:
            raise InvalidArray(f"sample is missing columns {missing}")
        if len(frame) == 0:
            raise EmptySample("training sample has no records")
        frame = pd.DataFrame({
            "y": frame["y"].astype(float).to_numpy(),
            "x": frame["x"].astype(str).to_numpy(),
            "z": frame["z"].astype(str).to_numpy(),
            "d": frame["d"].astype(int).to_numpy(),
        })
        if not self.support.contains(frame["y"]):
            raise OutOfSupport(
                f"outcomes outside [{self.support.a}, {self.support.b}]: "
                f"min={frame['y'].min()}, max={frame['y'].max()}"
            )
        unknown_x = set(frame["x"]) - set(self.space.x_levels)
        if unknown_x:
            raise InvalidArray(f"unknown x levels {sorted(unknown_x)}")
        unknown_z = set(frame["z"]) - set(self.space.z_levels)
        if unknown_z:
            raise UnknownGroup(f"unknown z levels {sorted(unknown_z)}")
        bad_d = frame.loc[(frame["d"] < 1) | (frame["d"] > self.space.k), "d"]
        if len(bad_d):
            raise InvalidArray(f"treatments must lie in 1..{self.space.k}, got {sorted(set(bad_d))}")
        object.__setattr__(self, "frame", frame)

    @classmethod
    def from_records(cls, records, space, support):
        records = list(records)
        frame = pd.DataFrame(
            [(r.y, r.x, r.z, r.d) for r in records], columns=SAMPLE_COLUMNS
        )
        return cls(space, support, frame)

    @classmethod
    def from_frame(cls, df, space, support):
        return cls(space, support, df)

    def to_frame(self):
        return self.frame.copy()

    @property
    def records(self):
        return [
            TrainingRecord(float(y), x, z, int(d))
            for y, x, z, d in self.frame[SAMPLE_COLUMNS].itertuples(index=False)
        ]

    @property
    def n(self):
        return len(self.frame)

    @cached_property
    def arrays(self):
        """Outcomes and 0-based (d, x, z) index arrays."""
        y = self.frame["y"].to_numpy()
        d = self.frame["d"].to_numpy() - 1
        x = self.frame["x"].map(self.space.x_index).to_numpy()
        z = self.frame["z"].map(self.space.z_index).to_numpy()
        return y, d, x, z

    def __eq__(self, other):
        if not isinstance(other, TrainingSample):
            return NotImplemented
        return (
            self.space == other.space
            and self.support == other.support
            and self.frame.equals(other.frame)
        )

    def __hash__(self):
        return id(self)


def empirical_pz(sample):
    """Relative frequency of every group level (0 for unseen levels)."""
    counts = sample.frame["z"].value_counts().reindex(sample.space.z_levels, fill_value=0)
    return {z: int(c) / sample.n for z, c in counts.items()}


def fit_plugin(sample):
    """
    Empirical cdf per (d, x, z) cell and cell frequencies for p(x, z).

    Cells without records get a point mass at b.
    """
    space, support = sample.space, sample.support
    frame = sample.frame
    outcomes = {key: group.to_numpy() for key, group in frame.groupby(["d", "x", "z"])["y"]}

    cdfs = {}
    empty = 0
    for i in space.treatments:
        for x in space.x_levels:
            for z in space.z_levels:
                values = outcomes.get((i, x, z))
                if values is None or values.size == 0:
                    cdfs[(i, x, z)] = point_mass(support.b, support)
                    empty += 1
                else:
                    cdfs[(i, x, z)] = step_cdf_from_samples(values, support)
    if empty:
        logger.debug(f"{empty} empty treatment cells set to a point mass at {support.b}")

    sizes = frame.groupby(["x", "z"]).size()
    pxz = {key: count / sample.n for key, count in sizes.items()}
    return CondCdfArray(space, cdfs, pxz)


@dataclass(frozen=True, eq=False)
class PropensityModel:
    """
    Treatment probabilities e(i, x, z) and group shares p_Z(z).

    Entries may be 0; IPW estimators reject rules that weight such a cell.
    """

    space: CovariateSpace
    e: Mapping[Tuple[int, str, str], float]
    pz: Mapping[str, float]

    def __post_init__(self):
        space = self.space
        table = np.zeros((space.k, len(space.x_levels), len(space.z_levels)))
        for i in space.treatments:
            for x in space.x_levels:
                for z in space.z_levels:
                    table[i - 1, space.x_index[x], space.z_index[z]] = float(self.e.get((i, x, z), 0.0))
        if np.any(table < 0) or np.any(table > 1) or not np.all(np.isfinite(table)):
            raise InvalidArray("propensities must lie in [0, 1]")
        sums = table.sum(axis=0)
        if np.any(np.abs(sums - 1.0) > SIMPLEX_TOL):
            raise InvalidArray("propensities must sum to 1 over treatments in every (x, z) cell")
        pz = np.array([float(self.pz.get(z, 0.0)) for z in space.z_levels])
        if np.any(pz < 0) or abs(pz.sum() - 1.0) > SIMPLEX_TOL:
            raise InvalidArray(f"group shares must be nonnegative and sum to 1, got {pz.tolist()}")
        table.setflags(write=False)
        pz.setflags(write=False)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "pz_vector", pz)

    @classmethod
    def by_group(cls, space, e_by_group, pz):
        """Propensities that depend on z only: e_by_group[z] is a length-K vector."""
        e = {
            (i, x, z): float(e_by_group[z][i - 1])
            for i in space.treatments
            for x in space.x_levels
            for z in space.z_levels
        }
        return cls(space, e, pz)


def estimate_propensity(sample):
    """Cell frequencies |M^i_{x,z}| / |{j: x_j = x, z_j = z}| and empirical p_Z."""
    space = sample.space
    frame = sample.frame
    treated = frame.groupby(["d", "x", "z"]).size()
    cells = frame.groupby(["x", "z"]).size()
    e = {}
    for x in space.x_levels:
        for z in space.z_levels:
            total = int(cells.get((x, z), 0))
            for i in space.treatments:
                # unobserved (x, z) cells are never weighted; any row on the simplex will do
                e[(i, x, z)] = treated.get((i, x, z), 0) / total if total else 1.0 / space.k
    return PropensityModel(space, e, empirical_pz(sample))


def _group_column(space, z):
    z = str(z)
    if z not in space.z_index:
        raise UnknownGroup(f"unknown group {z!r}; levels are {space.z_levels}")
    return space.z_index[z]


def _check_positivity(space, rule, col, prop, error):
    # Weight on a zero-propensity treatment has no records to carry it and
    # would end up at b after projection.
    zero_used = (rule.probs.T > 0) & (prop.table[:, :, col] <= 0)
    if np.any(zero_used):
        di, xi = (int(v[0]) for v in np.nonzero(zero_used))
        raise error(
            f"rule uses treatment {di + 1} at x={space.x_levels[xi]!r}, "
            f"z={space.z_levels[col]!r}, where its propensity is 0"
        )


def ipw_group_step(sample, rule, z, prop, error=ZeroPropensity):
    """
    Pre-projection IPW estimate of the group-z implied cdf: a jump of
    delta_d(x) / (n e_d(x, z) p_Z(z)) at y_j for every record with z_j = z.
    """
    _check_space(rule, sample.space)
    col = _group_column(sample.space, z)
    pz = prop.pz_vector[col]
    if pz <= 0:
        raise error(f"group {z!r} has zero probability")
    _check_positivity(sample.space, rule, col, prop, error)
    y, d, x, zi = sample.arrays
    mask = zi == col
    y, d, x = y[mask], d[mask], x[mask]
    weight = rule.probs[x, d]
    e = prop.table[d, x, col]
    used = weight > 0
    increments = np.zeros_like(y)
    increments[used] = weight[used] / (sample.n * e[used] * pz)
    return MonotoneStep(sample.support, y, increments)


def ipw_group_cdf(sample, rule, z, prop, error=ZeroPropensity):
    return project_mab(ipw_group_step(sample, rule, z, prop, error=error))


class IpwModel:
    """Rollouts whose group cdfs are IPW estimates and whose population cdf is their p_Z mixture."""

    def __init__(self, sample, prop, estimated=False):
        self.sample = sample
        self.space = sample.space
        self.prop = prop
        self.uses_estimates = estimated
        self.error = ZeroEstimatedPropensity if estimated else ZeroPropensity
        self.active_groups = tuple(
            z for z, p in zip(self.space.z_levels, prop.pz_vector) if p > 0
        )

    @classmethod
    def estimated(cls, sample):
        return cls(sample, estimate_propensity(sample), estimated=True)

    def rollout(self, rule):
        # An empty (d, x, z) cell in an observed (x, z) has estimated
        # propensity 0, so the positivity check in ipw_group_step covers both kinds.
        _check_space(rule, self.space)
        groups = {
            z: ipw_group_cdf(self.sample, rule, z, self.prop, error=self.error)
            for z in self.active_groups
        }
        weights = dict(zip(self.space.z_levels, self.prop.pz_vector))
        total = sum(weights[z] for z in self.active_groups)
        population = mixture([(groups[z], weights[z] / total) for z in self.active_groups])
        return Rollout(population, groups)


def ipw_objective(sample, rule, lam, t, s, prop):
    return IpwModel(sample, prop).rollout(rule).value(lam, t, s)


def ipw_objective_estimated(sample, rule, lam, t, s):
    return IpwModel.estimated(sample).rollout(rule).value(lam, t, s)
