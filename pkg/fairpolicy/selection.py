"""
Lambda sweeps, budget-based choice of the preference parameter and
interpolation of the estimated value function.
"""

import json
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Mapping, Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from fairpolicy.errors import (
    InvalidBudget,
    InvalidGrid,
    InvalidLambda,
    LambdaNotOnGrid,
    NonUniformGrid,
    SampleParseError,
    SchemaViolation,
)
from fairpolicy.estimation import IpwModel, fit_plugin
from fairpolicy.objective import CovariateSpace, DecisionRule, PluginModel, check_lambda
from fairpolicy.optimizer import OptimizerConfig, maximize

logger = logging.getLogger(__name__)

GRID_TOL = 1e-12
PATH_COLUMNS = ["lambda", "obj_value", "target_value", "max_unfairness"]


@dataclass(frozen=True)
class LambdaGrid:
    """Strictly increasing preference parameters in [0, 1], starting at 0."""

    values: Tuple[float, ...]

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if not values or values[0] != 0.0:
            raise InvalidGrid(f"grid must start at 0, got {values[:3]}")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise InvalidGrid("grid must be strictly increasing")
        if values[-1] > 1.0:
            raise InvalidGrid(f"grid values must not exceed 1, got {values[-1]}")
        object.__setattr__(self, "values", values)

    @classmethod
    def uniform(cls, m):
        """{0, 1/m, ..., 1}."""
        if int(m) != m or m < 1:
            raise InvalidGrid(f"uniform grid needs m >= 1, got {m}")
        return cls(tuple(k / m for k in range(int(m) + 1)))

    @property
    def m(self):
        return len(self.values) - 1

    @property
    def is_uniform(self):
        if self.m < 1:
            return False
        return np.allclose(self.values, np.arange(self.m + 1) / self.m, rtol=0, atol=GRID_TOL)

    def index(self, lam):
        for i, value in enumerate(self.values):
            if abs(value - lam) <= GRID_TOL:
                return i
        raise LambdaNotOnGrid(f"lambda={lam} is not a grid point")

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


class EstimatorKind(Enum):
    PLUGIN = "plugin"
    IPW = "ipw"
    IPW_ESTIMATED = "ipw-estimated"


@dataclass(frozen=True)
class Estimator:
    """Which empirical objective a sweep maximizes."""

    kind: EstimatorKind = EstimatorKind.PLUGIN
    propensity: Optional[object] = None

    def __post_init__(self):
        if (self.kind is EstimatorKind.IPW) != (self.propensity is not None):
            raise ValueError("known propensities are required exactly for the IPW estimator")

    @classmethod
    def plugin(cls):
        return cls(EstimatorKind.PLUGIN)

    @classmethod
    def ipw(cls, propensity):
        return cls(EstimatorKind.IPW, propensity)

    @classmethod
    def ipw_estimated(cls):
        return cls(EstimatorKind.IPW_ESTIMATED)

    def model(self, sample):
        if self.kind is EstimatorKind.PLUGIN:
            return PluginModel(fit_plugin(sample))
        if self.kind is EstimatorKind.IPW:
            return IpwModel(sample, self.propensity)
        return IpwModel.estimated(sample)


@dataclass(frozen=True)
class PathEntry:
    lam: float
    rule: DecisionRule
    obj_value: float
    target_value: float
    unfairness: Mapping[str, float]
    max_unfairness: float


@dataclass(frozen=True)
class LambdaPath:
    """One optimized rule and its diagnostics per grid point."""

    grid: LambdaGrid
    entries: Tuple[PathEntry, ...]
    n: int
    z_levels: Tuple[str, ...]

    def __post_init__(self):
        entries = tuple(self.entries)
        lams = tuple(e.lam for e in entries)
        if len(lams) != len(self.grid) or any(
            abs(a - b) > GRID_TOL for a, b in zip(lams, self.grid.values)
        ):
            raise InvalidGrid("path entries must cover the grid exactly, in order")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "z_levels", tuple(self.z_levels))

    def entry(self, lam):
        return self.entries[self.grid.index(lam)]

    @property
    def obj_values(self):
        return np.array([e.obj_value for e in self.entries])

    @property
    def target_values(self):
        return np.array([e.target_value for e in self.entries])

    def to_frame(self):
        rows = []
        for e in self.entries:
            row = {"lambda": e.lam, "obj_value": e.obj_value, "target_value": e.target_value}
            for z in self.z_levels:
                row[f"unfair_{z}"] = e.unfairness.get(z, float("nan"))
            row["max_unfairness"] = e.max_unfairness
            rows.append(row)
        columns = PATH_COLUMNS[:3] + [f"unfair_{z}" for z in self.z_levels] + PATH_COLUMNS[3:]
        return pd.DataFrame(rows, columns=columns)

    def rules_document(self):
        space = self.entries[0].rule.space
        return {
            "n": self.n,
            "x_levels": list(space.x_levels),
            "z_levels": list(space.z_levels),
            "k": space.k,
            "rules": [{"lambda": e.lam, "probs": e.rule.to_dict()} for e in self.entries],
        }

    @classmethod
    def from_files(cls, csv_path, rules_path):
        """
        Rebuild a path from its CSV table and rules JSON.

        Unreadable files raise SampleParseError; files that parse but do not
        describe a path raise SchemaViolation.
        """
        try:
            frame = pd.read_csv(csv_path)
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise SampleParseError(f"could not read {csv_path}: {e}")
        try:
            with open(rules_path, "r") as f:
                document = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise SampleParseError(f"could not read {rules_path}: {e}")

        missing = [c for c in PATH_COLUMNS if c not in frame.columns]
        if missing:
            raise SchemaViolation(f"{csv_path} is missing columns {missing}")
        z_levels = [c[len("unfair_"):] for c in frame.columns if c.startswith("unfair_")]
        numeric = frame[PATH_COLUMNS + [f"unfair_{z}" for z in z_levels]].apply(pd.to_numeric, errors="coerce")
        bad = np.flatnonzero(numeric[PATH_COLUMNS].isna().any(axis=1).to_numpy())
        if bad.size:
            row = int(bad[0]) + 1
            raise SampleParseError(f"{csv_path} row {row}: non-numeric path value", row)

        try:
            space = CovariateSpace(document["x_levels"], document["z_levels"], document["k"])
            rules = [
                DecisionRule(space, [item["probs"][x] for x in space.x_levels])
                for item in document["rules"]
            ]
            n = int(document["n"])
        except (TypeError, KeyError, ValueError) as e:
            raise SchemaViolation(f"{rules_path} does not describe a rule path: {e!r}")
        if len(rules) != len(frame):
            raise SchemaViolation(f"{rules_path} holds {len(rules)} rules but {csv_path} has {len(frame)} rows")

        entries = []
        for rule, row in zip(rules, numeric.to_dict("records")):
            entries.append(PathEntry(
                lam=float(row["lambda"]),
                rule=rule,
                obj_value=float(row["obj_value"]),
                target_value=float(row["target_value"]),
                unfairness={z: float(row[f"unfair_{z}"]) for z in z_levels
                            if not math.isnan(row[f"unfair_{z}"])},
                max_unfairness=float(row["max_unfairness"]),
            ))
        try:
            grid = LambdaGrid(tuple(numeric["lambda"]))
        except InvalidGrid as e:
            raise SchemaViolation(f"{csv_path}: {e}")
        return cls(grid, tuple(entries), n, tuple(z_levels))


class PenalizedObjective:
    """rule -> (1 - lam) T(population) - lam max_z S(group z, population) under a model."""

    def __init__(self, model, lam, t, s):
        check_lambda(lam)
        self.model = model
        self.lam = lam
        self.t = t
        self.s = s

    def __call__(self, rule):
        return self.model.rollout(rule).value(self.lam, self.t, self.s)


def _lambda_seed(seed, index):
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def _solve_one(model, diagnostics, space, lam, index, t, s, cfg):
    result = maximize(PenalizedObjective(model, lam, t, s), space, replace(cfg, seed=_lambda_seed(cfg.seed, index)))
    rollout = diagnostics.rollout(result.rule)
    unfairness = rollout.unfairness(s)
    return PathEntry(
        lam=lam,
        rule=result.rule,
        obj_value=rollout.value(lam, t, s),
        target_value=rollout.target(t),
        unfairness=unfairness,
        max_unfairness=max(unfairness.values()) if unfairness else 0.0,
    )


def sweep(sample, grid, t, s, cfg=None, estimator=None, evaluation_array=None):
    """
    Maximize the empirical objective at every grid point.

    Diagnostics are computed in-sample unless an evaluation array is given.
    Each grid point gets its own seed derived from (cfg.seed, index), so
    serial and parallel runs agree.
    """
    cfg = cfg or OptimizerConfig()
    estimator = estimator or Estimator.plugin()
    model = estimator.model(sample)
    diagnostics = PluginModel(evaluation_array) if evaluation_array is not None else model
    space = sample.space

    if cfg.n_jobs > 1 and len(grid) > 1:
        inner = replace(cfg, n_jobs=1)
        entries = Parallel(n_jobs=cfg.n_jobs)(
            delayed(_solve_one)(model, diagnostics, space, lam, i, t, s, inner)
            for i, lam in enumerate(grid)
        )
    else:
        entries = []
        for i, lam in enumerate(grid):
            entries.append(_solve_one(model, diagnostics, space, lam, i, t, s, cfg))
            logger.info(f"sweep: lambda={lam:.4f} done ({i + 1}/{len(grid)})")
    return LambdaPath(grid, tuple(entries), sample.n, space.z_levels)


def delta_n(path, lam):
    """Loss in the target relative to lambda = 0; may be negative."""
    return path.entries[0].target_value - path.entry(lam).target_value


@dataclass(frozen=True)
class BudgetSelection:
    beta: float
    c_n: float
    chosen_lambda: float
    deltas: Mapping[float, float]
    threshold: float

    def to_dict(self):
        return {
            "beta": self.beta,
            "c_n": self.c_n,
            "threshold": self.threshold,
            "chosen_lambda": self.chosen_lambda,
            "deltas": [[lam, delta] for lam, delta in self.deltas.items()],
        }


def slack(n):
    """c_n = sqrt(log(n) / n)."""
    return math.sqrt(math.log(n) / n)


def select_lambda_budget(path, beta):
    """Largest grid lambda whose target loss stays within beta * (1 - c_n)."""
    if not (beta > 0 and math.isfinite(beta)):
        raise InvalidBudget(f"budget must be a positive number, got {beta}")
    if path.n < 2:
        raise InvalidBudget(f"budget selection needs n >= 2, got n={path.n}")
    c_n = slack(path.n)
    threshold = beta * (1.0 - c_n)
    deltas = {lam: delta_n(path, lam) for lam in path.grid}
    if c_n >= 1:
        chosen = 0.0
    else:
        chosen = max(lam for lam, delta in deltas.items() if delta <= threshold)
    assert deltas[chosen] <= threshold or chosen == 0.0
    logger.info(f"budget selection: beta={beta}, c_n={c_n:.4f}, chosen lambda={chosen}")
    return BudgetSelection(beta, c_n, chosen, deltas, threshold)


def oracle_lambda(deltas, beta):
    """max{lambda : delta(lambda) <= beta} for deltas computed with the true distribution."""
    if not beta > 0:
        raise InvalidBudget(f"budget must be positive, got {beta}")
    return max(lam for lam, delta in deltas.items() if delta <= beta)


def interpolate_value(path, lam):
    """Piecewise-linear interpolation of obj_value on the uniform grid {0, 1/m, ..., 1}."""
    if not 0.0 <= lam <= 1.0:
        raise InvalidLambda(f"lambda must lie in [0, 1], got {lam}")
    if not path.grid.is_uniform or path.grid.values[-1] != 1.0:
        raise NonUniformGrid("value interpolation needs the uniform grid {0, 1/m, ..., 1}")
    values = path.obj_values
    m = path.grid.m
    i = int(round(lam * m))
    if abs(lam - i / m) <= GRID_TOL:
        return float(values[i])
    i = min(int(math.floor(lam * m)), m - 1)
    return float(values[i] + (values[i + 1] - values[i]) * m * (lam - i / m))


def interpolate_linear(path, lam):
    """Piecewise-linear interpolation on any grid."""
    if not 0.0 <= lam <= path.grid.values[-1]:
        raise InvalidLambda(f"lambda={lam} outside the grid range")
    return float(np.interp(lam, path.grid.values, path.obj_values))
