"""
Closed-form toy problem used as ground truth.

One covariate level, two groups (z = 0 with share p > 1/2, z = 1), two
treatments. Outcome cdfs on [0, 1] are G(y) = sqrt(y) and H(y) = y^2:

    F^1(.|0, 0) = F^2(.|0, 1) = G        F^2(.|0, 0) = F^1(.|0, 1) = H

A rule is the probability delta of assigning treatment 1. The target is
Gini-welfare and the similarity measure is the KS distance.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd
from scipy import optimize

from fairpolicy.distributions import StepCdf, SupportInterval
from fairpolicy.estimation import PropensityModel, TrainingSample
from fairpolicy.objective import CondCdfArray, CovariateSpace, DecisionRule

logger = logging.getLogger(__name__)

CBRT2 = 2.0 ** (1.0 / 3.0)

# max over y in (0, 1) of |sqrt(y) - y^2| = max over u of u (1 - u^3)
PENALTY_CONSTANT = 3.0 / (4.0 * 2.0 ** (2.0 / 3.0))

UNIT = SupportInterval(0.0, 1.0)


class Mechanism(Enum):
    """Treatment assignment in the training data: P(D = 1 | Z = 0), P(D = 1 | Z = 1)."""

    A1 = "A1"
    A2 = "A2"

    @property
    def treated_share(self):
        if self is Mechanism.A1:
            return {"0": 0.25, "1": 0.75}
        return {"0": 0.75, "1": 0.25}


@dataclass(frozen=True)
class ToyParams:
    p: float = 0.75
    lam: float = 0.0

    def __post_init__(self):
        if not 0.5 < self.p < 1.0:
            raise ValueError(f"majority share p must lie in (1/2, 1), got {self.p}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")


def toy_cdf_g(y):
    return np.sqrt(np.clip(y, 0.0, 1.0))


def toy_cdf_h(y):
    return np.clip(y, 0.0, 1.0) ** 2


def _is_g(d, z):
    return (d == 1) == (z == 0)


def toy_group_cdf(delta, z, y):
    """Group-z cdf of the rolled-out rule: delta G + (1 - delta) H for z = 0, mirrored for z = 1."""
    if int(z) == 0:
        return delta * toy_cdf_g(y) + (1.0 - delta) * toy_cdf_h(y)
    return delta * toy_cdf_h(y) + (1.0 - delta) * toy_cdf_g(y)


def toy_population_cdf(delta, p, y):
    weight_g = delta * p + (1.0 - delta) * (1.0 - p)
    return weight_g * toy_cdf_g(y) + (1.0 - weight_g) * toy_cdf_h(y)


def toy_target(delta, p):
    """Gini-welfare of the rolled-out population cdf."""
    return (
        50 * delta
        + 27 * delta ** 2 * (1 - 2 * p) ** 2
        - 2 * delta * p * (54 * p + 23)
        + p * (27 * p + 50)
        + 35
    ) / 420.0


def toy_penalty(delta, p):
    """Largest KS distance between a group cdf and the population cdf."""
    return p * PENALTY_CONSTANT * abs(2 * delta - 1)


def toy_objective(delta, params):
    return (1.0 - params.lam) * toy_target(delta, params.p) - params.lam * toy_penalty(delta, params.p)


def toy_threshold(p):
    """Preference level c(p) at which the optimal rule jumps from 0 to 1/2."""
    return 1.0 - 630.0 * CBRT2 * p / (2.0 * p * (54.0 * p + 315.0 * CBRT2 + 100.0) - 127.0)


def toy_argmax(params, tol=1e-12):
    c = toy_threshold(params.p)
    if math.isclose(params.lam, c, rel_tol=0.0, abs_tol=tol):
        return frozenset({0.0, 0.5})
    if params.lam < c:
        return frozenset({0.0})
    return frozenset({0.5})


def toy_max_value_branches(params):
    """Both closed forms of the value function: (delta = 0 branch, delta = 1/2 branch)."""
    p, lam = params.p, params.lam
    low = (
        p * (-5.0 * (20.0 + 63.0 * CBRT2) * lam - 54.0 * (lam - 1.0) * p + 100.0)
        - 70.0 * (lam - 1.0)
    ) / 840.0
    return low, 89.0 / 560.0 * (1.0 - lam)


def toy_max_value(params):
    low, high = toy_max_value_branches(params)
    return low if params.lam <= toy_threshold(params.p) else high


def penalty_constant():
    return PENALTY_CONSTANT


def numeric_penalty_constant():
    """max over u in [0, 1] of u (1 - u^3), found numerically."""
    res = optimize.minimize_scalar(
        lambda u: -u * (1.0 - u ** 3), bounds=(0.0, 1.0), method="bounded",
        options={"xatol": 1e-12},
    )
    return -res.fun


def verify_penalty_constant(tol=1e-9):
    """
    Compare the numeric maximum with the closed form.

    Returns the numeric maximum; raises ArithmeticError on disagreement.
    """
    numeric = numeric_penalty_constant()
    closed = penalty_constant()
    if abs(numeric - closed) > tol:
        raise ArithmeticError(
            f"penalty constant mismatch: numeric {numeric!r} vs closed form {closed!r}"
        )
    logger.debug(f"penalty constant verified: {numeric:.12f}")
    return numeric


def toy_space():
    return CovariateSpace(("0",), ("0", "1"), 2)


def toy_rule(delta):
    return DecisionRule(toy_space(), [[delta, 1.0 - delta]])


def toy_propensity(p, mechanism):
    shares = Mechanism(mechanism).treated_share
    return PropensityModel.by_group(
        toy_space(),
        {z: [q, 1.0 - q] for z, q in shares.items()},
        {"0": p, "1": 1.0 - p},
    )


def toy_sample(n, p, mechanism, seed):
    """
    n draws from the toy population under the given assignment mechanism.

    Outcomes use inverse transforms: G-draws are U^2 and H-draws are sqrt(U).
    """
    if n < 1:
        raise ValueError(f"sample size must be positive, got {n}")
    mechanism = Mechanism(mechanism)
    rng = np.random.default_rng(seed)
    z = (rng.random(n) >= p).astype(int)
    shares = mechanism.treated_share
    treated = np.where(z == 0, shares["0"], shares["1"])
    d = np.where(rng.random(n) < treated, 1, 2)
    u = rng.random(n)
    y = np.where(_is_g(d, z), u ** 2, np.sqrt(u))
    frame = pd.DataFrame({"y": y, "x": "0", "z": z.astype(str), "d": d})
    return TrainingSample(toy_space(), UNIT, frame)


def discretize(cdf, grid_points):
    """Atoms at k/m, k = 1..m, carrying the cdf increments over ((k-1)/m, k/m]."""
    grid = np.arange(1, grid_points + 1) / grid_points
    values = cdf(np.concatenate([[0.0], grid]))
    return StepCdf.from_atoms(grid, np.diff(values), UNIT)


def toy_cond_array(p, grid_points=2000):
    if grid_points < 2:
        raise ValueError(f"need at least two grid points, got {grid_points}")
    g = discretize(toy_cdf_g, grid_points)
    h = discretize(toy_cdf_h, grid_points)
    cdfs = {}
    for d in (1, 2):
        for z in (0, 1):
            cdfs[(d, "0", str(z))] = g if _is_g(d, z) else h
    return CondCdfArray(toy_space(), cdfs, {("0", "0"): p, ("0", "1"): 1.0 - p})
