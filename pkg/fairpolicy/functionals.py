"""
Target functionals T and similarity measures S on StepCdf.

Gini-welfare and the mean satisfy |T(F) - T(G)| <= (b - a) * sup|F - G|; the
quantile is offered as a target but carries no such certificate.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from fairpolicy.distributions import ks_distance, one_sided_ks
from fairpolicy.errors import InvalidTau, SupportMismatch


class TargetKind(Enum):
    GINI_WELFARE = "gini"
    MEAN = "mean"
    QUANTILE = "quantile"


class SimilarityKind(Enum):
    KS = "ks"
    ONE_SIDED_KS = "one-sided-ks"
    ABS_TARGET_DIFF = "abs-diff"


def mean(F):
    return float(np.dot(F.points, F.masses))


def mad_half(F):
    """
    Half the mean absolute difference, 1/2 sum_ij m_i m_j |x_i - x_j|.

    Points are sorted, so the double sum collapses to one pass over prefix
    sums of mass and mass-weighted position.
    """
    x, m = F.points, F.masses
    mass_before = np.concatenate([[0.0], np.cumsum(m)[:-1]])
    moment_before = np.concatenate([[0.0], np.cumsum(m * x)[:-1]])
    return float(np.sum(m * (x * mass_before - moment_before)))


def gini_welfare(F):
    """Gini-welfare normalized by 2: (mean - mad_half) / 2."""
    return (mean(F) - mad_half(F)) / 2.0


def quantile(F, tau):
    """Generalized inverse inf{y : F(y) >= tau}."""
    if not 0.0 < tau < 1.0:
        raise InvalidTau(f"quantile level must lie in (0, 1), got {tau}")
    idx = int(np.searchsorted(F.cumulative, tau, side="left"))
    return float(F.points[min(idx, F.points.size - 1)])


@dataclass(frozen=True)
class TargetFunctional:
    kind: TargetKind
    tau: Optional[float] = None

    def __post_init__(self):
        if self.kind is TargetKind.QUANTILE:
            if self.tau is None or not 0.0 < self.tau < 1.0:
                raise InvalidTau(f"quantile level must lie in (0, 1), got {self.tau}")
        elif self.tau is not None:
            raise ValueError(f"{self.kind.value} takes no tau")

    @classmethod
    def gini(cls):
        return cls(TargetKind.GINI_WELFARE)

    @classmethod
    def mean(cls):
        return cls(TargetKind.MEAN)

    @classmethod
    def quantile(cls, tau):
        return cls(TargetKind.QUANTILE, float(tau))

    def __call__(self, F):
        if self.kind is TargetKind.GINI_WELFARE:
            return gini_welfare(F)
        if self.kind is TargetKind.MEAN:
            return mean(F)
        return quantile(F, self.tau)

    def lipschitz_constant(self, support):
        """Sup-norm Lipschitz constant on the support, None if not certified."""
        if self.kind is TargetKind.QUANTILE:
            return None
        return support.width

    @property
    def name(self):
        if self.kind is TargetKind.QUANTILE:
            return f"quantile:{self.tau:g}"
        return self.kind.value


@dataclass(frozen=True)
class SimilarityMeasure:
    kind: SimilarityKind
    inner: Optional[TargetFunctional] = None

    def __post_init__(self):
        if (self.kind is SimilarityKind.ABS_TARGET_DIFF) != (self.inner is not None):
            raise ValueError("an inner target is required exactly for abs-diff")

    @classmethod
    def ks(cls):
        return cls(SimilarityKind.KS)

    @classmethod
    def one_sided_ks(cls):
        return cls(SimilarityKind.ONE_SIDED_KS)

    @classmethod
    def abs_target_diff(cls, inner):
        return cls(SimilarityKind.ABS_TARGET_DIFF, inner)

    def __call__(self, F, G):
        return similarity(self, F, G)

    @property
    def name(self):
        if self.kind is SimilarityKind.ABS_TARGET_DIFF:
            return f"abs-diff:{self.inner.name}"
        return self.kind.value


def similarity(S, F, G):
    if F.support != G.support:
        raise SupportMismatch("similarity needs cdfs on one support")
    if S.kind is SimilarityKind.KS:
        return ks_distance(F, G)
    if S.kind is SimilarityKind.ONE_SIDED_KS:
        return one_sided_ks(F, G)
    return abs(S.inner(F) - S.inner(G))


def parse_target(name):
    """'gini', 'mean' or 'quantile:<tau>'."""
    key, _, arg = name.strip().lower().partition(":")
    if key in ("gini", "gini-welfare", "gini_welfare"):
        return TargetFunctional.gini()
    if key == "mean":
        return TargetFunctional.mean()
    if key == "quantile":
        try:
            return TargetFunctional.quantile(float(arg or 0.5))
        except ValueError as e:
            raise InvalidTau(f"bad quantile level in {name!r}: {e}")
    raise ValueError(f"unknown target functional {name!r}")


def parse_similarity(name):
    """'ks', 'one-sided-ks' or 'abs-diff:<target>'."""
    key, _, arg = name.strip().lower().partition(":")
    if key == "ks":
        return SimilarityMeasure.ks()
    if key in ("one-sided-ks", "one_sided_ks"):
        return SimilarityMeasure.one_sided_ks()
    if key in ("abs-diff", "abs_diff"):
        return SimilarityMeasure.abs_target_diff(parse_target(arg or "gini"))
    raise ValueError(f"unknown similarity measure {name!r}")
