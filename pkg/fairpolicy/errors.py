"""
Exception hierarchy for the fairpolicy package.

Every error raised on purpose by the library derives from FairPolicyError so
callers (and the CLI) can catch the family in one place. Errors that signal an
invalid argument also derive from ValueError.
"""


class FairPolicyError(Exception):
    """Base class for all fairpolicy errors."""


# Distributions
class InvalidSupport(FairPolicyError, ValueError):
    """Support interval with a >= b."""


class EmptySample(FairPolicyError, ValueError):
    """A cdf was requested from an empty list of values."""


class OutOfSupport(FairPolicyError, ValueError):
    """A point lies outside the support interval [a, b]."""


class WeightMismatch(FairPolicyError, ValueError):
    """Mixture weights are negative or do not sum to one."""


class SupportMismatch(FairPolicyError, ValueError):
    """Two cdfs that must share a support do not."""


# Functionals
class InvalidTau(FairPolicyError, ValueError):
    """Quantile level outside (0, 1)."""


# Objective
class InvalidRule(FairPolicyError, ValueError):
    """Decision rule rows are not probability vectors."""


class InvalidArray(FairPolicyError, ValueError):
    """Conditional cdf array violates its invariants."""


class SpaceMismatch(FairPolicyError, ValueError):
    """Objects defined on different covariate spaces were combined."""


class UnknownGroup(FairPolicyError, KeyError):
    """Group label not among the z levels."""


class ZeroGroupMass(FairPolicyError, ValueError):
    """Group cdf requested for a group with zero probability."""


class InvalidLambda(FairPolicyError, ValueError):
    """Preference parameter outside [0, 1]."""


class EmptySet(FairPolicyError, ValueError):
    """Distance to an empty set of rules."""


# Estimation
class ZeroPropensity(FairPolicyError, ValueError):
    """A rule weights a treatment whose propensity (or group share) is zero."""


class ZeroEstimatedPropensity(ZeroPropensity):
    """The rule uses a treatment cell that holds no training records."""


# Optimizer
class NonFiniteObjective(FairPolicyError, ArithmeticError):
    """The objective returned nan or inf."""


# Selection
class InvalidGrid(FairPolicyError, ValueError):
    """Lambda grid is not strictly increasing in [0, 1] starting at 0."""


class LambdaNotOnGrid(FairPolicyError, KeyError):
    """Lambda value is not a grid point of the path."""


class InvalidBudget(FairPolicyError, ValueError):
    """Budget beta is not positive or the path is too short."""


class NonUniformGrid(FairPolicyError, ValueError):
    """Uniform-grid interpolation requested on a non-uniform grid."""


# CLI
class InvalidConfig(FairPolicyError, ValueError):
    """Missing or malformed configuration."""


class SampleParseError(FairPolicyError, ValueError):
    """A sample CSV row could not be parsed."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row


class SchemaViolation(FairPolicyError, ValueError):
    """A parsed sample CSV row breaks the sample schema."""

    def __init__(self, message, row=None):
        super().__init__(message)
        self.row = row
