"""
Derivative-free maximization of a rule-valued objective over the product of
probability simplices.

Each row of a rule is written as a softmax of K - 1 free coordinates (the last
one pinned at 0), so Nelder-Mead searches an unconstrained space and every
evaluated point is a valid rule.
"""

import logging
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed
from scipy import optimize

from fairpolicy.errors import NonFiniteObjective
from fairpolicy.objective import DecisionRule
from fairpolicy.settings import CANDIDATE_STARTS, DEFAULT_SEED, FTOL, MAX_ITERS, N_JOBS

logger = logging.getLogger(__name__)

# ============================================================================
# CONFIGURATION
# ============================================================================
JOINT_DIMENSION_LIMIT = 40   # above this, optimize one x-row at a time
SIMPLEX_EDGE = 0.5           # initial Nelder-Mead simplex edge
XATOL = 1e-6
MAX_SWEEPS = 50              # block-coordinate sweeps
LOGIT_FLOOR = 1e-12


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 1
    candidate_starts: int = CANDIDATE_STARTS
    max_iters: int = MAX_ITERS
    ftol: float = FTOL
    seed: int = DEFAULT_SEED
    n_jobs: int = N_JOBS

    def __post_init__(self):
        for name in ("restarts", "candidate_starts", "max_iters", "n_jobs"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer, got {getattr(self, name)}")
        if not self.ftol > 0:
            raise ValueError(f"ftol must be positive, got {self.ftol}")


@dataclass(frozen=True)
class OptimResult:
    rule: DecisionRule
    value: float
    evaluations: int
    converged: bool


def random_rule(space, rng):
    """Rows uniform on the simplex (normalized exponential spacings)."""
    draws = rng.standard_exponential((len(space.x_levels), space.k))
    return DecisionRule(space, draws / draws.sum(axis=1, keepdims=True))


def _to_probs(theta, space):
    logits = np.zeros((len(space.x_levels), space.k))
    logits[:, :-1] = np.reshape(theta, (len(space.x_levels), space.k - 1))
    logits -= logits.max(axis=1, keepdims=True)
    weights = np.exp(logits)
    return weights / weights.sum(axis=1, keepdims=True)


def _to_theta(probs):
    logs = np.log(np.clip(probs, LOGIT_FLOOR, None))
    return (logs[:, :-1] - logs[:, -1:]).ravel()


class _CountingObjective:
    """Counts evaluations and rejects non-finite values."""

    def __init__(self, obj, space):
        self.obj = obj
        self.space = space
        self.evaluations = 0

    def rule(self, theta):
        return DecisionRule(self.space, _to_probs(theta, self.space))

    def __call__(self, rule):
        self.evaluations += 1
        value = self.obj(rule)
        if not np.isfinite(value):
            raise NonFiniteObjective(f"objective returned {value} at {rule!r}")
        return float(value)


def _nelder_mead(f, x0, cfg, rows):
    simplex = np.vstack([x0, x0 + SIMPLEX_EDGE * np.eye(x0.size)])
    return optimize.minimize(
        f,
        x0,
        method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "maxiter": cfg.max_iters * rows,
            "fatol": cfg.ftol,
            "xatol": XATOL,
        },
    )


def _run_restart(obj, space, cfg, restart):
    rng = np.random.default_rng([cfg.seed, restart])
    counted = _CountingObjective(obj, space)

    best_start, best_start_value = None, -np.inf
    for _ in range(cfg.candidate_starts):
        candidate = random_rule(space, rng)
        value = counted(candidate)
        if value > best_start_value:
            best_start, best_start_value = candidate, value

    theta = _to_theta(best_start.probs)
    current = best_start_value
    width = space.k - 1
    if theta.size <= JOINT_DIMENSION_LIMIT:
        blocks = [slice(0, theta.size)]
        sweeps = 1
        rows = len(space.x_levels)
    else:
        blocks = [slice(i * width, (i + 1) * width) for i in range(len(space.x_levels))]
        sweeps = MAX_SWEEPS
        rows = 1

    converged = True
    for sweep in range(sweeps):
        start_of_sweep = current
        for block in blocks:
            def negative(sub, block=block):
                trial = theta.copy()
                trial[block] = sub
                return -counted(counted.rule(trial))

            res = _nelder_mead(negative, theta[block].copy(), cfg, rows)
            converged = converged and bool(res.success)
            if -res.fun > current:
                theta[block] = res.x
                current = -res.fun
        if current - start_of_sweep < cfg.ftol:
            break
        if sweep == sweeps - 1 and len(blocks) > 1:
            logger.warning(f"restart {restart}: block sweeps stopped at the cap of {sweeps}")
            converged = False

    rule = counted.rule(theta)
    value = counted(rule)
    if value < best_start_value:
        rule, value = best_start, best_start_value
    logger.debug(f"restart {restart}: value={value:.6g} after {counted.evaluations} evaluations")
    return OptimResult(rule, value, counted.evaluations, converged)


def maximize(obj, space, cfg=None):
    """
    Best rule found over cfg.restarts independent restarts. Each restart picks
    the best of cfg.candidate_starts random rules and refines it with
    Nelder-Mead; ties between restarts go to the lowest restart index.
    """
    cfg = cfg or OptimizerConfig()
    if cfg.n_jobs > 1 and cfg.restarts > 1:
        results = Parallel(n_jobs=cfg.n_jobs)(
            delayed(_run_restart)(obj, space, cfg, r) for r in range(cfg.restarts)
        )
    else:
        results = [_run_restart(obj, space, cfg, r) for r in range(cfg.restarts)]

    best = results[0]
    for result in results[1:]:
        if result.value > best.value:
            best = result
    evaluations = sum(r.evaluations for r in results)
    logger.debug(f"maximize: value={best.value:.6g}, {cfg.restarts} restart(s), {evaluations} evaluations")
    return OptimResult(best.rule, best.value, evaluations, best.converged)
