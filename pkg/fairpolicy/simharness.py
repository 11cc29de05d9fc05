"""
Monte Carlo replications on the toy problem: learn a rule per preference
parameter from simulated data, then score it against the closed-form oracle.
"""

import logging
from dataclasses import dataclass, field, replace
from functools import partial
from typing import Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from fairpolicy.functionals import SimilarityMeasure, TargetFunctional
from fairpolicy.optimizer import OptimizerConfig
from fairpolicy.oracle import (
    Mechanism,
    ToyParams,
    toy_max_value,
    toy_objective,
    toy_sample,
    toy_target,
)
from fairpolicy.selection import LambdaGrid, oracle_lambda, select_lambda_budget, sweep
from fairpolicy.settings import DEFAULT_SEED, GRID_M, N_JOBS, TOY_P

logger = logging.getLogger(__name__)

REGRET_FLOAT_GUARD = 1e-9

SIM_COLUMNS = ["n", "mechanism", "lambda", "replication", "delta_hat", "emp_value", "regret"]
BUDGET_COLUMNS = [
    "n", "mechanism", "replication", "chosen_lambda", "oracle_lambda",
    "true_delta", "exceeds_budget", "above_oracle",
]


@dataclass(frozen=True)
class SimConfig:
    sample_sizes: Tuple[int, ...] = (100, 1000, 10000)
    mechanisms: Tuple[Mechanism, ...] = (Mechanism.A1, Mechanism.A2)
    grid: LambdaGrid = field(default_factory=lambda: LambdaGrid.uniform(GRID_M))
    replications: int = 100
    p: float = TOY_P
    seed: int = DEFAULT_SEED
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    n_jobs: int = N_JOBS

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError(f"replications must be at least 1, got {self.replications}")
        if not self.sample_sizes or any(int(n) < 1 for n in self.sample_sizes):
            raise ValueError(f"sample sizes must be positive, got {self.sample_sizes}")
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        object.__setattr__(self, "mechanisms", tuple(Mechanism(m) for m in self.mechanisms))
        ToyParams(self.p)


def regret_toy(delta_hat, lam, p):
    """Best achievable toy objective minus the objective at the learned rule."""
    params = ToyParams(p, lam)
    regret = toy_max_value(params) - toy_objective(delta_hat, params)
    if regret < 0:
        if regret < -REGRET_FLOAT_GUARD:
            logger.warning(f"negative regret {regret:.3g} at lambda={lam}, delta={delta_hat}")
            return regret
        return 0.0
    return regret


def _replication_seeds(seed, n, mechanism, replication):
    mech_index = list(Mechanism).index(mechanism)
    state = np.random.SeedSequence([seed, n, mech_index, replication]).generate_state(2)
    return int(state[0]), int(state[1])


def _learned_path(cfg, n, mechanism, replication):
    sample_seed, optimizer_seed = _replication_seeds(cfg.seed, n, mechanism, replication)
    sample = toy_sample(n, cfg.p, mechanism, sample_seed)
    optimizer = replace(cfg.optimizer, seed=optimizer_seed, n_jobs=1)
    return sweep(sample, cfg.grid, TargetFunctional.gini(), SimilarityMeasure.ks(), optimizer)


def _simulate_one(cfg, n, mechanism, replication):
    path = _learned_path(cfg, n, mechanism, replication)
    rows = []
    for entry in path.entries:
        delta_hat = float(entry.rule.probs[0, 0])
        rows.append({
            "n": n,
            "mechanism": mechanism.value,
            "lambda": entry.lam,
            "replication": replication,
            "delta_hat": delta_hat,
            "emp_value": entry.obj_value,
            "regret": regret_toy(delta_hat, entry.lam, cfg.p),
        })
    return rows


def _tasks(cfg):
    return [
        (n, mechanism, rep)
        for n in cfg.sample_sizes
        for mechanism in cfg.mechanisms
        for rep in range(cfg.replications)
    ]


def _run(cfg, worker):
    tasks = _tasks(cfg)
    if cfg.n_jobs > 1:
        chunks = Parallel(n_jobs=cfg.n_jobs)(delayed(worker)(cfg, *task) for task in tasks)
    else:
        chunks = []
        for i, task in enumerate(tasks):
            chunks.append(worker(cfg, *task))
            logger.info(f"replication {i + 1}/{len(tasks)} done (n={task[0]}, {task[1].value})")
    return chunks


@dataclass(frozen=True)
class SimResult:
    """Long table with one row per (n, mechanism, lambda, replication)."""

    frame: pd.DataFrame

    def aggregates(self):
        grouped = self.frame.groupby(["n", "mechanism", "lambda"], sort=True)
        table = grouped[["delta_hat", "emp_value", "regret"]].agg(["mean", "std", "median"])
        table.columns = [f"{column}_{stat}" for column, stat in table.columns]
        return table.reset_index()

    def to_csv(self, path, aggregate_path=None):
        self.frame.to_csv(path, index=False)
        if aggregate_path:
            self.aggregates().to_csv(aggregate_path, index=False)


def run_simulation(cfg):
    chunks = _run(cfg, _simulate_one)
    frame = pd.DataFrame([row for chunk in chunks for row in chunk], columns=SIM_COLUMNS)
    frame = frame.sort_values(["n", "mechanism", "lambda", "replication"], kind="stable")
    return SimResult(frame.reset_index(drop=True))


def _budget_one(cfg, n, mechanism, replication, beta):
    path = _learned_path(cfg, n, mechanism, replication)
    selection = select_lambda_budget(path, beta)
    # target loss of the learned policies measured with the true distribution
    true_targets = {e.lam: toy_target(float(e.rule.probs[0, 0]), cfg.p) for e in path.entries}
    reference = true_targets[0.0]
    true_deltas = {lam: reference - value for lam, value in true_targets.items()}
    oracle = oracle_lambda(true_deltas, beta)
    true_delta = true_deltas[selection.chosen_lambda]
    return [{
        "n": n,
        "mechanism": mechanism.value,
        "replication": replication,
        "chosen_lambda": selection.chosen_lambda,
        "oracle_lambda": oracle,
        "true_delta": true_delta,
        "exceeds_budget": bool(true_delta > beta),
        "above_oracle": bool(selection.chosen_lambda > oracle),
    }]


@dataclass(frozen=True)
class BudgetStudyResult:
    beta: float
    frame: pd.DataFrame

    def frequencies(self):
        """Share of replications breaking the budget or overshooting the oracle lambda."""
        grouped = self.frame.groupby(["n", "mechanism"], sort=True)
        return grouped[["exceeds_budget", "above_oracle"]].mean().reset_index()


def run_budget_study(cfg, beta):
    worker = partial(_budget_one, beta=beta)
    chunks = _run(cfg, worker)
    frame = pd.DataFrame([row for chunk in chunks for row in chunk], columns=BUDGET_COLUMNS)
    frame = frame.sort_values(["n", "mechanism", "replication"], kind="stable")
    return BudgetStudyResult(beta, frame.reset_index(drop=True))
