"""
Command-line front end.

    fairpolicy fit SAMPLE.csv            fitted conditional cdf array (JSON)
    fairpolicy sweep SAMPLE.csv          lambda path (CSV) and rules (JSON)
    fairpolicy select [SAMPLE.csv]       budget-based lambda (JSON)
    fairpolicy simulate                  toy Monte Carlo tables (CSV)
    fairpolicy oracle-check              closed-form self-test
    fairpolicy toy-sample                toy training sample (CSV)

Exit codes: 0 ok, 1 self-test failure, 2 parse error, 3 schema violation,
4 optimizer failure, 5 configuration error.
"""

import argparse
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from dotenv import dotenv_values

from fairpolicy import settings
from fairpolicy.distributions import SupportInterval
from fairpolicy.errors import (
    FairPolicyError,
    InvalidConfig,
    NonFiniteObjective,
    SampleParseError,
    SchemaViolation,
)
from fairpolicy.estimation import SAMPLE_COLUMNS, TrainingSample, fit_plugin
from fairpolicy.functionals import SimilarityMeasure, TargetFunctional, parse_similarity, parse_target
from fairpolicy.objective import CovariateSpace, PluginModel, omega
from fairpolicy.optimizer import OptimizerConfig, maximize
from fairpolicy.oracle import (
    PENALTY_CONSTANT,
    Mechanism,
    ToyParams,
    numeric_penalty_constant,
    toy_cond_array,
    toy_max_value,
    toy_max_value_branches,
    toy_objective,
    toy_penalty,
    toy_rule,
    toy_sample,
    toy_space,
    toy_target,
    toy_threshold,
)
from fairpolicy.selection import (
    Estimator,
    LambdaGrid,
    LambdaPath,
    PenalizedObjective,
    select_lambda_budget,
    sweep,
)
from fairpolicy.simharness import SimConfig, run_simulation

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SELF_TEST = 1
EXIT_PARSE = 2
EXIT_SCHEMA = 3
EXIT_OPTIMIZER = 4
EXIT_CONFIG = 5

COMMANDS = ("fit", "sweep", "select", "simulate", "oracle-check", "toy-sample")


# ============================================================================
# CONFIGURATION
# ============================================================================

def _bool(value):
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _pair(value):
    if isinstance(value, (list, tuple)):
        a, b = value
    else:
        a, b = str(value).split(",")
    return float(a), float(b)


def _ints(value):
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    return tuple(int(v) for v in str(value).split(",") if v.strip())


def _labels(value):
    if isinstance(value, (list, tuple)):
        return tuple(str(v) for v in value)
    return tuple(v.strip() for v in str(value).split(",") if v.strip())


# key -> (converter, built-in default); built-in defaults already reflect the
# FAIRPOLICY_* environment through fairpolicy.settings
CONFIG_KEYS = {
    "output_dir": (str, "."),
    "seed": (int, settings.DEFAULT_SEED),
    "n_jobs": (int, settings.N_JOBS),
    "log_level": (str, settings.LOG_LEVEL),
    "quiet": (_bool, False),
    "target": (str, "gini"),
    "similarity": (str, "ks"),
    "m": (int, settings.GRID_M),
    "beta": (float, None),
    "support": (_pair, (0.0, 1.0)),
    "estimator": (str, "plugin"),
    "restarts": (int, 1),
    "candidate_starts": (int, settings.CANDIDATE_STARTS),
    "max_iters": (int, settings.MAX_ITERS),
    "ftol": (float, settings.FTOL),
    "k": (int, None),
    "x_levels": (_labels, None),
    "z_levels": (_labels, None),
    "rescale": (_bool, False),
    "drop_empty_x": (_bool, False),
    "path_csv": (str, None),
    "rules_json": (str, None),
    "sample_sizes": (_ints, (100, 1000, 10000)),
    "mechanisms": (_labels, ("A1", "A2")),
    "replications": (int, 100),
    "p": (float, settings.TOY_P),
    "grid_points": (int, 2000),
    "n": (int, 1000),
    "mechanism": (str, "A1"),
}


@dataclass(frozen=True)
class CliConfig:
    command: str
    input_path: Optional[str] = None
    output_dir: str = "."
    seed: int = settings.DEFAULT_SEED
    n_jobs: int = settings.N_JOBS
    log_level: str = settings.LOG_LEVEL
    quiet: bool = False
    target: str = "gini"
    similarity: str = "ks"
    m: int = settings.GRID_M
    beta: Optional[float] = None
    support: Tuple[float, float] = (0.0, 1.0)
    estimator: str = "plugin"
    restarts: int = 1
    candidate_starts: int = settings.CANDIDATE_STARTS
    max_iters: int = settings.MAX_ITERS
    ftol: float = settings.FTOL
    k: Optional[int] = None
    x_levels: Optional[Tuple[str, ...]] = None
    z_levels: Optional[Tuple[str, ...]] = None
    rescale: bool = False
    drop_empty_x: bool = False
    path_csv: Optional[str] = None
    rules_json: Optional[str] = None
    sample_sizes: Tuple[int, ...] = (100, 1000, 10000)
    mechanisms: Tuple[str, ...] = ("A1", "A2")
    replications: int = 100
    p: float = settings.TOY_P
    grid_points: int = 2000
    n: int = 1000
    mechanism: str = "A1"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InvalidConfig(f"unknown command {self.command!r}")
        if self.m < 1:
            raise InvalidConfig(f"grid m must be at least 1, got {self.m}")
        if self.estimator not in ("plugin", "ipw-estimated"):
            raise InvalidConfig(f"unknown estimator {self.estimator!r}; use plugin or ipw-estimated")
        if self.command in ("fit", "sweep") and not self.input_path:
            raise InvalidConfig(f"{self.command} needs an input sample CSV")

    def optimizer(self):
        try:
            return OptimizerConfig(
                restarts=self.restarts,
                candidate_starts=self.candidate_starts,
                max_iters=self.max_iters,
                ftol=self.ftol,
                seed=self.seed,
                n_jobs=self.n_jobs,
            )
        except ValueError as e:
            raise InvalidConfig(str(e))

    def functionals(self):
        try:
            return parse_target(self.target), parse_similarity(self.similarity)
        except ValueError as e:
            raise InvalidConfig(str(e))

    def support_interval(self):
        try:
            return SupportInterval(*self.support)
        except ValueError as e:
            raise InvalidConfig(str(e))


def read_config_file(path):
    """key=value lines; keys are case-insensitive and may use '-' for '_'."""
    if not os.path.exists(path):
        raise InvalidConfig(f"config file not found: {path}")
    values = {}
    for key, value in dotenv_values(path).items():
        name = key.strip().lower().replace("-", "_")
        if name not in CONFIG_KEYS:
            raise InvalidConfig(f"unknown config key {key!r} in {path}")
        values[name] = value
    return values


def resolve_config(args):
    """Explicit flag > config file > environment > built-in default."""
    file_values = read_config_file(args.config) if getattr(args, "config", None) else {}
    resolved = {}
    for name, (convert, default) in CONFIG_KEYS.items():
        flag = getattr(args, name, None)
        try:
            if flag is not None:
                resolved[name] = convert(flag)
            elif name in file_values and file_values[name] is not None:
                resolved[name] = convert(file_values[name])
            else:
                resolved[name] = default
        except (TypeError, ValueError) as e:
            raise InvalidConfig(f"bad value for {name}: {e}")
    return CliConfig(command=args.command, input_path=getattr(args, "input", None), **resolved)


# ============================================================================
# SAMPLE CSV
# ============================================================================

def read_sample_csv(path, support, k=None, x_levels=None, z_levels=None,
                    rescale=False, drop_empty_x=False):
    """
    Parse a y,x,z,d sample. Row numbers in errors count data rows from 1.

    Levels are taken in order of first appearance unless declared; with
    drop_empty_x, declared x levels without observations are removed.
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise SampleParseError(f"could not read {path}: {e}")
    header = [c.strip() for c in frame.columns]
    if header != SAMPLE_COLUMNS:
        raise SampleParseError(f"expected header {','.join(SAMPLE_COLUMNS)}, got {','.join(header)}")
    if frame.empty:
        raise SchemaViolation(f"{path} holds no data rows")
    frame.columns = header

    y = pd.to_numeric(frame["y"].str.strip(), errors="coerce")
    d = pd.to_numeric(frame["d"].str.strip(), errors="coerce")
    bad_y = np.flatnonzero(y.isna().to_numpy() | ~np.isfinite(y.fillna(0).to_numpy()))
    if bad_y.size:
        row = int(bad_y[0]) + 1
        raise SampleParseError(f"row {row}: y={frame['y'].iloc[row - 1]!r} is not a number", row)
    bad_d = np.flatnonzero(d.isna().to_numpy() | (d.fillna(0) % 1 != 0).to_numpy())
    if bad_d.size:
        row = int(bad_d[0]) + 1
        raise SampleParseError(f"row {row}: d={frame['d'].iloc[row - 1]!r} is not an integer", row)
    x = frame["x"].str.strip()
    z = frame["z"].str.strip()
    d = d.astype(int)

    for name, column in (("x", x), ("z", z)):
        blank = np.flatnonzero((column == "").to_numpy())
        if blank.size:
            row = int(blank[0]) + 1
            raise SchemaViolation(f"row {row}: empty {name} label", row)

    observed_k = int(d.max())
    k = k if k is not None else max(observed_k, 2)
    out_of_range = np.flatnonzero(((d < 1) | (d > k)).to_numpy())
    if out_of_range.size:
        row = int(out_of_range[0]) + 1
        raise SchemaViolation(f"row {row}: treatment d={d.iloc[row - 1]} outside 1..{k}", row)

    y = y.to_numpy(dtype=float)
    if rescale:
        low, high = y.min(), y.max()
        y = (y - low) / (high - low) if high > low else np.zeros_like(y)
        support = SupportInterval(0.0, 1.0)
    else:
        outside = np.flatnonzero((y < support.a) | (y > support.b))
        if outside.size:
            row = int(outside[0]) + 1
            raise SchemaViolation(
                f"row {row}: y={y[row - 1]} outside the support [{support.a}, {support.b}]", row
            )

    space_x = _levels(x, x_levels, "x")
    space_z = _levels(z, z_levels, "z")
    if drop_empty_x:
        seen = set(x)
        dropped = [level for level in space_x if level not in seen]
        if dropped:
            logger.info(f"dropping x levels without observations: {dropped}")
        space_x = tuple(level for level in space_x if level in seen)
    try:
        space = CovariateSpace(space_x, space_z, k)
    except ValueError as e:
        raise SchemaViolation(str(e))
    data = pd.DataFrame({"y": y, "x": x.to_numpy(), "z": z.to_numpy(), "d": d.to_numpy()})
    return TrainingSample.from_frame(data, space, support)


def _levels(column, declared, name):
    observed = tuple(pd.unique(column))
    if declared is None:
        return observed
    unknown = np.flatnonzero(~column.isin(declared).to_numpy())
    if unknown.size:
        row = int(unknown[0]) + 1
        raise SchemaViolation(f"row {row}: {name}={column.iloc[row - 1]!r} is not a declared level", row)
    return tuple(declared)


def write_sample_csv(sample, path):
    _atomic_write(path, lambda f: sample.to_frame().to_csv(f, index=False))


# ============================================================================
# OUTPUT HELPERS
# ============================================================================

def _atomic_write(path, write):
    """Write through a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as f:
            write(f)
        os.replace(tmp_path, path)
    except Exception:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise


def _write_json(path, document):
    _atomic_write(path, lambda f: f.write(json.dumps(document, indent=2) + "\n"))


def _write_frame(path, frame):
    _atomic_write(path, lambda f: frame.to_csv(f, index=False))


def _progress(cfg, message):
    if not cfg.quiet:
        print(f"✓ {message}")


def _output(cfg, name):
    return os.path.join(cfg.output_dir, name)


def _load_sample(cfg):
    return read_sample_csv(
        cfg.input_path,
        cfg.support_interval(),
        k=cfg.k,
        x_levels=cfg.x_levels,
        z_levels=cfg.z_levels,
        rescale=cfg.rescale,
        drop_empty_x=cfg.drop_empty_x,
    )


def _estimator(cfg):
    return Estimator.plugin() if cfg.estimator == "plugin" else Estimator.ipw_estimated()


def fitted_array_document(sample, arr):
    counts = sample.frame.groupby(["d", "x", "z"]).size()
    cells = []
    for (d, x, z), cdf in arr.cdfs.items():
        cells.append({
            "d": d,
            "x": x,
            "z": z,
            "empty": int(counts.get((d, x, z), 0)) == 0,
            "atoms": cdf.to_dict()["atoms"],
        })
    return {
        "support": [arr.support.a, arr.support.b],
        "n": sample.n,
        "x_levels": list(arr.space.x_levels),
        "z_levels": list(arr.space.z_levels),
        "k": arr.space.k,
        "cells": cells,
        "pxz": [{"x": x, "z": z, "p": p} for (x, z), p in arr.pxz.items()],
    }


# ============================================================================
# COMMANDS
# ============================================================================

def cmd_fit(cfg):
    sample = _load_sample(cfg)
    arr = fit_plugin(sample)
    path = _output(cfg, "fitted_array.json")
    _write_json(path, fitted_array_document(sample, arr))
    _progress(cfg, f"Fitted {len(arr.cdfs)} cells from {sample.n} records -> {path}")
    return EXIT_OK


def _sweep_from_sample(cfg):
    sample = _load_sample(cfg)
    t, s = cfg.functionals()
    path = sweep(sample, LambdaGrid.uniform(cfg.m), t, s, cfg.optimizer(), _estimator(cfg))
    return sample, path


def cmd_sweep(cfg):
    _, path = _sweep_from_sample(cfg)
    csv_path, rules_path = _output(cfg, "lambda_path.csv"), _output(cfg, "rules.json")
    _write_frame(csv_path, path.to_frame())
    _write_json(rules_path, path.rules_document())
    _progress(cfg, f"Swept {len(path.grid)} lambda values -> {csv_path}, {rules_path}")
    return EXIT_OK


def cmd_select(cfg):
    if cfg.beta is None:
        raise InvalidConfig("select needs a budget: pass --beta or set beta in the config file")
    if cfg.path_csv or cfg.rules_json:
        if not (cfg.path_csv and cfg.rules_json):
            raise InvalidConfig("--path-csv and --rules-json must be given together")
        path = LambdaPath.from_files(cfg.path_csv, cfg.rules_json)
    elif cfg.input_path:
        _, path = _sweep_from_sample(cfg)
    else:
        raise InvalidConfig("select needs a sample CSV or --path-csv/--rules-json")
    try:
        selection = select_lambda_budget(path, cfg.beta)
    except ValueError as e:
        raise InvalidConfig(str(e))
    document = selection.to_dict()
    document["n"] = path.n
    document["chosen_rule"] = path.entry(selection.chosen_lambda).rule.to_dict()
    out = _output(cfg, "selection.json")
    _write_json(out, document)
    _progress(cfg, f"Chosen lambda {selection.chosen_lambda:g} (c_n={selection.c_n:.4f}) -> {out}")
    return EXIT_OK


def cmd_simulate(cfg):
    try:
        sim = SimConfig(
            sample_sizes=cfg.sample_sizes,
            mechanisms=tuple(Mechanism(m) for m in cfg.mechanisms),
            grid=LambdaGrid.uniform(cfg.m),
            replications=cfg.replications,
            p=cfg.p,
            seed=cfg.seed,
            optimizer=cfg.optimizer(),
            n_jobs=cfg.n_jobs,
        )
    except ValueError as e:
        raise InvalidConfig(str(e))
    result = run_simulation(sim)
    raw, agg = _output(cfg, "simulation.csv"), _output(cfg, "simulation_aggregates.csv")
    _write_frame(raw, result.frame)
    _write_frame(agg, result.aggregates())
    _progress(cfg, f"Simulated {len(result.frame)} rows -> {raw}, {agg}")
    return EXIT_OK


def cmd_toy_sample(cfg):
    try:
        sample = toy_sample(cfg.n, cfg.p, Mechanism(cfg.mechanism), cfg.seed)
    except ValueError as e:
        raise InvalidConfig(str(e))
    out = _output(cfg, "toy_sample.csv")
    write_sample_csv(sample, out)
    _progress(cfg, f"Wrote {sample.n} toy records -> {out}")
    return EXIT_OK


# ============================================================================
# ORACLE SELF-TEST
# ============================================================================

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def run_oracle_suite(p=0.75, grid_points=2000, penalty_constant=PENALTY_CONSTANT, seed=None):
    """Numeric machinery against the toy closed forms."""
    checks = []
    numeric = numeric_penalty_constant()
    checks.append(CheckResult(
        "penalty constant",
        abs(numeric - penalty_constant) <= 1e-9,
        f"numeric max {numeric:.12f} vs constant {penalty_constant:.12f}",
    ))

    arr = toy_cond_array(p, grid_points)
    t, s = TargetFunctional.gini(), SimilarityMeasure.ks()
    worst = 0.0
    for delta in np.linspace(0.0, 1.0, 21):
        for lam in np.linspace(0.0, 1.0, 5):
            closed = (1 - lam) * toy_target(delta, p) - lam * p * penalty_constant * abs(2 * delta - 1)
            worst = max(worst, abs(omega(toy_rule(delta), arr, lam, t, s) - closed))
    checks.append(CheckResult("objective agreement", worst <= 0.01, f"max |omega - closed form| = {worst:.2e}"))

    c = toy_threshold(p)
    at_c = ToyParams(p, c)
    gap = abs(toy_objective(0.0, at_c) - toy_objective(0.5, at_c))
    checks.append(CheckResult("branch equality at c(p)", gap <= 1e-10, f"c(p)={c:.6f}, gap={gap:.2e}"))

    left, right = toy_max_value_branches(at_c)
    checks.append(CheckResult(
        "value continuity at c(p)", abs(left - right) <= 1e-10, f"branches differ by {abs(left - right):.2e}"
    ))

    cfg = OptimizerConfig(seed=settings.DEFAULT_SEED if seed is None else seed)
    model = PluginModel(arr)
    for lam, expected, tol in ((0.0, 0.0, 0.01), (0.5, 0.5, 0.02)):
        result = maximize(PenalizedObjective(model, lam, t, s), toy_space(), cfg)
        delta_hat = float(result.rule.probs[0, 0])
        checks.append(CheckResult(
            f"argmax recovery at lambda={lam:g}",
            abs(delta_hat - expected) <= tol,
            f"delta_hat={delta_hat:.4f}, expected {expected} +/- {tol}",
        ))

    penalty_gap = abs(toy_penalty(0.0, p) - p * penalty_constant)
    checks.append(CheckResult("penalty at delta=0", penalty_gap <= 1e-12, f"gap={penalty_gap:.2e}"))
    max_gap = abs(toy_max_value(ToyParams(p, 1.0)))
    checks.append(CheckResult("value at lambda=1", max_gap <= 1e-12, f"value={max_gap:.2e}"))
    return checks


def cmd_oracle_check(cfg, penalty_constant=PENALTY_CONSTANT):
    checks = run_oracle_suite(cfg.p, cfg.grid_points, penalty_constant, seed=cfg.seed)
    failed = [c for c in checks if not c.passed]
    for check in checks:
        if check.passed:
            _progress(cfg, f"{check.name}: {check.detail}")
    for check in failed:
        print(f"✗ {check.name}: {check.detail}", file=sys.stderr)
    if failed:
        print(f"⚠ Warning: {len(failed)} of {len(checks)} oracle checks failed", file=sys.stderr)
        return EXIT_SELF_TEST
    return EXIT_OK


HANDLERS = {
    "fit": cmd_fit,
    "sweep": cmd_sweep,
    "select": cmd_select,
    "simulate": cmd_simulate,
    "oracle-check": cmd_oracle_check,
    "toy-sample": cmd_toy_sample,
}


# ============================================================================
# ARGUMENTS
# ============================================================================

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value configuration file")
    common.add_argument("-o", "--output-dir", dest="output_dir", help="directory for output files")
    common.add_argument("--seed", type=int, help="root seed for all randomness")
    common.add_argument("--n-jobs", dest="n_jobs", type=int, help="parallel workers")
    common.add_argument("--log-level", dest="log_level", help="logging level (stderr)")
    common.add_argument("--quiet", action="store_true", default=None, help="suppress progress lines")

    learning = argparse.ArgumentParser(add_help=False)
    learning.add_argument("--target", help="gini, mean or quantile:<tau>")
    learning.add_argument("--similarity", help="ks, one-sided-ks or abs-diff:<target>")
    learning.add_argument("--m", type=int, help="uniform lambda grid {0, 1/m, ..., 1}")
    learning.add_argument("--support", nargs=2, type=float, metavar=("A", "B"), help="outcome support")
    learning.add_argument("--estimator", help="plugin or ipw-estimated")
    learning.add_argument("--restarts", type=int)
    learning.add_argument("--candidate-starts", dest="candidate_starts", type=int)
    learning.add_argument("--max-iters", dest="max_iters", type=int)
    learning.add_argument("--ftol", type=float)
    learning.add_argument("--k", type=int, help="number of treatments (default: largest observed d)")
    learning.add_argument("--x-levels", dest="x_levels", help="declared x levels, comma separated")
    learning.add_argument("--z-levels", dest="z_levels", help="declared z levels, comma separated")
    learning.add_argument("--rescale", action="store_true", default=None, help="min-max rescale y to [0, 1]")
    learning.add_argument("--drop-empty-x", dest="drop_empty_x", action="store_true", default=None,
                          help="drop declared x levels without observations")

    toy = argparse.ArgumentParser(add_help=False)
    toy.add_argument("--p", type=float, help="majority share of the toy population")

    parser = argparse.ArgumentParser(
        prog="fairpolicy",
        description="Distributional policy learning with a fairness penalty.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", parents=[common, learning], help="fit the plug-in cdf array")
    fit.add_argument("input", help="sample CSV with header y,x,z,d")

    sw = sub.add_parser("sweep", parents=[common, learning], help="optimize over a lambda grid")
    sw.add_argument("input", help="sample CSV with header y,x,z,d")

    sel = sub.add_parser("select", parents=[common, learning], help="budget-based lambda choice")
    sel.add_argument("input", nargs="?", help="sample CSV (omit when passing a saved path)")
    sel.add_argument("--beta", type=float, help="budget on the target loss")
    sel.add_argument("--path-csv", dest="path_csv", help="saved lambda path CSV")
    sel.add_argument("--rules-json", dest="rules_json", help="saved rules JSON")

    sim = sub.add_parser("simulate", parents=[common, learning, toy], help="toy Monte Carlo study")
    sim.add_argument("--sample-sizes", dest="sample_sizes", help="comma separated, e.g. 100,1000")
    sim.add_argument("--mechanisms", help="comma separated subset of A1,A2")
    sim.add_argument("--replications", type=int)

    oc = sub.add_parser("oracle-check", parents=[common, toy], help="closed-form self-test")
    oc.add_argument("--grid-points", dest="grid_points", type=int)

    ts = sub.add_parser("toy-sample", parents=[common, toy], help="write a toy training sample")
    ts.add_argument("--n", type=int, help="sample size")
    ts.add_argument("--mechanism", help="A1 or A2")
    return parser


def _configure_logging(level):
    numeric = getattr(logging, str(level).upper(), None)
    if not isinstance(numeric, int):
        raise InvalidConfig(f"unknown log level {level!r}")
    logging.basicConfig(level=numeric, format=settings.LOG_FORMAT, stream=sys.stderr, force=True)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        _configure_logging(cfg.log_level)
        logger.info(f"running {cfg.command}")
        return HANDLERS[cfg.command](cfg)
    except InvalidConfig as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SampleParseError as e:
        print(f"Parse error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except SchemaViolation as e:
        print(f"Schema violation: {e}", file=sys.stderr)
        return EXIT_SCHEMA
    except NonFiniteObjective as e:
        print(f"Optimizer failure: {e}", file=sys.stderr)
        return EXIT_OPTIMIZER
    except FairPolicyError as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_OPTIMIZER
    except OSError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
