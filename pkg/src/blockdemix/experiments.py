"""Monte-Carlo phase-transition sweeps over the number of observations m."""

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import ConfigError, DemixError
from .links import get_link
from .matched_filter import ToneGrid, default_grid, mf_struct_dht
from .model import SignalConfig, normalized_error, synthesize_instance
from .operators import BasisPair, gen_factored, gen_subgaussian
from .seeding import derive_seed
from .solvers import SolverParams, block, dht, dst, lambda_max, plain, struct_dht

ALGORITHMS = ("struct-dht", "dht", "dst", "mf-struct-dht")
CSV_HEADER = "algorithm,m,trial,normalized_error,success,iterations,wall_time_seconds"


@dataclass(frozen=True)
class ExperimentConfig:
    n: int = 4096
    s: int = 160
    b: int = 16
    noise_sigma: float = 0.0
    link_name: str = "sigmoid"
    algorithms: tuple = ("struct-dht", "dht", "dst")
    m_grid: tuple = (320, 549, 777, 1006, 1234, 1463, 1691, 1920)
    trials: int = 20
    success_threshold: float = 0.05
    seed: int = 0
    # solver
    eta_prime: float | None = None
    max_iters: int = 500
    tol: float = 1e-7
    init: str = "zero"
    dst_lambdas: tuple = (0.3, 0.1, 0.03)  # multiples of lambda_max, best kept
    # bases and design
    phi: str = "identity"
    psi: str = "dct-like"
    family: str = "gaussian"
    design_scale: float | None = None  # None: 1/sqrt(m)
    k: int = 4
    T: float = 20.0
    b_exponent: float = 0.5
    # tone grid (periodic runs); None: default_grid(T, radius)
    omega_max: float | None = None
    resolution: float | None = None
    radius: float = 1.0
    refine: bool = False
    output_dir: str | None = None
    timing: bool = False

    def __post_init__(self):
        grid = tuple(int(m) for m in self.m_grid)
        object.__setattr__(self, "m_grid", grid)
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        object.__setattr__(self, "dst_lambdas", tuple(float(x) for x in self.dst_lambdas))
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("m_grid must be strictly increasing")
        if not grid or grid[0] < 1:
            raise ConfigError("m_grid must hold positive sample counts")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not 0 < self.success_threshold < 1:
            raise ConfigError("success_threshold must lie in (0, 1)")
        for alg in self.algorithms:
            if alg not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {alg!r}; choose from {ALGORITHMS}")
        SignalConfig(self.n, self.s, self.b, grid[0], noise_sigma=self.noise_sigma)
        link = get_link(self.link_name)
        for alg in self.algorithms:
            check_compatible(alg, link)
        if "mf-struct-dht" in self.algorithms:
            bad = [m for m in grid if m % self.k]
            if bad:
                raise ConfigError(f"periodic runs need m divisible by k={self.k}: {bad}")

    @property
    def base(self) -> SignalConfig:
        return SignalConfig(self.n, self.s, self.b, self.m_grid[0], noise_sigma=self.noise_sigma)

    @property
    def solver(self) -> SolverParams:
        return SolverParams(block(self.s, self.b), self.eta_prime, self.max_iters, self.tol,
                            init=self.init)

    @property
    def grid(self) -> ToneGrid:
        g = default_grid(self.T, self.radius)
        return ToneGrid(self.omega_max if self.omega_max is not None else g.omega_max,
                        self.resolution if self.resolution is not None else g.resolution)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["algorithms"] = list(self.algorithms)
        d["m_grid"] = list(self.m_grid)
        d["dst_lambdas"] = list(self.dst_lambdas)
        return d


def m_grid_linspace(lo: int, hi: int, steps: int, multiple: int = 1) -> tuple:
    """``steps`` evenly spaced sample counts from lo to hi, rounded to ``multiple``."""
    vals = np.linspace(lo, hi, steps) / multiple
    return tuple(int(v) * multiple for v in np.floor(vals + 0.5))


def desk_config(**overrides) -> ExperimentConfig:
    """n = 2^12, s = 160, b = 16, m from 2s to 12s in 8 steps, 20 trials."""
    base = dict(n=2**12, s=160, b=16, m_grid=m_grid_linspace(320, 1920, 8), trials=20)
    base.update(overrides)
    return ExperimentConfig(**base)


def check_compatible(algorithm: str, link) -> None:
    if algorithm == "mf-struct-dht" and not link.is_periodic:
        raise ConfigError(f"mf-struct-dht needs a periodic link, got {link.name!r}")
    if algorithm != "mf-struct-dht" and link.is_periodic:
        raise ConfigError(f"{algorithm} cannot use periodic link {link.name!r}; "
                          "use mf-struct-dht")


@dataclass
class TrialResult:
    algorithm: str
    m: int
    trial_index: int
    normalized_error: float
    success: bool
    iterations: int
    wall_time_seconds: float | None = None
    error: str | None = None
    extras: dict = field(default_factory=dict)

    def csv_fields(self) -> list[str]:
        return [
            self.algorithm,
            str(self.m),
            str(self.trial_index),
            format(self.normalized_error, ".17g"),
            "true" if self.success else "false",
            str(self.iterations),
            "" if self.wall_time_seconds is None else f"{self.wall_time_seconds:.6f}",
        ]


def trial_seeds(config: ExperimentConfig, algorithm: str, m: int, trial_index: int):
    """``(instance_seed, solver_seed)``.

    The instance seed ignores the algorithm, so all algorithms at a given
    ``(m, trial)`` see the same instance; the solver seed includes it.
    """
    return (derive_seed(config.seed, "instance", m, trial_index),
            derive_seed(config.seed, algorithm, m, trial_index))


@lru_cache(maxsize=4)
def _bases(n, phi, psi, seed) -> BasisPair:
    return BasisPair.from_kinds(n, phi, psi, seed)


def _build_instance(config, algorithm, m, inst_seed):
    link = get_link(config.link_name)
    bases = _bases(config.n, config.phi, config.psi, derive_seed(config.seed, "bases"))
    design_seed = derive_seed(inst_seed, "design")
    if algorithm == "mf-struct-dht":
        q = m // config.k
        design = gen_factored(config.k, q, config.n, config.T, config.family, design_seed,
                              config.b_exponent)
        sig = SignalConfig(config.n, config.s, config.b, m, q=q, k=config.k,
                           noise_sigma=config.noise_sigma)
    else:
        design = gen_subgaussian(m, config.n, config.family, config.design_scale, design_seed)
        sig = SignalConfig(config.n, config.s, config.b, m, noise_sigma=config.noise_sigma)
    return synthesize_instance(sig, bases, design, link, inst_seed), bases, link


def _solve(config, algorithm, instance, bases, link, solver_seed):
    params = replace(config.solver, seed=solver_seed)
    if algorithm == "struct-dht":
        return struct_dht(instance, bases, link, params), {}
    if algorithm == "dht":
        return dht(instance, bases, link, params), {}
    if algorithm == "mf-struct-dht":
        res = mf_struct_dht(instance.y, instance.design, bases, link, config.grid, params,
                            refine=config.refine, truth=instance)
        return res, {"range_violations": res.extras["range_violations"]}
    # dst: best of a small lambda grid, judged against the truth
    lmax = lambda_max(instance, link)
    best, best_err, best_f = None, math.inf, None
    for f in config.dst_lambdas:
        res = dst(instance, bases, link, replace(params, lam=f * lmax))
        err = normalized_error(res.beta_hat, instance.beta)
        if err < best_err or best is None:
            best, best_err, best_f = res, err, f
    return best, {"lambda_factor": best_f, "lambda_max": lmax}


def run_trial(config: ExperimentConfig, algorithm: str, m: int, trial_index: int) -> TrialResult:
    """One synthesize-solve-score cycle, deterministic in ``config`` and the indices."""
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algorithm!r}")
    check_compatible(algorithm, get_link(config.link_name))
    inst_seed, solver_seed = trial_seeds(config, algorithm, m, trial_index)
    start = time.perf_counter()
    try:
        with threadpool_limits(limits=1):
            instance, bases, link = _build_instance(config, algorithm, m, inst_seed)
            res, extras = _solve(config, algorithm, instance, bases, link, solver_seed)
        err = normalized_error(res.beta_hat, instance.beta)
        extras["component_errors"] = [normalized_error(res.theta1_hat, instance.theta_true.theta1),
                                      normalized_error(res.theta2_hat, instance.theta_true.theta2)]
        out = TrialResult(algorithm, m, trial_index, err, bool(err < config.success_threshold),
                          res.iterations, extras=extras)
    except (DemixError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        if isinstance(exc, ConfigError):
            raise
        out = TrialResult(algorithm, m, trial_index, math.nan, False, 0,
                          error=f"{type(exc).__name__}: {exc}")
    if config.timing:
        out.wall_time_seconds = time.perf_counter() - start
    return out


def _run_task(args):
    return run_trial(*args)


@dataclass
class SweepResult:
    config: dict
    rows: list
    aggregates: list = field(default_factory=list)

    def __post_init__(self):
        if not self.aggregates:
            self.aggregates = aggregate(self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for r in self.rows:
            buf.write(",".join(r.csv_fields()) + "\n")
        return buf.getvalue()

    def to_json(self) -> str:
        rows = []
        for r in self.rows:
            d = asdict(r)
            d["normalized_error"] = None if math.isnan(r.normalized_error) else r.normalized_error
            rows.append(d)
        return json.dumps({"config": self.config, "aggregates": self.aggregates,
                           "rows": rows}, indent=2, sort_keys=True)

    def success_curve(self, algorithm: str) -> dict:
        return {a["m"]: a["success_probability"] for a in self.aggregates
                if a["algorithm"] == algorithm}

    def error_curve(self, algorithm: str) -> dict:
        return {a["m"]: a["mean_normalized_error"] for a in self.aggregates
                if a["algorithm"] == algorithm}


def aggregate(rows) -> list:
    """Per (algorithm, m): success probability and mean normalized error.

    ``math.fsum`` makes the means independent of row order. Rows that errored
    count as failures and are left out of the mean error.
    """
    groups: dict = {}
    order = []
    for r in rows:
        key = (r.algorithm, r.m)
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append(r)
    out = []
    for alg, m in order:
        g = groups[(alg, m)]
        errs = [r.normalized_error for r in g if not math.isnan(r.normalized_error)]
        out.append({
            "algorithm": alg,
            "m": m,
            "trials": len(g),
            "successes": sum(r.success for r in g),
            "success_probability": sum(r.success for r in g) / len(g),
            "mean_normalized_error": math.fsum(errs) / len(errs) if errs else None,
            "errors": len(g) - len(errs),
        })
    return out


def run_sweep(config: ExperimentConfig, threads: int = 1, write: bool = True) -> SweepResult:
    """All (algorithm, m, trial) combinations; rows ordered by algorithm as
    configured, then m, then trial, whatever the worker count."""
    tasks = [(config, alg, m, t) for alg in config.algorithms for m in config.m_grid
             for t in range(config.trials)]
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_run_task, tasks, chunksize=1))
    else:
        rows = [_run_task(t) for t in tasks]
    sweep = SweepResult(config.to_dict(), rows)
    if write and config.output_dir:
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "sweep.csv").write_text(sweep.to_csv())
        (out / "sweep.json").write_text(sweep.to_json())
    return sweep


def read_sweep_csv(path) -> SweepResult:
    """Rebuild a SweepResult (without config echo) from a sweep CSV."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines or lines[0] != CSV_HEADER:
        raise ConfigError(f"{path}: not a sweep CSV (header mismatch)")
    rows = []
    for rec in csv.reader(lines[1:]):
        wall = float(rec[6]) if rec[6] else None
        rows.append(TrialResult(rec[0], int(rec[1]), int(rec[2]), float(rec[3]),
                                rec[4] == "true", int(rec[5]), wall))
    return SweepResult({"source": str(path)}, rows)


def emit_outputs(sweep: SweepResult, kinds=("csv", "svg-success", "svg-error"),
                 out_dir=".") -> list:
    """Write the CSV and/or SVG curves; returns the written paths."""
    from .plotting import line_chart

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for kind in kinds:
        if kind == "csv":
            p = out / "sweep.csv"
            p.write_text(sweep.to_csv())
        elif kind in ("svg-success", "svg-error"):
            if not sweep.rows:
                raise ConfigError("cannot plot an empty sweep")
            algs = list(dict.fromkeys(a["algorithm"] for a in sweep.aggregates))
            if kind == "svg-success":
                series = {a: sweep.success_curve(a) for a in algs}
                svg = line_chart(series, "number of samples m", "probability of success",
                                 ylim=(0.0, 1.0))
                p = out / "success.svg"
            else:
                series = {a: {m: v for m, v in sweep.error_curve(a).items() if v is not None}
                          for a in algs}
                svg = line_chart(series, "number of samples m", "mean normalized error",
                                 log_y=True)
                p = out / "error.svg"
            p.write_text(svg)
        else:
            raise ConfigError(f"unknown output kind {kind!r}")
        paths.append(p)
    return paths
