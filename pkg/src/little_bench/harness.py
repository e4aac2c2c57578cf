"""Monte Carlo disorder averaging over seeded instances.

Trial ``t`` of an experiment draws its disorder from
``derive_seed(master_seed, t, purpose)``, so adding trials extends an experiment
without touching earlier ones. Per-trial values are collected by index and
summed with ``math.fsum`` in index order: results do not depend on ``workers``.
"""

import logging
import math
import threading
from concurrent.futures import FIRST_EXCEPTION, ThreadPoolExecutor, wait
from dataclasses import replace
from typing import Callable, Sequence

from little_bench.bounds import bound_report
from little_bench.cache import load_cache, write_cache
from little_bench.core import derive_seed, generate_instance, random_relabel, symmetrize
from little_bench.domain import (
    DEFAULT_XI_SK,
    Axis,
    BoundCheck,
    BoundReport,
    ConfigError,
    DataError,
    Distribution,
    ExperimentConfig,
    LittleBenchError,
    LittleInstance,
    Problem,
    Purpose,
    SkComparisonReport,
    SolverLimits,
    SweepPoint,
    SweepResult,
    TrialError,
    TrialStats,
    UniversalityReport,
)
from little_bench.solvers import solve_max, solve_minmax, solve_quadratic, solve_sk

logger: logging.Logger = logging.getLogger(__name__)

Z_95 = 1.96
SIGMA_POLICY = 3.0
MIN_POWERED_TRIALS = 30
AUDIT_TOLERANCE = 1e-9
ALPHA_TOL = 1e-9


class TrialCollector:
    """Thread-safe store of per-trial values, one insertion per index."""

    def __init__(self, trials: int) -> None:
        self.trials = trials
        self.values: dict[int, float] = {}
        self.lock = threading.Lock()

    def insert(self, trial_index: int, value: float) -> None:
        with self.lock:
            if trial_index in self.values:
                raise DataError(f"trial {trial_index} reported twice")
            self.values[trial_index] = value

    def ordered(self) -> list[float]:
        with self.lock:
            missing = self.trials - len(self.values)
            if missing:
                raise DataError(f"{missing} trials never reported")
            return [self.values[i] for i in range(self.trials)]


def summarize(
    config: ExperimentConfig, values: Sequence[float], keep: bool = False
) -> TrialStats:
    count = len(values)
    mean = math.fsum(values) / count
    if count > 1:
        std = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (count - 1))
    else:
        std = 0.0
    return TrialStats(
        config=config,
        mean=mean,
        std=std,
        ci95=Z_95 * std / math.sqrt(count),
        trials=count,
        min=min(values),
        max=max(values),
        per_trial=tuple(values) if keep else None,
    )


def _run_indexed(
    trials: int, workers: int, trial_fn: Callable[[int], float]
) -> list[float]:
    collector = TrialCollector(trials)

    def run_one(trial_index: int) -> None:
        try:
            value = trial_fn(trial_index)
        except LittleBenchError as e:
            raise TrialError(trial_index, e) from e
        collector.insert(trial_index, value)
        logger.debug("trial %d -> %.12g", trial_index, value)

    if workers == 1:
        for trial_index in range(trials):
            run_one(trial_index)
        return collector.ordered()

    pool = ThreadPoolExecutor(max_workers=workers)
    try:
        futures = [pool.submit(run_one, t) for t in range(trials)]
        done, _ = wait(futures, return_when=FIRST_EXCEPTION)
        failed = sorted(
            (f for f in done if f.exception() is not None),
            key=lambda f: getattr(f.exception(), "trial_index", 0),
        )
        if failed:
            pool.shutdown(wait=True, cancel_futures=True)
            raise failed[0].exception()  # type: ignore[misc]
    finally:
        pool.shutdown(wait=True)
    return collector.ordered()


def _audit_relabel(
    cfg: ExperimentConfig, trial_index: int, inst: LittleInstance, value: float
) -> None:
    relabeled = random_relabel(
        inst, derive_seed(cfg.master_seed, trial_index, Purpose.RELABEL)
    )
    solver = solve_max if cfg.problem is Problem.MAX else solve_minmax
    again = solver(relabeled, cfg.limits).scaled
    if abs(again - value) > AUDIT_TOLERANCE:
        raise DataError(
            f"relabeled instance gives {again!r}, original gives {value!r}"
        )


def solve_trial(cfg: ExperimentConfig, trial_index: int) -> float:
    """Scaled ground-state energy of trial ``trial_index`` of ``cfg``."""
    seed = derive_seed(cfg.master_seed, trial_index, Purpose.DISORDER)

    if cfg.problem is Problem.SK:
        inst = generate_instance(cfg.n, cfg.n, cfg.dist, seed)
        return solve_sk(symmetrize(inst), cfg.limits).scaled
    if cfg.problem is Problem.QUADRATIC:
        inst = generate_instance(cfg.n, cfg.n, cfg.dist, seed)
        return solve_quadratic(inst, cfg.limits).scaled

    inst = generate_instance(cfg.m, cfg.n, cfg.dist, seed)
    solver = solve_max if cfg.problem is Problem.MAX else solve_minmax
    value = solver(inst, cfg.limits).scaled
    if cfg.audit_every and trial_index % cfg.audit_every == 0:
        _audit_relabel(cfg, trial_index, inst, value)
    return value


def run_trials(cfg: ExperimentConfig, cache: bool = False) -> TrialStats:
    digest = cfg.digest()
    if cache:
        cached = load_cache(digest)
        if isinstance(cached, TrialStats):
            return replace(cached, config=cfg)

    logger.info(
        "running %d %s trials (m=%d n=%d dist=%s workers=%d)",
        cfg.trials,
        cfg.problem.value,
        cfg.m,
        cfg.n,
        cfg.dist.value,
        cfg.workers,
    )
    values = _run_indexed(cfg.trials, cfg.workers, lambda t: solve_trial(cfg, t))
    stats = summarize(cfg, values, keep=cfg.keep_per_trial)

    if cache:
        write_cache(digest, stats)
    return stats


def _point_config(template: ExperimentConfig, axis: Axis, value: float) -> ExperimentConfig:
    if axis is Axis.N:
        if value != int(value) or value < 1:
            raise ConfigError(f"n sweep values must be positive integers, got {value}")
        n = int(value)
        m = max(1, round(template.alpha * n))
    else:
        if template.problem in (Problem.SK, Problem.QUADRATIC):
            raise ConfigError(f"an alpha sweep is meaningless for {template.problem.value}")
        if value <= 0:
            raise ConfigError(f"alpha sweep values must be positive, got {value}")
        n = template.n
        m = round(value * n)
        if m < 1 or abs(value * n - m) > ALPHA_TOL * max(1.0, value * n):
            raise ConfigError(
                f"alpha={value:g} times n={n} is not a positive whole number of rows"
            )
    return replace(template, m=m, n=n)


def sweep(
    template: ExperimentConfig,
    axis: Axis,
    values: Sequence[float],
    cache: bool = False,
) -> SweepResult:
    if not values:
        raise ConfigError("sweep needs at least one axis value")
    ordered = sorted(values)
    if len(set(ordered)) != len(ordered):
        raise ConfigError("sweep axis values must be distinct")

    configs = [_point_config(template, axis, value) for value in ordered]
    # every bound report is computed before any trial runs
    reports = [
        bound_report(
            1.0 if cfg.problem in (Problem.SK, Problem.QUADRATIC) else cfg.alpha,
            cfg.xi_sk,
        )
        for cfg in configs
    ]

    points = []
    for value, cfg, report in zip(ordered, configs, reports):
        stats = run_trials(cfg, cache=cache)
        if axis is Axis.ALPHA:
            value = cfg.alpha
        points.append(SweepPoint(value=value, stats=stats, bounds=report))
        logger.info(
            "%s=%g mean=%.6f std=%.6f ci95=%.6f",
            axis.value,
            value,
            stats.mean,
            stats.std,
            stats.ci95,
        )
    return SweepResult(axis=axis, points=tuple(points))


def check_bounds(stats: TrialStats, report: BoundReport) -> BoundCheck:
    """Compare an empirical mean with the bounds under the fixed 3-sigma policy.

    The replica-symmetric and exponential-moment bounds hold for every finite
    m, n with Gaussian disorder, so they are checked directly.
    """
    margin = SIGMA_POLICY * stats.ci95
    mean = stats.mean
    problem = stats.config.problem
    if problem is Problem.MAX:
        checks = {
            "rs_upper": mean <= report.rs_upper + margin,
            "lowered_upper": mean <= report.lowered_upper + margin,
        }
    elif problem is Problem.MINMAX:
        checks = {
            "minmax_simple_lower": mean >= report.minmax_simple_lower - margin,
            "minmax_lifted_lower": mean >= report.minmax_lifted_lower - margin,
        }
    else:
        checks = {}
    return BoundCheck(problem=problem, mean=mean, margin=margin, checks=checks)


def universality_compare(
    m: int,
    n: int,
    trials: int,
    master_seed: int,
    workers: int = 1,
    limits: SolverLimits | None = None,
) -> UniversalityReport:
    base = ExperimentConfig(
        problem=Problem.MAX,
        m=m,
        n=n,
        dist=Distribution.GAUSSIAN,
        trials=trials,
        master_seed=master_seed,
        workers=workers,
        limits=limits or SolverLimits(),
    )
    gauss = run_trials(base)
    bern = run_trials(replace(base, dist=Distribution.BERNOULLI))

    threshold = math.hypot(SIGMA_POLICY * gauss.ci95, SIGMA_POLICY * bern.ci95)
    difference = abs(gauss.mean - bern.mean)
    compatible = difference <= threshold
    if not compatible:
        logger.warning(
            "gaussian and bernoulli means differ by %.6g > %.6g (m=%d n=%d)",
            difference,
            threshold,
            m,
            n,
        )
    return UniversalityReport(
        gauss=gauss,
        bern=bern,
        compatible=compatible,
        threshold=threshold,
        underpowered=trials < MIN_POWERED_TRIALS,
    )


def _quadratic_term(
    master_seed: int, purpose: Purpose, size: int, n: int, limits: SolverLimits
) -> Callable[[int], float]:
    # E max_{y in {+-1/sqrt(size)}^size} y^T H y / sqrt(2n)
    def term(trial_index: int) -> float:
        seed = derive_seed(master_seed, trial_index, purpose)
        inst = generate_instance(size, size, Distribution.GAUSSIAN, seed)
        return solve_quadratic(inst, limits).value / math.sqrt(2.0 * n)

    return term


def sk_comparison_report(
    n: int,
    trials: int,
    master_seed: int,
    xi_sk: float = DEFAULT_XI_SK,
    m: int | None = None,
    workers: int = 1,
    limits: SolverLimits | None = None,
) -> SkComparisonReport:
    """Finite-n check of E max y^T H x / sqrt(n) >= the two quadratic-form terms.

    The rows term uses an m x m matrix H1 and the columns term an n x n matrix
    H2, both independent of H and drawn from their own seed streams.
    """
    m = n if m is None else m
    limits = limits or SolverLimits()
    left_cfg = ExperimentConfig(
        problem=Problem.MAX,
        m=m,
        n=n,
        dist=Distribution.GAUSSIAN,
        trials=trials,
        master_seed=master_seed,
        workers=workers,
        xi_sk=xi_sk,
        limits=limits,
    )
    rows_cfg = replace(left_cfg, problem=Problem.QUADRATIC, m=m, n=m)
    cols_cfg = replace(left_cfg, problem=Problem.QUADRATIC, m=n, n=n)

    left = run_trials(left_cfg)
    rows_term = summarize(
        rows_cfg,
        _run_indexed(
            trials, workers, _quadratic_term(master_seed, Purpose.SK_ROWS, m, n, limits)
        ),
    )
    cols_term = summarize(
        cols_cfg,
        _run_indexed(
            trials, workers, _quadratic_term(master_seed, Purpose.SK_COLS, n, n, limits)
        ),
    )

    combined_ci = math.sqrt(left.ci95**2 + rows_term.ci95**2 + cols_term.ci95**2)
    holds = left.mean >= rows_term.mean + cols_term.mean - SIGMA_POLICY * combined_ci
    if not holds:
        logger.warning(
            "comparison direction violated at n=%d: %.6g < %.6g",
            n,
            left.mean,
            rows_term.mean + cols_term.mean,
        )
    return SkComparisonReport(
        n=n,
        m=m,
        trials=trials,
        master_seed=master_seed,
        xi_sk=xi_sk,
        left=left,
        rows_term=rows_term,
        cols_term=cols_term,
        combined_ci=combined_ci,
        holds=holds,
    )
