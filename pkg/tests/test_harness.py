import math
from dataclasses import replace

import pytest

from little_bench import harness
from little_bench.bounds import bound_report, minmax_simple_lower, rs_upper
from little_bench.cache import clear_cache, get_cache_file
from little_bench.domain import (
    Axis,
    ConfigError,
    DataError,
    Distribution,
    ExperimentConfig,
    OptimizerError,
    Problem,
    SizeLimitError,
    SolverLimits,
    TrialError,
)
from little_bench.harness import (
    TrialCollector,
    _run_indexed,
    check_bounds,
    run_trials,
    sk_comparison_report,
    solve_trial,
    summarize,
    sweep,
    universality_compare,
)


def test_single_trial(max_config):
    cfg = replace(max_config, trials=1)
    stats = run_trials(cfg)
    assert stats.std == 0.0
    assert stats.ci95 == 0.0
    assert stats.mean == solve_trial(cfg, 0)


def test_results_do_not_depend_on_workers(max_config):
    serial = run_trials(replace(max_config, keep_per_trial=True))
    parallel = run_trials(replace(max_config, workers=4, keep_per_trial=True))
    assert parallel.per_trial == serial.per_trial
    assert parallel.mean == serial.mean
    assert parallel.std == serial.std
    assert parallel.ci95 == serial.ci95


def test_more_trials_extend_earlier_ones(max_config):
    short = run_trials(replace(max_config, trials=5, keep_per_trial=True))
    long = run_trials(replace(max_config, trials=12, keep_per_trial=True))
    assert long.per_trial[:5] == short.per_trial


def test_per_trial_values_reproduce_summary(max_config):
    stats = run_trials(replace(max_config, keep_per_trial=True))
    values = stats.per_trial
    mean = math.fsum(values) / len(values)
    std = math.sqrt(math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1))
    assert stats.mean == mean
    assert stats.std == std
    assert stats.ci95 == 1.96 * std / math.sqrt(len(values))
    assert stats.min == min(values) and stats.max == max(values)


def test_summarize_by_hand(max_config):
    stats = summarize(max_config, [1.0, 2.0, 3.0], keep=True)
    assert stats.mean == 2.0
    assert stats.std == 1.0
    assert stats.ci95 == pytest.approx(1.96 / math.sqrt(3.0), rel=1e-15)
    assert stats.per_trial == (1.0, 2.0, 3.0)
    assert (stats.min, stats.max) == (1.0, 3.0)


def test_summary_drops_per_trial_by_default(max_config):
    assert run_trials(max_config).per_trial is None


def test_config_validation(max_config):
    with pytest.raises(ConfigError):
        replace(max_config, trials=0)
    with pytest.raises(ConfigError):
        replace(max_config, workers=0)
    with pytest.raises(ConfigError):
        replace(max_config, master_seed=2**64)
    with pytest.raises(ConfigError):
        replace(max_config, problem=Problem.QUADRATIC, m=3)
    with pytest.raises(SizeLimitError):
        replace(max_config, n=31)


def test_digest_ignores_workers(max_config):
    assert max_config.digest() == replace(max_config, workers=8).digest()
    assert max_config.digest() != replace(max_config, master_seed=1).digest()


@pytest.mark.parametrize("workers", [1, 4])
def test_failing_trial_names_its_index(workers):
    def trial(index: int) -> float:
        if index == 3:
            raise DataError("broken instance")
        return float(index)

    with pytest.raises(TrialError) as excinfo:
        _run_indexed(8, workers, trial)
    assert excinfo.value.trial_index == 3
    assert isinstance(excinfo.value.cause, DataError)


def test_collector_rejects_duplicates_and_gaps():
    collector = TrialCollector(3)
    collector.insert(0, 1.0)
    with pytest.raises(DataError):
        collector.insert(0, 2.0)
    with pytest.raises(DataError):
        collector.ordered()
    collector.insert(2, 3.0)
    collector.insert(1, 2.0)
    assert collector.ordered() == [1.0, 2.0, 3.0]


def test_relabel_audit_passes(max_config):
    for problem in (Problem.MAX, Problem.MINMAX):
        cfg = replace(max_config, problem=problem, m=8, audit_every=1, trials=6)
        stats = run_trials(cfg)
        assert stats.trials == 6


@pytest.mark.parametrize("problem", [Problem.SK, Problem.QUADRATIC])
def test_square_problems_run(max_config, problem):
    stats = run_trials(replace(max_config, problem=problem))
    assert math.isfinite(stats.mean)
    assert stats.std > 0.0


def test_cache_round_trip(max_config, isolated_cache):
    first = run_trials(max_config, cache=True)
    assert get_cache_file(max_config.digest()).exists()
    again = run_trials(replace(max_config, workers=3), cache=True)
    assert again.mean == first.mean
    assert again.config.workers == 3
    assert clear_cache() == 1
    assert not get_cache_file(max_config.digest()).exists()


def test_check_bounds_policy(max_config):
    stats = run_trials(max_config)
    report_checks = check_bounds(stats, bound_report(1.0))
    assert set(report_checks.checks) == {"rs_upper", "lowered_upper"}
    assert report_checks.margin == 3.0 * stats.ci95

    minmax = run_trials(replace(max_config, problem=Problem.MINMAX))
    assert set(check_bounds(minmax, bound_report(1.0)).checks) == {
        "minmax_simple_lower",
        "minmax_lifted_lower",
    }
    sk = run_trials(replace(max_config, problem=Problem.SK))
    assert check_bounds(sk, bound_report(1.0)).checks == {}


def test_sweep_over_n_sorts_points(max_config):
    template = replace(max_config, trials=8)
    result = sweep(template, Axis.N, [8, 4, 6])
    assert [p.value for p in result.points] == [4, 6, 8]
    assert [p.stats.config.n for p in result.points] == [4, 6, 8]
    assert [p.stats.config.m for p in result.points] == [4, 6, 8]
    assert all(p.stats.std > 0.0 for p in result.points)


def test_sweep_over_alpha_carries_bounds(max_config):
    template = replace(max_config, n=8, m=8, trials=8)
    result = sweep(template, Axis.ALPHA, [0.5, 1.0, 2.0])
    assert [p.stats.config.m for p in result.points] == [4, 8, 16]
    for point in result.points:
        bounds = point.bounds
        assert bounds.alpha == point.stats.config.alpha
        assert bounds.sk_lower <= bounds.lowered_upper <= bounds.rs_upper
        assert bounds.minmax_lifted_lower >= bounds.minmax_simple_lower


def test_sweep_rejects_bad_values(max_config):
    with pytest.raises(ConfigError):
        sweep(max_config, Axis.N, [])
    with pytest.raises(ConfigError):
        sweep(max_config, Axis.N, [4, 4])
    with pytest.raises(ConfigError):
        sweep(max_config, Axis.N, [4.5])
    with pytest.raises(ConfigError):
        sweep(replace(max_config, problem=Problem.SK), Axis.ALPHA, [1.0])


def test_alpha_sweep_values_must_give_whole_rows(max_config):
    template = replace(max_config, n=7, m=7, trials=4)
    with pytest.raises(ConfigError):
        sweep(template, Axis.ALPHA, [0.5, 0.55])
    with pytest.raises(ConfigError):
        sweep(template, Axis.ALPHA, [0.1])


def test_alpha_sweep_labels_points_with_realised_ratio(max_config):
    template = replace(max_config, n=10, m=10, trials=4)
    result = sweep(template, Axis.ALPHA, [0.3, 0.1])
    assert [p.stats.config.m for p in result.points] == [1, 3]
    for point in result.points:
        assert point.value == point.stats.config.alpha == point.bounds.alpha
    assert result.points[0].bounds.minmax_lifted_lower > 0.0


def test_sweep_computes_every_bound_before_running_trials(max_config, monkeypatch):
    calls = []

    def failing_report(alpha, xi_sk):
        if alpha > 1.0:
            raise OptimizerError("no interior optimum")
        return bound_report(alpha, xi_sk)

    def counting_run_trials(cfg, cache=False):
        calls.append(cfg)
        return run_trials(cfg, cache=cache)

    monkeypatch.setattr(harness, "bound_report", failing_report)
    monkeypatch.setattr(harness, "run_trials", counting_run_trials)
    template = replace(max_config, n=4, m=4, trials=2)
    with pytest.raises(OptimizerError):
        sweep(template, Axis.ALPHA, [0.5, 2.0])
    assert calls == []


def test_universality_report():
    report = universality_compare(6, 6, 40, master_seed=16)
    assert report.gauss.config.dist is Distribution.GAUSSIAN
    assert report.bern.config.dist is Distribution.BERNOULLI
    assert report.threshold == pytest.approx(
        math.hypot(3.0 * report.gauss.ci95, 3.0 * report.bern.ci95)
    )
    assert report.compatible is (abs(report.gauss.mean - report.bern.mean) <= report.threshold)
    assert not report.underpowered
    record = report.to_record()
    assert {"gaussian", "bernoulli", "threshold", "compatible"} <= set(record)


def test_universality_single_trial_is_underpowered():
    report = universality_compare(4, 4, 1, master_seed=16)
    assert report.underpowered
    assert report.threshold == 0.0


def test_sk_comparison_small():
    report = sk_comparison_report(6, 100, master_seed=99, workers=2)
    assert report.holds
    assert report.left.mean >= report.right_mean - 3.0 * report.combined_ci
    assert report.asymptotic_target == pytest.approx(2.0 * 0.763)
    assert report.to_record()["xi_sk"] == 0.763


def test_sk_comparison_smallest_size():
    report = sk_comparison_report(2, 1000, master_seed=2)
    assert report.holds


@pytest.mark.slow
def test_sk_comparison_fourteen_spins():
    report = sk_comparison_report(14, 200, master_seed=14, workers=4)
    assert report.left.mean >= report.right_mean - 3.0 * report.combined_ci


@pytest.mark.slow
def test_rs_upper_bound_holds_at_finite_size():
    cfg = ExperimentConfig(
        problem=Problem.MAX,
        m=18,
        n=18,
        dist=Distribution.GAUSSIAN,
        trials=200,
        master_seed=18,
        workers=4,
    )
    stats = run_trials(cfg)
    assert stats.mean <= rs_upper(1.0) + 3.0 * stats.ci95


@pytest.mark.slow
def test_minmax_simple_bound_holds_at_finite_size():
    cfg = ExperimentConfig(
        problem=Problem.MINMAX,
        m=36,
        n=18,
        dist=Distribution.GAUSSIAN,
        trials=200,
        master_seed=36,
        workers=4,
    )
    stats = run_trials(cfg)
    assert stats.mean >= minmax_simple_lower(2.0) - 3.0 * stats.ci95


@pytest.mark.slow
def test_energies_concentrate_with_size():
    template = ExperimentConfig(
        problem=Problem.MAX,
        m=10,
        n=10,
        dist=Distribution.GAUSSIAN,
        trials=200,
        master_seed=7,
        workers=4,
        limits=SolverLimits(),
    )
    result = sweep(template, Axis.N, [10, 22])
    small, large = result.points
    assert 0.0 < large.stats.std < small.stats.std
