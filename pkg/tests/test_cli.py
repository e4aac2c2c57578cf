import argparse
import json

import pytest

from little_bench import cli
from little_bench.cli import (
    TEXT_HEADER,
    build_parser,
    main,
    positive_float,
    positive_int,
    u64,
    value_list,
)
from little_bench.domain import OptimizerError
from little_bench.persist import SWEEP_HEADER

EXPERIMENT = ["experiment", "--problem", "max", "--m", "6", "--n", "6", "--trials", "10"]


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def text_fields(out: str) -> dict[str, str]:
    lines = out.splitlines()
    assert lines[0] == TEXT_HEADER
    return dict(line.split(" ", 1) for line in lines[1:])


def test_bounds_text(capsys):
    code, out, _ = run(capsys, ["bounds", "--alpha", "1", "--format", "text"])
    assert code == 0
    assert "rs_upper 1.595769" in out
    fields = text_fields(out)
    assert float(fields["lowered_upper"]) == pytest.approx(1.5376, abs=5e-4)
    assert float(fields["minmax_lifted_lower"]) == pytest.approx(0.24439, abs=5e-5)
    assert fields["sk_lower"] == "1.526"
    assert fields["minmax_informative"] == "false"


def test_bounds_json(capsys):
    code, out, _ = run(capsys, ["bounds", "--alpha", "4", "--xi-sk", "0.7632"])
    assert code == 0
    record = json.loads(out)
    assert record["alpha"] == 4.0
    assert record["xi_sk"] == 0.7632
    assert record["minmax_informative"] is True


def test_solve_single_bernoulli_spin(capsys):
    argv = ["solve", "--problem", "max", "--m", "1", "--n", "1", "--dist", "bernoulli"]
    code, out, _ = run(capsys, [*argv, "--seed", "7"])
    assert code == 0
    record = json.loads(out)
    assert record["value"] == 1.0
    assert record["x"] == "+1"


def test_solve_sk(capsys):
    code, out, _ = run(capsys, ["solve", "--problem", "sk", "--n", "6", "--seed", "3"])
    assert code == 0
    record = json.loads(out)
    assert record["problem"] == "sk"
    assert record["y"] is None


def test_experiment_output_is_reproducible(capsys, monkeypatch):
    monkeypatch.delenv("LITTLE_WORKERS", raising=False)
    outputs = []
    for workers in ("1", "4", "1"):
        code, out, _ = run(capsys, [*EXPERIMENT, "--seed", "5", "--workers", workers])
        assert code == 0
        outputs.append(out)
    monkeypatch.setenv("LITTLE_WORKERS", "3")
    code, out, _ = run(capsys, [*EXPERIMENT, "--seed", "5"])
    assert code == 0
    outputs.append(out)
    assert len(set(outputs)) == 1

    record = json.loads(outputs[0])
    assert record["stats"]["trials"] == 10
    assert record["bounds"]["alpha"] == 1.0
    assert set(record["checks"]) == {"rs_upper", "lowered_upper"}


def test_experiment_writes_output_file(capsys, tmp_path):
    path = tmp_path / "stats.csv"
    argv = [*EXPERIMENT, "--seed", "5", "--format", "csv", "--output", str(path)]
    code, out, _ = run(capsys, argv)
    assert code == 0
    assert out == ""
    header = path.read_text(encoding="utf-8").splitlines()[0]
    assert header.startswith("stats.problem,stats.m,stats.n")


def test_sweep_csv_and_plot_data(capsys, tmp_path):
    plot = tmp_path / "plot.dat"
    argv = [
        "sweep",
        "--axis",
        "n",
        "--values",
        "6,4",
        "--n",
        "4",
        "--trials",
        "6",
        "--seed",
        "9",
        "--plot-data",
        str(plot),
    ]
    code, out, _ = run(capsys, argv)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].startswith("axis,value,mean")
    assert [line.split(",")[1] for line in lines[1:]] == ["4", "6"]
    assert plot.read_text(encoding="utf-8").startswith("#")


def test_universality_and_sk_compare(capsys):
    code, out, _ = run(
        capsys, ["universality", "--n", "4", "--trials", "20", "--seed", "1"]
    )
    assert code == 0
    assert "compatible" in json.loads(out)

    code, out, _ = run(capsys, ["sk-compare", "--n", "4", "--trials", "20", "--seed", "1"])
    assert code == 0
    assert json.loads(out)["xi_sk"] == 0.763


@pytest.mark.parametrize(
    "argv",
    [
        ["experiment", "--trials", "3", "--seed", "1"],
        [*EXPERIMENT, "--seed", "-1"],
        ["experiment", "--n", "4", "--trials", "0", "--seed", "1"],
        ["bounds", "--alpha", "0"],
        ["solve", "--problem", "quadratic", "--n", "3", "--seed", "1"],
        ["sweep", "--axis", "n", "--values", ",", "--n", "4", "--trials", "2", "--seed", "1"],
        ["experiment", "--n", "4", "--tri", "3", "--se", "1"],
        ["bounds", "--alp", "1"],
        [
            *["sweep", "--axis", "alpha", "--values", "0.5,0.55"],
            *["--n", "7", "--trials", "2", "--seed", "1"],
        ],
    ],
)
def test_usage_errors_exit_two(capsys, argv):
    code, _, err = run(capsys, argv)
    assert code == 2
    assert err.startswith("little-bench: error[")
    assert len(err.strip().splitlines()) == 1


def test_bad_worker_environment_exits_two(capsys, monkeypatch):
    monkeypatch.setenv("LITTLE_WORKERS", "many")
    code, _, err = run(capsys, [*EXPERIMENT, "--seed", "1"])
    assert code == 2
    assert "error[config]" in err


def test_size_limit_exits_three(capsys):
    code, out, err = run(capsys, ["experiment", "--n", "31", "--trials", "1", "--seed", "1"])
    assert code == 3
    assert out == ""
    assert err.startswith("little-bench: error[size-limit]:")


def test_help_lists_every_flag(capsys):
    code, out, _ = run(capsys, ["experiment", "--help"])
    assert code == 0
    for flag in (
        "--problem",
        "--m",
        "--n",
        "--dist",
        "--trials",
        "--seed",
        "--workers",
        "--xi-sk",
        "--audit-every",
        "--keep-per-trial",
        "--cache",
        "--format",
        "--output",
        "--verbose",
    ):
        assert flag in out


def test_documented_flags_parse():
    args = build_parser().parse_args(
        [
            "sweep",
            "--axis",
            "alpha",
            "--values",
            "0.5,1,2",
            "--n",
            "8",
            "--dist",
            "bernoulli",
            "--trials",
            "4",
            "--seed",
            "18446744073709551615",
            "--workers",
            "2",
            "--format",
            "json",
        ]
    )
    assert args.values == [0.5, 1.0, 2.0]
    assert args.seed == 2**64 - 1
    assert args.dist == "bernoulli"
    assert args.format == "json"


@pytest.mark.parametrize("alpha", ["0.1", "0.01"])
def test_bounds_for_small_alpha(capsys, alpha):
    code, out, err = run(capsys, ["bounds", "--alpha", alpha])
    assert code == 0, err
    record = json.loads(out)
    assert record["minmax_lifted_lower"] >= 0.0
    assert record["minmax_at_limit"] is (alpha == "0.01")


def test_experiment_with_one_row(capsys):
    argv = ["experiment", "--problem", "max", "--m", "1", "--n", "10", "--trials", "5"]
    code, out, err = run(capsys, [*argv, "--seed", "1"])
    assert code == 0, err
    record = json.loads(out)
    assert record["bounds"]["alpha"] == 0.1
    assert record["stats"]["trials"] == 5


def test_experiment_fails_before_running_trials(capsys, monkeypatch):
    calls = []

    def failing_report(alpha, xi_sk):
        raise OptimizerError("no interior optimum")

    monkeypatch.setattr(cli, "bound_report", failing_report)
    monkeypatch.setattr(cli, "run_trials", lambda cfg, cache=False: calls.append(cfg))
    code, out, err = run(capsys, [*EXPERIMENT, "--seed", "1"])
    assert code == 3
    assert out == ""
    assert err.startswith("little-bench: error[optimizer]:")
    assert calls == []


def test_sweep_text_has_one_line_per_point(capsys):
    argv = ["sweep", "--axis", "n", "--values", "4,6", "--n", "4", "--trials", "4"]
    code, out, _ = run(capsys, [*argv, "--seed", "2", "--format", "text"])
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == TEXT_HEADER
    assert lines[1] == "# columns " + " ".join(SWEEP_HEADER)
    assert len(lines) == 4
    rows = [line.split(" ") for line in lines[2:]]
    assert [row[:2] for row in rows] == [["n", "4"], ["n", "6"]]
    assert all(len(row) == len(SWEEP_HEADER) for row in rows)


@pytest.mark.parametrize(
    "argv",
    [
        ["sweep", "--axis", "n", "--values", "4,5", "--n", "4", "--trials", "8", "--seed", "3"],
        ["universality", "--n", "4", "--trials", "12", "--seed", "3"],
        ["sk-compare", "--n", "4", "--trials", "12", "--seed", "3"],
    ],
)
def test_every_command_output_ignores_workers(capsys, monkeypatch, argv):
    monkeypatch.delenv("LITTLE_WORKERS", raising=False)
    outputs = []
    for workers in ("1", "4"):
        code, out, _ = run(capsys, [*argv, "--workers", workers])
        assert code == 0
        outputs.append(out.encode("utf-8"))
    assert outputs[0] == outputs[1]


@pytest.mark.parametrize(
    ("parse", "text"),
    [(u64, "x"), (positive_int, "1.5"), (positive_float, "one"), (value_list, "1,b")],
)
def test_type_errors_keep_their_cause(parse, text):
    with pytest.raises(argparse.ArgumentTypeError) as excinfo:
        parse(text)
    assert isinstance(excinfo.value.__cause__, ValueError)
