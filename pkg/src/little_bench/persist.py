"""Flat-file outputs: JSON objects, CSV sweep tables and two-column plot data.

Floats are written with ``repr`` (shortest round-trip decimal), files are UTF-8
with ``\\n`` newlines.
"""

import csv
import io
import json
import logging
from pathlib import Path
from typing import Any

from little_bench.domain import (
    BoundReport,
    GroundStateResult,
    LittleBenchError,
    OutputFormat,
    SkComparisonReport,
    SweepResult,
    TrialStats,
    UniversalityReport,
)

logger: logging.Logger = logging.getLogger(__name__)

SWEEP_HEADER = (
    "axis",
    "value",
    "mean",
    "std",
    "ci95",
    "sk_lower",
    "rs_upper",
    "lowered_upper",
    "minmax_simple_lower",
    "minmax_lifted_lower",
)


class PersistError(LittleBenchError):
    reason = "io"


def _number(value: float | int) -> str:
    return str(value) if isinstance(value, int) else repr(float(value))


def sweep_record(sweep: SweepResult) -> dict[str, Any]:
    return {
        "axis": sweep.axis.value,
        "points": [
            {
                "value": point.value,
                "stats": point.stats.to_record(),
                "bounds": point.bounds.to_record(),
            }
            for point in sweep.points
        ],
    }


def to_record(result: Any) -> dict[str, Any]:
    if isinstance(result, SweepResult):
        return sweep_record(result)
    if isinstance(
        result,
        (TrialStats, BoundReport, GroundStateResult, UniversalityReport, SkComparisonReport),
    ):
        return result.to_record()
    if isinstance(result, dict):
        return result
    raise TypeError(f"no record layout for {type(result).__name__}")


def to_json(result: Any) -> str:
    return json.dumps(to_record(result)) + "\n"


def sweep_rows(sweep: SweepResult) -> list[list[str]]:
    """One row of SWEEP_HEADER columns per point, numbers already formatted."""
    rows = []
    for point in sweep.points:
        stats, bounds = point.stats, point.bounds
        rows.append(
            [
                sweep.axis.value,
                _number(point.value),
                _number(stats.mean),
                _number(stats.std),
                _number(stats.ci95),
                _number(bounds.sk_lower),
                _number(bounds.rs_upper),
                _number(bounds.lowered_upper),
                _number(bounds.minmax_simple_lower),
                _number(bounds.minmax_lifted_lower),
            ]
        )
    return rows


def sweep_to_csv(sweep: SweepResult) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    writer.writerows(sweep_rows(sweep))
    return buffer.getvalue()


def flatten_record(record: dict[str, Any], prefix: str = "") -> dict[str, Any]:
    """Nested dicts become dotted keys; lists are dropped."""
    flat: dict[str, Any] = {}
    for key, value in record.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(flatten_record(value, prefix=f"{name}."))
        elif not isinstance(value, list):
            flat[name] = value
    return flat


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return ""
    if isinstance(value, (int, float)):
        return _number(value)
    return str(value)


def to_csv(result: Any) -> str:
    if isinstance(result, SweepResult):
        return sweep_to_csv(result)
    flat = flatten_record(to_record(result))
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(flat.keys())
    writer.writerow(format_value(v) for v in flat.values())
    return buffer.getvalue()


def plot_data(sweep: SweepResult) -> str:
    lines = [
        f"# little-bench sweep over {sweep.axis.value}",
        f"# problem: {sweep.points[0].stats.config.problem.value}" if sweep.points else "#",
        f"# columns: {sweep.axis.value} mean",
    ]
    lines += [f"{_number(p.value)} {_number(p.stats.mean)}" for p in sweep.points]
    return "\n".join(lines) + "\n"


def render(result: Any, fmt: OutputFormat) -> str:
    if fmt is OutputFormat.JSON:
        return to_json(result)
    if fmt is OutputFormat.CSV:
        return to_csv(result)
    raise ValueError(f"{fmt.value} is not a machine format")


def write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="\n")
    except OSError as e:
        raise PersistError(f"cannot write {path}: {e.strerror or e}") from e
    logger.debug("wrote %d bytes to %s", len(text.encode("utf-8")), path)


def persist(result: Any, path: Path | str, fmt: OutputFormat = OutputFormat.JSON) -> None:
    write_text(Path(path), render(result, fmt))


def write_plot_data(sweep: SweepResult, path: Path | str) -> None:
    write_text(Path(path), plot_data(sweep))


def _read_text(path: Path | str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise PersistError(f"cannot read {path}: {e.strerror or e}") from e


def load_stats(path: Path | str) -> TrialStats:
    return TrialStats.deserialize(_read_text(path))


def load_sweep_rows(path: Path | str) -> list[dict[str, Any]]:
    reader = csv.DictReader(io.StringIO(_read_text(path)))
    if tuple(reader.fieldnames or ()) != SWEEP_HEADER:
        raise PersistError(f"{path} does not carry the sweep header")
    return [
        {key: (row[key] if key == "axis" else float(row[key])) for key in SWEEP_HEADER}
        for row in reader
    ]
