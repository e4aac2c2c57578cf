from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum, IntEnum
from typing import Any, Callable

import numpy as np

SPIN_CONVENTION = "physical vectors are x/sqrt(n) and y/sqrt(m)"
DEFAULT_XI_SK = 0.763
MAX_MATRIX_ENTRIES = 2**26
ENUMERATION_CEILING = 30


class Distribution(str, Enum):
    GAUSSIAN = "gaussian"
    BERNOULLI = "bernoulli"


class Problem(str, Enum):
    MAX = "max"
    MINMAX = "minmax"
    SK = "sk"
    QUADRATIC = "quadratic"


class Sense(str, Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


class Axis(str, Enum):
    N = "n"
    ALPHA = "alpha"


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"
    TEXT = "text"


class Purpose(IntEnum):
    """Stream tags mixed into per-trial seeds."""

    DISORDER = 0
    SK_ROWS = 1
    SK_COLS = 2
    RELABEL = 3


class LittleBenchError(Exception):
    reason = "error"


class SizeLimitError(LittleBenchError):
    reason = "size-limit"


class ShapeError(LittleBenchError):
    reason = "shape"


class DataError(LittleBenchError):
    reason = "data"


class ConfigError(LittleBenchError):
    reason = "config"


class BoundInvariantError(LittleBenchError):
    reason = "bound-invariant"


class OptimizerError(LittleBenchError):
    reason = "optimizer"

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class TrialError(LittleBenchError):
    reason = "trial"

    def __init__(self, trial_index: int, cause: Exception) -> None:
        super().__init__(f"trial {trial_index} failed: {cause}")
        self.trial_index = trial_index
        self.cause = cause


@dataclass(frozen=True, eq=False)
class LittleInstance:
    m: int
    n: int
    h: np.ndarray
    dist: Distribution
    seed: int

    def __post_init__(self) -> None:
        if self.m < 1 or self.n < 1:
            raise ShapeError(f"m and n must be positive, got m={self.m} n={self.n}")
        h = np.array(self.h, dtype=np.float64, order="C")
        if h.shape != (self.m, self.n):
            raise ShapeError(f"h has shape {h.shape}, expected ({self.m}, {self.n})")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    @property
    def alpha(self) -> float:
        return self.m / self.n


@dataclass(frozen=True, eq=False)
class SymmetricInstance:
    n: int
    hs: np.ndarray

    def __post_init__(self) -> None:
        hs = np.array(self.hs, dtype=np.float64, order="C")
        if hs.shape != (self.n, self.n):
            raise ShapeError(f"hs has shape {hs.shape}, expected ({self.n}, {self.n})")
        if not np.array_equal(hs, hs.T):
            raise ShapeError("hs is not symmetric")
        if np.any(np.diag(hs) != 0.0):
            raise ShapeError("hs must have a zero diagonal")
        hs.setflags(write=False)
        object.__setattr__(self, "hs", hs)


@dataclass(frozen=True)
class SpinAssignment:
    x: tuple[int, ...]
    y: tuple[int, ...] | None = None
    convention: str = SPIN_CONVENTION

    def __post_init__(self) -> None:
        for name, spins in (("x", self.x), ("y", self.y or ())):
            if any(s not in (-1, 1) for s in spins):
                raise DataError(f"{name} contains entries outside {{-1, +1}}")

    @staticmethod
    def format_spins(spins: tuple[int, ...]) -> str:
        return " ".join("+1" if s > 0 else "-1" for s in spins)


@dataclass(frozen=True)
class GroundStateResult:
    problem: Problem
    value: float
    scaled: float
    assignment: SpinAssignment
    configs_visited: int
    elapsed: float
    max_drift: float = 0.0

    def to_record(self) -> dict[str, Any]:
        # elapsed stays out so machine output is reproducible byte for byte
        return {
            "problem": self.problem.value,
            "value": self.value,
            "scaled": self.scaled,
            "x": SpinAssignment.format_spins(self.assignment.x),
            "y": (
                SpinAssignment.format_spins(self.assignment.y)
                if self.assignment.y is not None
                else None
            ),
            "configs_visited": self.configs_visited,
        }


@dataclass(frozen=True)
class SolverLimits:
    max_n_enumeration: int = ENUMERATION_CEILING
    recompute_period: int = 2**16
    block_bits: int = 12

    def __post_init__(self) -> None:
        if not 1 <= self.max_n_enumeration <= ENUMERATION_CEILING:
            raise ConfigError(
                f"max_n_enumeration must lie in [1, {ENUMERATION_CEILING}], "
                f"got {self.max_n_enumeration}"
            )
        if self.recompute_period < 1:
            raise ConfigError("recompute_period must be >= 1")
        if not 0 <= self.block_bits <= 20:
            raise ConfigError("block_bits must lie in [0, 20]")


@dataclass(frozen=True)
class ScalarOptProblem:
    objective: Callable[[float], float]
    sense: Sense
    bracket: tuple[float, float]
    tol: float = 1e-10
    # times the scan may grow past an upper-endpoint optimum
    max_expansions: int = 0
    # value of the objective as c -> infinity, if it has one
    limit: float | None = None

    def __post_init__(self) -> None:
        lo, hi = self.bracket
        if not 0 < lo < hi:
            raise ConfigError(f"bracket must satisfy 0 < lo < hi, got {self.bracket}")
        if self.tol <= 0:
            raise ConfigError("tol must be positive")
        if self.max_expansions < 0:
            raise ConfigError("max_expansions must be >= 0")


@dataclass(frozen=True)
class ScalarOptResult:
    x: float
    value: float
    iterations: int
    evaluations: int
    bracket: tuple[float, float]
    expansions: int = 0
    at_limit: bool = False


@dataclass(frozen=True)
class BoundReport:
    alpha: float
    xi_sk: float
    sk_lower: float
    rs_upper: float
    lowered_upper: float
    c3_star_upper: float
    minmax_simple_lower: float
    minmax_lifted_lower: float
    c3_star_minmax: float
    optimizer_iters: dict[str, int] = field(default_factory=dict)
    minmax_at_limit: bool = False

    @property
    def minmax_informative(self) -> bool:
        return self.alpha > 1.0

    def to_record(self) -> dict[str, Any]:
        record = asdict(self)
        record["minmax_informative"] = self.minmax_informative
        return record


@dataclass(frozen=True)
class ExperimentConfig:
    problem: Problem
    m: int
    n: int
    dist: Distribution
    trials: int
    master_seed: int
    workers: int = 1
    xi_sk: float = DEFAULT_XI_SK
    limits: SolverLimits = field(default_factory=SolverLimits)
    keep_per_trial: bool = False
    audit_every: int = 0

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.m < 1 or self.n < 1:
            raise ConfigError(f"m and n must be positive, got m={self.m} n={self.n}")
        if self.n > self.limits.max_n_enumeration:
            raise SizeLimitError(
                f"n={self.n} exceeds enumeration cap {self.limits.max_n_enumeration}"
            )
        if self.problem is Problem.QUADRATIC and self.m != self.n:
            raise ConfigError("quadratic experiments need m == n")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be an unsigned 64-bit integer")
        if self.audit_every < 0:
            raise ConfigError("audit_every must be >= 0")

    @property
    def alpha(self) -> float:
        return self.m / self.n

    def digest(self) -> str:
        # workers never changes results, so it is not part of the identity
        payload = {
            "problem": self.problem.value,
            "m": self.m,
            "n": self.n,
            "dist": self.dist.value,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "limits": asdict(self.limits),
            "keep_per_trial": self.keep_per_trial,
            "audit_every": self.audit_every,
        }
        blob = json.dumps(payload, sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class TrialStats:
    config: ExperimentConfig
    mean: float
    std: float
    ci95: float
    trials: int
    min: float = math.nan
    max: float = math.nan
    per_trial: tuple[float, ...] | None = None

    def to_record(self) -> dict[str, Any]:
        return {
            "problem": self.config.problem.value,
            "m": self.config.m,
            "n": self.config.n,
            "dist": self.config.dist.value,
            "trials": self.trials,
            "mean": self.mean,
            "std": self.std,
            "ci95": self.ci95,
            "seed": self.config.master_seed,
        }

    def serialize(self) -> str:
        return json.dumps(self.to_record())

    @classmethod
    def deserialize(cls, json_str: str) -> TrialStats:
        parsed = json.loads(json_str)
        config = ExperimentConfig(
            problem=Problem(parsed["problem"]),
            m=parsed["m"],
            n=parsed["n"],
            dist=Distribution(parsed["dist"]),
            trials=parsed["trials"],
            master_seed=parsed["seed"],
        )
        return cls(
            config=config,
            mean=parsed["mean"],
            std=parsed["std"],
            ci95=parsed["ci95"],
            trials=parsed["trials"],
        )


@dataclass(frozen=True)
class SweepPoint:
    value: float
    stats: TrialStats
    bounds: BoundReport


@dataclass(frozen=True)
class SweepResult:
    axis: Axis
    points: tuple[SweepPoint, ...]

    def __post_init__(self) -> None:
        values = [p.value for p in self.points]
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ConfigError("sweep points must be strictly increasing in the axis value")


@dataclass(frozen=True)
class BoundCheck:
    problem: Problem
    mean: float
    margin: float
    checks: dict[str, bool]

    @property
    def passed(self) -> bool:
        return all(self.checks.values())


@dataclass(frozen=True)
class UniversalityReport:
    gauss: TrialStats
    bern: TrialStats
    compatible: bool
    threshold: float
    underpowered: bool

    def to_record(self) -> dict[str, Any]:
        return {
            "gaussian": self.gauss.to_record(),
            "bernoulli": self.bern.to_record(),
            "difference": abs(self.gauss.mean - self.bern.mean),
            "threshold": self.threshold,
            "compatible": self.compatible,
            "underpowered": self.underpowered,
        }


@dataclass(frozen=True)
class SkComparisonReport:
    n: int
    m: int
    trials: int
    master_seed: int
    xi_sk: float
    left: TrialStats
    rows_term: TrialStats
    cols_term: TrialStats
    combined_ci: float
    holds: bool

    @property
    def right_mean(self) -> float:
        return self.rows_term.mean + self.cols_term.mean

    @property
    def asymptotic_target(self) -> float:
        return (math.sqrt(self.m / self.n) + 1.0) * self.xi_sk

    def to_record(self) -> dict[str, Any]:
        return {
            "n": self.n,
            "m": self.m,
            "trials": self.trials,
            "seed": self.master_seed,
            "xi_sk": self.xi_sk,
            "left_mean": self.left.mean,
            "left_ci95": self.left.ci95,
            "rows_mean": self.rows_term.mean,
            "rows_ci95": self.rows_term.ci95,
            "cols_mean": self.cols_term.mean,
            "cols_ci95": self.cols_term.ci95,
            "right_mean": self.right_mean,
            "combined_ci": self.combined_ci,
            "holds": self.holds,
            "asymptotic_target": self.asymptotic_target,
        }
