"""Asymptotic bounds on the scaled ground-state energies as functions of alpha = m/n.

Max form:    (sqrt(a)+1)*xi_sk  <=  lowered_upper(a)  <=  (sqrt(a)+1)*sqrt(2/pi)
Minmax form: minmax_lifted_lower(a)  >=  (sqrt(a)-1)*sqrt(2/pi)

The two optimised bounds come from an exponential test function with rate c > 0:

    f(c) =  c/2 + ln_erfc(-c/sqrt(2))/c + a*ln_erfc(-c/sqrt(2a))/c    (minimised)
    g(c) = -c/2 - ln_erfc(-c/sqrt(2))/c - a*ln_erfc( c/sqrt(2a))/c    (maximised)

Both tend to their closed-form counterparts as c -> 0+. g is evaluated as

    g(c) = -ln_erfc(-c/sqrt(2))/c - a*ln(erfcx(c/sqrt(2a)))/c

(the -c/2 cancels exactly), which stays accurate for large c. For small a the
maximiser of g moves far past the initial scan range and g -> 0 from below as
c -> infinity; the scan grows by factors of 10 before settling for that limit.
"""

import logging
import math
from typing import Callable, Iterable

import numpy as np
from scipy import special

from little_bench.domain import (
    DEFAULT_XI_SK,
    BoundInvariantError,
    BoundReport,
    ConfigError,
    DataError,
    OptimizerError,
    ScalarOptProblem,
    ScalarOptResult,
    Sense,
)

logger: logging.Logger = logging.getLogger(__name__)

SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)
SCAN_RANGE = (1e-6, 50.0)
GRID_POINTS = 200
X_TOL = 1e-10
BRACKET_GROWTH = 10.0
MAX_EXPANSIONS = 6
MAX_GOLDEN_ITERATIONS = 500
INVARIANT_SLACK = 1e-12
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def _ln_erfcx(x: float) -> float:
    return math.log(float(special.erfcx(x)))


def ln_erfc(x: float) -> float:
    """Natural log of erfc, finite for every finite x."""
    if not math.isfinite(x):
        raise DataError(f"ln_erfc needs a finite argument, got {x}")
    if x >= 0.0:
        # erfc(x) = exp(-x^2) * erfcx(x); erfcx never underflows
        return -x * x + _ln_erfcx(x)
    # erfc(x) = 1 + erf(|x|) lies in (1, 2)
    return math.log1p(float(special.erf(-x)))


def _check_alpha(alpha: float) -> None:
    if not (math.isfinite(alpha) and alpha > 0.0):
        raise ConfigError(f"alpha must be a positive finite number, got {alpha}")


def rs_upper(alpha: float) -> float:
    _check_alpha(alpha)
    return (math.sqrt(alpha) + 1.0) * SQRT_2_OVER_PI


def sk_scaled_lower(alpha: float, xi_sk: float = DEFAULT_XI_SK) -> float:
    _check_alpha(alpha)
    if not 0.0 <= xi_sk < 1.0:
        raise ConfigError(f"xi_sk must lie in [0, 1), got {xi_sk}")
    return (math.sqrt(alpha) + 1.0) * xi_sk


def minmax_simple_lower(alpha: float) -> float:
    _check_alpha(alpha)
    return (math.sqrt(alpha) - 1.0) * SQRT_2_OVER_PI


def upper_objective(alpha: float) -> Callable[[float], float]:
    _check_alpha(alpha)
    scale = math.sqrt(2.0 * alpha)

    def f(c: float) -> float:
        return (
            c / 2.0
            + ln_erfc(-c / math.sqrt(2.0)) / c
            + alpha * ln_erfc(-c / scale) / c
        )

    return f


def minmax_objective(alpha: float) -> Callable[[float], float]:
    _check_alpha(alpha)
    scale = math.sqrt(2.0 * alpha)

    def g(c: float) -> float:
        return -ln_erfc(-c / math.sqrt(2.0)) / c - alpha * _ln_erfcx(c / scale) / c

    return g


def _scan(
    cost: Callable[[float], float], lo: float, hi: float, grid_points: int
) -> tuple[np.ndarray, np.ndarray]:
    grid = np.geomspace(lo, hi, grid_points)
    costs = np.array([cost(float(c)) for c in grid])
    if not np.all(np.isfinite(costs)):
        raise OptimizerError(
            "objective is not finite on the scan grid",
            diagnostics={"bracket": (lo, hi)},
        )
    return grid, costs


def optimize_scalar(
    problem: ScalarOptProblem, grid_points: int = GRID_POINTS
) -> ScalarOptResult:
    """Log-spaced grid scan to bracket the optimum, then golden-section refinement.

    An optimum at the upper end of the scan pushes the scan out by
    ``BRACKET_GROWTH`` up to ``problem.max_expansions`` times. If it is still
    there and ``problem.limit`` is at least as good as the last grid value, the
    limit is returned with ``at_limit`` set.
    """
    if grid_points < 3:
        raise ConfigError("grid_points must be >= 3")

    sign = 1.0 if problem.sense is Sense.MINIMIZE else -1.0

    def cost(c: float) -> float:
        return sign * problem.objective(c)

    lo, hi = problem.bracket
    grid, costs = _scan(cost, lo, hi, grid_points)
    evaluations = grid_points
    best = int(np.argmin(costs))
    expansions = 0
    while best == grid_points - 1 and expansions < problem.max_expansions:
        lo, hi = float(grid[-2]), hi * BRACKET_GROWTH
        grid, costs = _scan(cost, lo, hi, grid_points)
        evaluations += grid_points
        best = int(np.argmin(costs))
        expansions += 1

    if best == grid_points - 1 and problem.limit is not None:
        if sign * problem.limit <= float(costs[best]):
            logger.debug(
                "%s: optimum escapes to c -> inf after %d expansions, limit %.12g",
                problem.sense.value,
                expansions,
                problem.limit,
            )
            return ScalarOptResult(
                x=hi,
                value=problem.limit,
                iterations=0,
                evaluations=evaluations,
                bracket=(float(grid[-2]), hi),
                expansions=expansions,
                at_limit=True,
            )

    if best in (0, grid_points - 1):
        raise OptimizerError(
            f"no interior optimum on [{lo:g}, {hi:g}]: best grid point is an endpoint",
            diagnostics={
                "bracket": (lo, hi),
                "grid_points": grid_points,
                "expansions": expansions,
                "best_c": float(grid[best]),
                "best_value": sign * float(costs[best]),
                "sense": problem.sense.value,
            },
        )

    a, b = float(grid[best - 1]), float(grid[best + 1])
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = cost(c), cost(d)
    evaluations += 2
    iterations = 0
    # tolerance is absolute below c = 1 and relative above
    while b - a > problem.tol * max(1.0, b) and iterations < MAX_GOLDEN_ITERATIONS:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = cost(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = cost(d)
        evaluations += 1
        iterations += 1

    if iterations >= MAX_GOLDEN_ITERATIONS:
        raise OptimizerError(
            "golden-section search did not reach the x tolerance",
            diagnostics={"bracket": (a, b), "iterations": iterations},
        )

    mid = 0.5 * (a + b)
    candidates = [(cost(mid), mid), (fc, c), (fd, d), (float(costs[best]), float(grid[best]))]
    evaluations += 1
    best_cost, best_x = min(candidates)
    logger.debug(
        "%s: c*=%.12g value=%.12g iterations=%d evaluations=%d expansions=%d",
        problem.sense.value,
        best_x,
        sign * best_cost,
        iterations,
        evaluations,
        expansions,
    )
    return ScalarOptResult(
        x=best_x,
        value=sign * best_cost,
        iterations=iterations,
        evaluations=evaluations,
        bracket=(float(grid[best - 1]), float(grid[best + 1])),
        expansions=expansions,
    )


def lowered_upper_opt(alpha: float, grid_points: int = GRID_POINTS) -> ScalarOptResult:
    return optimize_scalar(
        ScalarOptProblem(
            objective=upper_objective(alpha),
            sense=Sense.MINIMIZE,
            bracket=SCAN_RANGE,
            tol=X_TOL,
            max_expansions=MAX_EXPANSIONS,
        ),
        grid_points=grid_points,
    )


def minmax_lifted_lower_opt(
    alpha: float, grid_points: int = GRID_POINTS
) -> ScalarOptResult:
    return optimize_scalar(
        ScalarOptProblem(
            objective=minmax_objective(alpha),
            sense=Sense.MAXIMIZE,
            bracket=SCAN_RANGE,
            tol=X_TOL,
            max_expansions=MAX_EXPANSIONS,
            limit=0.0,
        ),
        grid_points=grid_points,
    )


def lowered_upper(alpha: float) -> tuple[float, float]:
    result = lowered_upper_opt(alpha)
    return result.value, result.x


def minmax_lifted_lower(alpha: float) -> tuple[float, float]:
    result = minmax_lifted_lower_opt(alpha)
    return result.value, result.x


def _enforce(report: BoundReport) -> BoundReport:
    violations = []
    if report.sk_lower > report.lowered_upper + INVARIANT_SLACK:
        violations.append("sk_lower > lowered_upper")
    if report.lowered_upper > report.rs_upper + INVARIANT_SLACK:
        violations.append("lowered_upper > rs_upper")
    if report.minmax_lifted_lower < report.minmax_simple_lower - INVARIANT_SLACK:
        violations.append("minmax_lifted_lower < minmax_simple_lower")
    for name in ("c3_star_upper", "c3_star_minmax"):
        c3 = getattr(report, name)
        if not (math.isfinite(c3) and c3 > 0.0):
            violations.append(f"{name}={c3} is not positive and finite")
    if violations:
        raise BoundInvariantError(
            f"bound chain broken at alpha={report.alpha:g}: " + "; ".join(violations)
        )
    return report


def bound_report(
    alpha: float, xi_sk: float = DEFAULT_XI_SK, grid_points: int = GRID_POINTS
) -> BoundReport:
    upper = lowered_upper_opt(alpha, grid_points)
    lifted = minmax_lifted_lower_opt(alpha, grid_points)
    return _enforce(
        BoundReport(
            alpha=alpha,
            xi_sk=xi_sk,
            sk_lower=sk_scaled_lower(alpha, xi_sk),
            rs_upper=rs_upper(alpha),
            lowered_upper=upper.value,
            c3_star_upper=upper.x,
            minmax_simple_lower=minmax_simple_lower(alpha),
            minmax_lifted_lower=lifted.value,
            c3_star_minmax=lifted.x,
            optimizer_iters={
                "upper": upper.iterations,
                "minmax": lifted.iterations,
                "upper_expansions": upper.expansions,
                "minmax_expansions": lifted.expansions,
            },
            minmax_at_limit=lifted.at_limit,
        )
    )


def bound_table(
    alphas: Iterable[float], xi_sk: float = DEFAULT_XI_SK
) -> list[BoundReport]:
    return [bound_report(alpha, xi_sk) for alpha in sorted(alphas)]
