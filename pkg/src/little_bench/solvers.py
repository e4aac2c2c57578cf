"""Exact ground states by exhaustive enumeration.

The max and minmax forms reduce to an l1 norm once the inner maximisation over
y is done analytically (y_j = sign((Hx)_j)/sqrt(m)), so only x is enumerated.
The global flip x -> -x leaves both forms and the SK energy unchanged, hence
x_0 is pinned to +1 and 2^(n-1) configurations are visited.

Enumeration is blocked: the first ``k`` free spins are laid out once as a
(2^k, k) table in reflected Gray order and evaluated together, the remaining
spins are walked in Gray order with a running vector updated by one column per
flip. Odd outer steps visit the block back to front, which reproduces the
global reflected Gray sequence exactly, so ties resolve to the first optimum in
that order.
"""

import itertools
import logging
import math
import time

import numpy as np

from little_bench.core import symmetrize
from little_bench.domain import (
    DataError,
    GroundStateResult,
    LittleInstance,
    Problem,
    ShapeError,
    SizeLimitError,
    SolverLimits,
    SpinAssignment,
    SymmetricInstance,
)

logger: logging.Logger = logging.getLogger(__name__)

# upper bound on the entries of one vectorised block (rows * 2^k)
BLOCK_ENTRIES = 2**22

BRUTE_FORCE_JOINT_CAP = 24
BRUTE_FORCE_MINMAX_CAP = 20
BRUTE_FORCE_QUADRATIC_CAP = 16
_CHUNK_ROWS = 2**15


def gray_flip_index(step: int) -> int:
    """Bit that changes between Gray codes step-1 and step (step >= 1)."""
    return (step & -step).bit_length() - 1


def gray_block(bits: int) -> np.ndarray:
    codes = np.arange(2**bits)
    gray = codes ^ (codes >> 1)
    flipped = (gray[:, None] >> np.arange(bits)) & 1
    return 1.0 - 2.0 * flipped.astype(np.float64)


def _block_bits(free: int, rows: int, limits: SolverLimits) -> int:
    by_memory = max(0, int(math.log2(BLOCK_ENTRIES / max(rows, 1))))
    return min(free, limits.block_bits, by_memory)


def _check_enumerable(n: int, limits: SolverLimits) -> None:
    if n > limits.max_n_enumeration:
        raise SizeLimitError(
            f"n={n} exceeds enumeration cap {limits.max_n_enumeration}"
        )


def _check_finite(matrix: np.ndarray) -> None:
    if not np.all(np.isfinite(matrix)):
        raise DataError("matrix contains non-finite entries")


def _signs(vector: np.ndarray) -> tuple[int, ...]:
    return tuple(1 if v >= 0 else -1 for v in vector)


def reduced_objective(inst: LittleInstance, x: np.ndarray) -> float:
    """(1/sqrt(mn)) * ||h x||_1, the max over y of y^T h x at fixed x."""
    x = np.asarray(x, dtype=np.float64)
    return float(np.abs(inst.h @ x).sum()) / math.sqrt(inst.m * inst.n)


def bilinear_objective(inst: LittleInstance, x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return float(y @ inst.h @ x) / math.sqrt(inst.m * inst.n)


def sk_energy(sym: SymmetricInstance, x: np.ndarray) -> float:
    """(1/n) * sum_{i<j} hs_ij x_i x_j."""
    x = np.asarray(x, dtype=np.float64)
    return float(0.5 * x @ sym.hs @ x) / sym.n


def _enumerate_l1(
    h: np.ndarray, limits: SolverLimits, maximize: bool
) -> tuple[float, np.ndarray, int, float]:
    m, n = h.shape
    free = n - 1
    k = _block_bits(free, m, limits)
    outer = free - k
    block = gray_block(k)
    size = block.shape[0]

    partial = h[:, 1 : 1 + k] @ block.T
    high_cols = h[:, 1 + k :]
    x_high = np.ones(outer)
    running = h[:, 0] + high_cols @ x_high
    refresh_every = max(1, limits.recompute_period >> k)

    best = math.nan
    best_low = 0
    best_high = x_high.copy()
    max_drift = 0.0

    for step in range(2**outer):
        if step:
            bit = gray_flip_index(step)
            x_high[bit] = -x_high[bit]
            running += (2.0 * x_high[bit]) * high_cols[:, bit]
            if step % refresh_every == 0:
                cold = h[:, 0] + high_cols @ x_high
                max_drift = max(max_drift, float(np.max(np.abs(running - cold))))
                running = cold

        norms = np.abs(running[:, None] + partial).sum(axis=0)
        ordered = norms[::-1] if step & 1 else norms
        pos = int(np.argmax(ordered)) if maximize else int(np.argmin(ordered))
        candidate = float(ordered[pos])
        if (
            math.isnan(best)
            or (maximize and candidate > best)
            or (not maximize and candidate < best)
        ):
            best = candidate
            best_low = size - 1 - pos if step & 1 else pos
            best_high = x_high.copy()

    x = np.concatenate(([1.0], block[best_low], best_high))
    return best, x, 2**free, max_drift


def _solve_l1(
    inst: LittleInstance, limits: SolverLimits, problem: Problem
) -> GroundStateResult:
    _check_enumerable(inst.n, limits)
    _check_finite(inst.h)

    started = time.perf_counter()
    norm, x, visited, drift = _enumerate_l1(
        inst.h, limits, maximize=problem is Problem.MAX
    )
    elapsed = time.perf_counter() - started

    value = norm / math.sqrt(inst.m * inst.n)
    y = _signs(inst.h @ x)
    logger.debug(
        "%s m=%d n=%d value=%.12g configs=%d drift=%.3g elapsed=%.3fs",
        problem.value,
        inst.m,
        inst.n,
        value,
        visited,
        drift,
        elapsed,
    )
    return GroundStateResult(
        problem=problem,
        value=value,
        scaled=value / math.sqrt(inst.n),
        assignment=SpinAssignment(x=_signs(x), y=y),
        configs_visited=visited,
        elapsed=elapsed,
        max_drift=drift,
    )


def solve_max(
    inst: LittleInstance, limits: SolverLimits | None = None
) -> GroundStateResult:
    return _solve_l1(inst, limits or SolverLimits(), Problem.MAX)


def solve_minmax(
    inst: LittleInstance, limits: SolverLimits | None = None
) -> GroundStateResult:
    return _solve_l1(inst, limits or SolverLimits(), Problem.MINMAX)


def solve_sk(
    sym: SymmetricInstance, limits: SolverLimits | None = None
) -> GroundStateResult:
    limits = limits or SolverLimits()
    n = sym.n
    _check_enumerable(n, limits)
    _check_finite(sym.hs)

    started = time.perf_counter()
    hs = sym.hs
    free = n - 1
    k = _block_bits(free, n, limits)
    outer = free - k
    block = gray_block(k)
    size = block.shape[0]

    low = np.arange(1, 1 + k)
    walked = np.concatenate(([0], np.arange(1 + k, n))).astype(np.intp)
    low_energy = 0.5 * np.einsum("ci,ij,cj->c", block, hs[np.ix_(low, low)], block)
    coupling = hs[np.ix_(walked, low)] @ block.T
    a_walked = hs[np.ix_(walked, walked)]

    x_walked = np.ones(walked.shape[0])
    fields = a_walked @ x_walked
    walked_energy = 0.5 * float(x_walked @ fields)
    cross = x_walked @ coupling
    refresh_every = max(1, limits.recompute_period >> k)

    best = math.nan
    best_low = 0
    best_walked = x_walked.copy()
    max_drift = 0.0

    for step in range(2**outer):
        if step:
            s = 1 + gray_flip_index(step)
            walked_energy -= 2.0 * x_walked[s] * fields[s]
            x_walked[s] = -x_walked[s]
            fields += (2.0 * x_walked[s]) * a_walked[:, s]
            cross += (2.0 * x_walked[s]) * coupling[s]
            if step % refresh_every == 0:
                cold_fields = a_walked @ x_walked
                cold_cross = x_walked @ coupling
                cold_energy = 0.5 * float(x_walked @ cold_fields)
                max_drift = max(
                    max_drift,
                    float(np.max(np.abs(fields - cold_fields))),
                    float(np.max(np.abs(cross - cold_cross))),
                    abs(walked_energy - cold_energy),
                )
                fields, cross, walked_energy = cold_fields, cold_cross, cold_energy

        energies = low_energy + walked_energy + cross
        ordered = energies[::-1] if step & 1 else energies
        pos = int(np.argmax(ordered))
        candidate = float(ordered[pos])
        if math.isnan(best) or candidate > best:
            best = candidate
            best_low = size - 1 - pos if step & 1 else pos
            best_walked = x_walked.copy()

    x = np.empty(n)
    x[walked] = best_walked
    x[low] = block[best_low]
    elapsed = time.perf_counter() - started

    value = best / n
    logger.debug(
        "sk n=%d value=%.12g configs=%d drift=%.3g elapsed=%.3fs",
        n,
        value,
        2**free,
        max_drift,
        elapsed,
    )
    return GroundStateResult(
        problem=Problem.SK,
        value=value,
        scaled=value / math.sqrt(n),
        assignment=SpinAssignment(x=_signs(x)),
        configs_visited=2**free,
        elapsed=elapsed,
        max_drift=max_drift,
    )


def solve_quadratic(
    square: LittleInstance, limits: SolverLimits | None = None
) -> GroundStateResult:
    """max over x in {-1,+1}^n of (1/n) x^T h x, including the diagonal.

    Uses sum_{i,j} h_ij x_i x_j = trace(h) + sqrt(2) * sum_{i<j} hs_ij x_i x_j
    with hs the symmetrised matrix.
    """
    _check_finite(square.h)
    sk = solve_sk(symmetrize(square), limits)
    value = math.sqrt(2.0) * sk.value + float(np.trace(square.h)) / square.n
    return GroundStateResult(
        problem=Problem.QUADRATIC,
        value=value,
        scaled=value / math.sqrt(square.n),
        assignment=sk.assignment,
        configs_visited=sk.configs_visited,
        elapsed=sk.elapsed,
        max_drift=sk.max_drift,
    )


def _sign_rows(count: int, start: int, stop: int) -> np.ndarray:
    index = np.arange(start, stop)
    bits = (index[:, None] >> np.arange(count)) & 1
    return 1.0 - 2.0 * bits.astype(np.float64)


def _all_signs(count: int) -> np.ndarray:
    return np.array(list(itertools.product((1.0, -1.0), repeat=count))).reshape(
        2**count, count
    )


def brute_force_max(inst: LittleInstance) -> GroundStateResult:
    if inst.n + inst.m > BRUTE_FORCE_JOINT_CAP:
        raise SizeLimitError(
            f"n+m={inst.n + inst.m} exceeds brute-force cap {BRUTE_FORCE_JOINT_CAP}"
        )
    _check_finite(inst.h)

    started = time.perf_counter()
    # the smaller side is tabulated, the larger one streamed in chunks
    rows_small = inst.m <= inst.n
    small, large = (inst.m, inst.n) if rows_small else (inst.n, inst.m)
    matrix = inst.h.T if rows_small else inst.h
    table = _all_signs(small)
    chunk = max(1, 2**20 >> small)
    best = -math.inf
    best_large = np.ones(large)
    best_small = np.ones(small)
    for start in range(0, 2**large, chunk):
        streamed = _sign_rows(large, start, min(2**large, start + chunk))
        values = (streamed @ matrix) @ table.T
        row, col = np.unravel_index(int(np.argmax(values)), values.shape)
        if values[row, col] > best:
            best = float(values[row, col])
            best_large, best_small = streamed[row], table[col]
    best_x, best_y = (best_large, best_small) if rows_small else (best_small, best_large)

    value = best / math.sqrt(inst.m * inst.n)
    return GroundStateResult(
        problem=Problem.MAX,
        value=value,
        scaled=value / math.sqrt(inst.n),
        assignment=SpinAssignment(x=_signs(best_x), y=_signs(best_y)),
        configs_visited=2 ** (inst.n + inst.m),
        elapsed=time.perf_counter() - started,
    )


def brute_force_minmax(inst: LittleInstance) -> GroundStateResult:
    if inst.n > BRUTE_FORCE_MINMAX_CAP:
        raise SizeLimitError(
            f"n={inst.n} exceeds brute-force cap {BRUTE_FORCE_MINMAX_CAP}"
        )
    _check_finite(inst.h)

    started = time.perf_counter()
    total = 2**inst.n
    best = math.inf
    best_x = np.ones(inst.n)
    for start in range(0, total, _CHUNK_ROWS):
        xs = _sign_rows(inst.n, start, min(total, start + _CHUNK_ROWS))
        norms = np.abs(xs @ inst.h.T).sum(axis=1)
        pos = int(np.argmin(norms))
        if norms[pos] < best:
            best, best_x = float(norms[pos]), xs[pos]

    value = best / math.sqrt(inst.m * inst.n)
    return GroundStateResult(
        problem=Problem.MINMAX,
        value=value,
        scaled=value / math.sqrt(inst.n),
        assignment=SpinAssignment(x=_signs(best_x), y=_signs(inst.h @ best_x)),
        configs_visited=total,
        elapsed=time.perf_counter() - started,
    )


def _brute_force_form(matrix: np.ndarray, halve: bool) -> tuple[float, np.ndarray]:
    n = matrix.shape[0]
    total = 2**n
    best = -math.inf
    best_x = np.ones(n)
    for start in range(0, total, _CHUNK_ROWS):
        xs = _sign_rows(n, start, min(total, start + _CHUNK_ROWS))
        values = np.einsum("ci,ij,cj->c", xs, matrix, xs)
        if halve:
            values = 0.5 * values
        pos = int(np.argmax(values))
        if values[pos] > best:
            best, best_x = float(values[pos]), xs[pos]
    return best, best_x


def brute_force_sk(sym: SymmetricInstance) -> GroundStateResult:
    if sym.n > BRUTE_FORCE_QUADRATIC_CAP:
        raise SizeLimitError(
            f"n={sym.n} exceeds brute-force cap {BRUTE_FORCE_QUADRATIC_CAP}"
        )
    started = time.perf_counter()
    best, best_x = _brute_force_form(sym.hs, halve=True)
    value = best / sym.n
    return GroundStateResult(
        problem=Problem.SK,
        value=value,
        scaled=value / math.sqrt(sym.n),
        assignment=SpinAssignment(x=_signs(best_x)),
        configs_visited=2**sym.n,
        elapsed=time.perf_counter() - started,
    )


def brute_force_quadratic(square: LittleInstance) -> GroundStateResult:
    if square.m != square.n:
        raise ShapeError(f"quadratic form needs a square matrix, got {square.m}x{square.n}")
    if square.n > BRUTE_FORCE_QUADRATIC_CAP:
        raise SizeLimitError(
            f"n={square.n} exceeds brute-force cap {BRUTE_FORCE_QUADRATIC_CAP}"
        )
    _check_finite(square.h)
    started = time.perf_counter()
    best, best_x = _brute_force_form(square.h, halve=False)
    value = best / square.n
    return GroundStateResult(
        problem=Problem.QUADRATIC,
        value=value,
        scaled=value / math.sqrt(square.n),
        assignment=SpinAssignment(x=_signs(best_x)),
        configs_visited=2**square.n,
        elapsed=time.perf_counter() - started,
    )
