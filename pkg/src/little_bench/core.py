"""Disorder generation and matrix utilities.

The seed -> matrix map is frozen: ``numpy.random.Generator(Philox(seed))``,
Gaussian entries from ``standard_normal`` and Bernoulli entries from
``integers(0, 2)`` mapped onto {-1, +1}, both filled in row-major order.
Per-trial seeds come from ``SeedSequence(master_seed, spawn_key=(trial, purpose))``.
"""

import logging
import math
from typing import Sequence

import numpy as np

from little_bench.domain import (
    MAX_MATRIX_ENTRIES,
    Distribution,
    LittleInstance,
    Purpose,
    ShapeError,
    SizeLimitError,
    SymmetricInstance,
)

logger: logging.Logger = logging.getLogger(__name__)


def derive_seed(master_seed: int, trial_index: int, purpose: Purpose) -> int:
    sequence = np.random.SeedSequence(
        entropy=master_seed, spawn_key=(trial_index, int(purpose))
    )
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def generate_instance(m: int, n: int, dist: Distribution, seed: int) -> LittleInstance:
    if m < 1 or n < 1:
        raise ShapeError(f"m and n must be positive, got m={m} n={n}")
    if m * n > MAX_MATRIX_ENTRIES:
        raise SizeLimitError(
            f"m*n={m * n} entries exceeds the memory guard of {MAX_MATRIX_ENTRIES}"
        )

    rng = make_rng(seed)
    if dist is Distribution.GAUSSIAN:
        h = rng.standard_normal((m, n))
    else:
        h = 2.0 * rng.integers(0, 2, size=(m, n)).astype(np.float64) - 1.0

    return LittleInstance(m=m, n=n, h=h, dist=dist, seed=seed)


def symmetrize(square: LittleInstance) -> SymmetricInstance:
    if square.m != square.n:
        raise ShapeError(f"symmetrize needs a square matrix, got {square.m}x{square.n}")

    h = square.h
    hs = (h + h.T) / math.sqrt(2.0)
    np.fill_diagonal(hs, 0.0)
    # (a + b) and (b + a) round identically, but force bitwise symmetry anyway
    hs = np.triu(hs, 1)
    hs = hs + hs.T
    return SymmetricInstance(n=square.n, hs=hs)


def relabel(
    inst: LittleInstance, row_perm: Sequence[int], col_perm: Sequence[int]
) -> LittleInstance:
    rows = np.asarray(row_perm, dtype=np.intp)
    cols = np.asarray(col_perm, dtype=np.intp)
    if sorted(rows.tolist()) != list(range(inst.m)) or sorted(cols.tolist()) != list(
        range(inst.n)
    ):
        raise ShapeError("row_perm and col_perm must be permutations of the index sets")
    return LittleInstance(
        m=inst.m, n=inst.n, h=inst.h[rows][:, cols], dist=inst.dist, seed=inst.seed
    )


def random_relabel(inst: LittleInstance, seed: int) -> LittleInstance:
    rng = make_rng(seed)
    return relabel(inst, rng.permutation(inst.m), rng.permutation(inst.n))


def partition_instance(weights: Sequence[float], seed: int = 0) -> LittleInstance:
    """Single-row instance whose minmax value is min_x |sum_i w_i x_i| / sqrt(n)."""
    w = np.asarray(weights, dtype=np.float64).reshape(1, -1)
    dist = (
        Distribution.BERNOULLI if np.all(np.abs(w) == 1.0) else Distribution.GAUSSIAN
    )
    return LittleInstance(m=1, n=w.shape[1], h=w, dist=dist, seed=seed)
