"""Thread-pool helpers for data-parallel sweeps (lambda grids, sample sets)."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np
from numpy.typing import NDArray

from semispec.init_logger import get_logger

logger = get_logger(__name__)

ENV_VAR = "SEMISPEC_THREADS"
CHUNK_ROWS = 256

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(flag: int | None = None) -> int:
    """Worker count from the CLI flag, else SEMISPEC_THREADS, else 1."""
    if flag is not None:
        if flag < 1:
            raise ValueError(f"--threads must be >= 1, got {flag}")
        return flag
    raw = os.environ.get(ENV_VAR)
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        logger.warning("Ignoring non-integer %s=%r", ENV_VAR, raw)
        return 1
    return max(value, 1)


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int = 1) -> list[R]:
    """Map in input order; serial when threads == 1."""
    seq = list(items)
    if threads <= 1 or len(seq) <= 1:
        return [fn(item) for item in seq]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, seq))


def map_row_chunks(
    fn: Callable[[NDArray[np.float64]], NDArray[np.float64]],
    points: NDArray[np.float64],
    threads: int = 1,
    axis: int = 0,
    rows: int = CHUNK_ROWS,
) -> NDArray[np.float64]:
    """
    Apply `fn` to consecutive blocks of `rows` sample points and join the results along `axis`.

    The blocks do not depend on `threads`, so serial and threaded sweeps do the same arithmetic.
    """
    blocks = [points[i : i + rows] for i in range(0, points.shape[0], rows)] or [points]
    return np.concatenate(parallel_map(fn, blocks, threads), axis=axis)
