"""Small numerical helpers shared across modules."""

from __future__ import annotations

import math

import numpy as np


def stable_sum(values) -> float:
    """Correctly rounded sum of a real array.

    The result does not depend on memory layout or thread count, which keeps
    every lattice reduction reproducible bit for bit.
    """
    arr = np.ascontiguousarray(values, dtype=float).ravel()
    return math.fsum(arr.tolist())


def log1mexp(x):
    """``log(1 - exp(-x))`` for ``x > 0`` without cancellation at either end.

    Uses ``log(-expm1(-x))`` below ``ln 2`` and ``log1p(-exp(-x))`` above.
    """
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(x <= math.log(2.0), np.log(-np.expm1(-x)), np.log1p(-np.exp(-x)))
    return out if out.ndim else float(out)


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log|y|`` against ``log x``."""
    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    if x.size < 2:
        raise ValueError("need at least two points for a slope")
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)


def lattice_ball(radius: float, include_origin: bool = True) -> np.ndarray:
    """Integer vectors ``n`` with ``2*pi*|n| <= radius`` in lexicographic order.

    Returns an ``(K, 3)`` integer array. The momentum of each entry is ``2*pi*n``.
    """
    r = radius / (2.0 * np.pi)
    m = int(math.floor(r + 1e-12))
    ax = np.arange(-m, m + 1)
    g = np.stack(np.meshgrid(ax, ax, ax, indexing="ij"), axis=-1).reshape(-1, 3)
    n2 = np.einsum("ij,ij->i", g, g)
    keep = (2.0 * np.pi) ** 2 * n2 <= radius * radius * (1.0 + 1e-14)
    if not include_origin:
        keep &= n2 > 0
    return g[keep]
