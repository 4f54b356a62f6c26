"""Adaptive tensor-product Gauss-Legendre cubature on parameter boxes."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import ComputationError

ORDER = 8
CHUNK_POINTS = 250_000


@dataclass(frozen=True)
class CubatureResult:
    value: float
    error: float
    cells: int
    culled: float = 0.0


@lru_cache(maxsize=None)
def tensor_rule(dim: int, order: int = ORDER):
    """Nodes on the unit cube and weights summing to one."""
    x, w = np.polynomial.legendre.leggauss(order)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    wgrids = np.meshgrid(*([w] * dim), indexing="ij")
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    return nodes, weights


def box_integrals(func: Callable, lo: np.ndarray, hi: np.ndarray, order: int = ORDER) -> np.ndarray:
    """Gauss-Legendre integral of ``func`` over each box ``[lo_i, hi_i]``."""
    dim = lo.shape[1]
    nodes, weights = tensor_rule(dim, order)
    q = len(weights)
    out = np.empty(lo.shape[0])
    step = max(1, CHUNK_POINTS // q)
    for start in range(0, lo.shape[0], step):
        a = lo[start : start + step]
        width = hi[start : start + step] - a
        pts = a[:, None, :] + width[:, None, :] * nodes[None]
        vals = np.asarray(func(pts.reshape(-1, dim)), dtype=float).reshape(len(a), q)
        out[start : start + step] = np.prod(width, axis=1) * (vals @ weights)
    return out


def split_cells(lo, hi, axis):
    """Bisect each cell along its own ``axis``; children are interleaved."""
    idx = np.arange(len(lo))
    mid = 0.5 * (lo[idx, axis] + hi[idx, axis])
    left_hi = hi.copy()
    left_hi[idx, axis] = mid
    right_lo = lo.copy()
    right_lo[idx, axis] = mid
    return np.concatenate([lo, right_lo]), np.concatenate([left_hi, hi])


def uniform_cells(lower, upper, counts):
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    edges = [np.linspace(a, b, c + 1) for a, b, c in zip(lower, upper, counts)]
    lo_grid = np.meshgrid(*[e[:-1] for e in edges], indexing="ij")
    hi_grid = np.meshgrid(*[e[1:] for e in edges], indexing="ij")
    lo = np.stack([g.ravel() for g in lo_grid], axis=-1)
    hi = np.stack([g.ravel() for g in hi_grid], axis=-1)
    return lo, hi


def _estimate(func, lo, hi):
    """Per-cell value, error and worst axis from whole-vs-halved comparisons."""
    c, dim = lo.shape
    boxes_lo = [lo]
    boxes_hi = [hi]
    for a in range(dim):
        mid = 0.5 * (lo[:, a] + hi[:, a])
        left_hi = hi.copy()
        left_hi[:, a] = mid
        right_lo = lo.copy()
        right_lo[:, a] = mid
        boxes_lo += [lo, right_lo]
        boxes_hi += [left_hi, hi]
    vals = box_integrals(func, np.concatenate(boxes_lo), np.concatenate(boxes_hi)).reshape(1 + 2 * dim, c)
    whole = vals[0]
    halves = vals[1::2] + vals[2::2]
    diffs = np.abs(halves - whole)
    axis = np.argmax(diffs, axis=0)
    return halves[axis, np.arange(c)], diffs[axis, np.arange(c)], axis


def adaptive_cubature(
    func: Callable,
    lower,
    upper,
    tol: float,
    *,
    initial=4,
    prefilter: Callable | None = None,
    max_cells: int = 400_000,
) -> CubatureResult:
    """Integrate ``func`` over the box ``[lower, upper]`` to absolute ``tol``.

    ``func`` maps an ``(M, dim)`` array of points to ``M`` values.  Cells are
    refined by bisection along the axis whose halving changes the cell value
    most.  ``prefilter(lo, hi) -> (lo, hi, culled)`` may pre-split and drop
    cells before the adaptive loop; ``culled`` is added to the error.

    Raises:
        ComputationError: if ``max_cells`` is reached first.
    """
    lower = np.asarray(lower, dtype=float)
    dim = lower.size
    counts = [initial] * dim if np.isscalar(initial) else list(initial)
    lo, hi = uniform_cells(lower, upper, counts)
    culled = 0.0
    if prefilter is not None:
        lo, hi, culled = prefilter(lo, hi)
    if len(lo) == 0:
        return CubatureResult(0.0, culled, 0, culled)
    val, err, axis = _estimate(func, lo, hi)
    while True:
        total = float(err.sum()) + culled
        floor = 64 * np.finfo(float).eps * float(np.abs(val).sum())
        if total <= max(tol, floor):
            break
        if len(lo) >= max_cells:
            raise ComputationError(f"cubature exceeded {max_cells} cells", total)
        order = np.argsort(-err)
        remaining = float(err.sum()) - np.cumsum(err[order])
        count = int(np.searchsorted(-remaining, -0.5 * tol)) + 1
        count = min(count, len(order), max(1, max_cells - len(lo)))
        chosen = order[:count]
        keep = np.ones(len(lo), dtype=bool)
        keep[chosen] = False
        new_lo, new_hi = split_cells(lo[chosen], hi[chosen], axis[chosen])
        nval, nerr, naxis = _estimate(func, new_lo, new_hi)
        lo = np.concatenate([lo[keep], new_lo])
        hi = np.concatenate([hi[keep], new_hi])
        val = np.concatenate([val[keep], nval])
        err = np.concatenate([err[keep], nerr])
        axis = np.concatenate([axis[keep], naxis])
    # summation in a fixed cell order keeps results reproducible
    order = np.lexsort(lo.T[::-1])
    return CubatureResult(float(np.sum(val[order])), float(err.sum()) + culled, len(lo), culled)
