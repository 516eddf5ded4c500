"""Error norms on nested grids and convergence-rate estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import Grid1D, LocalGrid, NodalField

ERROR_COLUMNS = ("step", "time", "l2_error", "sup_error", "pair")


@dataclass
class ErrorRecord:
    step: int
    time: float
    l2_error: float
    sup_error: float
    pair: str

    def csv_row(self) -> list:
        return [self.step, self.time, self.l2_error, self.sup_error, self.pair]


def _values(field):
    return field.values if isinstance(field, NodalField) else np.asarray(field, dtype=float)


def coarse_to_fine_index(fine: Grid1D | LocalGrid, coarse: Grid1D | LocalGrid) -> np.ndarray:
    """Index into ``fine`` of every K node of ``coarse``; raises if not nested."""
    xc = coarse.x[coarse.K]
    xf = fine.x
    idx = np.clip(np.searchsorted(xf, xc), 1, len(xf) - 1)
    left = np.abs(xf[idx - 1] - xc) <= np.abs(xf[idx] - xc)
    idx = np.where(left, idx - 1, idx)
    tol = 1e-12 * max(1.0, abs(coarse.b - coarse.a))
    if np.any(np.abs(xf[idx] - xc) > tol):
        raise ValueError("grids are not nested: coarse nodes missing from the fine grid")
    return idx


def restrict_to_coarse(fine: NodalField, coarse_grid) -> NodalField:
    """Sample ``fine`` at the nodes of ``coarse_grid``.

    Only K nodes have to coincide; coarse collar nodes carry the homogeneous
    boundary value unless they also coincide with fine nodes.
    """
    idx = coarse_to_fine_index(fine.grid, coarse_grid)
    out = np.zeros(coarse_grid.n_nodes)
    out[coarse_grid.K] = fine.values[idx]
    if isinstance(coarse_grid, Grid1D):
        xf = fine.grid.x
        for k in coarse_grid.K_eps:
            j = np.searchsorted(xf, coarse_grid.x[k])
            for jj in (j - 1, j):
                if 0 <= jj < len(xf) and abs(xf[jj] - coarse_grid.x[k]) <= 1e-12:
                    out[k] = fine.values[jj]
    return NodalField(coarse_grid, out)


def norm_l2(field, grid=None) -> float:
    """Trapezoidal (int_D e^2 dx)^(1/2) over the K nodes."""
    if grid is None:
        grid = field.grid
    e = _values(field)[grid.K]
    x = grid.x[grid.K]
    return math.sqrt(float(np.trapezoid(e * e, x)))


def norm_sup(field, grid=None) -> float:
    if grid is None:
        grid = field.grid
    e = _values(field)[grid.K]
    return float(np.max(np.abs(e))) if len(e) else 0.0


def difference_norms(fine, coarse) -> tuple[float, float]:
    """L2 and sup norms of fine - coarse, taken on the coarse grid's nodes."""
    diff = restrict_to_coarse(fine, coarse.grid).values - coarse.values
    return norm_l2(diff, coarse.grid), norm_sup(diff, coarse.grid)


def _positive(*errs):
    for e in errs:
        if not (e > 0 and math.isfinite(e)):
            raise ValueError(
                f"convergence rate needs positive finite errors, got {e!r}; "
                "the solutions coincide or were compared in the wrong order")


def rate_from_triplet(e12: float, e23: float, r: float) -> float:
    """(ln e12 - ln e23) / ln r for meshes with common refinement ratio r."""
    _positive(e12, e23)
    if not r > 1:
        raise ValueError("refinement ratio must exceed 1")
    return (math.log(e12) - math.log(e23)) / math.log(r)


def rate_from_eps_pair(e12: float, e23: float, eps2: float, eps3: float) -> float:
    _positive(e12, e23)
    if not eps2 > eps3 > 0:
        raise ValueError("need eps2 > eps3 > 0")
    return (math.log(e12) - math.log(e23)) / (math.log(eps2) - math.log(eps3))


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of ln y against ln x."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.size < 2:
        raise ValueError("need at least two (x, y) pairs")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise ValueError("log-log slope needs positive values")
    lx, ly = np.log(xs), np.log(ys)
    lx = lx - lx.mean()
    return float(np.dot(lx, ly - ly.mean()) / np.dot(lx, lx))


def common_ratio(values, rtol: float = 1e-9) -> float:
    """Ratio v[i] / v[i+1], checked to be the same for every consecutive pair."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise ValueError("need at least two values")
    ratios = v[:-1] / v[1:]
    if not np.allclose(ratios, ratios[0], rtol=rtol, atol=0):
        raise ValueError(f"values {list(v)} do not share a common ratio")
    if not ratios[0] > 1:
        raise ValueError("values must decrease strictly")
    return float(ratios[0])
