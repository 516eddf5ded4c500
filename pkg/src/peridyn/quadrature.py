"""Element-wise Gauss-Legendre rules over the horizon of a node."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss

from .grid import Grid1D, lagrange_basis


@lru_cache(maxsize=None)
def gauss_legendre(q: int) -> tuple[np.ndarray, np.ndarray]:
    """Abscissae and weights mapped to [0, 1]."""
    t, w = leggauss(q)
    return 0.5 * (t + 1.0), 0.5 * w


@dataclass(frozen=True)
class QuadratureRule:
    points_per_element: int

    @classmethod
    def for_order(cls, p: int) -> "QuadratureRule":
        return cls(max(p + 2, 4))


@dataclass(frozen=True, eq=False)
class HorizonStencil:
    """Quadrature data for every node of a given local type.

    All nodes of K see a complete horizon inside the meshed region, so the
    stencil depends only on the node's position inside its element.
    ``offsets[q]`` is the index of the first node of the element holding
    point q, relative to the centre node.
    """

    node_type: int
    offsets: np.ndarray  # (nq,) int
    basis: np.ndarray  # (nq, p+1)
    weights: np.ndarray  # (nq,) raw quadrature weights
    dist: np.ndarray  # (nq,) |y - x_i| > 0
    influence: np.ndarray  # (nq,) J(|y - x_i| / eps)

    @property
    def size(self) -> int:
        return len(self.offsets)


def build_stencil(grid: Grid1D, rule: QuadratureRule, node_type: int, influence) -> HorizonStencil:
    """Points on every element piece inside [x_i - eps, x_i + eps].

    Pieces are split at x_i and at the horizon ends so the integrand is smooth
    on each; Gauss points are interior, never at y = x_i.
    """
    h, p, eps = grid.h, grid.p, grid.eps
    t_nodes, w_ref = gauss_legendre(rule.points_per_element)
    xc = node_type * h / p  # centre, measured from the start of its element
    e_lo = int(np.floor((xc - eps) / h + 1e-12))
    e_hi = int(np.ceil((xc + eps) / h - 1e-12))
    offsets, basis, weights, ys = [], [], [], []
    for e in range(e_lo, e_hi):
        left, right = e * h, (e + 1) * h
        cuts = {max(left, xc - eps), min(right, xc + eps)}
        if left < xc < right:
            cuts.add(xc)
        cuts = sorted(cuts)
        for s0, s1 in zip(cuts[:-1], cuts[1:]):
            if s1 - s0 <= 1e-14 * h:
                continue
            y = s0 + (s1 - s0) * t_nodes
            ys.append(y)
            weights.append((s1 - s0) * w_ref)
            basis.append(lagrange_basis(p, (y - left) / h))
            offsets.append(np.full(len(y), e * p - node_type))
    y = np.concatenate(ys)
    dist = np.abs(y - xc)
    # J at the horizon edge is evaluated from the inside
    r = np.minimum(dist / eps, 1.0)
    return HorizonStencil(
        node_type=node_type,
        offsets=np.concatenate(offsets).astype(np.int64),
        basis=np.ascontiguousarray(np.concatenate(basis)),
        weights=np.concatenate(weights),
        dist=dist,
        influence=np.asarray(influence(r), dtype=float),
    )


def build_stencils(grid: Grid1D, rule: QuadratureRule, influence) -> list[HorizonStencil]:
    return [build_stencil(grid, rule, t, influence) for t in range(grid.p)]


def composite_gauss(a: float, b: float, panels: int = 32, order: int = 16):
    """Points and weights of a composite Gauss-Legendre rule on [a, b]."""
    t, w = gauss_legendre(order)
    edges = np.linspace(a, b, panels + 1)
    widths = np.diff(edges)
    pts = (edges[:-1, None] + widths[:, None] * t).ravel()
    wts = (widths[:, None] * w).ravel()
    return pts, wts
