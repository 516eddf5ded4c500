"""Nonlinear and linearized peridynamic forces, and the local elastic force."""

from __future__ import annotations

from functools import cached_property

import numpy as np

from . import _kernels
from .grid import Grid1D, NodalField, interpolate
from .material import ExponentialPotential, MaterialModel
from .quadrature import HorizonStencil, QuadratureRule, build_stencils, composite_gauss

VARIANTS = (
    "nonlinear-vs-linearized",
    "linearized-vs-local",
    "nonlinear-vs-local",
    "interp-vs-exact-nonlinear",
    "interp-vs-exact-linearized",
)


def strain(u, y, x):
    """Difference quotient (u(y) - u(x)) / |y - x|; u is a callable or NodalField."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(y == x):
        raise ValueError("strain is undefined for y == x")
    out = (np.asarray(u(y)) - np.asarray(u(x))) / np.abs(y - x)
    return out if np.ndim(out) else float(out)


def _values(field) -> np.ndarray:
    return field.values if isinstance(field, NodalField) else np.asarray(field, dtype=float)


class ForceEvaluator:
    """Nodal forces of the interpolated field, by quadrature over each horizon.

    Forces are returned as full nodal arrays with zeros on the collar.
    """

    def __init__(self, model: MaterialModel, grid: Grid1D, rule: QuadratureRule | None = None):
        self.model = model
        self.grid = grid
        self.rule = rule or QuadratureRule.for_order(grid.p)
        self.stencils: list[HorizonStencil] = build_stencils(grid, self.rule, model.influence)
        scale = 2.0 / grid.eps**2
        self._wj = [np.ascontiguousarray(scale * s.weights * s.influence) for s in self.stencils]
        K = grid.K
        self._nodes = [np.ascontiguousarray(K[grid.node_type(K) == t]).astype(np.int64)
                       for t in range(grid.p)]

    @cached_property
    def _exp_params(self):
        pot = self.model.potential
        if isinstance(pot, ExponentialPotential):
            return pot.amplitude * pot.decay, pot.decay
        return None

    def _sweep(self, u, nodes_per_type, linear: bool) -> np.ndarray:
        u = np.ascontiguousarray(_values(u), dtype=float)
        out = np.zeros(self.grid.n_nodes)
        fp0 = self.model.fp0
        for s, wj, nodes in zip(self.stencils, self._wj, nodes_per_type):
            if len(nodes) == 0:
                continue
            if linear:
                _kernels.stencil_force(u, nodes, s.offsets, s.basis, wj, s.dist,
                                       _kernels.LINEAR, fp0, 0.0, out)
            elif self._exp_params is not None:
                c0, c1 = self._exp_params
                _kernels.stencil_force(u, nodes, s.offsets, s.basis, wj, s.dist,
                                       _kernels.EXPONENTIAL, c0, c1, out)
            else:
                self._generic_sweep(u, nodes, s, wj, out)
        return out

    def _generic_sweep(self, u, nodes, s, wj, out):
        local = s.offsets[:, None] + np.arange(self.grid.p + 1)
        uh = np.einsum("aql,ql->aq", u[nodes[:, None, None] + local], s.basis)
        sv = (uh - u[nodes][:, None]) / s.dist
        fp = self.model.potential.deriv(s.dist * sv * sv)
        out[nodes] = (wj * fp * sv).sum(axis=1)

    def _select(self, nodes):
        if nodes is None:
            return self._nodes
        nodes = np.atleast_1d(np.asarray(nodes, dtype=np.int64))
        types = self.grid.node_type(nodes)
        return [np.ascontiguousarray(nodes[types == t]) for t in range(self.grid.p)]

    def nonlinear(self, u, nodes=None) -> np.ndarray:
        return self._sweep(u, self._select(nodes), linear=False)

    def linearized(self, u, nodes=None) -> np.ndarray:
        return self._sweep(u, self._select(nodes), linear=True)


def _check_node(grid: Grid1D, i: int):
    if not grid.first_K <= i <= grid.last_K:
        raise IndexError(f"node {i} is not in K")


def force_nonlinear(model, grid, rule, u_field, i: int) -> float:
    _check_node(grid, i)
    return float(ForceEvaluator(model, grid, rule).nonlinear(u_field, [i])[i])


def force_linearized(model, grid, rule, u_field, i: int) -> float:
    _check_node(grid, i)
    return float(ForceEvaluator(model, grid, rule).linearized(u_field, [i])[i])


def local_forces(modulus: float, h: float, u) -> np.ndarray:
    """C (u[i-1] - 2 u[i] + u[i+1]) / h^2 at interior indices; zero at both ends."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    out[1:-1] = modulus * (u[:-2] - 2.0 * u[1:-1] + u[2:]) / (h * h)
    return out


def force_local(model: MaterialModel, h: float, u_values, i: int) -> float:
    u = np.asarray(u_values, dtype=float)
    if not 0 < i < len(u) - 1:
        raise IndexError(f"index {i} is not an interior finite-difference node")
    return float(model.elastic_modulus() * (u[i - 1] - 2.0 * u[i] + u[i + 1]) / (h * h))


def continuum_force(model: MaterialModel, u, x, eps: float, linear: bool = False,
                    panels: int = 32, order: int = 16):
    """Force of a continuum field u at points x by composite Gauss quadrature,
    integrating the two half-horizons separately."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    r, w = composite_gauss(0.0, eps, panels, order)
    weight = 2.0 / eps**2 * w * model.influence(r / eps)
    ux = np.asarray(u(x), dtype=float)[:, None]
    total = np.zeros(len(x))
    for side in (-1.0, 1.0):
        s = (np.asarray(u(x[:, None] + side * r), dtype=float) - ux) / r
        fp = model.fp0 if linear else model.potential.deriv(r * s * s)
        total += np.sum(weight * fp * s, axis=1)
    return total


def consistency_force_gap(model, grid: Grid1D, rule, u, variant: str, u_xx=None,
                          nodes=None) -> float:
    """Sup over nodes (default: K nodes at least eps from both interfaces) of
    the absolute difference of the two forces named by ``variant``."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; choose from {VARIANTS}")
    nodes = grid.interior_nodes() if nodes is None else np.asarray(nodes)
    x = grid.x[nodes]
    eps = grid.eps

    def local():
        if u_xx is None:
            raise ValueError(f"variant {variant!r} needs u_xx")
        return model.elastic_modulus() * np.asarray(u_xx(x), dtype=float)

    if variant == "nonlinear-vs-linearized":
        gap = continuum_force(model, u, x, eps) - continuum_force(model, u, x, eps, linear=True)
    elif variant == "linearized-vs-local":
        gap = continuum_force(model, u, x, eps, linear=True) - local()
    elif variant == "nonlinear-vs-local":
        gap = continuum_force(model, u, x, eps) - local()
    else:
        linear = variant.endswith("linearized")
        ev = ForceEvaluator(model, grid, rule)
        field = interpolate(grid, u)
        discrete = (ev.linearized if linear else ev.nonlinear)(field, nodes)[nodes]
        gap = discrete - continuum_force(model, u, x, eps, linear=linear)
    return float(np.max(np.abs(gap))) if len(gap) else 0.0
