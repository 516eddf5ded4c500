"""Uniform 1-D mesh with a nonlocal collar, Lagrange bases and nodal fields."""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


def lagrange_basis(p: int, t):
    """Equispaced Lagrange basis of order ``p`` on the reference element [0, 1].

    Returns an array of shape ``t.shape + (p + 1,)``.
    """
    t = np.asarray(t, dtype=float)
    nodes = np.linspace(0.0, 1.0, p + 1)
    out = np.ones(t.shape + (p + 1,))
    for l in range(p + 1):
        for k in range(p + 1):
            if k != l:
                out[..., l] *= (t - nodes[k]) / (nodes[l] - nodes[k])
    return out


@dataclass(frozen=True, eq=False)
class Grid1D:
    """Bar [a, b] meshed with elements of size h, order-p Lagrange nodes, and
    ``m`` extra elements on each side forming the nonlocal collar (eps = m h).

    Node k sits at ``a + (k - m p) * (h / p)``. ``K`` are the nodes in [a, b]
    (interface nodes included), ``K_eps`` the collar nodes.
    """

    a: float
    b: float
    h: float
    p: int
    m: int
    n_elements: int  # inside [a, b]

    @property
    def eps(self) -> float:
        return self.m * self.h

    @property
    def spacing(self) -> float:
        return self.h / self.p

    @property
    def n_total_elements(self) -> int:
        return self.n_elements + 2 * self.m

    @property
    def n_nodes(self) -> int:
        return self.p * self.n_total_elements + 1

    @cached_property
    def x(self) -> np.ndarray:
        k = np.arange(self.n_nodes) - self.m * self.p
        x = self.a + k * self.spacing
        x.setflags(write=False)
        return x

    @property
    def first_K(self) -> int:
        return self.m * self.p

    @property
    def last_K(self) -> int:
        return self.m * self.p + self.n_elements * self.p

    @cached_property
    def K(self) -> np.ndarray:
        return np.arange(self.first_K, self.last_K + 1)

    @cached_property
    def K_eps(self) -> np.ndarray:
        return np.concatenate([np.arange(0, self.first_K),
                               np.arange(self.last_K + 1, self.n_nodes)])

    @cached_property
    def collar_mask(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.first_K:self.last_K + 1] = False
        return mask

    @property
    def interface_nodes(self) -> tuple[int, int]:
        return self.first_K, self.last_K

    def interior_nodes(self, margin: float | None = None) -> np.ndarray:
        """Nodes of K at distance >= margin (default eps) from both interfaces."""
        margin = self.eps if margin is None else margin
        x = self.x[self.K]
        tol = 1e-12 * max(1.0, abs(self.b - self.a))
        keep = (x - self.a >= margin - tol) & (self.b - x >= margin - tol)
        return self.K[keep]

    def node_type(self, k) -> np.ndarray:
        """Local position of node k inside its element (0 for vertices)."""
        return np.asarray(k) % self.p

    def locate(self, x):
        """Element index and reference coordinate in [0, 1] for points x."""
        x = np.asarray(x, dtype=float)
        lo = self.a - self.eps
        s = (x - lo) / self.h
        e = np.clip(np.floor(s).astype(int), 0, self.n_total_elements - 1)
        return e, s - e

    def basis_eval(self, i: int, x):
        """phi_i(x); zero outside the elements adjacent to node i."""
        x = np.asarray(x, dtype=float)
        e, t = self.locate(x)
        B = lagrange_basis(self.p, t)
        local = i - e * self.p
        inside = (local >= 0) & (local <= self.p)
        vals = np.take_along_axis(B, np.clip(local, 0, self.p)[..., None], axis=-1)[..., 0]
        out = np.where(inside, vals, 0.0)
        return out if out.ndim else float(out)

    def basis_matrix(self, x):
        """Start node of the containing element and the p+1 basis values."""
        e, t = self.locate(x)
        return e * self.p, lagrange_basis(self.p, t)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        tol = 1e-12 * max(1.0, abs(self.b - self.a))
        return bool(np.all((x >= self.a - self.eps - tol) & (x <= self.b + self.eps + tol)))

    def describe(self) -> dict:
        return {"a": self.a, "b": self.b, "h": self.h, "p": self.p, "m": self.m,
                "eps": self.eps, "n_nodes": self.n_nodes, "n_K": len(self.K)}


@dataclass(frozen=True, eq=False)
class LocalGrid:
    """Finite-difference grid a + k h on [a, b] for the local wave equation."""

    a: float
    b: float
    h: float
    n_elements: int
    p: int = 1

    @property
    def spacing(self) -> float:
        return self.h

    @property
    def n_nodes(self) -> int:
        return self.n_elements + 1

    @cached_property
    def x(self) -> np.ndarray:
        x = self.a + np.arange(self.n_nodes) * self.h
        x.setflags(write=False)
        return x

    @cached_property
    def K(self) -> np.ndarray:
        return np.arange(self.n_nodes)

    @cached_property
    def collar_mask(self) -> np.ndarray:
        return np.zeros(self.n_nodes, dtype=bool)

    def describe(self) -> dict:
        return {"a": self.a, "b": self.b, "h": self.h, "n_nodes": self.n_nodes}


def build_local_grid(a: float, b: float, h: float) -> LocalGrid:
    if not (b > a and h > 0):
        raise ValueError("need b > a and h > 0")
    return LocalGrid(float(a), float(b), float(h), _integral_ratio(b - a, h, "(b - a) / h"))


def _integral_ratio(num: float, den: float, what: str) -> int:
    r = num / den
    n = int(round(r))
    if n < 1 or abs(r - n) > 1e-12 * max(1.0, abs(r)):
        raise ValueError(f"{what} = {r!r} is not a positive integer")
    return n


def build_grid(a: float, b: float, h: float, p: int = 1, m: int = 1) -> Grid1D:
    if not b > a:
        raise ValueError("need b > a")
    if not h > 0:
        raise ValueError("need h > 0")
    if int(p) != p or p < 1:
        raise ValueError("interpolation order p must be a positive integer")
    if int(m) != m or m < 1:
        raise ValueError("horizon m must be a positive integer")
    n = _integral_ratio(b - a, h, "(b - a) / h")
    if m * h >= (b - a) / 2:
        raise ValueError(f"horizon m*h = {m * h} leaves no interior in [{a}, {b}]")
    return Grid1D(float(a), float(b), float(h), int(p), int(m), n)


def grid_from_eps(a: float, b: float, eps: float, h: float, p: int = 1) -> Grid1D:
    """Grid with horizon eps; eps / h must be an integer."""
    m = _integral_ratio(eps, h, "eps / h")
    return build_grid(a, b, h, p, m)


@dataclass(eq=False)
class NodalField:
    grid: Grid1D | LocalGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_nodes,):
            raise ValueError(
                f"expected {self.grid.n_nodes} nodal values, got {self.values.shape}")

    @classmethod
    def zeros(cls, grid: Grid1D) -> "NodalField":
        return cls(grid, np.zeros(grid.n_nodes))

    def __call__(self, x):
        return extend(self.grid, self, x)

    def to_csv(self, path_or_buf=None) -> str:
        buf = io.StringIO()
        buf.write("x,u\n")
        for xi, ui in zip(self.grid.x, self.values):
            buf.write(f"{xi:.17g},{ui:.17g}\n")
        text = buf.getvalue()
        if path_or_buf is not None:
            if hasattr(path_or_buf, "write"):
                path_or_buf.write(text)
            else:
                with open(path_or_buf, "w") as fh:
                    fh.write(text)
        return text

    @classmethod
    def from_csv(cls, grid: Grid1D, path) -> "NodalField":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[0] != grid.n_nodes or not np.allclose(data[:, 0], grid.x, rtol=0, atol=1e-12):
            raise ValueError("CSV node coordinates do not match the grid")
        return cls(grid, data[:, 1])


def interpolate(grid: Grid1D, g) -> NodalField:
    return NodalField(grid, np.asarray(g(grid.x), dtype=float) * np.ones(grid.n_nodes))


def extend(grid: Grid1D, field: NodalField, x):
    """Evaluate sum_i field_i phi_i(x)."""
    x = np.asarray(x, dtype=float)
    start, B = grid.basis_matrix(x)
    idx = start[..., None] + np.arange(grid.p + 1)
    out = np.sum(B * field.values[idx], axis=-1)
    # points on a node take the nodal value verbatim
    s = (x - grid.x[0]) / grid.spacing
    k = np.rint(s).astype(int)
    on = (np.abs(s - k) < 1e-9) & (k >= 0) & (k < grid.n_nodes)
    if np.any(on):
        out = np.where(on, field.values[np.clip(k, 0, grid.n_nodes - 1)], out)
    return out if out.ndim else float(out)
