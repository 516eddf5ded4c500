"""Linearized stiffness operator A, its M-matrix structure and time-step bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg, sparse

from . import _kernels
from .grid import Grid1D
from .material import MaterialModel
from .quadrature import QuadratureRule, build_stencils

DENSE_GUARD = 1024


@dataclass(eq=False)
class BandedSymmetricOperator:
    """A restricted to the nodes of K, stored by diagonal offset.

    ``data[w + d, r] = A[r, r + d]``. Couplings to collar nodes are kept in
    ``boundary_coupling`` (|K| x n_nodes, nonzero only on collar columns) for
    prescribing nonzero collar data. For p > 1 the stored matrix need not be
    symmetric; see :func:`stieltjes_check`.
    """

    grid: Grid1D
    data: np.ndarray
    boundary_coupling: sparse.csr_matrix
    fp0: float

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    @property
    def half_bandwidth(self) -> int:
        return (self.data.shape[0] - 1) // 2

    @property
    def diagonal(self) -> np.ndarray:
        return self.data[self.half_bandwidth]

    def matvec(self, u_K) -> np.ndarray:
        u_K = np.ascontiguousarray(u_K, dtype=float)
        out = np.empty(self.dim)
        _kernels.banded_matvec(self.data, u_K, out)
        return out

    def apply_full(self, u) -> np.ndarray:
        """A u_K plus collar couplings, scattered to a full nodal array.

        With zero collar data this is the linearized nodal force.
        """
        u = np.asarray(u, dtype=float)
        g = self.grid
        out = np.zeros(g.n_nodes)
        force = self.matvec(u[g.first_K:g.last_K + 1])
        if self.boundary_coupling.nnz:
            collar = np.where(g.collar_mask, u, 0.0)
            if np.any(collar):
                force += self.boundary_coupling @ collar
        out[g.first_K:g.last_K + 1] = force
        return out

    def to_dense(self) -> np.ndarray:
        w, n = self.half_bandwidth, self.dim
        dense = np.zeros((n, n))
        rows = np.arange(n)
        for d in range(-w, w + 1):
            r = rows[(rows + d >= 0) & (rows + d < n)]
            dense[r, r + d] = self.data[w + d, r]
        return dense

    def to_scipy(self) -> sparse.csr_matrix:
        return sparse.csr_matrix(self.to_dense())


def relative_coefficients(model: MaterialModel, grid: Grid1D, rule: QuadratureRule | None = None):
    """abar_{i, i+d} for each node type, as dicts ``{d: value}``."""
    rule = rule or QuadratureRule.for_order(grid.p)
    scale = 2.0 / grid.eps**2 * model.fp0
    coeffs = []
    for s in build_stencils(grid, rule, model.influence):
        c = scale * s.weights * s.influence / s.dist
        d = (s.offsets[:, None] + np.arange(grid.p + 1)).ravel()
        vals = (c[:, None] * s.basis).ravel()
        keys, inv = np.unique(d, return_inverse=True)
        coeffs.append(dict(zip(keys.tolist(), np.bincount(inv, weights=vals).tolist())))
    return coeffs


def assemble(model: MaterialModel, grid: Grid1D, rule: QuadratureRule | None = None
             ) -> BandedSymmetricOperator:
    if float(model.influence(0.0)) > 0:
        raise ValueError("influence functions with J(0) > 0 make abar_ii singular")
    coeffs = relative_coefficients(model, grid, rule)
    w = max(abs(d) for c in coeffs for d in c)
    K = grid.K
    n = len(K)
    data = np.zeros((2 * w + 1, n))
    rows = np.arange(n)
    types = grid.node_type(K)
    brow, bcol, bval = [], [], []
    for t, c in enumerate(coeffs):
        r_t = rows[types == t]
        diag = -sum(v for d, v in c.items() if d != 0)
        data[w, r_t] = diag
        for d, v in c.items():
            if d == 0:
                continue
            inside = (r_t + d >= 0) & (r_t + d < n)
            data[w + d, r_t[inside]] = v
            out = r_t[~inside]
            brow.extend(out.tolist())
            bcol.extend((K[out] + d).tolist())
            bval.extend([v] * len(out))
    coupling = sparse.csr_matrix((bval, (brow, bcol)), shape=(n, grid.n_nodes))
    return BandedSymmetricOperator(grid, data, coupling, model.fp0)


def apply_nonlocal_dirichlet(operator: BandedSymmetricOperator, boundary_values, load):
    """Return load + sum_{j in K_eps} abar_ij u_j for every row of K.

    ``boundary_values`` is a mapping ``{collar node: value}`` or a full nodal
    array (only its collar entries are used).
    """
    g = operator.grid
    u = np.zeros(g.n_nodes)
    if isinstance(boundary_values, dict):
        for j, v in boundary_values.items():
            if not g.collar_mask[j]:
                raise ValueError(f"node {j} is not a collar node")
            u[j] = v
    else:
        u = np.where(g.collar_mask, np.asarray(boundary_values, dtype=float), 0.0)
    return np.asarray(load, dtype=float) + operator.boundary_coupling @ u


def gershgorin_bound(operator) -> float:
    """max_i |a_ii| + sum_{j != i} |a_ij|, an upper bound on lambda_max(-A)."""
    if isinstance(operator, BandedSymmetricOperator):
        return float(np.max(np.sum(np.abs(operator.data), axis=0)))
    a = np.atleast_2d(np.asarray(operator, dtype=float))
    return float(np.max(np.sum(np.abs(a), axis=1)))


def stable_dt(model: MaterialModel, h: float, eps: float) -> float:
    """h / sqrt(C + 2 f'(0) M h^2 / eps^2), divided by sqrt(rho)."""
    C = model.elastic_modulus()
    M = model.influence_max()
    return h / math.sqrt(C + 2.0 * model.fp0 * M * h * h / (eps * eps)) / math.sqrt(model.density)


def cfl_dt(model: MaterialModel, h: float) -> float:
    return h / math.sqrt(model.elastic_modulus() / model.density)


def _is_symmetric(a: np.ndarray) -> bool:
    return np.allclose(a, a.T, rtol=0, atol=1e-12 * max(1.0, np.max(np.abs(a))))


def exact_spectrum(operator, max_dim: int = DENSE_GUARD) -> np.ndarray:
    """Sorted eigenvalues of -A by a dense solver."""
    a = operator.to_dense() if isinstance(operator, BandedSymmetricOperator) else np.asarray(operator)
    if a.shape[0] > max_dim:
        raise ValueError(f"dimension {a.shape[0]} exceeds the dense eigensolver guard {max_dim}")
    if _is_symmetric(a):
        return np.sort(linalg.eigvalsh(-a))
    lam = linalg.eigvals(-a)
    # nonsymmetric (p > 1) assemblies: report real parts, imaginary parts are
    # checked by the caller if it cares
    return np.sort(lam.real)


@dataclass
class Violation:
    i: int
    j: int
    kind: str
    magnitude: float


def stieltjes_check(operator, rtol: float = 1e-12) -> list[Violation]:
    """Sign, dominance and symmetry conditions for -A being a Stieltjes matrix."""
    a = operator.to_dense() if isinstance(operator, BandedSymmetricOperator) else np.asarray(operator, dtype=float)
    m = -a
    tol = rtol * max(1.0, float(np.max(np.abs(np.diag(m)))))
    found = []
    n = m.shape[0]
    off = m - np.diag(np.diag(m))
    # one entry per unordered pair
    pos = np.maximum(off, off.T)
    for i, j in zip(*np.nonzero(np.triu(pos, 1) > tol)):
        found.append(Violation(int(i), int(j), "positive off-diagonal of -A", float(pos[i, j])))
    slack = np.diag(m) - np.sum(np.abs(off), axis=1)
    for i in np.nonzero(slack < -tol)[0]:
        found.append(Violation(int(i), int(i), "diagonal dominance", float(-slack[i])))
    asym = np.abs(m - m.T)
    for i, j in zip(*np.nonzero(np.triu(asym, 1) > tol)):
        found.append(Violation(int(i), int(j), "asymmetry", float(asym[i, j])))
    if n and np.any(np.diag(m) <= 0):
        for i in np.nonzero(np.diag(m) <= 0)[0]:
            found.append(Violation(int(i), int(i), "nonpositive diagonal of -A", float(m[i, i])))
    return found


@dataclass
class StabilityReport:
    n: int
    m: int
    p: int
    h: float
    eps: float
    gershgorin_lambda_bound: float
    exact_lambda_max: float | None
    dt_theorem: float
    dt_spectral: float | None
    dt_cfl_local: float
    stieltjes_violations: int | None = None

    CSV_COLUMNS = ("n", "m", "p", "h", "eps", "dt_theorem", "dt_spectral",
                   "dt_cfl_local", "gershgorin", "lambda_max")

    def csv_row(self) -> list:
        return [self.n, self.m, self.p, self.h, self.eps, self.dt_theorem,
                self.dt_spectral, self.dt_cfl_local, self.gershgorin_lambda_bound,
                self.exact_lambda_max]


def stability_report(model: MaterialModel, grid: Grid1D, rule=None, exact: bool | None = None,
                     check_structure: bool = True) -> StabilityReport:
    op = assemble(model, grid, rule)
    if exact is None:
        exact = op.dim <= DENSE_GUARD
    lam_max = dt_spec = None
    if exact:
        lam_max = float(exact_spectrum(op)[-1])
        dt_spec = 2.0 / math.sqrt(lam_max / model.density)
    h = grid.spacing
    return StabilityReport(
        n=op.dim, m=grid.m, p=grid.p, h=grid.h, eps=grid.eps,
        gershgorin_lambda_bound=gershgorin_bound(op),
        exact_lambda_max=lam_max,
        dt_theorem=stable_dt(model, h, grid.eps),
        dt_spectral=dt_spec,
        dt_cfl_local=cfl_dt(model, h),
        stieltjes_violations=len(stieltjes_check(op)) if check_structure else None,
    )
