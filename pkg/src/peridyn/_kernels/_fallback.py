"""Numpy implementations of the compiled kernels (same signatures)."""

import numpy as np

LINEAR = 0
EXPONENTIAL = 1

_CHUNK = 1 << 20  # gathered entries per block


def stencil_force(u, nodes, offsets, basis, wj, dist, kind, c0, c1, out):
    nq, nb = basis.shape
    step = max(1, _CHUNK // max(1, nq * nb))
    local = offsets[:, None] + np.arange(nb)
    for s in range(0, len(nodes), step):
        idx = nodes[s:s + step]
        uh = np.einsum("aql,ql->aq", u[idx[:, None, None] + local], basis)
        sv = (uh - u[idx][:, None]) / dist
        if kind == EXPONENTIAL:
            fp = c0 * np.exp(-c1 * dist * sv * sv)
        else:
            fp = c0
        out[idx] = (wj * fp * sv).sum(axis=1)


def banded_matvec(data, u, out):
    nd, n = data.shape
    w = (nd - 1) // 2
    out[:] = 0.0
    for d in range(-w, w + 1):
        if d >= 0:
            out[:n - d] += data[w + d, :n - d] * u[d:]
        else:
            out[-d:] += data[w + d, -d:] * u[:n + d]
