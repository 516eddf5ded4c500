# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled stencil force and banded matrix-vector kernels."""

from libc.math cimport exp

LINEAR = 0
EXPONENTIAL = 1


def stencil_force(const double[::1] u, const long[::1] nodes, const long[::1] offsets,
                  const double[:, ::1] basis, const double[::1] wj,
                  const double[::1] dist, int kind, double c0, double c1,
                  double[::1] out):
    cdef Py_ssize_t n = nodes.shape[0]
    cdef Py_ssize_t nq = offsets.shape[0]
    cdef Py_ssize_t nb = basis.shape[1]
    cdef Py_ssize_t a, q, l, i, k0
    cdef double ui, uh, s, acc, fp
    with nogil:
        for a in range(n):
            i = nodes[a]
            ui = u[i]
            acc = 0.0
            for q in range(nq):
                k0 = i + offsets[q]
                uh = 0.0
                for l in range(nb):
                    uh = uh + basis[q, l] * u[k0 + l]
                s = (uh - ui) / dist[q]
                if kind == 1:
                    fp = c0 * exp(-c1 * dist[q] * s * s)
                else:
                    fp = c0
                acc = acc + wj[q] * fp * s
            out[i] = acc


def banded_matvec(const double[:, ::1] data, const double[::1] u, double[::1] out):
    cdef Py_ssize_t nd = data.shape[0]
    cdef Py_ssize_t n = data.shape[1]
    cdef Py_ssize_t w = (nd - 1) // 2
    cdef Py_ssize_t r, d, j, lo, hi
    cdef double acc
    with nogil:
        for r in range(n):
            lo = w - r if r < w else 0
            hi = n - 1 - r + w if r + w > n - 1 else nd - 1
            acc = 0.0
            for d in range(lo, hi + 1):
                acc = acc + data[d, r] * u[r + d - w]
            out[r] = acc
