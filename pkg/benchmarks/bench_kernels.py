"""Compare the compiled and numpy force kernels.

    python3 benchmarks/bench_kernels.py [--eps 0.1] [--h 0.001] [--repeat 5]

Prints one CSV row per (kernel, backend) with the best wall time per call
and the largest absolute difference between the two backends.
"""

from __future__ import annotations

import argparse
import sys
import timeit

import numpy as np

from peridyn import _kernels
from peridyn._kernels import _fallback
from peridyn.assembly import assemble
from peridyn.force import ForceEvaluator
from peridyn.grid import grid_from_eps
from peridyn.material import default_model


def _backends():
    out = {"numpy": (_fallback.stencil_force, _fallback.banded_matvec)}
    try:
        from peridyn._kernels import _ckernels
    except ImportError:
        print("# compiled extension not built; numpy only", file=sys.stderr)
    else:
        out["cython"] = (_ckernels.stencil_force, _ckernels.banded_matvec)
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--eps", type=float, default=0.1)
    ap.add_argument("--h", type=float, default=0.001)
    ap.add_argument("--p", type=int, default=1)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    model = default_model()
    grid = grid_from_eps(0.0, 1.0, args.eps, args.h, args.p)
    ev = ForceEvaluator(model, grid)
    op = assemble(model, grid)
    rng = np.random.default_rng(0)
    u = np.where(grid.collar_mask, 0.0, 1e-3 * rng.standard_normal(grid.n_nodes))
    uK = np.ascontiguousarray(u[grid.K])
    amp, decay = ev._exp_params

    print(f"# nodes={grid.n_nodes} eps={grid.eps} h={grid.h} p={grid.p} default={_kernels.BACKEND}")
    print("kernel,backend,seconds,max_abs_diff")
    results = {}
    for name, (sf, mv) in _backends().items():
        def sweep():
            out = np.zeros(grid.n_nodes)
            for s, wj, nodes in zip(ev.stencils, ev._wj, ev._nodes):
                sf(u, nodes, s.offsets, s.basis, wj, s.dist, _kernels.EXPONENTIAL, amp, decay, out)
            return out

        def matvec():
            out = np.empty(op.dim)
            mv(op.data, uK, out)
            return out

        for kname, fn in (("nonlinear_sweep", sweep), ("banded_matvec", matvec)):
            t = min(timeit.repeat(fn, number=1, repeat=args.repeat))
            results.setdefault(kname, {})[name] = (t, fn())
    for kname, per in results.items():
        ref = per["numpy"][1]
        for name, (t, val) in per.items():
            print(f"{kname},{name},{t:.6g},{np.max(np.abs(val - ref)):.3g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
