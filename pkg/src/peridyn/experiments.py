"""Experiment drivers: convergence studies, comparisons, sweeps and single runs."""

from __future__ import annotations

import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .analysis import (coarse_to_fine_index, common_ratio, difference_norms, loglog_slope,
                       norm_l2, rate_from_eps_pair, rate_from_triplet, restrict_to_coarse)
from .assembly import DENSE_GUARD, StabilityReport, stability_report
from .config import ConfigError, ExperimentSpec, analytic_field, parse_ic, parse_length
from .force import VARIANTS, consistency_force_gap
from .grid import NodalField, build_grid, build_local_grid, grid_from_eps
from .integrator import InitialData, check_timestep, make_problem, simulate, steps_for
from .quadrature import QuadratureRule


@dataclass
class ResultTable:
    name: str
    columns: tuple[str, ...]
    rows: list[list] = field(default_factory=list)
    header: list[str] = field(default_factory=list)  # "key=value" lines

    def column(self, name: str) -> list:
        j = self.columns.index(name)
        return [r[j] for r in self.rows]

    def to_csv(self, path_or_buf=None) -> str:
        buf = io.StringIO()
        for line in self.header:
            buf.write(f"# {line}\n")
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(_cell(v) for v in row) + "\n")
        text = buf.getvalue()
        if path_or_buf is not None:
            if hasattr(path_or_buf, "write"):
                path_or_buf.write(text)
            else:
                with open(path_or_buf, "w") as fh:
                    fh.write(text)
        return text


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def worker_count(n_jobs: int) -> int:
    cap = os.environ.get("PERIDYN_THREADS")
    limit = os.cpu_count() or 1
    if cap:
        try:
            limit = max(1, int(cap))
        except ValueError:
            raise ConfigError(f"PERIDYN_THREADS must be an integer, got {cap!r}") from None
    return max(1, min(limit, n_jobs))


def _map(fn, jobs):
    workers = worker_count(len(jobs))
    if workers == 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


def _rule(spec: ExperimentSpec, p: int):
    return QuadratureRule(spec.quad_points) if spec.quad_points else QuadratureRule.for_order(p)


def _header(spec: ExperimentSpec, **extra) -> list[str]:
    lines = spec.echo()
    lines.append(f"backend={_kernels.BACKEND}")
    lines.extend(f"{k}={_cell(v)}" for k, v in extra.items())
    return lines


def _check_pd_model(name: str):
    if name not in ("npd", "lpd"):
        raise ConfigError(f"model {name!r} is not a peridynamic variant (npd or lpd)")


def _n_steps(spec: ExperimentSpec) -> int:
    if not spec.T > 0 or not spec.dt > 0:
        raise ConfigError("need T > 0 and dt > 0")
    try:
        return steps_for(spec.T, spec.dt)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _samples(spec: ExperimentSpec, n: int, count: int, allow_zero: bool = False) -> list[int]:
    if spec.sample_steps:
        s = sorted(set(spec.sample_steps))
    else:
        stride = max(1, n // count)
        s = list(range(stride, n + 1, stride))
    if s and (s[-1] > n or s[0] < 0):
        raise ConfigError(f"sample steps must lie in [0, {n}]")
    if not allow_zero and s and s[0] == 0:
        raise ConfigError("step 0 is the shared initial state; rates and gaps are undefined there")
    return s


def _guard(spec: ExperimentSpec, model: str, grid, material, pin: bool) -> float:
    problem = make_problem(model, material, grid, _rule(spec, getattr(grid, "p", 1)), pin)
    return check_timestep(problem, spec.dt, spec.allow_unstable)


@dataclass(frozen=True)
class _Job:
    spec: ExperimentSpec
    model: str
    grid: object
    samples: tuple
    pin: bool = False


def _run_job(job: _Job):
    spec = job.spec
    init = InitialData(parse_ic(spec.ic))
    traj = simulate(job.model, spec.material(), job.grid, init, spec.dt, spec.T,
                    list(job.samples), rule=_rule(spec, getattr(job.grid, "p", 1)),
                    pin_interface=job.pin, allow_unstable=spec.allow_unstable)
    return traj


def _trajectories(spec, pairs, samples, pin=False):
    """Run (model, grid) pairs; guard every dt before any work starts."""
    material = spec.material()
    margins = [_guard(spec, model, grid, material, pin) for model, grid in pairs]
    jobs = [_Job(spec, model, grid, tuple(samples), pin) for model, grid in pairs]
    return _map(_run_job, jobs), min(margins) if margins else math.inf


def _run_meta(trajs, margin) -> dict:
    res = max((t.meta.get("ic_residual", 0.0) for t in trajs), default=0.0)
    return {"dt_margin": margin, "ic_residual": res}


# -- convergence studies ---------------------------------------------------

RATE_COLUMNS = ("step", "time", "model", "e12_l2", "e23_l2", "rate_l2",
                "e12_sup", "e23_sup", "rate_sup")


def _decreasing_triple(values, what):
    if len(values) != 3:
        raise ConfigError(f"{what} needs exactly three entries, got {len(values)}")
    vals = sorted(values, reverse=True)
    try:
        return vals, common_ratio(vals)
    except ValueError as exc:
        raise ConfigError(f"{what}: {exc}") from None


def run_h_convergence(spec: ExperimentSpec) -> ResultTable:
    hs, r = _decreasing_triple(spec.resolved_h_list(), "h_list")
    for m in spec.models:
        _check_pd_model(m)
    grids = [grid_from_eps(spec.a, spec.b, spec.eps, h, spec.p) for h in hs]
    for coarse, fine in zip(grids[:-1], grids[1:]):
        try:
            coarse_to_fine_index(fine, coarse)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    n = _n_steps(spec)
    samples = _samples(spec, n, 5)
    pairs = [(m, g) for m in spec.models for g in grids]
    trajs, margin = _trajectories(spec, pairs, samples)
    table = ResultTable("h-conv", RATE_COLUMNS, header=_header(spec, ratio=r, **_run_meta(trajs, margin)))
    for mi, model in enumerate(spec.models):
        t1, t2, t3 = trajs[3 * mi: 3 * mi + 3]
        for k in samples:
            f = [NodalField(t.grid, t.fields[k]) for t in (t1, t2, t3)]
            l12, s12 = difference_norms(f[1], f[0])
            l23, s23 = difference_norms(f[2], f[1])
            table.rows.append([k, k * spec.dt, model, l12, l23, rate_from_triplet(l12, l23, r),
                               s12, s23, rate_from_triplet(s12, s23, r)])
    return table


def _eps_h_list(spec: ExperimentSpec, eps_list):
    if spec.h_list:
        if len(spec.h_list) != len(spec.eps_list):
            raise ConfigError("h_list and eps_list must have the same length")
        hs = [parse_length(h, e) for h, e in zip(spec.h_list, spec.eps_list)]
        by_eps = dict(zip(spec.eps_list, hs))
        ratios = [e / by_eps[e] for e in eps_list]
        if not np.allclose(ratios, ratios[0], rtol=1e-9, atol=0):
            raise ConfigError(f"eps/h differs across entries: {ratios}")
        if spec.eps_over_h is not None and not math.isclose(ratios[0], spec.eps_over_h, rel_tol=1e-9):
            raise ConfigError("eps_over_h disagrees with the eps/h implied by h_list")
        return [by_eps[e] for e in eps_list]
    if spec.eps_over_h is None:
        raise ConfigError("eps-conv needs eps_over_h or an h_list")
    return [e / spec.eps_over_h for e in eps_list]


def run_eps_convergence(spec: ExperimentSpec) -> ResultTable:
    eps_list, r = _decreasing_triple(list(spec.eps_list), "eps_list")
    hs = _eps_h_list(spec, eps_list)
    for m in spec.models:
        _check_pd_model(m)
    grids = [grid_from_eps(spec.a, spec.b, e, h, spec.p) for e, h in zip(eps_list, hs)]
    n = _n_steps(spec)
    samples = _samples(spec, n, 5)
    pairs = [(m, g) for m in spec.models for g in grids]
    trajs, margin = _trajectories(spec, pairs, samples)
    table = ResultTable("eps-conv", RATE_COLUMNS, header=_header(spec, ratio=r, **_run_meta(trajs, margin)))
    e2, e3 = eps_list[1], eps_list[2]
    for mi, model in enumerate(spec.models):
        t1, t2, t3 = trajs[3 * mi: 3 * mi + 3]
        for k in samples:
            f = [NodalField(t.grid, t.fields[k]) for t in (t1, t2, t3)]
            l12, s12 = difference_norms(f[1], f[0])
            l23, s23 = difference_norms(f[2], f[1])
            table.rows.append([k, k * spec.dt, model, l12, l23, rate_from_eps_pair(l12, l23, e2, e3),
                               s12, s23, rate_from_eps_pair(s12, s23, e2, e3)])
    return table


# -- comparison with the local wave equation -----------------------------

COMPARE_COLUMNS = ("step", "time", "model", "eps", "h", "l2_error")
SNAPSHOT_COLUMNS = ("step", "time", "solution", "x", "u")


def run_comparison(spec: ExperimentSpec) -> list[ResultTable]:
    """Per-step L2 error against a fine local-wave reference, plus snapshots."""
    if not spec.pairs:
        raise ConfigError("compare needs at least one eps:h pair")
    if spec.h_ref is None:
        raise ConfigError("compare needs h_ref, the reference resolution")
    ref_grid = build_local_grid(spec.a, spec.b, spec.h_ref)
    grids = []
    for eps, h in spec.pairs:
        if h < spec.h_ref * (1 - 1e-12):
            raise ConfigError(f"reference h_ref = {spec.h_ref} is coarser than comparison h = {h}")
        grids.append(grid_from_eps(spec.a, spec.b, eps, h, spec.p))
    for g in grids:
        try:
            coarse_to_fine_index(ref_grid, g)
        except ValueError as exc:
            raise ConfigError(f"reference grid does not contain the comparison nodes: {exc}") from None
    n = _n_steps(spec)
    samples = _samples(spec, n, 100, allow_zero=True)
    snaps = sorted(set(spec.snapshot_steps))
    if snaps and (snaps[0] < 0 or snaps[-1] > n):
        raise ConfigError(f"snapshot steps must lie in [0, {n}]")
    wanted = sorted(set(samples) | set(snaps))
    runs = [("elasto", ref_grid)]
    labels = []
    for (eps, h), g in zip(spec.pairs, grids):
        for model in spec.models:
            if model == "elasto":
                runs.append(("elasto", build_local_grid(spec.a, spec.b, h)))
            else:
                _check_pd_model(model)
                runs.append((model, g))
            labels.append((model, eps, h, g))
    trajs, margin = _trajectories(spec, runs, wanted, pin=spec.pin_interface)
    ref = trajs[0]
    errors = ResultTable("compare", COMPARE_COLUMNS,
                         header=_header(spec, **_run_meta(trajs, margin), reference="elasto"))
    snapshots = ResultTable("snapshots", SNAPSHOT_COLUMNS, header=list(errors.header))
    for (model, eps, h, g), traj in zip(labels, trajs[1:]):
        for k in samples:
            ref_on = restrict_to_coarse(NodalField(ref.grid, ref.fields[k]), g).values
            mine = NodalField(traj.grid, traj.fields[k])
            mine_on = mine.values if traj.grid is g else restrict_to_coarse(mine, g).values
            errors.rows.append([k, k * spec.dt, model, eps, h, norm_l2(mine_on - ref_on, g)])
    for k in snaps:
        for x, u in zip(ref.grid.x, ref.fields[k]):
            snapshots.rows.append([k, k * spec.dt, "elasto", x, u])
        for (model, eps, h, g), traj in zip(labels, trajs[1:]):
            label = f"{model}:eps={eps:g}:h={h:g}"
            keep = traj.grid.K
            for x, u in zip(traj.grid.x[keep], traj.fields[k][keep]):
                snapshots.rows.append([k, k * spec.dt, label, x, u])
    return [errors, snapshots]


# -- nonlinear versus linearized gap --------------------------------------

GAP_COLUMNS = ("step", "time", "gap1", "gap2", "slope")


def run_npd_lpd_gap(spec: ExperimentSpec) -> ResultTable:
    if len(spec.pairs) != 2:
        raise ConfigError("gap needs exactly two eps:h pairs")
    (e1, h1), (e2, h2) = spec.pairs
    if math.isclose(e1, e2, rel_tol=1e-12):
        raise ConfigError("gap pairs must have distinct eps")
    if len(spec.models) != 2:
        raise ConfigError("gap compares exactly two model variants")
    for m in spec.models:
        _check_pd_model(m)
    grids = [grid_from_eps(spec.a, spec.b, e, h, spec.p) for e, h in spec.pairs]
    n = _n_steps(spec)
    samples = _samples(spec, n, 20)
    runs = [(m, g) for g in grids for m in spec.models]
    trajs, margin = _trajectories(spec, runs, samples)
    table = ResultTable("gap", GAP_COLUMNS, header=_header(spec, **_run_meta(trajs, margin)))
    for k in samples:
        gaps = []
        for gi, g in enumerate(grids):
            ta, tb = trajs[2 * gi], trajs[2 * gi + 1]
            gaps.append(norm_l2(ta.fields[k] - tb.fields[k], g))
        if not all(v > 0 for v in gaps):
            raise ConfigError(f"zero gap at step {k}: the two variants coincide")
        slope = (math.log(gaps[0]) - math.log(gaps[1])) / (math.log(e1) - math.log(e2))
        table.rows.append([k, k * spec.dt, gaps[0], gaps[1], slope])
    return table


# -- force consistency sweeps --------------------------------------------

CONSISTENCY_COLUMNS = ("variant", "p", "eps", "h", "sup_gap")
SLOPE_COLUMNS = ("variant", "p", "sweep", "slope")


def run_consistency(spec: ExperimentSpec) -> list[ResultTable]:
    variants = spec.variants or list(VARIANTS)
    for v in variants:
        if v not in VARIANTS:
            raise ConfigError(f"unknown variant {v!r}")
    ps = spec.p_list or [spec.p]
    tf = analytic_field(spec.test_function).scaled(spec.strain_amplitude)
    sweeps = []
    if spec.h_list:
        sweeps.append(("h", [(spec.eps, h) for h in spec.resolved_h_list()]))
    if spec.eps_list:
        if spec.eps_over_h is None:
            raise ConfigError("the eps sweep needs eps_over_h")
        sweeps.append(("eps", [(e, e / spec.eps_over_h) for e in spec.eps_list]))
    if not sweeps:
        raise ConfigError("consistency needs an h_list or an eps_list")
    for name, pts in sweeps:
        if len(pts) < 3:
            raise ConfigError(f"the {name} sweep needs at least 3 points, got {len(pts)}")
    material = spec.material()
    gaps = ResultTable("consistency", CONSISTENCY_COLUMNS, header=_header(spec))
    slopes = ResultTable("slopes", SLOPE_COLUMNS, header=list(gaps.header))
    for variant in variants:
        for p in ps:
            rule = _rule(spec, p)
            for name, pts in sweeps:
                xs, ys = [], []
                for eps, h in pts:
                    g = grid_from_eps(spec.a, spec.b, eps, h, p)
                    gap = consistency_force_gap(material, g, rule, tf.u, variant, tf.u_xx)
                    gaps.rows.append([variant, p, eps, h, gap])
                    xs.append(h if name == "h" else eps)
                    ys.append(gap)
                slope = loglog_slope(xs, ys) if all(y > 0 for y in ys) else None
                slopes.rows.append([variant, p, name, slope])
    return [gaps, slopes]


# -- stability -----------------------------------------------------------

STABILITY_COLUMNS = StabilityReport.CSV_COLUMNS + ("stieltjes_violations",)


def run_stability(spec: ExperimentSpec) -> ResultTable:
    """One row per (elements, m) entry of ``grids``; exact columns are blank
    when the operator is larger than the dense-solver guard."""
    material = spec.material()
    table = ResultTable("stability", STABILITY_COLUMNS, header=_header(spec, dense_guard=DENSE_GUARD))
    for n_el, m in spec.grids:
        g = build_grid(spec.a, spec.b, (spec.b - spec.a) / n_el, spec.p, m)
        rep = stability_report(material, g, _rule(spec, spec.p))
        table.rows.append(rep.csv_row() + [rep.stieltjes_violations])
    return table


# -- single trajectory ---------------------------------------------------

def run_single(spec: ExperimentSpec) -> ResultTable:
    if spec.h is None:
        raise ConfigError("run needs h")
    if spec.model == "elasto":
        grid = build_local_grid(spec.a, spec.b, spec.h)
    else:
        _check_pd_model(spec.model)
        grid = grid_from_eps(spec.a, spec.b, spec.eps, spec.h, spec.p)
    n = _n_steps(spec)
    samples = sorted(set(spec.sample_steps)) if spec.sample_steps else [0, n]
    trajs, margin = _trajectories(spec, [(spec.model, grid)], samples, pin=spec.pin_interface)
    traj = trajs[0]
    table = ResultTable("run", ("step", "time", "x", "u"), header=_header(spec, **_run_meta(trajs, margin)))
    for k in traj.steps:
        for x, u in zip(grid.x, traj.fields[k]):
            table.rows.append([k, k * spec.dt, x, u])
    return table


DRIVERS = {
    "h-conv": run_h_convergence,
    "eps-conv": run_eps_convergence,
    "compare": run_comparison,
    "npd-lpd-gap": run_npd_lpd_gap,
    "consistency": run_consistency,
    "stability": run_stability,
    "single-run": run_single,
}


def run_experiment(spec: ExperimentSpec) -> list[ResultTable]:
    out = DRIVERS[spec.kind](spec)
    return out if isinstance(out, list) else [out]
