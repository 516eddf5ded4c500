"""Central-difference time stepping for the nonlinear, linearized and local models."""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .assembly import assemble, cfl_dt, stable_dt
from .force import ForceEvaluator, local_forces
from .grid import Grid1D, LocalGrid
from .material import MaterialModel

log = logging.getLogger(__name__)

MODELS = ("npd", "lpd", "elasto")


class BlowupError(RuntimeError):
    def __init__(self, step: int, node: int, value: float):
        super().__init__(f"non-finite displacement at step {step}, node {node}: {value}")
        self.step, self.node, self.value = step, node, value


class UnstableTimestepError(ValueError):
    pass


@dataclass(eq=False)
class Problem:
    """Everything the stepper needs: nodal force, pinned nodes, their data."""

    model: str
    grid: Grid1D | LocalGrid
    force: Callable[[np.ndarray], np.ndarray]
    fixed: np.ndarray  # bool mask of nodes reset to ``fixed_values`` each step
    density: float = 1.0
    fixed_values: np.ndarray | None = None
    dt_limit: float = np.inf

    def impose(self, u: np.ndarray) -> np.ndarray:
        u[self.fixed] = 0.0 if self.fixed_values is None else self.fixed_values[self.fixed]
        return u


def make_problem(model: str, material: MaterialModel, grid, rule=None,
                 pin_interface: bool = False) -> Problem:
    """Build the right-hand side for ``model`` in {"npd", "lpd", "elasto"}.

    "elasto" needs a :class:`LocalGrid`; the peridynamic models a
    :class:`Grid1D`. ``pin_interface`` additionally holds the nodes at x = a
    and x = b at zero.
    """
    if model == "elasto":
        if not isinstance(grid, LocalGrid):
            raise TypeError("the local wave model runs on a LocalGrid")
        C, h = material.elastic_modulus(), grid.h
        fixed = np.zeros(grid.n_nodes, dtype=bool)
        fixed[[0, -1]] = True
        return Problem(model, grid, lambda u: local_forces(C, h, u), fixed,
                       material.density, dt_limit=cfl_dt(material, h))
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; choose from {MODELS}")
    if not isinstance(grid, Grid1D):
        raise TypeError("peridynamic models run on a Grid1D")
    if model == "npd":
        force = ForceEvaluator(material, grid, rule).nonlinear
    else:
        force = assemble(material, grid, rule).apply_full
    fixed = grid.collar_mask.copy()
    if pin_interface:
        fixed[list(grid.interface_nodes)] = True
    # the linearized bound is used for the nonlinear model as well: f' <= f'(0)
    limit = stable_dt(material, grid.spacing, grid.eps)
    return Problem(model, grid, force, fixed, material.density, dt_limit=limit)


@dataclass
class EvolutionState:
    u_prev: np.ndarray
    u_curr: np.ndarray
    k: int
    dt: float

    @property
    def time(self) -> float:
        return self.k * self.dt


def _body(problem: Problem, body, t: float):
    if body is None:
        return 0.0
    b = np.asarray(body(t, problem.grid.x), dtype=float)
    return np.where(problem.fixed, 0.0, b)


def kickoff(problem: Problem, u0, v0, dt: float, body=None) -> np.ndarray:
    """u1 = u0 + dt v0 + dt^2 / 2 (F(u0) + b(0)) / rho."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    u0 = problem.impose(np.array(u0, dtype=float))
    v0 = np.where(problem.fixed, 0.0, np.asarray(v0, dtype=float))
    acc = (problem.force(u0) + _body(problem, body, 0.0)) / problem.density
    return problem.impose(u0 + dt * v0 + 0.5 * dt * dt * acc)


def step(problem: Problem, state: EvolutionState, body=None) -> EvolutionState:
    u, dt = state.u_curr, state.dt
    acc = (problem.force(u) + _body(problem, body, state.time)) / problem.density
    u_next = problem.impose(2.0 * u - state.u_prev + dt * dt * acc)
    if not np.isfinite(u_next).all():
        bad = int(np.argmax(~np.isfinite(u_next)))
        raise BlowupError(state.k + 1, bad, float(u_next[bad]))
    return EvolutionState(u, u_next, state.k + 1, dt)


@dataclass
class Trajectory:
    grid: Grid1D | LocalGrid
    dt: float
    steps: list[int] = field(default_factory=list)
    fields: dict[int, np.ndarray] = field(default_factory=dict)
    velocities: dict[int, np.ndarray] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def time(self, k: int) -> float:
        return k * self.dt

    def to_csv(self, path_or_buf=None) -> str:
        buf = io.StringIO()
        for key, val in self.meta.items():
            buf.write(f"# {key}={val}\n")
        buf.write("step,time,x,u\n")
        x = self.grid.x
        for k in self.steps:
            t = self.time(k)
            for xi, ui in zip(x, self.fields[k]):
                buf.write(f"{k},{t:.17g},{xi:.17g},{ui:.17g}\n")
        text = buf.getvalue()
        if path_or_buf is not None:
            if hasattr(path_or_buf, "write"):
                path_or_buf.write(text)
            else:
                with open(path_or_buf, "w") as fh:
                    fh.write(text)
        return text


def run(problem: Problem, u0, v0, dt: float, n_steps: int, sample_steps=None,
        body=None, record_velocity: bool = False, callback=None) -> Trajectory:
    """March ``n_steps`` steps and keep the fields at ``sample_steps``.

    ``callback(state)`` is called after every step; returning True stops the
    run early.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be nonnegative")
    samples = sorted(set(range(n_steps + 1) if sample_steps is None else sample_steps))
    if samples and (samples[0] < 0 or samples[-1] > n_steps):
        raise ValueError("sample steps must lie in [0, n_steps]")
    traj = Trajectory(problem.grid, dt)
    wanted = set(samples)
    u0 = problem.impose(np.array(u0, dtype=float))
    if 0 in wanted:
        traj.steps.append(0)
        traj.fields[0] = u0.copy()
    if n_steps == 0:
        if record_velocity and 0 in wanted:
            traj.velocities[0] = np.where(problem.fixed, 0.0, np.asarray(v0, dtype=float))
        return traj
    u1 = kickoff(problem, u0, v0, dt, body)
    if record_velocity and 0 in wanted:
        traj.velocities[0] = np.where(problem.fixed, 0.0, np.asarray(v0, dtype=float))
    state = EvolutionState(u0, u1, 1, dt)
    pending_velocity = None
    while True:
        k = state.k
        if pending_velocity is not None:
            # centred estimate for step k-1 now that u^k is known
            traj.velocities[k - 1] = (state.u_curr - pending_velocity) / (2.0 * dt)
            pending_velocity = None
        if k in wanted:
            traj.steps.append(k)
            traj.fields[k] = state.u_curr.copy()
            if record_velocity:
                pending_velocity = state.u_prev.copy()
        if callback is not None and callback(state):
            break
        if k >= n_steps and pending_velocity is None:
            break
        state = step(problem, state, body)
    return traj


def check_timestep(problem: Problem, dt: float, allow_unstable: bool = False) -> float:
    """Return the margin dt_limit / dt; raise if dt exceeds the limit."""
    margin = problem.dt_limit / dt
    if margin < 1.0:
        msg = (f"dt = {dt:g} exceeds the stable bound {problem.dt_limit:g} "
               f"for the {problem.model} model")
        if not allow_unstable:
            raise UnstableTimestepError(msg)
        log.warning("%s (override in effect)", msg)
    return margin


def steps_for(T: float, dt: float) -> int:
    n = int(round(T / dt))
    if abs(n * dt - T) > 1e-9 * max(T, dt):
        raise ValueError(f"dt = {dt:g} does not divide T = {T:g}")
    return n


@dataclass
class InitialData:
    displacement: Callable
    velocity: Callable | None = None
    margin: float = 0.0

    def nodal(self, grid):
        x = grid.x
        u0 = np.asarray(self.displacement(x), dtype=float) * np.ones_like(x)
        v0 = np.zeros_like(x) if self.velocity is None else np.asarray(self.velocity(x), dtype=float) * np.ones_like(x)
        return u0, v0

    def residual(self, grid) -> float:
        """Largest |g|, |v| on nodes outside [a + margin, b - margin]."""
        u0, v0 = self.nodal(grid)
        x = grid.x
        outside = (x < grid.a + self.margin) | (x > grid.b - self.margin)
        if not outside.any():
            return 0.0
        return float(max(np.max(np.abs(u0[outside])), np.max(np.abs(v0[outside]))))


def simulate(model: str, material: MaterialModel, grid, initial: InitialData, dt: float,
             T: float, sample_steps=None, body=None, rule=None, pin_interface: bool = False,
             allow_unstable: bool = False, record_velocity: bool = False) -> Trajectory:
    """Validated end-to-end run: time-step guard, sample schedule, metadata."""
    problem = make_problem(model, material, grid, rule, pin_interface)
    margin = check_timestep(problem, dt, allow_unstable)
    n_steps = steps_for(T, dt)
    res = initial.residual(grid)
    if res > 1e-14:
        log.info("initial data reaches %.3g within the boundary layer", res)
    u0, v0 = initial.nodal(grid)
    traj = run(problem, u0, v0, dt, n_steps, sample_steps, body, record_velocity)
    traj.meta.update(model=model, h=grid.h, dt=dt, T=T, dt_margin=margin, ic_residual=res)
    if isinstance(grid, Grid1D):
        traj.meta.update(eps=grid.eps, p=grid.p)
    return traj
