import math

import numpy as np
import pytest

from peridyn.assembly import assemble, exact_spectrum, stable_dt
from peridyn.grid import LocalGrid, build_grid, build_local_grid, grid_from_eps
from peridyn.integrator import (BlowupError, EvolutionState, InitialData, Problem,
                                UnstableTimestepError, check_timestep, kickoff, make_problem, run,
                                simulate, step, steps_for)


def pulse(x, amp=0.005, beta=1e-3, c=0.5):
    return amp * np.exp(-(c - np.asarray(x)) ** 2 / beta)


def free_problem(force):
    grid = LocalGrid(0.0, 1.0, 1.0, 1)
    return Problem("test", grid, force, np.zeros(2, dtype=bool))


def leapfrog_energy(op, u_prev, u_next, dt):
    d = (u_next - u_prev) / dt
    return float(d @ d + u_next @ (-op.matvec(u_prev)))


class TestKickoff:
    def test_zero(self, model):
        g = grid_from_eps(0.0, 1.0, 0.1, 0.02)
        p = make_problem("lpd", model, g)
        z = np.zeros(g.n_nodes)
        assert not kickoff(p, z, z, 1e-3).any()

    def test_free_flight(self):
        p = free_problem(lambda u: np.zeros_like(u))
        u1 = kickoff(p, np.array([1.0, 2.0]), np.array([0.5, -1.0]), 0.1)
        assert np.allclose(u1, [1.05, 1.9], rtol=0, atol=1e-15)

    def test_harmonic_oscillator(self):
        w, dt = 3.0, 0.01
        p = free_problem(lambda u: -w * w * u)
        u1 = kickoff(p, np.array([1.0, 1.0]), np.zeros(2), dt)
        assert u1[0] == pytest.approx(1 - (w * dt) ** 2 / 2, rel=1e-15)
        assert abs(u1[0] - math.cos(w * dt)) <= (w * dt) ** 4 / 24 * 1.01

    def test_nonpositive_dt(self):
        p = free_problem(lambda u: 0 * u)
        with pytest.raises(ValueError):
            kickoff(p, np.zeros(2), np.zeros(2), 0.0)


class TestStepping:
    def test_zero_state_stays_zero(self, model):
        g = grid_from_eps(0.0, 1.0, 0.1, 0.02)
        for name in ("lpd", "npd"):
            tr = run(make_problem(name, model, g), np.zeros(g.n_nodes), np.zeros(g.n_nodes), 1e-3, 50)
            assert all(not tr.fields[k].any() for k in tr.steps)

    def test_step_formula(self, model):
        g = grid_from_eps(0.0, 1.0, 0.1, 0.02)
        p = make_problem("npd", model, g)
        rng = np.random.default_rng(1)
        u0 = np.where(g.collar_mask, 0, 1e-3 * rng.standard_normal(g.n_nodes))
        u1 = np.where(g.collar_mask, 0, 1e-3 * rng.standard_normal(g.n_nodes))
        dt = 1e-3
        nxt = step(p, EvolutionState(u0, u1, 1, dt)).u_curr
        expect = np.where(g.collar_mask, 0, 2 * u1 - u0 + dt * dt * p.force(u1))
        assert np.array_equal(nxt, expect)

    def test_bounded_below_stable_dt(self, model):
        g = grid_from_eps(0.0, 1.0, 0.1, 0.02)
        p = make_problem("lpd", model, g)
        dt = 0.9 * stable_dt(model, g.h, g.eps)
        u0 = pulse(g.x)
        peak = [np.max(np.abs(u0))]

        def watch(state):
            peak.append(np.max(np.abs(state.u_curr)))

        run(p, u0, np.zeros_like(u0), dt, 10_000, sample_steps=[], callback=watch)
        assert max(peak) <= 10 * peak[0]

    def test_instability_witness(self, model):
        g = build_grid(0.0, 1.0, 1.0 / 64, p=1, m=4)
        op = assemble(model, g)
        lam, vec = np.linalg.eigh(-op.to_dense())
        dt = 1.5 * 2 / math.sqrt(lam[-1])
        u0 = np.zeros(g.n_nodes)
        u0[g.K] = vec[:, -1]
        p = make_problem("lpd", model, g)
        with pytest.raises(UnstableTimestepError):
            check_timestep(p, dt)
        grown = []

        def watch(state):
            grown.append(np.max(np.abs(state.u_curr)))
            return grown[-1] > 1e3 * np.max(np.abs(u0))

        run(p, u0, np.zeros_like(u0), dt, 2000, sample_steps=[], callback=watch)
        assert grown[-1] > 1e3 * np.max(np.abs(u0))

    def test_blowup_reported(self, model):
        g = build_grid(0.0, 1.0, 1.0 / 32, p=1, m=2)
        p = make_problem("lpd", model, g)
        u0 = pulse(g.x, amp=1.0, beta=1e-2)
        with pytest.raises(BlowupError) as info:
            run(p, u0, np.zeros_like(u0), 1.0, 5000, sample_steps=[])
        assert info.value.step > 1 and 0 <= info.value.node < g.n_nodes

    def test_boundary_invariance(self, model):
        g = grid_from_eps(0.0, 1.0, 0.1, 0.01)
        u0 = pulse(g.x, beta=1e-2)
        for name in ("lpd", "npd"):
            tr = run(make_problem(name, model, g), u0, np.zeros_like(u0), 5e-3, 200)
            collar = np.array([tr.fields[k][g.collar_mask] for k in tr.steps])
            assert not collar.any()

    def test_time_reversal(self, model):
        g = grid_from_eps(0.0, 1.0, 0.1, 0.02)
        p = make_problem("lpd", model, g)
        dt = 0.5 * stable_dt(model, g.h, g.eps)
        u0 = pulse(g.x, beta=1e-2)
        u1 = kickoff(p, u0, np.zeros_like(u0), dt)
        s = EvolutionState(u0, u1, 1, dt)
        for _ in range(500):
            s = step(p, s)
        back = EvolutionState(s.u_curr, s.u_prev, 0, dt)
        for _ in range(500):
            back = step(p, back)
        assert np.max(np.abs(back.u_curr - u0)) < 1e-10

    def test_energy_conservation(self, model):
        g = build_grid(0.0, 1.0, 1.0 / 64, p=1, m=4)
        op = assemble(model, g)
        dt = 0.95 * 2 / math.sqrt(exact_spectrum(op)[-1])
        p = make_problem("lpd", model, g)
        u0 = pulse(g.x, beta=1e-2)
        u1 = kickoff(p, u0, np.zeros_like(u0), dt)
        K = g.K
        E0 = leapfrog_energy(op, u0[K], u1[K], dt)
        s = EvolutionState(u0, u1, 1, dt)
        worst = 0.0
        for _ in range(10_000):
            s = step(p, s)
            worst = max(worst, abs(leapfrog_energy(op, s.u_prev[K], s.u_curr[K], dt) / E0 - 1))
        assert worst < 0.01

    def test_nonlinear_time_convergence(self, model):
        g = grid_from_eps(0.0, 1.0, 0.1, 0.02)
        T, tau = 0.2, 1e-3
        finals = []
        for dt in (4 * tau, 2 * tau, tau):
            n = steps_for(T, dt)
            u0 = pulse(g.x, amp=0.05, beta=2e-2)
            tr = run(make_problem("npd", model, g), u0, np.zeros_like(u0), dt, n, [n])
            finals.append(tr.fields[n])
        d1 = np.max(np.abs(finals[0] - finals[1]))
        d2 = np.max(np.abs(finals[1] - finals[2]))
        assert math.log2(d1 / d2) >= 1.8

    def test_nonlinearity_negligible_at_tiny_amplitude(self, model):
        g = grid_from_eps(0.0, 1.0, 0.1, 0.01)
        dt, n = 1e-3, 50
        u0 = pulse(g.x, amp=1e-6, beta=1e-2)
        a = run(make_problem("lpd", model, g), u0, 0 * u0, dt, n, [n]).fields[n]
        b = run(make_problem("npd", model, g), u0, 0 * u0, dt, n, [n]).fields[n]
        assert np.max(np.abs(a - b)) <= 1e-8

    def test_local_cosine_mode(self, model):
        h = 1e-3
        g = build_local_grid(0.0, 1.0, h)
        dt = 0.5 * h
        n = steps_for(0.5, dt)
        tr = simulate("elasto", model, g, InitialData(lambda x: np.sin(np.pi * x)), dt, 0.5, [n])
        exact = math.cos(np.pi * 0.5) * np.sin(np.pi * g.x)
        assert np.max(np.abs(tr.fields[n] - exact)) < 1e-3


class TestRun:
    def test_zero_horizon_in_time(self, model):
        g = grid_from_eps(0.0, 1.0, 0.1, 0.02)
        u0 = pulse(g.x)
        tr = run(make_problem("lpd", model, g), u0, 0 * u0, 1e-3, 0)
        assert tr.steps == [0]
        assert np.array_equal(tr.fields[0], np.where(g.collar_mask, 0, u0))

    def test_deterministic(self, model):
        g = grid_from_eps(0.0, 1.0, 0.1, 0.02)
        u0 = pulse(g.x)
        a = run(make_problem("npd", model, g), u0, 0 * u0, 1e-3, 100, [50, 100])
        b = run(make_problem("npd", model, g), u0, 0 * u0, 1e-3, 100, [50, 100])
        assert a.to_csv() == b.to_csv()

    def test_centered_velocity(self):
        p = free_problem(lambda u: np.zeros_like(u))
        v0 = np.array([0.3, -0.2])
        tr = run(p, np.zeros(2), v0, 0.1, 10, [0, 5, 10], record_velocity=True)
        for k in (0, 5, 10):
            assert np.allclose(tr.velocities[k], v0, rtol=0, atol=1e-14)

    def test_bad_samples(self, model):
        g = grid_from_eps(0.0, 1.0, 0.1, 0.02)
        z = np.zeros(g.n_nodes)
        with pytest.raises(ValueError):
            run(make_problem("lpd", model, g), z, z, 1e-3, 10, [11])

    def test_callback_stops(self, model):
        g = grid_from_eps(0.0, 1.0, 0.1, 0.02)
        z = np.zeros(g.n_nodes)
        seen = []
        run(make_problem("lpd", model, g), z, z, 1e-3, 100, [], callback=lambda s: seen.append(s.k) or s.k >= 7)
        assert seen[-1] == 7

    def test_steps_for(self):
        assert steps_for(0.2, 1e-4) == 2000
        with pytest.raises(ValueError):
            steps_for(0.2, 3e-2)

    def test_guard(self, model):
        g = grid_from_eps(0.0, 1.0, 0.1, 0.02)
        p = make_problem("lpd", model, g)
        assert check_timestep(p, 0.5 * p.dt_limit) == pytest.approx(2.0)
        with pytest.raises(UnstableTimestepError):
            check_timestep(p, 2 * p.dt_limit)
        assert check_timestep(p, 2 * p.dt_limit, allow_unstable=True) == pytest.approx(0.5)

    def test_model_grid_mismatch(self, model):
        with pytest.raises(TypeError):
            make_problem("elasto", model, grid_from_eps(0.0, 1.0, 0.1, 0.02))
        with pytest.raises(TypeError):
            make_problem("lpd", model, build_local_grid(0.0, 1.0, 0.1))
        with pytest.raises(ValueError):
            make_problem("bogus", model, grid_from_eps(0.0, 1.0, 0.1, 0.02))

    def test_pinned_interface(self, model):
        g = grid_from_eps(0.0, 1.0, 0.1, 0.02)
        p = make_problem("npd", model, g, pin_interface=True)
        assert p.fixed[g.first_K] and p.fixed[g.last_K] and not p.fixed[g.first_K + 1]

    def test_initial_residual(self):
        g = grid_from_eps(0.0, 1.0, 0.1, 0.02)
        init = InitialData(lambda x: pulse(x, amp=1.0, beta=1e-3), margin=0.2)
        assert init.residual(g) < 1e-14
        wide = InitialData(lambda x: pulse(x, amp=1.0, beta=1.0))
        assert wide.residual(g) > 0.1

    def test_csv_header(self, model):
        g = grid_from_eps(0.0, 1.0, 0.1, 0.02)
        tr = simulate("lpd", model, g, InitialData(pulse), 1e-3, 0.01, [0, 10])
        text = tr.to_csv()
        head = [l for l in text.splitlines() if l.startswith("#")]
        keys = {l[2:].split("=")[0] for l in head}
        assert {"model", "h", "eps", "p", "dt", "T", "dt_margin"} <= keys
        assert "step,time,x,u" in text
