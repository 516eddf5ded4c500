import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from peridyn.material import (CallableInfluence, CallablePotential, ExponentialInfluence,
                              ExponentialPotential, MaterialModel, default_model)

# independent oracles: adaptive quadrature straight from the formulas
M1_ORACLE = 4.0 * integrate.quad(lambda r: r * r * math.exp(-r * r / 0.4), 0, 1,
                                 epsabs=0, epsrel=1e-13)[0]


class TestInfluence:
    def test_zero_at_origin(self):
        assert ExponentialInfluence(0.4)(0.0) == 0.0

    def test_outside_support(self):
        assert ExponentialInfluence(0.4)(1.5) == 0.0

    def test_value_at_half(self):
        assert ExponentialInfluence(0.4)(0.5) == pytest.approx(2 * 0.5 * math.exp(-0.625), rel=1e-15)

    def test_maximum_closed_form(self):
        J = ExponentialInfluence(0.4)
        assert J.maximum() == pytest.approx(2 * math.sqrt(0.2) * math.exp(-0.5), rel=1e-14)
        # frozen value of the same closed form
        assert J.maximum() == pytest.approx(0.5424975142220966, rel=1e-14)

    def test_maximum_at_support_edge_for_wide_alpha(self):
        for alpha in (2.0, 5.0):
            assert ExponentialInfluence(alpha).maximum() == pytest.approx(2 * math.exp(-1 / alpha), rel=1e-14)

    def test_maximum_dominates_grid(self):
        J = ExponentialInfluence(0.4)
        r = 0.01 * np.arange(1, 101)
        assert np.all(J(r) <= J.maximum())

    def test_numeric_maximum_matches_closed_form(self):
        J = ExponentialInfluence(0.4)
        generic = CallableInfluence(lambda r: 2 * r * np.exp(-r * r / 0.4))
        assert generic.maximum() == pytest.approx(J.maximum(), rel=1e-9)

    def test_first_moment_constant(self):
        assert CallableInfluence(lambda r: 0.7 + 0 * r).first_moment() == pytest.approx(0.7, rel=1e-12)

    def test_first_moment_oracle(self):
        J = ExponentialInfluence(0.4)
        assert J.first_moment() == pytest.approx(M1_ORACLE, rel=1e-10)
        assert J.first_moment() == pytest.approx(0.3713655785289993, rel=1e-12)
        assert J.first_moment() <= J.maximum()

    @given(st.floats(min_value=1.0 + 1e-9, max_value=1e6))
    def test_support_partition(self, r):
        assert ExponentialInfluence(0.4)(r) == 0.0

    def test_bad_alpha(self):
        with pytest.raises(ValueError):
            ExponentialInfluence(-1.0)


class TestPotential:
    def test_slope_at_zero(self):
        f = ExponentialPotential(3.0, 2.0)
        assert f.deriv(0.0) == 6.0
        assert f(0.0) == 0.0

    def test_derivative_decays(self):
        f = ExponentialPotential(1.0, 1.0)
        assert f.deriv(50.0) < 1e-20 * f.deriv(0.0)

    def test_derivative_at_one(self):
        assert ExponentialPotential(1.0, 1.0).deriv(1.0) == pytest.approx(math.exp(-1), rel=1e-15)

    @settings(max_examples=200)
    @given(st.floats(1e-6, 50), st.floats(1e-6, 50))
    def test_concavity(self, r1, r2):
        if r1 == r2:
            return
        lo, hi = sorted((r1, r2))
        f = ExponentialPotential(1.0, 1.0)
        assert f.deriv(lo) > f.deriv(hi)

    @given(st.floats(0, 200))
    def test_asymptote(self, r):
        f = ExponentialPotential(2.5, 0.7)
        assert abs(abs(f(r) - 2.5) - 2.5 * math.exp(-0.7 * r)) <= 1e-14

    def test_inflection_closed_and_numeric(self):
        for decay in (1.0, 2.0):
            f = ExponentialPotential(1.0, decay)
            generic = CallablePotential(f.__call__, f.deriv, f.second_deriv)
            assert f.inflection_radius() == pytest.approx(1 / math.sqrt(2 * decay), rel=1e-15)
            assert generic.inflection_radius() == pytest.approx(f.inflection_radius(), rel=1e-12)

    def test_inflection_sign_change(self):
        f = ExponentialPotential(1.0, 1.0)
        rbar = f.inflection_radius()

        def g2(r):  # second derivative of r -> f(r^2)
            s = r * r
            return 2 * f.deriv(s) + 4 * s * f.second_deriv(s)

        assert g2(rbar * (1 - 1e-3)) > 0 > g2(rbar * (1 + 1e-3))

    def test_inflection_missing(self):
        quad = CallablePotential(lambda r: r, lambda r: 1.0 + 0 * r, lambda r: 0 * r)
        with pytest.raises(ValueError):
            quad.inflection_radius()


class TestModel:
    def test_default_unit_modulus(self, model):
        assert model.fp0 == pytest.approx(1 / M1_ORACLE, rel=1e-10)
        assert model.elastic_modulus() == pytest.approx(1.0, rel=1e-12)
        assert model.wave_speed() == pytest.approx(1.0, rel=1e-12)

    def test_modulus_linear_in_slope(self):
        one = MaterialModel(ExponentialInfluence(0.4), ExponentialPotential(1.0, 1.0))
        two = MaterialModel(ExponentialInfluence(0.4), ExponentialPotential(2.0, 1.0))
        assert two.elastic_modulus() == pytest.approx(2 * one.elastic_modulus(), rel=1e-14)
        assert one.elastic_modulus() == pytest.approx(M1_ORACLE, rel=1e-10)

    def test_modulus_against_symmetric_quadrature(self, model):
        J = model.influence
        val = integrate.quad(lambda z: J(abs(z)) * model.fp0 * abs(z), -1, 1, points=[0],
                             epsabs=0, epsrel=1e-12)[0]
        assert model.elastic_modulus() == pytest.approx(val, rel=1e-9)

    def test_critical_strain(self):
        m1 = default_model(decay=1.0)
        m2 = default_model(decay=2.0)
        assert m1.critical_strain(1.0) == pytest.approx(1 / math.sqrt(2), rel=1e-14)
        assert m2.critical_strain(1.0) == pytest.approx(0.5, rel=1e-14)
        assert m1.critical_strain(4.0) == pytest.approx(0.5 * m1.critical_strain(1.0), rel=1e-14)

    def test_time_scale(self, model):
        _, T0 = model.nondimensionalize(1.0)
        assert T0 == pytest.approx(1.0, rel=1e-12)
        _, T_heavy = default_model(density=4.0).nondimensionalize(1.0)
        assert T_heavy == pytest.approx(2.0, rel=1e-12)
        _, T_long = model.nondimensionalize(2.0)
        assert T_long == pytest.approx(2.0, rel=1e-12)

    def test_nondimensional_model_has_unit_modulus(self):
        raw = default_model(amplitude=3.0, decay=0.5, density=2.0)
        nd, _ = raw.nondimensionalize(3.0)
        assert nd.elastic_modulus() == pytest.approx(1.0, rel=1e-12)
        assert nd.density == 1.0
        r = np.array([0.0, 0.2, 1.3])
        assert np.allclose(nd.potential.deriv(r), raw.potential.deriv(3.0 * r) / raw.elastic_modulus(),
                           rtol=1e-14, atol=0)

    def test_nondimensional_force_scaling(self):
        # the dimensional force is (C / L) times the rescaled force of u(L x) / L
        from peridyn.force import continuum_force
        raw = default_model(amplitude=3.0, decay=0.5, density=2.0)
        L = 2.5
        nd, _ = raw.nondimensionalize(L)
        u = lambda x: 0.04 * np.sin(1.3 * np.asarray(x))
        ubar = lambda xb: u(L * np.asarray(xb)) / L
        x = np.array([0.7, 1.1])
        eps = 0.3
        dim = continuum_force(raw, u, x, eps)
        scaled = continuum_force(nd, ubar, x / L, eps / L)
        assert np.allclose(dim, raw.elastic_modulus() / L * scaled, rtol=1e-12, atol=0)

    def test_bad_length_scale(self, model):
        with pytest.raises(ValueError):
            model.nondimensionalize(0.0)

    def test_describe(self, model):
        d = model.describe()
        assert d["alpha"] == 0.4 and d["elastic_modulus"] == pytest.approx(1.0)
