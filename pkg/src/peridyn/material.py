"""Influence functions, bond potentials and the material constants built from them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, optimize

MOMENT_RTOL = 1e-10


class InfluenceFunction:
    """Base class for influence functions supported on [0, 1].

    Subclasses implement :meth:`_profile`, the value of J on [0, 1]; this
    class zeroes it outside the support and supplies the moments.
    """

    def _profile(self, r):
        raise NotImplementedError

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        out = np.where(r <= 1.0, self._profile(np.minimum(r, 1.0)), 0.0)
        return out if out.ndim else float(out)

    def maximum(self) -> float:
        res = optimize.minimize_scalar(
            lambda r: -self(r), bounds=(0.0, 1.0), method="bounded",
            options={"xatol": 1e-12},
        )
        return max(float(-res.fun), float(self(1.0)))

    def first_moment(self) -> float:
        """Return 2 * int_0^1 J(r) r dr."""
        val, _ = integrate.quad(
            lambda r: float(self(r)) * r, 0.0, 1.0, epsabs=0.0, epsrel=MOMENT_RTOL
        )
        return 2.0 * val


@dataclass(frozen=True)
class ExponentialInfluence(InfluenceFunction):
    """J(r) = 2 r exp(-r^2 / alpha) on [0, 1]."""

    alpha: float = 0.4

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    def _profile(self, r):
        return 2.0 * r * np.exp(-r * r / self.alpha)

    def maximum(self) -> float:
        r_star = math.sqrt(self.alpha / 2.0)
        return float(self(min(r_star, 1.0)))


@dataclass(frozen=True)
class CallableInfluence(InfluenceFunction):
    """Wraps an arbitrary vectorised profile ``func(r)`` on [0, 1]."""

    func: Callable = field(compare=False)

    def _profile(self, r):
        return np.broadcast_to(np.asarray(self.func(r), dtype=float), np.shape(r))


class BondPotential:
    """f(r) with first and second derivatives; f must be smooth and concave."""

    def __call__(self, r):
        raise NotImplementedError

    def deriv(self, r):
        raise NotImplementedError

    def second_deriv(self, r):
        raise NotImplementedError

    @property
    def slope_at_zero(self) -> float:
        return float(self.deriv(0.0))

    def inflection_radius(self, bracket=(1e-12, 10.0)) -> float:
        """Root of f'(r^2) + 2 r^2 f''(r^2) = 0, the inflection of r -> f(r^2)."""

        def g(r):
            s = r * r
            return float(self.deriv(s) + 2.0 * s * self.second_deriv(s))

        lo, hi = bracket
        if not g(lo) * g(hi) < 0:
            raise ValueError(f"no sign change of the inflection equation on {bracket}")
        return optimize.brentq(g, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


@dataclass(frozen=True)
class ExponentialPotential(BondPotential):
    """f(r) = amplitude * (1 - exp(-decay * r)); f'(0) = amplitude * decay."""

    amplitude: float
    decay: float = 1.0

    def __post_init__(self):
        if not (self.amplitude > 0 and self.decay > 0):
            raise ValueError("amplitude and decay must be positive")

    def __call__(self, r):
        return self.amplitude * -np.expm1(-self.decay * np.asarray(r, dtype=float))

    def deriv(self, r):
        return self.amplitude * self.decay * np.exp(-self.decay * np.asarray(r, dtype=float))

    def second_deriv(self, r):
        return -self.amplitude * self.decay**2 * np.exp(-self.decay * np.asarray(r, dtype=float))

    def inflection_radius(self, bracket=None) -> float:
        return 1.0 / math.sqrt(2.0 * self.decay)


@dataclass(frozen=True)
class CallablePotential(BondPotential):
    """User supplied (f, f', f'') triple, e.g. for test potentials."""

    f: Callable = field(compare=False)
    df: Callable = field(compare=False)
    d2f: Callable = field(compare=False)

    def __call__(self, r):
        return self.f(np.asarray(r, dtype=float))

    def deriv(self, r):
        return self.df(np.asarray(r, dtype=float))

    def second_deriv(self, r):
        return self.d2f(np.asarray(r, dtype=float))


@dataclass(frozen=True)
class MaterialModel:
    influence: InfluenceFunction
    potential: BondPotential
    density: float = 1.0

    def __post_init__(self):
        if not self.density > 0:
            raise ValueError(f"density must be positive, got {self.density}")

    # thin aliases, kept because the CLI and reports use these names
    def influence_eval(self, r):
        return self.influence(r)

    def influence_max(self) -> float:
        return self.influence.maximum()

    def influence_first_moment(self) -> float:
        return self.influence.first_moment()

    def potential_deriv(self, r):
        return self.potential.deriv(r)

    @property
    def fp0(self) -> float:
        return self.potential.slope_at_zero

    def elastic_modulus(self) -> float:
        return self.fp0 * self.influence_first_moment()

    def wave_speed(self) -> float:
        return math.sqrt(self.elastic_modulus() / self.density)

    def critical_strain(self, bond_length: float, bracket=None) -> float:
        if not bond_length > 0:
            raise ValueError("bond_length must be positive")
        if bracket is None:
            rbar = self.potential.inflection_radius()
        else:
            rbar = self.potential.inflection_radius(bracket)
        return rbar / math.sqrt(bond_length)

    def nondimensionalize(self, length_scale: float) -> tuple["MaterialModel", float]:
        """Rescale to unit bar length and unit wave speed.

        Returns the rescaled model (density 1, f'(r) -> f'(L r) / C) and the
        time scale L / sqrt(C / rho).
        """
        L = float(length_scale)
        if not L > 0:
            raise ValueError("length_scale must be positive")
        C = self.elastic_modulus()
        pot = self.potential
        if isinstance(pot, ExponentialPotential):
            scaled = ExponentialPotential(pot.amplitude / (C * L), pot.decay * L)
        else:
            scaled = CallablePotential(
                f=lambda r: pot(L * r) / (C * L),
                df=lambda r: pot.deriv(L * r) / C,
                d2f=lambda r: L * pot.second_deriv(L * r) / C,
            )
        time_scale = L * math.sqrt(self.density / C)
        return MaterialModel(self.influence, scaled, 1.0), time_scale

    def describe(self) -> dict:
        out = {
            "density": self.density,
            "fp0": self.fp0,
            "influence_max": self.influence_max(),
            "influence_first_moment": self.influence_first_moment(),
            "elastic_modulus": self.elastic_modulus(),
            "wave_speed": self.wave_speed(),
        }
        if isinstance(self.influence, ExponentialInfluence):
            out["alpha"] = self.influence.alpha
        if isinstance(self.potential, ExponentialPotential):
            out["amplitude"] = self.potential.amplitude
            out["decay"] = self.potential.decay
        return out


def default_model(alpha: float = 0.4, decay: float = 1.0, density: float = 1.0,
                  amplitude: float | None = None) -> MaterialModel:
    """Exponential influence and potential; unless given, the amplitude is
    chosen so that f'(0) = 1 / first_moment, i.e. unit elastic modulus."""
    influence = ExponentialInfluence(alpha)
    if amplitude is None:
        amplitude = 1.0 / (decay * influence.first_moment())
    return MaterialModel(influence, ExponentialPotential(amplitude, decay), density)
