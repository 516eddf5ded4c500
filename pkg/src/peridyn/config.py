"""Experiment settings: flat ``key = value`` files plus overrides."""

from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field, fields

import numpy as np

from .material import MaterialModel, default_model

KINDS = ("h-conv", "eps-conv", "compare", "npd-lpd-gap", "consistency", "stability", "single-run")


class ConfigError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


@dataclass
class ExperimentSpec:
    kind: str = "single-run"
    scale: str = "desk"
    # material
    alpha: float = 0.4
    amplitude: float | None = None  # None: unit elastic modulus
    decay: float = 1.0
    rho: float = 1.0
    # geometry and discretisation
    a: float = 0.0
    b: float = 1.0
    p: int = 1
    quad_points: int | None = None
    eps: float = 0.1
    h: float | None = None
    h_list: list = field(default_factory=list)  # floats or "eps/N" strings
    eps_list: list[float] = field(default_factory=list)
    eps_over_h: float | None = None
    pairs: list[tuple[float, float]] = field(default_factory=list)
    h_ref: float | None = None
    grids: list[tuple[int, int]] = field(default_factory=list)  # (elements, m)
    # dynamics
    ic: str = "gauss(0.005, 1e-5, 0.5)"
    dt: float = 1e-4
    T: float = 0.2
    sample_steps: list[int] = field(default_factory=list)
    snapshot_steps: list[int] = field(default_factory=list)
    model: str = "lpd"
    models: list[str] = field(default_factory=lambda: ["lpd", "npd"])
    pin_interface: bool = False
    allow_unstable: bool = False
    # consistency sweeps
    variants: list[str] = field(default_factory=list)
    p_list: list[int] = field(default_factory=list)
    test_function: str = "sin"
    strain_amplitude: float | None = None
    out: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; choose from {KINDS}")
        if self.scale not in ("desk", "full"):
            raise ConfigError("scale must be 'desk' or 'full'")

    # -- derived objects -------------------------------------------------
    def material(self) -> MaterialModel:
        return default_model(self.alpha, self.decay, self.rho, self.amplitude)

    def resolved_h_list(self, eps: float | None = None) -> list[float]:
        eps = self.eps if eps is None else eps
        return [parse_length(v, eps) for v in self.h_list]

    def echo(self) -> list[str]:
        lines = []
        for f in fields(self):
            lines.append(f"{f.name}={_format_value(getattr(self, f.name))}")
        return lines

    def replace(self, **changes) -> "ExperimentSpec":
        return dataclasses.replace(self, **changes)


def parse_length(value, eps: float) -> float:
    """A float, or ``eps/N`` meaning eps divided by N."""
    if isinstance(value, (int, float)):
        return float(value)
    text = str(value).replace(" ", "")
    m = re.fullmatch(r"eps/([0-9.eE+-]+)", text)
    if m:
        return eps / float(m.group(1))
    return float(text)


def _format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        parts = []
        for item in v:
            if isinstance(item, tuple):
                parts.append(":".join(_format_value(x) for x in item))
            else:
                parts.append(_format_value(item))
        return ",".join(parts)
    return str(v)


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


_PARSERS = {
    "kind": str.strip, "scale": str.strip, "ic": str.strip, "model": str.strip,
    "test_function": str.strip, "out": str.strip,
    "alpha": float, "decay": float, "rho": float, "a": float, "b": float,
    "eps": float, "dt": float, "T": float,
    "amplitude": float, "h": float, "eps_over_h": float, "h_ref": float,
    "strain_amplitude": float,
    "p": int, "quad_points": int,
    "pin_interface": _parse_bool, "allow_unstable": _parse_bool,
    "h_list": lambda s: [t.strip() for t in s.split(",") if t.strip()],
    "eps_list": _floats,
    "pairs": lambda s: [tuple(float(x) for x in t.split(":")) for t in s.split(",") if t.strip()],
    "grids": lambda s: [tuple(int(x) for x in t.split(":")) for t in s.split(",") if t.strip()],
    "sample_steps": lambda s: _parse_steps(s),
    "snapshot_steps": lambda s: _parse_steps(s),
    "models": lambda s: [t.strip() for t in s.split(",") if t.strip()],
    "variants": lambda s: [t.strip() for t in s.split(",") if t.strip()],
    "p_list": lambda s: [int(t) for t in s.split(",") if t.strip()],
}


def _parse_steps(text: str) -> list[int]:
    """Comma list of ints; ``a:b:c`` is range(a, b + 1, c)."""
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if ":" in tok:
            lo, hi, st = (int(x) for x in tok.split(":"))
            out.extend(range(lo, hi + 1, st))
        else:
            out.append(int(tok))
    return out


def parse_pairs(items: dict[str, str]) -> dict:
    parsed = {}
    for key, raw in items.items():
        if key not in _PARSERS:
            raise ConfigError(f"unknown config key {key!r}")
        raw = raw.strip()
        if raw == "" and key in ("amplitude", "h", "eps_over_h", "h_ref", "quad_points",
                                 "strain_amplitude", "out"):
            parsed[key] = None
            continue
        try:
            parsed[key] = _PARSERS[key](raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from None
    return parsed


def read_config_text(text: str) -> dict[str, str]:
    items = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        items[key.strip()] = value.strip()
    return items


def load_spec(path=None, overrides: dict[str, str] | None = None, **defaults) -> ExperimentSpec:
    items = {}
    if path is not None:
        with open(path) as fh:
            items.update(read_config_text(fh.read()))
    items.update(overrides or {})
    values = dict(defaults)
    values.update(parse_pairs(items))
    try:
        return ExperimentSpec(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


# -- initial conditions ----------------------------------------------------

def gauss(amp: float, beta: float, center: float):
    return lambda x: amp * np.exp(-(center - np.asarray(x, dtype=float)) ** 2 / beta)


def gauss2(amp: float, beta: float, c1: float, c2: float):
    g1, g2 = gauss(amp, beta, c1), gauss(amp, beta, c2)
    return lambda x: g1(x) + g2(x)


def parse_ic(text: str):
    """``gauss(a, beta, c)``, ``gauss2(a, beta, c1, c2)`` or ``zero``; the
    command-line form ``gauss:a,beta,c`` is accepted too."""
    t = text.strip().replace(" ", "")
    if t in ("zero", "0"):
        return lambda x: np.zeros_like(np.asarray(x, dtype=float))
    m = re.fullmatch(r"(\w+)(?:\((.*)\)|:(.*))", t)
    if not m:
        raise ConfigError(f"cannot parse initial condition {text!r}")
    name, args = m.group(1), m.group(2) if m.group(2) is not None else m.group(3)
    try:
        vals = [float(v) for v in args.split(",") if v]
    except ValueError:
        raise ConfigError(f"bad arguments in initial condition {text!r}") from None
    if name == "gauss" and len(vals) == 3:
        return gauss(*vals)
    if name == "gauss2" and len(vals) == 4:
        return gauss2(*vals)
    raise ConfigError(f"unknown initial condition {text!r}")


# -- analytic test functions for consistency sweeps -----------------------

@dataclass(frozen=True)
class AnalyticField:
    name: str
    u: object
    u_xx: object
    max_slope: float

    def scaled(self, strain_amplitude: float | None) -> "AnalyticField":
        if strain_amplitude is None:
            return self
        c = strain_amplitude / self.max_slope
        u, uxx = self.u, self.u_xx
        return AnalyticField(self.name, lambda x: c * u(x), lambda x: c * uxx(x), strain_amplitude)


def analytic_field(name: str) -> AnalyticField:
    two_pi = 2.0 * math.pi
    if name == "sin":
        return AnalyticField("sin", lambda x: np.sin(two_pi * x),
                            lambda x: -two_pi**2 * np.sin(two_pi * x), two_pi)
    if name == "gauss":
        w = 0.05  # standard deviation above the largest horizon swept
        u = lambda x: np.exp(-(np.asarray(x) - 0.5) ** 2 / w)
        uxx = lambda x: (4.0 * (np.asarray(x) - 0.5) ** 2 / w**2 - 2.0 / w) * u(x)
        return AnalyticField("gauss", u, uxx, math.sqrt(2.0 / w) * math.exp(-0.5))
    if name == "quad":
        return AnalyticField("quad", lambda x: 0.5 * np.asarray(x) ** 2,
                            lambda x: np.ones_like(np.asarray(x, dtype=float)), 1.0)
    raise ConfigError(f"unknown test function {name!r}")
