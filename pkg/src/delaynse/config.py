"""Simulation configuration: INI grammar, validation and field construction.

Example file::

    [domain]
    L = 2*pi
    N = 16
    seed = 42

    [physics]
    nu = 1.0
    alpha = 1.0
    s = 2.0

    [delay]
    mu = 0.05
    dt = 0.001
    T = 0.2

    [fields]
    u0 = random slope=-3 amplitude=1
    f = random slope=-3 amplitude=0.5
    phi = random slope=-3 amplitude=1

    [output]
    checkpoint = run.dnse
    diagnostics = run.csv
    store_every = 10

Field specifications are one of ``zero``, ``single_mode k=1,0,0
component=1 amplitude=0.5`` (component is 0-based), ``random slope=-2
amplitude=1`` or ``steady_manufactured seed=7``.  For ``f``,
``steady_manufactured`` means ``nu A u* + B(u*, u*)`` for the same ``u*``.
"""
from __future__ import annotations

import configparser
import dataclasses
import math
import re
import shlex
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .delay import HistorySegment
from .operators import nonlinear_B, stokes_apply
from .spectral import (
    Lattice,
    SpectralField,
    make_lattice,
    random_solenoidal_field,
    single_mode_field,
)

__all__ = [
    "ConfigError",
    "FieldSpec",
    "SimConfig",
    "parse_config",
    "load_config",
    "default_config",
    "default_config_text",
    "build_field",
    "steady_field",
]

# per-slot offsets keep u0, f and phi statistically independent under one seed
_SEED_OFFSET = {"u0": 0, "f": 1, "phi": 2}


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class FieldSpec:
    kind: str
    params: tuple = ()

    def get(self, name, default=None):
        return dict(self.params).get(name, default)

    def __str__(self):
        extra = " ".join(f"{k}={_fmt(v)}" for k, v in self.params)
        return f"{self.kind} {extra}".strip()


def _fmt(v):
    if isinstance(v, tuple):
        return ",".join(str(x) for x in v)
    return repr(v) if isinstance(v, float) else str(v)


@dataclass(frozen=True)
class SimConfig:
    L: float = 2 * math.pi
    N: int = 16
    nu: float = 1.0
    alpha: float = 1.0
    s: float = 2.0
    mu: float = 0.05
    dt: float = 1e-3
    T: float = 0.2
    seed: int = 42
    u0_spec: FieldSpec = FieldSpec("random", (("slope", -3.0), ("amplitude", 1.0)))
    f_spec: FieldSpec = FieldSpec("random", (("slope", -3.0), ("amplitude", 0.5)))
    phi_spec: FieldSpec = FieldSpec("random", (("slope", -3.0), ("amplitude", 1.0)))
    checkpoint: str | None = None
    diagnostics: str | None = None
    store_every: int = 10

    def __post_init__(self):
        _validate(self)

    def replace(self, **changes) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    @property
    def m(self) -> int:
        return round(self.mu / self.dt)

    @property
    def nsteps(self) -> int:
        return round(self.T / self.dt)

    def lattice(self) -> Lattice:
        return make_lattice(self.L, self.N)

    def u0(self) -> SpectralField:
        return build_field(self.u0_spec, self, "u0")

    def forcing(self) -> SpectralField:
        return build_field(self.f_spec, self, "f")

    def phi_field(self) -> SpectralField:
        return build_field(self.phi_spec, self, "phi")

    def history(self, mu: float | None = None) -> HistorySegment:
        """History constant in time at the ``phi`` field."""
        return HistorySegment.constant(self.phi_field(), self.mu if mu is None else mu, self.dt)


def _validate(c: SimConfig):
    if not (isinstance(c.N, int) and c.N >= 4 and c.N % 2 == 0):
        raise ConfigError("N", f"N must be an even integer >= 4, got {c.N}")
    if not c.L > 0:
        raise ConfigError("L", f"L must be positive, got {c.L}")
    if not c.nu > 0:
        raise ConfigError("nu", f"nu must be positive, got {c.nu}")
    if not c.alpha > 0.5:
        raise ConfigError("alpha", f"alpha must exceed 1/2, got {c.alpha}")
    if not c.dt > 0:
        raise ConfigError("dt", f"dt must be positive, got {c.dt}")
    if not c.mu > 0:
        raise ConfigError("mu", f"mu must be positive, got {c.mu}")
    if not c.T > 0:
        raise ConfigError("T", f"T must be positive, got {c.T}")
    m = round(c.mu / c.dt)
    if m < 1 or abs(c.mu - m * c.dt) > 1e-9 * c.mu:
        raise ConfigError(
            "mu",
            f"mu/dt = {c.mu / c.dt:.6g} is not an integer; nearest valid mu = "
            f"{max(m, 1) * c.dt:.12g}",
        )
    n = round(c.T / c.dt)
    if abs(c.T - n * c.dt) > 1e-9 * c.T:
        raise ConfigError("T", f"T/dt = {c.T / c.dt:.6g} is not an integer")
    if not (isinstance(c.store_every, int) and c.store_every >= 1):
        raise ConfigError("store_every", f"store_every must be a positive integer, got {c.store_every}")


_KEYS = {
    "domain": {"L": "L", "N": "N", "seed": "seed"},
    "physics": {"nu": "nu", "alpha": "alpha", "s": "s"},
    "delay": {"mu": "mu", "dt": "dt", "T": "T"},
    "fields": {"u0": "u0_spec", "f": "f_spec", "phi": "phi_spec"},
    "output": {"checkpoint": "checkpoint", "diagnostics": "diagnostics", "store_every": "store_every"},
}
_INT_KEYS = {"N", "seed", "store_every"}
_PI = re.compile(r"^\s*([-+]?[0-9.eE+-]*)\s*\*?\s*pi\s*(?:/\s*([0-9.eE+-]+))?\s*$")


def _real(key: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        pass
    m = _PI.match(text)
    if m:
        num = m.group(1)
        den = m.group(2)
        try:
            a = float(num) if num not in ("", "+", "-") else float(num + "1")
            b = float(den) if den else 1.0
        except ValueError:
            raise ConfigError(key, f"cannot parse {text!r} as a number") from None
        return a * math.pi / b
    raise ConfigError(key, f"cannot parse {text!r} as a number")


def _int(key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {text!r}") from None


def parse_field_spec(key: str, text: str) -> FieldSpec:
    tokens = shlex.split(text)
    if not tokens:
        raise ConfigError(key, "empty field specification")
    kind, rest = tokens[0], tokens[1:]
    params = {}
    for tok in rest:
        if "=" not in tok:
            raise ConfigError(key, f"expected name=value, got {tok!r}")
        name, value = tok.split("=", 1)
        params[name] = value
    allowed = {
        "zero": {},
        "single_mode": {"k": None, "component": 0, "amplitude": 1.0},
        "random": {"slope": -2.0, "amplitude": 1.0},
        "steady_manufactured": {"seed": 0},
    }
    if kind not in allowed:
        raise ConfigError(key, f"unknown field kind {kind!r}; expected one of {sorted(allowed)}")
    unknown = set(params) - set(allowed[kind])
    if unknown:
        raise ConfigError(key, f"unknown parameter(s) {sorted(unknown)} for {kind}")
    out = []
    for name, default in allowed[kind].items():
        raw = params.get(name)
        if raw is None:
            if default is None:
                raise ConfigError(key, f"{kind} needs {name}=")
            out.append((name, default))
            continue
        if name == "k":
            try:
                k = tuple(int(x) for x in raw.split(","))
            except ValueError:
                raise ConfigError(key, f"k must be three integers, got {raw!r}") from None
            if len(k) != 3 or k == (0, 0, 0):
                raise ConfigError(key, f"k must be a nonzero triple, got {raw!r}")
            out.append((name, k))
        elif name in ("component", "seed"):
            v = _int(key, raw)
            if name == "component" and v not in (0, 1, 2):
                raise ConfigError(key, f"component must be 0, 1 or 2, got {v}")
            out.append((name, v))
        else:
            v = _real(key, raw)
            if name == "amplitude" and v < 0:
                raise ConfigError(key, "amplitude must be nonnegative")
            out.append((name, v))
    return FieldSpec(kind, tuple(out))


def parse_config(text: str) -> SimConfig:
    """Parse INI text into a validated :class:`SimConfig`; absent keys take defaults."""
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("<file>", f"malformed configuration: {exc}") from None
    values = {}
    for section in cp.sections():
        if section not in _KEYS:
            raise ConfigError(section, f"unknown section [{section}]")
        for key, raw in cp.items(section):
            if key not in _KEYS[section]:
                raise ConfigError(f"{section}.{key}", f"unknown key {key!r} in [{section}]")
            name = _KEYS[section][key]
            raw = raw.strip()
            if section == "fields":
                values[name] = parse_field_spec(key, raw)
            elif section == "output" and key != "store_every":
                values[name] = raw or None
            elif key in _INT_KEYS:
                values[name] = _int(key, raw)
            else:
                values[name] = _real(key, raw)
    return SimConfig(**values)


def load_config(path) -> SimConfig:
    return parse_config(Path(path).read_text())


def default_config_text() -> str:
    return resources.files("delaynse").joinpath("data/default.cfg").read_text()


def default_config() -> SimConfig:
    return parse_config(default_config_text())


def steady_field(lattice: Lattice, seed: int) -> SpectralField:
    """Smooth seeded field supported on ``|k_i| <= 1``; basis of manufactured steady states."""
    u = random_solenoidal_field(lattice, slope=0.0, amplitude=1.0, seed=seed)
    low = np.all(np.abs(lattice.k) <= 1, axis=0)
    return SpectralField(lattice, u.coeffs * low)


def build_field(spec: FieldSpec, config: SimConfig, slot: str) -> SpectralField:
    lat = config.lattice()
    if spec.kind == "zero":
        return SpectralField.zeros(lat)
    if spec.kind == "single_mode":
        return single_mode_field(lat, spec.get("k"), spec.get("component"), spec.get("amplitude"))
    if spec.kind == "random":
        return random_solenoidal_field(
            lat, spec.get("slope"), spec.get("amplitude"), seed=config.seed + _SEED_OFFSET[slot]
        )
    if spec.kind == "steady_manufactured":
        us = steady_field(lat, spec.get("seed"))
        if slot == "f":
            return config.nu * stokes_apply(us, 1.0) + nonlinear_B(us, us)
        return us
    raise ConfigError(slot, f"unknown field kind {spec.kind!r}")
