"""TOML run configuration with unit-annotated quantities.

Sections: nd, nv, field, sequence, environment, initial, numerics. Quantities
are strings with units (``b0 = "10 G"``); bare numbers are SI. The resolved
configuration is re-emitted with SI units so that it can be fed back in.
"""

import sys
from dataclasses import dataclass, field, replace


if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .dynamics import SequenceConfig, ramped
from .geometry import FieldConfig, NDParams
from .nvspin import NVParams
from .units import UnitError, parse_angle, parse_quantity


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


# (section, key) -> (kind, SI unit, default)
SCHEMA = {
    "nd": {
        "radius": ("q", "m", "25 nm"),
        "density": ("q", "kg/m^3", "3510 kg/m^3"),
        "nv_distance": ("q", "m", "0 nm"),
        "nv_angle": ("angle", "rad", "pi/4"),
        "chi_per_mass": ("q", "m^3/kg", "-6.2e-9 m^3/kg"),
        "diamagnetic": ("bool", None, False),
    },
    "nv": {
        "mu": ("q", "J/T", "1.8548020156e-23 J/T"),
        "D": ("q", "J", "2.87 GHz"),
        "epsilon": ("q", "J", "5 MHz"),
        "lambda_mode": ("choice", ("unity", "exact"), "unity"),
        "include_eta": ("bool", None, False),
    },
    "field": {
        "b0": ("q", "T", "10 G"),
        "theta0": ("angle", "rad", "pi/8"),
        "b_grad": ("q", "T/m", "0.2 G/nm"),
        "ramp": ("choice", ("constant", "quadratic"), "constant"),
    },
    "sequence": {
        "t_pulse": ("q", "s", "25 us"),
        "t_delay": ("q", "s", "0 us"),
        "arm1": ("spins", None, [-1, 0, -1]),
        "arm2": ("spins", None, [0, -1, 0]),
        "symmetric": ("bool", None, False),
    },
    "environment": {
        "g_xi": ("q", "m/s^2", "0 m/s^2"),
        "g_zeta": ("q", "m/s^2", "0 m/s^2"),
        "t_theta": ("q", "K", "0 K"),
    },
    "initial": {
        "theta_offset": ("angle", "rad", "0 rad"),
        "theta_dot": ("q", "1/s", "0 1/s"),
    },
    "numerics": {
        "steps_per_pulse": ("int", None, 2000),
        "fd_step": ("float", None, 0.1),
        "mc_samples": ("int", None, 100000),
        "seed": ("int", None, 0),
    },
}


def _convert(section, key, value):
    kind, unit, _ = SCHEMA[section][key]
    where = f"{section}.{key}"
    try:
        if kind == "q":
            return parse_quantity(value, unit)
        if kind == "angle":
            return parse_angle(value)
        if kind == "bool":
            if not isinstance(value, bool):
                raise ConfigError(f"{where}: expected true/false, got {value!r}")
            return value
        if kind == "choice":
            if value not in unit:
                raise ConfigError(f"{where}: expected one of {unit}, got {value!r}")
            return value
        if kind == "int":
            if isinstance(value, bool) or int(value) != value:
                raise ConfigError(f"{where}: expected an integer, got {value!r}")
            return int(value)
        if kind == "float":
            return float(value)
        if kind == "spins":
            spins = [int(s) for s in (value.split(",") if isinstance(value, str) else value)]
            if len(spins) != 3 or any(s not in (-1, 0, 1) for s in spins):
                raise ConfigError(f"{where}: expected three labels from -1, 0, 1, got {value!r}")
            return tuple(spins)
    except (UnitError, TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"{where}: {e}") from None
    raise AssertionError(kind)


def _emit(section, key, v):
    kind, unit, _ = SCHEMA[section][key]
    if kind in ("q", "angle"):
        return f"{float(v)!r} {unit}"
    if kind == "spins":
        return list(v)
    return v


def parse_override(text):
    """``section.key=value`` -> (section, key, value); the value is read as TOML if it can be."""
    if "=" not in text or "." not in text.split("=", 1)[0]:
        raise ConfigError(f"override {text!r} must look like section.key=value")
    lhs, rhs = text.split("=", 1)
    section, key = lhs.strip().split(".", 1)
    try:
        value = tomllib.loads(f"v = {rhs.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = rhs.strip()
    return section, key, value


@dataclass
class RunConfig:
    """Resolved configuration (SI) plus the model objects built from it."""

    values: dict = field(default_factory=dict)

    def __getitem__(self, key):
        section, name = key.split(".")
        return self.values[section][name]

    @property
    def nd(self):
        v, n = self.values["nd"], self.values["nv"]
        nv = NVParams(n["mu"], n["D"], n["epsilon"], n["lambda_mode"], n["include_eta"])
        return NDParams(v["radius"], v["nv_distance"], v["nv_angle"], v["density"], v["chi_per_mass"], v["diamagnetic"], nv)

    @property
    def sequence(self):
        s = self.values["sequence"]
        seq = SequenceConfig.from_spins(s["t_pulse"], s["arm1"], s["arm2"], s["t_delay"])
        return replace(seq, symmetric=s["symmetric"]) if s["symmetric"] else seq

    @property
    def field_config(self):
        f, e = self.values["field"], self.values["environment"]
        cfg = FieldConfig(f["b0"], f["theta0"], f["b_grad"], g_xi=e["g_xi"], g_zeta=e["g_zeta"])
        if f["ramp"] == "quadratic":
            cfg = ramped(cfg, self.sequence, self.nd)
        return cfg

    @property
    def dt(self):
        return self["sequence.t_pulse"] / self["numerics.steps_per_pulse"]

    def with_values(self, **kw):
        """Copy with ``section__key=SI value`` replacements (used by sweeps)."""
        vals = {s: dict(d) for s, d in self.values.items()}
        for k, v in kw.items():
            s, n = k.split("__")
            vals[s][n] = v
        return RunConfig(vals)

    def resolved(self):
        """JSON/TOML-ready dict with SI units attached."""
        return {s: {k: _emit(s, k, v) for k, v in d.items()} for s, d in self.values.items()}

    def check(self):
        """Build every model object once so that invalid combinations surface as ConfigError."""
        try:
            self.nd, self.sequence, self.field_config
        except ValueError as e:
            raise ConfigError(str(e)) from None
        if self["numerics.steps_per_pulse"] < 1:
            raise ConfigError("numerics.steps_per_pulse: must be >= 1")
        if not self["numerics.fd_step"] > 0:
            raise ConfigError("numerics.fd_step: must be positive")
        return self


def build(data=None, overrides=()):
    """Merge defaults, a parsed TOML dict and overrides into a RunConfig."""
    data = {} if data is None else data
    merged = {s: {k: spec[2] for k, spec in keys.items()} for s, keys in SCHEMA.items()}
    for section, keys in data.items():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        if not isinstance(keys, dict):
            raise ConfigError(f"[{section}] must be a table")
        for k, v in keys.items():
            if k not in SCHEMA[section]:
                raise ConfigError(f"{section}.{k}: unknown key")
            merged[section][k] = v
    for text in overrides:
        section, key, value = parse_override(text)
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"{section}.{key}: unknown key")
        merged[section][key] = value
    values = {s: {k: _convert(s, k, v) for k, v in d.items()} for s, d in merged.items()}
    return RunConfig(values).check()


def load(path=None, overrides=()):
    """Read a TOML file (or none, for the defaults) and apply overrides."""
    data = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as e:
            raise ConfigError(f"{path}: {e.strerror}") from None
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"{path}: {e}") from None
    return build(data, overrides)
