"""Physical constants and unit-string parsing.

Everything inside the package is SI (T, m, kg, s, J, rad, K). Configuration
files quote quantities with explicit units ("10 G", "0.2 G/nm", "25 us") and
are converted here, once, at parse time.
"""

import re

import numpy as np
from scipy import constants as _c

HBAR = _c.hbar
H_PLANCK = _c.h
KB = _c.k
MU0 = _c.mu_0
MU_B = _c.physical_constants["Bohr magneton"][0]

#: NV magnetic moment, 2 Bohr magnetons (h x 2.8 MHz/G)
MU_NV = 2.0 * MU_B
#: zero-field splitting, h x 2.87 GHz
ZFS_NV = H_PLANCK * 2.87e9

GAUSS = 1e-4
NM = 1e-9
UM = 1e-6
US = 1e-6

# factor to SI and the dimension tag it carries
_BASE = {
    "": (1.0, ""),
    "1": (1.0, ""),
    "T": (1.0, "T"),
    "mT": (1e-3, "T"),
    "uT": (1e-6, "T"),
    "G": (1e-4, "T"),
    "mG": (1e-7, "T"),
    "m": (1.0, "m"),
    "cm": (1e-2, "m"),
    "mm": (1e-3, "m"),
    "um": (1e-6, "m"),
    "nm": (1e-9, "m"),
    "s": (1.0, "s"),
    "ms": (1e-3, "s"),
    "us": (1e-6, "s"),
    "ns": (1e-9, "s"),
    "kg": (1.0, "kg"),
    "g": (1e-3, "kg"),
    "K": (1.0, "K"),
    "mK": (1e-3, "K"),
    "uK": (1e-6, "K"),
    "nK": (1e-9, "K"),
    "rad": (1.0, ""),
    "mrad": (1e-3, ""),
    "deg": (np.pi / 180.0, ""),
    "pi": (np.pi, ""),
    "J": (1.0, "J"),
    "Hz": (1.0, "Hz"),
    "kHz": (1e3, "Hz"),
    "MHz": (1e6, "Hz"),
    "GHz": (1e9, "Hz"),
}
_ALIASES = {"μm": "um", "µm": "um", "μs": "us", "µs": "us", "μK": "uK", "µK": "uK", "μT": "uT"}

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")


class UnitError(ValueError):
    """Raised for malformed quantities or units of the wrong dimension."""


def _factor(unit):
    """Return (factor, {dim: power}) for a compound unit such as 'G/nm' or 'm/s^2'."""
    unit = unit.strip()
    for k, v in _ALIASES.items():
        unit = unit.replace(k, v)
    dims = {}
    factor = 1.0
    parts = unit.split("/")
    for i, part in enumerate(parts):
        sign = 1 if i == 0 else -1
        for tok in part.replace("*", " ").split():
            m = re.fullmatch(r"([A-Za-z]+|1)(?:\^(-?\d+)|(\d))?", tok)
            if m is None or m.group(1) not in _BASE:
                raise UnitError(f"unknown unit {tok!r} in {unit!r}")
            power = int(m.group(2) or m.group(3) or 1) * sign
            f, d = _BASE[m.group(1)]
            factor *= f**power
            if d:
                dims[d] = dims.get(d, 0) + power
        if not part.strip() and len(parts) > 1:
            raise UnitError(f"malformed unit {unit!r}")
    return factor, {k: v for k, v in dims.items() if v}


def _dims_of(expected):
    return _factor(expected)[1]


def parse_quantity(text, expected):
    """Convert a quantity string to SI.

    Parameters
    ----------
    text : str or float
        e.g. ``"10 G"``, ``"0.2 G/nm"``, ``"9.8 m/s^2"``. Bare numbers are
        taken to be SI already.
    expected : str
        Any unit of the wanted dimension (``"T"``, ``"T/m"``, ``"s"`` ...).
        ``"J"`` additionally accepts frequencies, converted with h.

    Returns
    -------
    float
    """
    if isinstance(text, bool):
        raise UnitError(f"expected a quantity in {expected}, got {text!r}")
    if isinstance(text, (int, float)):
        return float(text)
    m = _QUANTITY.match(str(text))
    if m is None:
        raise UnitError(f"cannot parse quantity {text!r}")
    value = float(m.group(1))
    factor, dims = _factor(m.group(2))
    want = _dims_of(expected)
    if dims == want:
        return value * factor
    if want == {"J": 1} and dims == {"Hz": 1}:
        return value * factor * H_PLANCK
    raise UnitError(f"{text!r} does not have the dimension of {expected!r}")


def parse_angle(text):
    """Angles accept rad/mrad/deg plus the forms ``"pi/8"`` and ``"-0.25 pi"``."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        return float(text)
    s = str(text).strip().replace(" ", "")
    m = re.fullmatch(r"([-+]?(?:\d+\.?\d*|\.\d+)?)\*?pi(?:/(\d+(?:\.\d*)?))?", s)
    if m:
        coef = m.group(1)
        coef = 1.0 if coef in ("", "+") else (-1.0 if coef == "-" else float(coef))
        den = float(m.group(2)) if m.group(2) else 1.0
        return coef * np.pi / den
    return parse_quantity(text, "rad")
