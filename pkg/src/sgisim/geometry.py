"""Bias + 2D quadrupole field, nanodiamond/NV geometry and the splitting frame.

All functions are elementwise in numpy, so poses and field parameters may be
scalars or broadcastable arrays (used to integrate many initial conditions or
sweep points at once).
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .nvspin import NVParams, local_field_components

DIAMOND_DENSITY = 3510.0
DIAMOND_CHI_PER_MASS = -6.2e-9


class RampError(ValueError):
    """The ramped bias field would cross zero during the sequence."""


@dataclass(frozen=True)
class NDParams:
    """Spherical nanodiamond carrying one NV.

    ``nv_angle`` (alpha) is the angle between the NV axis and the vector from
    the ND centre to the NV, ``nv_distance`` (d) the length of that vector.
    """

    radius: float = 25e-9
    nv_distance: float = 0.0
    nv_angle: float = np.pi / 4
    density: float = DIAMOND_DENSITY
    chi_per_mass: float = DIAMOND_CHI_PER_MASS
    diamagnetic: bool = False
    nv: NVParams = field(default_factory=NVParams)

    def __post_init__(self):
        r = np.asarray(self.radius)
        d = np.asarray(self.nv_distance)
        if np.any(r <= 0):
            raise ValueError("radius must be positive")
        if np.any(d < 0) or np.any(d > r):
            raise ValueError("nv_distance must lie in [0, radius]")
        if np.any(np.asarray(self.chi_per_mass) > 0):
            raise ValueError("diamond is diamagnetic: chi_per_mass must be <= 0")

    @property
    def mass(self):
        return 4.0 * np.pi / 3.0 * self.density * self.radius**3

    @property
    def inertia(self):
        return 0.4 * self.mass * self.radius**2

    @property
    def chi(self):
        """Total susceptibility chi = chi_per_mass * M [m^3]."""
        return self.chi_per_mass * self.mass


@dataclass(frozen=True)
class RampPolicy:
    """Time dependence of the bias magnitude.

    ``quadratic``: B0(t) = B0(0) - B'(a_av + g_xi) t^2 / 2, which holds the
    field at the mean position of the two arms fixed. The ramp keeps its own
    copy of B' so that it is unaffected by the gradient being gated off.
    """

    mode: str = "constant"
    a_av: float = 0.0
    g_xi: float = 0.0
    b_grad: float = 0.0

    def __post_init__(self):
        if self.mode not in ("constant", "quadratic"):
            raise ValueError(f"ramp mode must be 'constant' or 'quadratic', got {self.mode!r}")


@dataclass(frozen=True)
class FieldConfig:
    """B(x, y) = B0(t) (cos theta0, sin theta0) + B' (x, -y), plus gravity.

    Gravity is given by its projections on the splitting axis xi and the
    in-plane transverse axis zeta.
    """

    b0: float = 10e-4
    theta0: float = np.pi / 8
    b_grad: float = 2e4
    ramp: RampPolicy = field(default_factory=RampPolicy)
    g_xi: float = 0.0
    g_zeta: float = 0.0

    def __post_init__(self):
        if np.any(np.asarray(self.b0) < 0):
            raise ValueError("bias magnitude b0 must be >= 0")

    def b0_at(self, t):
        if self.ramp.mode == "constant":
            return self.b0
        r = self.ramp
        b = self.b0 - 0.5 * r.b_grad * (r.a_av + r.g_xi) * t**2
        if np.any(b < 0):
            raise RampError(f"ramped bias reaches zero at t={t:.3e} s")
        return b

    @property
    def gravity_xy(self):
        """Gravity in quadrupole coordinates (g_x, g_y)."""
        return from_xi_zeta(self.g_xi, self.g_zeta, self.theta0)

    def with_ramp(self, a_av):
        """Copy with the quadratic ramp that cancels the mean-position field change."""
        return replace(
            self, ramp=RampPolicy("quadratic", a_av=a_av, g_xi=self.g_xi, b_grad=self.b_grad)
        )


@dataclass(frozen=True)
class Pose:
    """ND centre and rotation; theta is kept unwrapped."""

    x: float
    y: float
    theta: float

    def theta_prime(self, nd):
        """Angle of the NV axis."""
        return self.theta + nd.nv_angle

    @property
    def theta_wrapped(self):
        return np.mod(self.theta, 2 * np.pi)


def field_at(x, y, cfg, t=0.0):
    """Field vector (Bx, By) at position (x, y) and time t."""
    b0 = cfg.b0_at(t)
    return (
        b0 * np.cos(cfg.theta0) + cfg.b_grad * x,
        b0 * np.sin(cfg.theta0) - cfg.b_grad * y,
    )


def nv_position(p, nd):
    return p.x + nd.nv_distance * np.cos(p.theta), p.y + nd.nv_distance * np.sin(p.theta)


def b_parallel_at_nv(p, nd, cfg, t=0.0):
    """Field component along the NV axis, evaluated at the NV."""
    tp = p.theta_prime(nd)
    xn, yn = nv_position(p, nd)
    return cfg.b0_at(t) * np.cos(tp - cfg.theta0) + cfg.b_grad * (xn * np.cos(tp) - yn * np.sin(tp))


def b_perp_at_nv(p, nd, cfg, t=0.0):
    """Signed transverse component at the NV (= partial dB_par/dtheta' at fixed NV position)."""
    xn, yn = nv_position(p, nd)
    bx, by = field_at(xn, yn, cfg, t)
    tp = p.theta_prime(nd)
    return -bx * np.sin(tp) + by * np.cos(tp)


def local_field_at_nv(p, nd, cfg, t=0.0):
    xn, yn = nv_position(p, nd)
    bx, by = field_at(xn, yn, cfg, t)
    return local_field_components(bx, by, p.theta_prime(nd))


def dbpar_dtheta(p, nd, cfg, t=0.0):
    """Total derivative of B_par at the NV with respect to the ND angle.

    Includes the motion of the NV position with theta; the last term is the
    lever-arm contribution that vanishes when 2 theta' = alpha (mod pi).
    """
    tp = p.theta_prime(nd)
    return (
        -cfg.b0_at(t) * np.sin(tp - cfg.theta0)
        - cfg.b_grad * (p.x * np.sin(tp) + p.y * np.cos(tp))
        - 2.0 * nd.nv_distance * cfg.b_grad * np.sin(2.0 * tp - nd.nv_angle)
    )


def preparation_bias_angle(alpha):
    """Bias direction theta0 = alpha/2 that makes the prepared NV orientation torque-free."""
    return 0.5 * alpha


def to_xi_zeta(x, y, theta0):
    """Rotate into the splitting frame: xi along (cos theta0, -sin theta0)."""
    c, s = np.cos(theta0), np.sin(theta0)
    return x * c - y * s, x * s + y * c


def from_xi_zeta(xi, zeta, theta0):
    c, s = np.cos(theta0), np.sin(theta0)
    return xi * c + zeta * s, -xi * s + zeta * c
