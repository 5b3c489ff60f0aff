"""Classical translational + librational dynamics through the SGI sequence.

The state (x, y, theta, vx, vy, theta_dot) is integrated with fixed-step RK4;
the Lagrangian action rides along as a seventh component so that it is
accumulated to the same order. Every component may carry a batch shape, which
is how phase sensitivities and sweeps are evaluated in one pass.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import (
    FieldConfig,
    NDParams,
    Pose,
    b_parallel_at_nv,
    dbpar_dtheta,
    field_at,
    from_xi_zeta,
    to_xi_zeta,
)
from .nvspin import check_spin, signed_lambda, spin_energy
from .units import HBAR, MU0


class NumericalError(RuntimeError):
    """Integration produced non-finite values."""


class StepSizeError(ValueError):
    """Requested step does not resolve the fastest libration."""


@dataclass(frozen=True)
class PhaseState:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0
    vx: float = 0.0
    vy: float = 0.0
    theta_dot: float = 0.0

    @property
    def pose(self):
        return Pose(self.x, self.y, self.theta)

    def momenta(self, nd):
        """(px, py, Lz)."""
        return nd.mass * self.vx, nd.mass * self.vy, nd.inertia * self.theta_dot

    def as_array(self):
        return np.array(
            np.broadcast_arrays(self.x, self.y, self.theta, self.vx, self.vy, self.theta_dot),
            dtype=float,
        )

    @classmethod
    def from_array(cls, a):
        return cls(*(a[i] for i in range(6)))

    @classmethod
    def prepared(cls, nd, cfg, theta_offset=0.0, theta_dot=0.0):
        """ND at rest at the origin with the NV axis at theta0 + theta_offset."""
        return cls(theta=cfg.theta0 + theta_offset - nd.nv_angle, theta_dot=theta_dot)


@dataclass(frozen=True)
class Segment:
    spin: int
    duration: float

    def __post_init__(self):
        check_spin(self.spin)
        if not self.duration > 0:
            raise ValueError("segment duration must be positive")


def _arm(spins, t_pulse, factors=(1, 2, 1)):
    if len(spins) != len(factors):
        raise ValueError(f"expected {len(factors)} spin labels per arm, got {len(spins)}")
    return tuple(Segment(int(p), f * t_pulse) for p, f in zip(spins, factors))


@dataclass(frozen=True)
class SequenceConfig:
    """Four-pulse SGI: per-arm spin labels over pulses of T, 2T, T.

    Default arms are |-> |0> |-> and |0> |-> |0>; ``symmetric=True`` replaces
    |0> by |+>. Between pulses the gradient is gated off for ``t_delay`` and
    the spin keeps the label of the preceding pulse.
    """

    t_pulse: float = 25e-6
    t_delay: float = 0.0
    arm1: tuple = None
    arm2: tuple = None
    symmetric: bool = False

    def __post_init__(self):
        if self.arm1 is None:
            object.__setattr__(self, "arm1", _arm((-1, 0, -1), self.t_pulse))
        if self.arm2 is None:
            object.__setattr__(self, "arm2", _arm((0, -1, 0), self.t_pulse))
        if self.symmetric:
            for name in ("arm1", "arm2"):
                arm = tuple(Segment(s.spin or 1, s.duration) for s in getattr(self, name))
                object.__setattr__(self, name, arm)
        if self.t_delay < 0:
            raise ValueError("t_delay must be >= 0")
        d1 = sum(s.duration for s in self.arm1)
        d2 = sum(s.duration for s in self.arm2)
        if len(self.arm1) != len(self.arm2) or not math.isclose(d1, d2, rel_tol=1e-12):
            raise ValueError("both arms must have the same segment count and total duration")

    @classmethod
    def from_spins(cls, t_pulse, spins1, spins2, t_delay=0.0, factors=(1, 2, 1)):
        return cls(t_pulse, t_delay, _arm(spins1, t_pulse, factors), _arm(spins2, t_pulse, factors))

    @property
    def total_time(self):
        return sum(s.duration for s in self.arm1) + self.t_delay * (len(self.arm1) - 1)

    def first_pulse_accelerations(self, nd, cfg):
        """Magnetic acceleration along xi of each arm during the first pulse (lambda = 1)."""
        a = nd.nv.mu * cfg.b_grad / nd.mass
        return -self.arm1[0].spin * a, -self.arm2[0].spin * a

    def swapped(self):
        return replace(self, arm1=self.arm2, arm2=self.arm1, symmetric=False)


@dataclass
class Trajectory:
    """Samples of one arm. ``states`` has shape (n_samples, 6, *batch)."""

    t: np.ndarray
    states: np.ndarray
    spins: np.ndarray
    action: np.ndarray
    segment_actions: list = field(default_factory=list)

    @property
    def final(self):
        return PhaseState.from_array(self.states[-1])

    def xi_zeta(self, theta0):
        return to_xi_zeta(self.states[:, 0], self.states[:, 1], theta0)

    def theta_prime(self, nd):
        return self.states[:, 2] + nd.nv_angle

    @staticmethod
    def concatenate(parts):
        t = np.concatenate([parts[0].t] + [p.t[1:] for p in parts[1:]])
        states = np.concatenate([parts[0].states] + [p.states[1:] for p in parts[1:]])
        spins = np.concatenate([parts[0].spins] + [p.spins[1:] for p in parts[1:]])
        seg = [a for p in parts for a in p.segment_actions]
        return Trajectory(t, states, spins, sum(p.action for p in parts), seg)


def _gravity(cfg):
    return from_xi_zeta(cfg.g_xi, cfg.g_zeta, cfg.theta0)


def accelerations(s, spin, nd, cfg, t=0.0):
    """(x'', y'', theta'') for adiabatic state ``spin``.

    The magnetic force is -p lambda mu grad(B_par); since B_par is linear in
    the centre coordinates its gradient B'(cos theta', -sin theta') is the
    same at the NV and at the centre, so the NV offset enters only the torque.
    """
    M, I, mu = nd.mass, nd.inertia, nd.nv.mu
    pose = s.pose
    tp = pose.theta_prime(nd)
    bpar = b_parallel_at_nv(pose, nd, cfg, t)
    k = spin * signed_lambda(bpar, nd.nv)
    gx, gy = _gravity(cfg)
    ax = -k * mu * cfg.b_grad / M * np.cos(tp) + gx
    ay = k * mu * cfg.b_grad / M * np.sin(tp) + gy
    if nd.diamagnetic:
        bx, by = field_at(s.x, s.y, cfg, t)
        c = nd.chi_per_mass / MU0
        ax = ax + c * bx * cfg.b_grad
        ay = ay - c * by * cfg.b_grad
    alpha = -k * mu / I * dbpar_dtheta(pose, nd, cfg, t)
    return ax, ay, alpha


def lagrangian(s, spin, nd, cfg, t=0.0):
    """Kinetic - E_p + gravity + diamagnetic energy (J)."""
    M, I = nd.mass, nd.inertia
    bpar = b_parallel_at_nv(s.pose, nd, cfg, t)
    gx, gy = _gravity(cfg)
    L = 0.5 * M * (s.vx**2 + s.vy**2) + 0.5 * I * s.theta_dot**2
    L = L - spin_energy(spin, bpar, nd.nv) + M * (gx * s.x + gy * s.y)
    if nd.diamagnetic:
        bx, by = field_at(s.x, s.y, cfg, t)
        L = L + nd.chi / (2 * MU0) * (bx**2 + by**2)
    return L


class _Kernel:
    """Constants of the equations of motion, hoisted out of the RK4 loop.

    Evaluates the same expressions as ``accelerations`` and ``lagrangian``
    (which remain the reference) with the trigonometry shared.
    """

    def __init__(self, spin, nd, cfg):
        self.spin, self.nd, self.cfg = spin, nd, cfg
        self.M, self.I, self.mu = nd.mass, nd.inertia, nd.nv.mu
        self.G = cfg.b_grad
        self.alpha, self.d = nd.nv_angle, nd.nv_distance
        self.c0, self.s0 = np.cos(cfg.theta0), np.sin(cfg.theta0)
        self.gx, self.gy = _gravity(cfg)
        self.unity = nd.nv.lambda_mode == "unity"
        self.dia = nd.chi_per_mass / MU0 if nd.diamagnetic else None

    def __call__(self, t, y):
        x, yy, th, vx, vy, w = y[0], y[1], y[2], y[3], y[4], y[5]
        G, d, M, I, mu = self.G, self.d, self.M, self.I, self.mu
        b0 = self.cfg.b0_at(t)
        tp = th + self.alpha
        c, s = np.cos(tp), np.sin(tp)
        ct, st = np.cos(th), np.sin(th)
        cr = c * self.c0 + s * self.s0  # cos(theta' - theta0)
        sr = s * self.c0 - c * self.s0
        bpar = b0 * cr + G * (x * c - yy * s + d * (ct * c - st * s))
        dbd = -b0 * sr - G * (x * s + yy * c) - 2.0 * d * G * (s * ct + c * st)
        if self.unity:
            k = self.spin
            ep = self.spin * mu * bpar
        else:
            k = self.spin * signed_lambda(bpar, self.nd.nv)
            ep = spin_energy(self.spin, bpar, self.nd.nv)
        f = k * mu * G / M
        ax = -f * c + self.gx
        ay = f * s + self.gy
        L = 0.5 * M * (vx * vx + vy * vy) + 0.5 * I * w * w - ep + M * (self.gx * x + self.gy * yy)
        if self.dia is not None:
            bx = b0 * self.c0 + G * x
            by = b0 * self.s0 - G * yy
            ax = ax + self.dia * bx * G
            ay = ay - self.dia * by * G
            L = L + self.dia * M / 2 * (bx * bx + by * by)
        al = -k * mu / I * dbd
        return np.array(np.broadcast_arrays(vx, vy, w, ax, ay, al, L))


def omega_bound(s0, duration, nd, cfg):
    """Conservative upper bound on the libration rate reached within ``duration``."""
    M, mu = nd.mass, nd.nv.mu
    grad = np.max(np.abs(cfg.b_grad))
    r0 = np.max(np.hypot(s0.x, s0.y))
    v0 = np.max(np.hypot(s0.vx, s0.vy))
    a = np.max(mu * grad / M) + np.max(np.hypot(cfg.g_xi, cfg.g_zeta))
    r = r0 + v0 * duration + 0.5 * a * duration**2
    if nd.diamagnetic:
        b = np.max(cfg.b0) + grad * r
        a = a + np.max(np.abs(nd.chi_per_mass) / MU0 * b * grad)
        r = r0 + v0 * duration + 0.5 * a * duration**2
    b = np.max(cfg.b0) + grad * (r + np.max(nd.nv_distance))
    return float(np.sqrt(mu * b / np.min(nd.inertia)))


def integrate(s0, spin, duration, nd, cfg, dt, t0=0.0, record=True):
    """Fixed-step RK4 over one segment at constant spin.

    Parameters
    ----------
    s0 : PhaseState
        Initial state; components may be arrays of a common batch shape.
    spin : int or array
        Adiabatic state label(s) p.
    duration, dt, t0 : float
        Segment length, maximal step and start time [s]. The step actually
        used is duration / ceil(duration / dt).
    record : bool
        Keep every step (True) or only the end points.

    Returns
    -------
    Trajectory
    """
    if not duration > 0:
        raise ValueError("duration must be positive")
    w_max = omega_bound(s0, duration, nd, cfg)
    limit = duration if w_max == 0 else min(duration, 2 * np.pi / (200 * w_max))
    if dt > limit * (1 + 1e-12):
        raise StepSizeError(f"dt={dt:.3e} s exceeds {limit:.3e} s (omega_max={w_max:.3e} rad/s)")
    n = max(1, math.ceil(duration / dt - 1e-9))
    h = duration / n
    y = np.concatenate([s0.as_array(), np.zeros((1,) + np.shape(s0.as_array())[1:])])
    rhs = _Kernel(spin, nd, cfg)
    # array-valued config fields may widen the batch beyond that of s0
    batch = np.broadcast_shapes(y.shape[1:], rhs(t0, y).shape[1:])
    y = y.reshape((7,) + (1,) * (len(batch) - y.ndim + 1) + y.shape[1:])
    y = np.broadcast_to(y, (7,) + batch).copy()
    ts = [t0]
    ys = [y[:6].copy()]
    for i in range(n):
        t = t0 + i * h
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if record or i == n - 1:
            ts.append(t0 + (i + 1) * h)
            ys.append(y[:6].copy())
        if (i % 512 == 0 or i == n - 1) and not np.all(np.isfinite(y)):
            raise NumericalError(f"non-finite state at t={t:.3e} s (spin {spin})")
    spins = np.full(len(ts), spin if np.ndim(spin) == 0 else np.nan)
    return Trajectory(np.array(ts), np.array(ys), spins, y[6], [y[6]])


@dataclass
class SGIResult:
    arm1: Trajectory
    arm2: Trajectory
    delta_phi: np.ndarray
    action_phase: np.ndarray
    separation_phase: np.ndarray


def separation_phase(s1, s2, nd):
    """-(p_mean . dr + Lz_mean dtheta) / hbar from the final states of the two arms."""
    M, I = nd.mass, nd.inertia
    pbar_x = 0.5 * M * (s1.vx + s2.vx)
    pbar_y = 0.5 * M * (s1.vy + s2.vy)
    lbar = 0.5 * I * (s1.theta_dot + s2.theta_dot)
    return -(pbar_x * (s1.x - s2.x) + pbar_y * (s1.y - s2.y) + lbar * (s1.theta - s2.theta)) / HBAR


def default_dt(seq):
    return seq.t_pulse / 2000


def run_arm(s0, segments, nd, cfg, dt, t_delay=0.0, record=True):
    parts = []
    t = 0.0
    s = s0
    gated = replace(cfg, b_grad=0.0 * np.asarray(cfg.b_grad))
    for i, seg in enumerate(segments):
        tr = integrate(s, seg.spin, seg.duration, nd, cfg, dt, t0=t, record=record)
        parts.append(tr)
        s, t = tr.final, t + seg.duration
        if t_delay > 0 and i < len(segments) - 1:
            tr = integrate(s, seg.spin, t_delay, nd, gated, dt, t0=t, record=record)
            parts.append(tr)
            s, t = tr.final, t + t_delay
    return Trajectory.concatenate(parts)


def run_sgi(s0, seq, nd, cfg, dt=None, record=True):
    """Propagate both arms from a shared initial state and form the phase.

    delta_phi = (S1 - S2)/hbar + phi_sep, with pulses treated as ideal
    instantaneous spin swaps.
    """
    if dt is None:
        dt = default_dt(seq)
    tr1 = run_arm(s0, seq.arm1, nd, cfg, dt, seq.t_delay, record)
    tr2 = run_arm(s0, seq.arm2, nd, cfg, dt, seq.t_delay, record)
    action = (tr1.action - tr2.action) / HBAR
    sep = separation_phase(tr1.final, tr2.final, nd)
    return SGIResult(tr1, tr2, action + sep, action, sep)


def phase_1d(delta_a, a_av, g_xi, M, T):
    """Phase of the strictly 1D interferometer, 2 M da T^3 (a_av + g_xi) / hbar.

    ``delta_a`` is the acceleration of arm 1 minus that of arm 2 during the
    first pulse and ``a_av`` their mean (both along xi).
    """
    return 2.0 * M * delta_a * T**3 * (a_av + g_xi) / HBAR


def sequence_phase_1d(seq, nd, cfg):
    """phase_1d for the first-pulse accelerations of ``seq``."""
    a1, a2 = seq.first_pulse_accelerations(nd, cfg)
    return phase_1d(a1 - a2, 0.5 * (a1 + a2), cfg.g_xi, nd.mass, seq.t_pulse)


def ramped(cfg, seq, nd):
    """``cfg`` with the quadratic bias ramp matched to the mean arm acceleration."""
    a1, a2 = seq.first_pulse_accelerations(nd, cfg)
    return cfg.with_ramp(0.5 * (a1 + a2))


def libration_energy(s, nd, cfg):
    """1/2 I theta_dot^2 + mu B0 (1 - cos(theta' - theta0)); conserved for |-> at B' = 0."""
    tp = s.theta + nd.nv_angle
    return 0.5 * nd.inertia * s.theta_dot**2 + nd.nv.mu * cfg.b0 * (1 - np.cos(tp - cfg.theta0))


__all__ = [
    "FieldConfig",
    "NDParams",
    "NumericalError",
    "PhaseState",
    "SGIResult",
    "Segment",
    "SequenceConfig",
    "StepSizeError",
    "Trajectory",
    "accelerations",
    "integrate",
    "lagrangian",
    "libration_energy",
    "phase_1d",
    "ramped",
    "run_sgi",
    "separation_phase",
    "sequence_phase_1d",
]
