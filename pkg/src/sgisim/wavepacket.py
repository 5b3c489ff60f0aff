"""Gaussian width dynamics of the angular (and CoM) wavepackets and their overlap.

The packet centre is pinned at the bias direction; only the width sigma and
its rate are evolved, with the chirp alpha = (I/hbar) sigma_dot / sigma.
"""

import math
from dataclasses import dataclass

import numpy as np

from .analytics import ASYMMETRIC_SPINS, PULSE_FACTORS, evolution_matrix
from .nvspin import check_spin
from .units import HBAR

#: largest width for which the Gaussian overlap over [-pi, pi] is trusted
SIGMA_MAX = 0.3


class WidthCollapseError(ArithmeticError):
    """Width fell below 1e-6 of its initial value (step size too large)."""


@dataclass(frozen=True)
class AngularWavepacket:
    sigma_theta: float
    sigma_dot: float
    inertia: float

    def __post_init__(self):
        if not self.sigma_theta > 0:
            raise ValueError("sigma_theta must be positive")

    @property
    def alpha(self):
        """Chirp (I/hbar) sigma_dot / sigma [1/rad^2]."""
        return self.inertia / HBAR * self.sigma_dot / self.sigma_theta

    @classmethod
    def ground_state(cls, omega, inertia):
        return cls(math.sqrt(HBAR / (2 * inertia * omega)), 0.0, inertia)


@dataclass(frozen=True)
class CoMWavepacket:
    sigma_x: float
    sigma_y: float
    sigma_x_dot: float = 0.0
    sigma_y_dot: float = 0.0

    def __post_init__(self):
        if not (self.sigma_x > 0 and self.sigma_y > 0):
            raise ValueError("widths must be positive")


@dataclass
class WidthTrajectory:
    t: np.ndarray
    sigma: np.ndarray
    sigma_dot: np.ndarray
    final: object


@dataclass(frozen=True)
class CoherenceResult:
    c_theta: float
    arm1: tuple
    arm2: tuple


def omega_schedule(spins, t_pulse, omega, factors=PULSE_FACTORS):
    """[(duration, omega, spin), ...] for one arm."""
    return [(f * t_pulse, omega, check_spin(p)) for p, f in zip(spins, factors)]


def _rk4(f, y, t0, duration, dt, floor, tau=None):
    """RK4 over ``duration`` with steps <= dt, shrunk to tau(y)/200 when given.

    ``tau`` is the local quantum time scale 2 I sigma^2 / hbar, which becomes
    the stiff scale when a strongly chirped packet refocuses.
    """
    n = max(1, math.ceil(duration / dt - 1e-9))
    h0 = duration / n
    ts, ys = [t0], [y]
    t, t_end = t0, t0 + duration
    while t_end - t > 1e-12 * duration:
        h = h0 if tau is None else min(h0, tau(y) / 200)
        h = min(h, t_end - t)
        k1 = f(t, y)
        k2 = f(t + h / 2, y + h / 2 * k1)
        k3 = f(t + h / 2, y + h / 2 * k2)
        k4 = f(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t + h
        if not np.all(np.isfinite(y)) or np.any(y[: len(floor)] < floor):
            raise WidthCollapseError(f"width collapsed at t={t:.3e} s")
        ts.append(t)
        ys.append(y)
    ts[-1] = t_end
    return ts, ys


def evolve_sigma_theta(w0, schedule, dt=None, steps=None):
    """RK4 for sigma'' = hbar^2/(4 I^2 sigma^3) + p omega^2 sigma.

    The step is additionally limited to 1/200 of the local quantum time
    2 I sigma^2 / hbar, which keeps refocusing packets resolved.

    Parameters
    ----------
    w0 : AngularWavepacket
    schedule : list of (duration, omega, spin)
        Piecewise-constant libration; |-> confines, |0> is free, |+> is the
        inverted potential.
    dt : float, optional
        Maximal step. Alternatively ``steps`` per segment.
    """
    I = w0.inertia
    q = HBAR**2 / (4 * I**2)
    floor = np.array([1e-6 * w0.sigma_theta])
    c_tau = 2 * I / HBAR

    def tau(y):
        return c_tau * y[0] ** 2

    y = np.array([w0.sigma_theta, w0.sigma_dot])
    t = 0.0
    T_all, Y_all = [0.0], [y]
    for duration, omega, spin in schedule:
        k = spin * omega**2

        def f(_t, y, k=k):
            return np.array([y[1], q / y[0] ** 3 + k * y[0]])

        h = dt if steps is None else duration / steps
        ts, ys = _rk4(f, y, t, duration, h, floor, tau)
        T_all += ts[1:]
        Y_all += ys[1:]
        y, t = ys[-1], ts[-1]
    Y = np.array(Y_all)
    return WidthTrajectory(np.array(T_all), Y[:, 0], Y[:, 1], AngularWavepacket(y[0], y[1], I))


def free_width(sigma0, t, inertia):
    """Free spreading of an unchirped Gaussian: sigma0 sqrt(1 + (hbar t / 2 I sigma0^2)^2)."""
    return sigma0 * np.sqrt(1 + (HBAR * t / (2 * inertia * sigma0**2)) ** 2)


def overlap_coherence(w1, w2):
    """|<psi1|psi2>| for two centred Gaussians of width sigma and chirp alpha."""
    s1, s2 = w1.sigma_theta, w2.sigma_theta
    if max(s1, s2) > SIGMA_MAX:
        raise ValueError(f"width {max(s1, s2):.3g} rad exceeds {SIGMA_MAX} rad; Gaussian overlap invalid")
    root = math.sqrt(0.25 * (1 / s1**2 + 1 / s2**2) ** 2 + (w1.alpha - w2.alpha) ** 2)
    c = (s1 * s2 * root) ** -0.5
    return CoherenceResult(min(c, 1.0), (s1, w1.alpha), (s2, w2.alpha))


def propagate_covariance(w0, schedule):
    """Exact width evolution: the Gaussian covariance maps as U Sigma U^T.

    In a quadratic potential the Wigner function moves with the classical
    flow, so sigma^2 = Sigma_11 and sigma sigma_dot = Sigma_12.
    """
    I = w0.inertia
    s, sd = w0.sigma_theta, w0.sigma_dot
    # conjugate-variance from purity: Var(theta_dot) = (hbar/2I)^2/s^2 + sd^2
    S = np.array([[s * s, s * sd], [s * sd, (HBAR / (2 * I * s)) ** 2 + sd * sd]])
    for duration, omega, spin in schedule:
        U = evolution_matrix(spin, duration, omega)
        S = U @ S @ U.T
    sig = math.sqrt(S[0, 0])
    return AngularWavepacket(sig, S[0, 1] / sig, I)


def sgi_width_coherence(omega, t_pulse, inertia, spins=ASYMMETRIC_SPINS, method="rk4", steps=400):
    """Width-overlap coherence after the sequence, both arms starting in the ground state of omega.

    ``method="rk4"`` integrates the width equation (``steps`` per segment);
    ``"covariance"`` uses the exact Gaussian covariance map.
    """
    w0 = AngularWavepacket.ground_state(omega, inertia)
    arms = []
    for sp in spins:
        sched = omega_schedule(sp, t_pulse, omega)
        if method == "covariance":
            arms.append(propagate_covariance(w0, sched))
        elif method == "rk4":
            arms.append(evolve_sigma_theta(w0, sched, steps=steps).final)
        else:
            raise ValueError(f"unknown method {method!r}")
    return overlap_coherence(*arms)


def _as_fn(v):
    return v if callable(v) else (lambda _t, v=v: v)


def evolve_sigma_cm(w0, theta_prime, sigma_theta, nd, cfg, duration, dt):
    """CoM widths driven by the angular width.

    sigma_x'' = hbar^2/(4 M^2 sigma_x^3) + (mu B'/M) sin(theta') sigma_theta
    sigma_y'' = hbar^2/(4 M^2 sigma_y^3) + (mu B'/M) cos(theta') sigma_theta

    ``theta_prime`` and ``sigma_theta`` are constants or callables of t.
    """
    M = nd.mass
    q = HBAR**2 / (4 * M**2)
    g = nd.nv.mu * cfg.b_grad / M
    tp, st = _as_fn(theta_prime), _as_fn(sigma_theta)

    def f(t, y):
        src = g * st(t)
        a = tp(t)
        return np.array([y[2], y[3], q / y[0] ** 3 + src * math.sin(a), q / y[1] ** 3 + src * math.cos(a)])

    y = np.array([w0.sigma_x, w0.sigma_y, w0.sigma_x_dot, w0.sigma_y_dot])
    floor = 1e-6 * y[:2]
    ts, ys = _rk4(f, y, 0.0, duration, dt, floor)
    Y = np.array(ys)
    return np.array(ts), Y, CoMWavepacket(*Y[-1])
