"""Closed-form libration analytics for small angles about the bias direction.

Angles here are theta~ = theta' - theta0 (deviation of the NV axis from the
bias field). During |-> the angle librates at omega, during |0> it moves
freely and during |+> the potential is inverted (hyperbolic motion).

Two forms of the angular phase are provided. ``"composed"`` is the exact
composition of the segment phases along both arms, including the separation
phase -Lz_mean dtheta / hbar; ``"printed"`` is the commonly quoted compact
form with coefficients A, B, C. They share the cross term but differ in the
theta^2 and theta_dot^2 weights (factors omega T and 1/(omega T)).
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as _integrate

from .nvspin import check_spin
from .units import HBAR, KB

#: validity bound on omega T for the hyperbolic |+> propagator
PLUS_OMEGA_T_MAX = 0.3

ASYMMETRIC_SPINS = ((-1, 0, -1), (0, -1, 0))
SYMMETRIC_SPINS = ((-1, 1, -1), (1, -1, 1))
PULSE_FACTORS = (1, 2, 1)

_FORMS = ("composed", "printed")


@dataclass(frozen=True)
class LibrationParams:
    omega: float
    inertia: float
    t_pulse: float

    @property
    def omega_t(self):
        return self.omega * self.t_pulse


@dataclass(frozen=True)
class AngularStats:
    """Gaussian widths of the initial angle and angular velocity."""

    d_theta: float
    d_theta_dot: float
    source: str = "ground_state"

    def __post_init__(self):
        if np.any(np.asarray(self.d_theta) < 0) or np.any(np.asarray(self.d_theta_dot) < 0):
            raise ValueError("uncertainties must be non-negative")

    def scaled(self, k):
        return AngularStats(k * self.d_theta, k * self.d_theta_dot, self.source)


@dataclass(frozen=True)
class MismatchResult:
    a_coeff: float
    b_coeff: float
    delta_theta: float
    delta_theta_dot: float
    l_c: float = np.nan
    l_w: float = np.nan
    coherence: float = np.nan


@dataclass
class PhaseResult:
    delta_phi: float
    delta_phi_uncertainty: float = 0.0
    components: dict = field(default_factory=dict)


@dataclass(frozen=True)
class MCEstimate:
    """Monte Carlo estimate of the phase spread.

    ``value``/``stderr`` refer to the RMS (second moment) or to the standard
    deviation, whichever was requested; both are always reported.
    """

    value: float
    stderr: float
    rms: float
    rms_stderr: float
    std: float
    std_stderr: float
    mean: float
    n_samples: int


# --- frequencies and widths -------------------------------------------------


def libration_frequency(b_nv, nd):
    """omega = sqrt(mu B_NV / I)."""
    b = np.asarray(b_nv, dtype=float)
    if np.any(b < 0):
        raise ValueError("b_nv must be >= 0")
    w = np.sqrt(nd.nv.mu * b / nd.inertia)
    return w if w.ndim else float(w)


def b_nv_from_omega(omega, nd):
    return nd.inertia * np.asarray(omega) ** 2 / nd.nv.mu


def thermal_stats(t_theta, b0, nd, tau_c=None):
    """Thermal widths Delta theta = sqrt(2 kB T / mu B0), Delta theta_dot = sqrt(2 kB T / I).

    Warns when the small-angle picture fails (Delta theta > 0.3 rad) or, if a
    spin coherence time ``tau_c`` is given, when Delta theta_dot tau_c >= 1.
    """
    if np.any(np.asarray(t_theta) < 0):
        raise ValueError("t_theta must be >= 0")
    dth = np.sqrt(2 * KB * t_theta / (nd.nv.mu * b0))
    dthd = np.sqrt(2 * KB * t_theta / nd.inertia)
    if np.any(dth > 0.3):
        warnings.warn(f"thermal angle spread {np.max(dth):.3g} rad is not small", stacklevel=2)
    if tau_c is not None and np.any(dthd * tau_c >= 1):
        warnings.warn("thermal rotation within the coherence time exceeds 1 rad", stacklevel=2)
    return AngularStats(dth, dthd, "thermal")


def ground_state_stats(omega, nd):
    """Minimum-uncertainty widths sqrt(hbar/2I omega), sqrt(hbar omega/2I)."""
    if np.any(np.asarray(omega) <= 0):
        raise ValueError("omega must be positive")
    I = nd.inertia
    return AngularStats(np.sqrt(HBAR / (2 * I * omega)), np.sqrt(HBAR * omega / (2 * I)), "ground_state")


def thermal_scaling(delta_phi_gs, t_theta, omega):
    """Scale a ground-state spread by kB T_theta / hbar omega (valid for ratio >= 1)."""
    ratio = KB * np.asarray(t_theta) / (HBAR * np.asarray(omega))
    if np.any(ratio < 1 - 1e-12):
        raise ValueError("thermal scaling needs kB T_theta >= hbar omega")
    return delta_phi_gs * ratio


# --- propagators ------------------------------------------------------------


def evolution_matrix(spin, t, omega):
    """2x2 map of (theta~, theta_dot) over time t at constant omega.

    |->: harmonic, |0>: free, |+>: the hyperbolic analogue of |->.
    """
    spin = check_spin(spin)
    if spin == 0 or omega == 0:
        return np.array([[1.0, t], [0.0, 1.0]])
    x = omega * t
    if spin == -1:
        c, s = math.cos(x), math.sin(x)
        return np.array([[c, s / omega], [-omega * s, c]])
    c, s = math.cosh(x), math.sinh(x)
    return np.array([[c, s / omega], [omega * s, c]])


def _check_plus(spins, omega, t_pulse):
    if any(1 in arm for arm in spins) and omega * t_pulse > PLUS_OMEGA_T_MAX:
        warnings.warn(
            f"|+> propagation with omega T = {omega * t_pulse:.3g} > {PLUS_OMEGA_T_MAX}; "
            "small-angle treatment is unreliable",
            stacklevel=3,
        )


def sequence_matrix(spins, durations, omega):
    """Product of segment propagators, first segment acting first."""
    U = np.eye(2)
    for p, t in zip(spins, durations):
        U = evolution_matrix(p, t, omega) @ U
    return U


def arm_matrices(T, omega, spins=ASYMMETRIC_SPINS):
    """(U1, U2) over the T, 2T, T pulses; default U1 = U-(T) U0(2T) U-(T)."""
    _check_plus(spins, omega, T)
    durs = [f * T for f in PULSE_FACTORS]
    return sequence_matrix(spins[0], durs, omega), sequence_matrix(spins[1], durs, omega)


def mismatch_coeffs(omega_t):
    """a = 2x sin x (sin x + x cos x), b = 2x sin^2 x with x = omega T."""
    x = np.asarray(omega_t, dtype=float)
    s, c = np.sin(x), np.cos(x)
    return 2 * x * s * (s + x * c), 2 * x * s**2


def mismatch(theta0, theta_dot0, omega, T, nd, stats=None):
    """Output mismatch delta theta = a theta_dot(0)/omega, delta theta_dot = omega b theta(0).

    With ``stats`` the rough coherence estimate uses the initial widths for
    the coherence lengths l_c = hbar/Delta Lz and l_w = hbar/Delta theta.
    """
    a, b = mismatch_coeffs(omega * T)
    dth = a * theta_dot0 / omega
    dthd = omega * b * theta0
    if stats is None:
        return MismatchResult(a, b, dth, dthd)
    l_c = HBAR / (nd.inertia * stats.d_theta_dot)
    l_w = HBAR / stats.d_theta
    C = np.exp(-0.5 * ((dth / l_c) ** 2 + (nd.inertia * dthd / l_w) ** 2))
    return MismatchResult(a, b, dth, dthd, l_c, l_w, C)


def semiclassical_coherence(a, b, de_kin, de_pot, e0):
    """C = exp[-(a^2 dE_kin^2 + b^2 dE_pot^2) / 2 E0^2]."""
    if np.any(np.asarray(e0) <= 0):
        raise ValueError("E0 must be positive")
    return np.exp(-(a**2 * de_kin**2 + b**2 * de_pot**2) / (2 * e0**2))


def ground_state_coherence(omega_t):
    """exp[-(a^2 + b^2)/8], the ground-state case dE_kin = dE_pot = E0/2."""
    a, b = mismatch_coeffs(omega_t)
    return semiclassical_coherence(a, b, 0.5, 0.5, 1.0)


# --- phases -----------------------------------------------------------------


def segment_phase(spin, T, omega, theta_i, theta_dot_i, nd):
    """Action / hbar of one constant-spin segment of the libration Lagrangian."""
    spin = check_spin(spin)
    I = nd.inertia
    if spin == 0 or omega == 0:
        return I * T * theta_dot_i**2 / (2 * HBAR)
    x = omega * T
    if spin == -1:
        s, c = np.sin(x), np.cos(x)
        return I * s / (2 * HBAR * omega) * (
            (theta_dot_i**2 - omega**2 * theta_i**2) * c - 2 * omega * theta_i * theta_dot_i * s
        )
    s, c = np.sinh(x), np.cosh(x)
    return I * s / (2 * HBAR * omega) * (
        (theta_dot_i**2 + omega**2 * theta_i**2) * c + 2 * omega * theta_i * theta_dot_i * s
    )


def _arm_phase(spins, T, omega, th, thd, nd):
    phi = 0.0
    v = np.array([th, thd], dtype=float)
    for p, f in zip(spins, PULSE_FACTORS):
        phi = phi + segment_phase(p, f * T, omega, v[0], v[1], nd)
        v = np.tensordot(evolution_matrix(p, f * T, omega), v, axes=1)
    return phi, v


def composed_phase(theta0, theta_dot0, omega, T, nd, spins=ASYMMETRIC_SPINS):
    """Angular phase by composing segment phases along both arms.

    Returns a PhaseResult whose components hold each arm's action phase and
    the separation phase -Lz_mean (theta1 - theta2) / hbar.
    """
    _check_plus(spins, omega, T)
    p1, v1 = _arm_phase(spins[0], T, omega, theta0, theta_dot0, nd)
    p2, v2 = _arm_phase(spins[1], T, omega, theta0, theta_dot0, nd)
    sep = -nd.inertia * 0.5 * (v1[1] + v2[1]) * (v1[0] - v2[0]) / HBAR
    return PhaseResult(p1 - p2 + sep, 0.0, {"arm1": p1, "arm2": p2, "separation": sep})


def abcd(omega_t):
    """The functions A, B, C, D of omega T."""
    x = np.asarray(omega_t, dtype=float)
    s, c = np.sin(x), np.cos(x)
    D = s + x * c
    k = 1 - 2 * s * D
    return s * k, -D * k, 2 * s * D * (2 * c - x * s), D


def phase_coefficients(omega, T, nd, form="composed"):
    """(k_tt, k_dd, k_td) with delta phi = k_tt theta^2 + k_dd theta_dot^2 + k_td theta theta_dot."""
    if form not in _FORMS:
        raise ValueError(f"form must be one of {_FORMS}, got {form!r}")
    x = omega * T
    A, B, C, _ = abcd(x)
    pre = nd.inertia * omega / HBAR * np.sin(x)
    if form == "printed":
        return pre * A, pre * T**2 * B, pre * T * C
    return pre * x * A, pre * (T / omega) * B, pre * T * C


def angular_phase(theta0, theta_dot0, omega, T, nd, form="composed"):
    """Additional phase from a small initial angular deviation (|->/|0> arms)."""
    ktt, kdd, ktd = phase_coefficients(omega, T, nd, form)
    return ktt * theta0**2 + kdd * theta_dot0**2 + ktd * theta0 * theta_dot0


def quadratic_form_spread(ktt, kdd, ktd, s1, s2, centered=False):
    """Spread of k_tt u^2 + k_dd v^2 + k_td u v for independent u ~ N(0, s1^2), v ~ N(0, s2^2).

    RMS: sqrt(3 k_tt^2 s1^4 + 3 k_dd^2 s2^4 + (2 k_tt k_dd + k_td^2) s1^2 s2^2);
    centered (standard deviation): sqrt(2 k_tt^2 s1^4 + 2 k_dd^2 s2^4 + k_td^2 s1^2 s2^2).
    """
    a, b, c = ktt * s1**2, kdd * s2**2, ktd * s1 * s2
    if centered:
        return np.sqrt(2 * a**2 + 2 * b**2 + c**2)
    return np.sqrt(3 * a**2 + 3 * b**2 + 2 * a * b + c**2)


def phase_uncertainty(stats, omega, T, nd, form="composed", centered=False):
    """Phase spread for independent Gaussian (theta(0), theta_dot(0)).

    By default the RMS of the angular phase, which is what the compact
    3A^2 / 3B^2 / (2AB + C^2) expression measures (including |sin omega T|).
    """
    k = phase_coefficients(omega, T, nd, form)
    return quadratic_form_spread(*k, stats.d_theta, stats.d_theta_dot, centered)


def ground_state_phase_uncertainty(omega_t, form="composed"):
    """Closed ground-state RMS spread, a function of omega T alone."""
    x = np.asarray(omega_t, dtype=float)
    A, B, C, _ = abcd(x)
    s = np.abs(np.sin(x))
    if form == "printed":
        return 0.5 * s * np.sqrt(3 * A**2 + 3 * x**4 * B**2 + (2 * A * B + C**2) * x**2)
    if form != "composed":
        raise ValueError(f"form must be one of {_FORMS}, got {form!r}")
    return 0.5 * s * x * np.sqrt(3 * A**2 + 3 * B**2 + 2 * A * B + C**2)


def phase_coherence(delta_phi):
    """Visibility exp(-Delta phi^2 / 2) of a Gaussian phase spread."""
    return np.exp(-0.5 * np.asarray(delta_phi) ** 2)


def phase_uncertainty_mc(
    stats, omega, T, nd, n_samples=10**6, seed=0, form="composed", centered=False, shard=2**18
):
    """Monte Carlo oracle for ``phase_uncertainty``.

    Samples are drawn in shards with seeds spawned from ``seed``, so the
    result depends only on (seed, n_samples, shard). The RMS standard error
    is std(phi^2) / (2 RMS sqrt N); that of the standard deviation uses the
    fourth central moment.
    """
    if n_samples < 10**4:
        raise ValueError("n_samples must be >= 1e4")
    k = phase_coefficients(omega, T, nd, form)
    n_shards = -(-n_samples // shard)
    seqs = np.random.SeedSequence(seed).spawn(n_shards)
    s1 = s2 = s3 = s4 = 0.0
    done = 0
    for ss in seqs:
        m = min(shard, n_samples - done)
        rng = np.random.default_rng(ss)
        u = rng.standard_normal(m) * stats.d_theta
        v = rng.standard_normal(m) * stats.d_theta_dot
        phi = k[0] * u * u + k[1] * v * v + k[2] * u * v
        s1 += phi.sum()
        p2 = phi * phi
        s2 += p2.sum()
        s3 += (p2 * phi).sum()
        s4 += (p2 * p2).sum()
        done += m
    n = float(n_samples)
    mean, m2, m3, m4 = s1 / n, s2 / n, s3 / n, s4 / n
    rms = math.sqrt(m2)
    var = max(m2 - mean**2, 0.0)
    std = math.sqrt(var)
    rms_se = math.sqrt(max(m4 - m2**2, 0.0) / n) / (2 * rms) if rms > 0 else 0.0
    c4 = m4 - 4 * mean * m3 + 6 * mean**2 * m2 - 3 * mean**4
    std_se = math.sqrt(max(c4 - var**2, 0.0) / n) / (2 * std) if std > 0 else 0.0
    if centered:
        return MCEstimate(std, std_se, rms, rms_se, std, std_se, mean, n_samples)
    return MCEstimate(rms, rms_se, rms, rms_se, std, std_se, mean, n_samples)


# --- transverse coordinate --------------------------------------------------


def transverse_phase(t, theta, q, nd, zeta_i=0.0, zeta_dot_i=0.0, omega=None, theta_dot=None):
    """Transverse motion driven by the angle and its phase.

    zeta'' = q theta with q = mu B'/M. For a harmonic history (``omega``
    given) zeta = c0 + c1 t - (q/omega^2) theta(t), with c0, c1 fixed by the
    initial conditions; otherwise zeta is obtained by double quadrature.
    phi_zeta = (M/hbar) int [zeta_dot^2/2 + q theta zeta] dt.

    Returns
    -------
    (zeta, phi_zeta)
    """
    t = np.asarray(t, dtype=float)
    theta = np.asarray(theta, dtype=float)
    tau = t - t[0]
    if omega:
        if theta_dot is None:
            theta_dot = np.gradient(theta, t, edge_order=2)
        k = q / omega**2
        c0 = zeta_i + k * theta[0]
        c1 = zeta_dot_i + k * theta_dot[0]
        zeta = c0 + c1 * tau - k * theta
        zeta_dot = c1 - k * np.asarray(theta_dot)
    else:
        zeta_dot = zeta_dot_i + q * _integrate.cumulative_trapezoid(theta, t, initial=0.0)
        zeta = zeta_i + _integrate.cumulative_trapezoid(zeta_dot, t, initial=0.0)
    integrand = 0.5 * zeta_dot**2 + q * theta * zeta
    return zeta, nd.mass / HBAR * _integrate.simpson(integrand, x=t)
