"""NV ground-state triplet in a weak magnetic field.

Adiabatic energies of the |+>, |0>, |-> states, the Zeeman saturation factor
lambda, and an exact 3x3 diagonalization used as their oracle.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .units import MU_NV, ZFS_NV, H_PLANCK


class WeakFieldError(ValueError):
    """The field is outside the weak-field range where the adiabatic formulas hold."""


SPIN_LABELS = (-1, 0, 1)


def check_spin(p):
    """Validate an adiabatic state label p in {-1, 0, +1} and return it as int."""
    if p not in SPIN_LABELS:
        raise ValueError(f"spin label must be one of -1, 0, +1, got {p!r}")
    return int(p)


@dataclass(frozen=True)
class NVParams:
    """NV constants and the model toggles that act on them.

    ``epsilon`` is the strain/electric coupling between |m_S=+1> and
    |m_S=-1>, complex, in joules. ``lambda_mode`` is ``"unity"`` (force and
    torque at full Zeeman strength) or ``"exact"``; ``include_eta`` switches
    on the second-order transverse-field shifts.
    """

    mu: float = MU_NV
    D: float = ZFS_NV
    epsilon: complex = H_PLANCK * 5e6
    lambda_mode: str = "unity"
    include_eta: bool = False

    def __post_init__(self):
        if not self.mu > 0 or not self.D > 0:
            raise ValueError("mu and D must be positive")
        if self.lambda_mode not in ("unity", "exact"):
            raise ValueError(f"lambda_mode must be 'unity' or 'exact', got {self.lambda_mode!r}")


@dataclass(frozen=True)
class LocalField:
    """Field at the NV resolved on the NV axis."""

    b_par: float
    b_perp: float
    phi: float = 0.0

    def __post_init__(self):
        if np.any(np.asarray(self.b_perp) < 0):
            raise ValueError("b_perp must be non-negative")


@dataclass(frozen=True)
class EnergyLevels:
    e_plus: float
    e_minus: float
    de_zero: float
    eta_plus: float
    eta_minus: float
    eta_zero: float
    eps_tilde: complex
    D: float

    @property
    def e_zero(self):
        """Absolute energy of |0>, including the zero-field offset -D."""
        return -self.D + self.de_zero

    def energy(self, p):
        return {1: self.e_plus, 0: self.e_zero, -1: self.e_minus}[check_spin(p)]


def local_field_components(bx, by, theta_prime):
    """Project an in-plane field onto the NV axis at angle ``theta_prime``.

    The transverse magnitude is returned unsigned with phi = 0; the signed
    transverse component equals dB_par/dtheta'.
    """
    c, s = np.cos(theta_prime), np.sin(theta_prime)
    b_par = bx * c + by * s
    b_perp = np.abs(-bx * s + by * c)
    return LocalField(b_par=b_par, b_perp=b_perp, phi=0.0)


def _eta(p, f, nv):
    den = nv.D + p * nv.mu * np.abs(f.b_par)
    if np.any(den <= 0):
        raise WeakFieldError(f"degenerate denominator for p={p}: mu|B_par| >= D")
    return 0.5 * nv.mu**2 * f.b_perp**2 / den


def adiabatic_energies(f, nv=NVParams(), include_eta=None):
    """Adiabatic eigen-energies of the NV in the weak-field limit.

    Parameters
    ----------
    f : LocalField
    nv : NVParams
    include_eta : bool, optional
        Overrides ``nv.include_eta``. When off, eta_p -> 0 and the shifted
        coupling reduces to epsilon.

    Returns
    -------
    EnergyLevels
        E+ and E- with the |+-1> pair centred on zero, and the |0> shift.
    """
    if include_eta is None:
        include_eta = nv.include_eta
    b = np.hypot(f.b_par, f.b_perp)
    if np.any(nv.mu * b > nv.D / 10):
        warnings.warn("mu|B| exceeds D/10; weak-field energies are unreliable", stacklevel=2)
    if include_eta:
        # second-order shift through |0>; the |+-> state sits a gap D +- mu|B_par| above it
        eta_p, eta_m, eta_0 = _eta(1, f, nv), _eta(-1, f, nv), _eta(0, f, nv)
        eps_t = nv.epsilon + eta_0 * np.exp(2j * f.phi)
        lo, hi = nv.D - nv.mu * f.b_par, nv.D + nv.mu * f.b_par
        if np.any(lo <= 0) or np.any(hi <= 0):
            raise WeakFieldError("degenerate |0> denominator: mu|B_par| >= D")
        de0 = -0.5 * nv.mu**2 * (1 / lo + 1 / hi) * f.b_perp**2
    else:
        eta_p = eta_m = eta_0 = 0.0 * f.b_par
        eps_t = nv.epsilon + 0.0 * f.b_par
        de0 = 0.0 * f.b_par
    root = np.sqrt((nv.mu * f.b_par) ** 2 + np.abs(eps_t) ** 2)
    return EnergyLevels(
        e_plus=eta_p + root,
        e_minus=eta_m - root,
        de_zero=de0,
        eta_plus=eta_p,
        eta_minus=eta_m,
        eta_zero=eta_0,
        eps_tilde=eps_t,
        D=nv.D,
    )


def nv_hamiltonian(f, nv=NVParams()):
    """3x3 spin Hamiltonian in the basis (|m_S=1>, |0>, |-1>)."""
    mu, eps = nv.mu, nv.epsilon
    t = mu * f.b_perp / np.sqrt(2.0)
    em, ep = np.exp(-1j * f.phi), np.exp(1j * f.phi)
    return np.array(
        [
            [mu * f.b_par, t * em, np.conj(eps)],
            [t * ep, -nv.D, t * em],
            [eps, t * ep, -mu * f.b_par],
        ],
        dtype=complex,
    )


def exact_hamiltonian_eigvals(f, nv=NVParams()):
    """Sorted (ascending) eigenvalues of the full 3x3 Hamiltonian."""
    return np.linalg.eigvalsh(nv_hamiltonian(f, nv))


def lambda_factor(b_par, nv=NVParams()):
    """Zeeman saturation factor mu|B_par| / sqrt(mu^2 B_par^2 + |eps|^2), in [0, 1)."""
    z = nv.mu * np.abs(np.asarray(b_par, dtype=float))
    den = np.sqrt(z**2 + np.abs(nv.epsilon) ** 2)
    lam = np.divide(z, den, out=np.zeros_like(z), where=den > 0)
    return lam if lam.ndim else float(lam)


def spin_energy(p, b_par, nv=NVParams()):
    """Energy of adiabatic state p as used by the equations of motion.

    Unity mode: E_p = p mu B_par. Exact mode: E_p = p sqrt(mu^2 B_par^2 + |eps|^2).
    Transverse-field shifts are not part of the dynamics.
    """
    if nv.lambda_mode == "unity":
        return p * nv.mu * b_par
    return p * np.sqrt((nv.mu * b_par) ** 2 + np.abs(nv.epsilon) ** 2)


def signed_lambda(b_par, nv=NVParams()):
    """dE_p/d(p mu B_par): 1 in unity mode, sign(B_par) lambda in exact mode."""
    if nv.lambda_mode == "unity":
        return 1.0
    return np.sign(b_par) * lambda_factor(b_par, nv)
