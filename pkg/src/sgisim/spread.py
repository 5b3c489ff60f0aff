"""Phase spread of the full 2D model for a Gaussian initial libration state.

The interferometer phase delta_phi(theta(0), theta_dot(0)) from ``run_sgi``
is expanded to second order about the prepared orientation with a 9-point
finite-difference stencil in standardized coordinates u = (theta/Dtheta,
theta_dot/Dtheta_dot). For u ~ N(0, 1) and phi = g.u + u.H.u/2,

    <phi^2> = |g|^2 + [(tr H)^2 + 2 |H|_F^2] / 4,
    Var phi = |g|^2 + |H|_F^2 / 2.

Configuration fields may be arrays of shape (n, 1); the stencil occupies the
last axis, so a whole sweep is integrated in one batched pass.
"""

from dataclasses import dataclass

import numpy as np

from .analytics import ground_state_stats, libration_frequency
from .dynamics import PhaseState, run_sgi

# stencil offsets in units of the step h
_STENCIL = np.array(
    [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)], dtype=float
)


@dataclass
class SpreadResult:
    """Per sweep point: central phase, spread and the local quadratic model."""

    delta_phi: np.ndarray
    rms: np.ndarray
    std: np.ndarray
    gradient: np.ndarray
    hessian: np.ndarray
    d_theta: np.ndarray
    d_theta_dot: np.ndarray


def preparation_stats(nd, cfg):
    """Ground-state widths for the libration prepared in the bias field alone."""
    return ground_state_stats(libration_frequency(cfg.b0, nd), nd)


def _fd(phi, h):
    f0, fxp, fxm, fyp, fym, fpp, fpm, fmp, fmm = (phi[..., i] for i in range(9))
    gx = (fxp - fxm) / (2 * h)
    gy = (fyp - fym) / (2 * h)
    hxx = (fxp - 2 * f0 + fxm) / h**2
    hyy = (fyp - 2 * f0 + fym) / h**2
    hxy = (fpp - fpm - fmp + fmm) / (4 * h**2)
    return f0, np.stack([gx, gy], -1), np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -2)


def phase_spread(nd, cfg, seq, stats=None, h=0.1, dt=None):
    """Ground-state (or given) phase spread of the full model.

    Parameters
    ----------
    nd, cfg, seq : NDParams, FieldConfig, SequenceConfig
        Fields of ``nd``/``cfg`` may be column arrays (n, 1) for a sweep.
    stats : AngularStats, optional
        Initial widths; defaults to the ground state of the bias field.
    h : float
        Stencil step in units of the widths.
    dt : float, optional
        RK4 step (default: ``default_dt(seq)``).

    Returns
    -------
    SpreadResult
    """
    if stats is None:
        stats = preparation_stats(nd, cfg)
    s1 = np.asarray(stats.d_theta, dtype=float)
    s2 = np.asarray(stats.d_theta_dot, dtype=float)
    off = h * _STENCIL
    s0 = PhaseState.prepared(nd, cfg, theta_offset=s1 * off[:, 0], theta_dot=s2 * off[:, 1])
    res = run_sgi(s0, seq, nd, cfg, dt=dt, record=False)
    f0, g, H = _fd(np.asarray(res.delta_phi), h)
    tr = H[..., 0, 0] + H[..., 1, 1]
    fro2 = np.sum(H**2, axis=(-2, -1))
    g2 = np.sum(g**2, axis=-1)
    rms = np.sqrt(g2 + 0.25 * (tr**2 + 2 * fro2))
    std = np.sqrt(g2 + 0.5 * fro2)
    return SpreadResult(f0, rms, std, g, H, s1, s2)


def column(values):
    """Shape a 1D sweep axis as (n, 1) so that it broadcasts against the stencil."""
    return np.asarray(values, dtype=float).reshape(-1, 1)
