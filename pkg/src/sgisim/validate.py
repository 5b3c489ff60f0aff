"""Built-in oracle suite: each closed form against an independent computation."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from . import analytics as an
from . import geometry, nvspin
from .dynamics import PhaseState, SequenceConfig, ramped, run_sgi
from .geometry import FieldConfig, NDParams, Pose


@dataclass(frozen=True)
class OracleResult:
    name: str
    error: float
    tolerance: float
    detail: str = ""

    @property
    def passed(self):
        return bool(np.isfinite(self.error) and self.error < self.tolerance)

    def line(self):
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {self.name:<28s} error={self.error:.3e}  tol={self.tolerance:.0e}  {self.detail}"


def eigenvalue_oracle(n=100, nv=None):
    """Adiabatic energies (with transverse shifts) against the 3x3 diagonalization, |B| <= 10 G."""
    nv = nv or nvspin.NVParams(include_eta=True)
    worst = 0.0
    for bp in np.linspace(-1e-3, 1e-3, n):
        for bq in np.linspace(0.0, 1e-3, n):
            if bp**2 + bq**2 > 1e-6:
                continue
            f = nvspin.LocalField(bp, bq)
            lv = nvspin.adiabatic_energies(f, nv, include_eta=True)
            ad = np.sort([lv.e_plus, lv.e_minus, lv.e_zero])
            ex = nvspin.exact_hamiltonian_eigvals(f, nv)
            worst = max(worst, float(np.max(np.abs(ad - ex) / np.abs(ex))))
    return OracleResult("adiabatic vs exact energies", worst, 1e-3, f"{n}x{n} grid")


def propagator_oracle(n=50):
    """U0 and U- columns against a tight numerical integration of the linear EOM."""
    worst = 0.0
    rng = np.random.default_rng(1)
    for _ in range(n):
        w = rng.uniform(1e3, 1e5)
        t = rng.uniform(0.1, 4 * math.pi) / w
        for spin, k in ((-1, -(w**2)), (0, 0.0)):
            U = an.evolution_matrix(spin, t, w)
            for j in range(2):
                y0 = np.eye(2)[j]
                sol = solve_ivp(lambda _t, y: [y[1], k * y[0]], (0, t), y0, method="DOP853", rtol=1e-13, atol=1e-16 * w)
                num = sol.y[:, -1]
                scale = np.array([1.0, w]) if j == 0 else np.array([1.0 / w, 1.0])
                worst = max(worst, float(np.max(np.abs(num - U[:, j]) / scale)))
    return OracleResult("propagators vs integration", worst, 1e-8, f"{n} draws")


def mismatch_oracle(n=1000):
    worst = 0.0
    T = 25e-6
    for x in np.linspace(4 * math.pi / n, 4 * math.pi, n):
        w = x / T
        U1, U2 = an.arm_matrices(T, w)
        a, b = an.mismatch_coeffs(x)
        d = U1 - U2
        scale = max(1.0, abs(a), abs(b))
        err = max(abs(d[0, 1] * w - a), abs(d[1, 0] / w - b), abs(d[0, 0]), abs(d[1, 1])) / scale
        worst = max(worst, err)
    return OracleResult("mismatch (a, b) vs U1 - U2", worst, 1e-12, f"{n} omega T values")


def angular_phase_oracle(n=200):
    nd = NDParams()
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(n):
        w = rng.uniform(1e3, 1e5)
        T = rng.uniform(0.05, 4 * math.pi) / w
        th, thd = rng.normal(0, 0.01), rng.normal(0, 0.01 * w)
        comp = an.composed_phase(th, thd, w, T, nd).delta_phi
        closed = an.angular_phase(th, thd, w, T, nd)
        k = an.phase_coefficients(w, T, nd)
        scale = abs(k[0]) * th**2 + abs(k[1]) * thd**2 + abs(k[2] * th * thd)
        worst = max(worst, abs(comp - closed) / scale)
    return OracleResult("angular phase vs composition", worst, 1e-10, f"{n} draws")


def torque_oracle(n=200):
    """dB_par/dtheta against a central difference of b_parallel_at_nv."""
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(n):
        nd = NDParams(nv_distance=rng.uniform(0, 25e-9), nv_angle=rng.uniform(-math.pi, math.pi))
        cfg = FieldConfig(b0=rng.uniform(0, 2e-3), theta0=rng.uniform(-math.pi, math.pi), b_grad=rng.uniform(0, 1e5))
        p = Pose(rng.normal(0, 50e-9), rng.normal(0, 50e-9), rng.uniform(-math.pi, math.pi))
        h = 1e-5
        fp = geometry.b_parallel_at_nv(Pose(p.x, p.y, p.theta + h), nd, cfg)
        fm = geometry.b_parallel_at_nv(Pose(p.x, p.y, p.theta - h), nd, cfg)
        fd = (fp - fm) / (2 * h)
        an_ = geometry.dbpar_dtheta(p, nd, cfg)
        scale = cfg.b0 + cfg.b_grad * (abs(p.x) + abs(p.y) + 2 * nd.nv_distance)
        worst = max(worst, abs(fd - an_) / scale)
    return OracleResult("torque vs finite difference", worst, 1e-6, f"{n} poses")


def monte_carlo_oracle(n_draws=20, n_samples=10**6, seed=4):
    """Closed-form spread against Monte Carlo; error in units of the MC standard error."""
    nd = NDParams()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(n_draws):
        w = rng.uniform(1e3, 1e5)
        T = rng.uniform(0.05, 3.0) / w
        st = an.AngularStats(rng.uniform(0.2, 5) * 7e-3, rng.uniform(0.2, 5) * 130.0)
        exact = an.phase_uncertainty(st, w, T, nd)
        mc = an.phase_uncertainty_mc(st, w, T, nd, n_samples, seed=seed * 1000 + i)
        worst = max(worst, abs(mc.value - exact) / mc.stderr)
    return OracleResult("closed-form vs Monte Carlo", worst, 3.0, f"{n_draws} draws, N={n_samples:.0e}, in stderr")


def ramp_oracle(steps=2000):
    nd = NDParams()
    seq = SequenceConfig()
    cfg = ramped(FieldConfig(), seq, nd)
    res = run_sgi(PhaseState.prepared(nd, cfg), seq, nd, cfg, dt=seq.t_pulse / steps, record=False)
    return OracleResult("ramp cancels 1D phase", abs(float(res.delta_phi)), 1e-6, "rad")


def run_all(quick=False):
    if quick:
        return [
            eigenvalue_oracle(30),
            propagator_oracle(10),
            mismatch_oracle(200),
            angular_phase_oracle(50),
            torque_oracle(50),
            monte_carlo_oracle(5, 10**5),
            ramp_oracle(200),
        ]
    return [
        eigenvalue_oracle(),
        propagator_oracle(),
        mismatch_oracle(),
        angular_phase_oracle(),
        torque_oracle(),
        monte_carlo_oracle(),
        ramp_oracle(),
    ]
