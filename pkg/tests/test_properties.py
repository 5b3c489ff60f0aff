"""Property-based checks of invariants that hold for all parameters."""

import math

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from sgisim import analytics as an
from sgisim import config, geometry, nvspin
from sgisim.geometry import FieldConfig, NDParams, Pose
from sgisim.units import parse_quantity
from sgisim.wavepacket import sgi_width_coherence

ND = NDParams()

omega_t = st.floats(0.01, 4 * math.pi)
omega = st.floats(1e3, 1e5)
# magnitudes kept away from underflow
small = st.floats(-0.05, 0.05).filter(lambda v: abs(v) > 1e-6)
rate = st.floats(-200.0, 200.0).filter(lambda v: abs(v) > 1e-3)


@given(st.sampled_from([-1, 0, 1]), st.floats(1e-7, 1e-4), omega)
def test_propagator_det_one(spin, t, w):
    if spin == 1:
        t = min(t, 3.0 / w)
    assert math.isclose(np.linalg.det(an.evolution_matrix(spin, t, w)), 1.0, rel_tol=1e-9)


@given(omega_t)
def test_semiclassical_coherence_bounded(x):
    c = an.ground_state_coherence(x)
    assert 0.0 <= c <= 1.0


def test_spreads_agree_at_omega_t_one():
    # the two forms differ by factors omega T and 1/(omega T) in the diagonal weights
    assert math.isclose(an.ground_state_phase_uncertainty(1.0), an.ground_state_phase_uncertainty(1.0, "printed"))


@given(omega, st.floats(0.05, 3.0), small, rate)
def test_angular_phase_equals_composition(w, x, th, thd):
    T = x / w
    comp = an.composed_phase(th, thd, w, T, ND).delta_phi
    closed = an.angular_phase(th, thd, w, T, ND)
    k = an.phase_coefficients(w, T, ND)
    scale = abs(k[0]) * th**2 + abs(k[1]) * thd**2 + abs(k[2] * th * thd) + 1e-300
    assert abs(comp - closed) <= 1e-9 * scale


@given(omega, st.floats(0.05, 3.0))
def test_phase_even_under_state_reflection(w, x):
    T = x / w
    assert an.angular_phase(0.01, 50.0, w, T, ND) == an.angular_phase(-0.01, -50.0, w, T, ND)


@given(st.floats(0, 2e-3), st.floats(-math.pi, math.pi), st.floats(0, 1e5), st.floats(0, 25e-9), st.floats(-math.pi, math.pi))
@settings(max_examples=60)
def test_torque_is_derivative(b0, theta0, grad, d, theta):
    nd = NDParams(nv_distance=d)
    cfg = FieldConfig(b0=b0, theta0=theta0, b_grad=grad)
    p = Pose(3e-9, -2e-9, theta)
    h = 1e-5
    fd = (
        geometry.b_parallel_at_nv(Pose(p.x, p.y, theta + h), nd, cfg)
        - geometry.b_parallel_at_nv(Pose(p.x, p.y, theta - h), nd, cfg)
    ) / (2 * h)
    scale = b0 + grad * (5e-9 + 2 * d) + 1e-12
    assert abs(fd - geometry.dbpar_dtheta(p, nd, cfg)) <= 1e-7 * scale


@given(st.floats(-1e-3, 1e-3), st.floats(0, 1e-3))
@settings(max_examples=60)
def test_adiabatic_energies_close_to_exact(bp, bq):
    nv = nvspin.NVParams(include_eta=True)
    f = nvspin.LocalField(bp, bq)
    lv = nvspin.adiabatic_energies(f, nv, include_eta=True)
    ad = np.sort([lv.e_plus, lv.e_minus, lv.e_zero])
    ex = nvspin.exact_hamiltonian_eigvals(f, nv)
    assert np.all(np.abs(ad - ex) <= 1e-3 * np.abs(ex))


@given(st.floats(1e-3, 1e3), st.sampled_from(["G", "mT", "T", "uT"]))
def test_field_units_scale(v, unit):
    factor = {"G": 1e-4, "mT": 1e-3, "T": 1.0, "uT": 1e-6}[unit]
    assert math.isclose(parse_quantity(f"{v!r} {unit}", "T"), v * factor, rel_tol=1e-12)


@given(st.floats(0.1, 50.0), st.floats(0.0, 1.0), st.floats(-1.0, 1.0))
@settings(max_examples=30)
def test_config_roundtrip(b0_gauss, grad, theta):
    rc = config.build(
        {"field": {"b0": f"{b0_gauss!r} G", "b_grad": f"{grad!r} G/nm", "theta0": f"{theta!r} rad"}}
    )
    assert config.build(rc.resolved()).values == rc.values


@given(omega, st.floats(0.05, 10.0), st.floats(0.2, 5.0))
def test_wavepacket_coherence_bounded(w, x, scale):
    try:
        c = sgi_width_coherence(w, x / w, ND.inertia * scale, method="covariance").c_theta
    except ValueError:
        # packet grew beyond the trusted overlap range
        assume(False)
    assert 0.0 < c <= 1.0
