import math

import numpy as np
import pytest

from sgisim import config, experiments
from sgisim.experiments import EXPERIMENTS, SweepSpec, Table


def rc_for(name, *overrides):
    return config.build(experiments.preset_data(name), overrides)


@pytest.mark.parametrize(
    "kw",
    [
        dict(variable="mass", start=0, stop=1, n_points=3),
        dict(variable="b0", start=0, stop=1, n_points=1),
        dict(variable="b0", start=1, stop=1, n_points=3),
        dict(variable="b0", start=0, stop=1, n_points=3, scale="log"),
        dict(variable="b0", start=1, stop=2, n_points=3, scale="cubic"),
    ],
)
def test_sweep_spec_validation(kw):
    with pytest.raises(ValueError):
        SweepSpec(**kw)


def test_sweep_spec_values():
    np.testing.assert_allclose(SweepSpec("b_grad", 1.0, 100.0, 3, "log").values(), [1, 10, 100])
    assert SweepSpec("d", 0.0, 3e-9, 4).unit == "m"


def test_every_experiment_has_a_valid_preset():
    for name in EXPERIMENTS:
        rc_for(name)


def test_preset_under_file_data():
    data = experiments.preset_data("fig7", {"field": {"b0": "3 G"}, "nd": {"radius": "30 nm"}})
    assert data["field"]["b0"] == "3 G"
    assert data["nd"]["nv_distance"] == "0 nm"
    assert data["nd"]["radius"] == "30 nm"


def test_table_helpers():
    t = Table([("x", "m"), ("y", "1")], [[1.0, "a"], [2.0, None]])
    assert t.names == ["x", "y"]
    np.testing.assert_array_equal(t.as_float("y"), [np.nan, np.nan])
    assert t.where("x", 2.0).rows == [[2.0, None]]


def test_spread_sweep_thread_invariant():
    rc = rc_for("fig8")
    xs = np.linspace(0, 9.8, 20)
    a = experiments.spread_sweep(rc, "g_xi", xs, threads=1)
    b = experiments.spread_sweep(rc, "g_xi", xs, threads=3)
    assert a == b


def test_failed_points_are_recorded_in_row():
    rc = rc_for("fig9", 'field.b_grad="0.2 G/nm"')
    t = experiments.run_experiment("fig9", rc, SweepSpec("g_xi", 0.0, 9.8, 3), ())
    status = list(t.column("status"))
    assert status[0] == "ok"
    assert status[-1].startswith("RampError")
    assert math.isnan(t.as_float("delta_phi_spread")[-1])


def test_degenerate_sweep_rows_nearly_identical():
    rc = rc_for("fig7")
    t = experiments.run_experiment("fig7", rc, SweepSpec("b0", 1e-3, 1e-3 * (1 + 1e-9), 2), ())
    s = t.as_float("delta_phi_spread")
    assert len(s) == 2
    assert s[0] == pytest.approx(s[1], rel=1e-6)


def test_thermal_widths_at_least_ground_state():
    rc = rc_for("fig7")
    t = experiments.run_experiment("fig7", rc, SweepSpec("t_theta", 1e-12, 1e-6, 3, "log"), ())
    s = t.as_float("delta_phi_spread")
    gs = experiments.run_experiment("fig7", rc, SweepSpec("b0", 1e-3, 1.0001e-3, 2), ()).as_float("delta_phi_spread")[0]
    assert s[0] == pytest.approx(gs, rel=1e-3)
    assert s[-1] > 10 * gs


def test_coherence_table():
    t = experiments.run_experiment("fig5", rc_for("fig5"), SweepSpec("omega_t", 0.1, math.pi, 5))
    assert t.names[:3] == ["omega_t", "c_wavepacket", "c_semiclassical"]
    assert t.as_float("c_wavepacket")[-1] == pytest.approx(1.0, abs=1e-9)


def test_analytic_spread_table():
    rc = rc_for("fig6", "numerics.mc_samples=10000")
    t = experiments.run_experiment("fig6", rc, SweepSpec("omega_t", 0.5, 2.0, 3), seed=1)
    dp, mc, se = t.as_float("delta_phi_gs"), t.as_float("delta_phi_mc"), t.as_float("delta_phi_mc_stderr")
    assert np.all(np.abs(dp - mc) < 5 * se)


def test_paths_table():
    t = experiments.run_experiment("fig3", rc_for("fig3", "numerics.steps_per_pulse=200"), SweepSpec("d", 0.0, 3e-9, 2))
    assert list(t.column("status")) == ["ok", "ok"]
    assert np.all(t.as_float("collinearity") < 1e-3)


def test_run_summary_keys():
    s, res = experiments.run_summary(config.build(overrides=["numerics.steps_per_pulse=200"]))
    for k in ("libration_frequency_hz", "delta_phi", "delta_phi_spread", "coherence_wavepacket", "xi_max"):
        assert k in s
    rows = experiments.trajectory_rows(res, config.build().nd, config.build().field_config)
    assert rows.names[:3] == ["arm", "t", "x"]
    assert len(rows.rows) == len(res.arm1.t) + len(res.arm2.t)


def test_unknown_experiment():
    with pytest.raises(KeyError):
        experiments.run_experiment("fig99", config.build())
