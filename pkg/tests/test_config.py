import math

import pytest

from sgisim import config
from sgisim.config import ConfigError


def test_defaults():
    rc = config.build()
    assert rc["field.b0"] == pytest.approx(1e-3)
    assert rc["field.b_grad"] == pytest.approx(2e4)
    assert rc["field.theta0"] == pytest.approx(math.pi / 8)
    assert rc["sequence.t_pulse"] == pytest.approx(25e-6)
    assert rc.sequence.arm1[0].spin == -1
    assert rc.dt == pytest.approx(25e-6 / 2000)


def test_load_file(tmp_path):
    p = tmp_path / "run.toml"
    p.write_text('[field]\nb0 = "5 G"\nb_grad = "0.1 G/nm"\n[sequence]\narm1 = [0, 0, 0]\n')
    rc = config.load(p)
    assert rc["field.b0"] == pytest.approx(5e-4)
    assert rc["sequence.arm1"] == (0, 0, 0)


def test_overrides_take_precedence(tmp_path):
    p = tmp_path / "run.toml"
    p.write_text('[field]\nb0 = "5 G"\n')
    rc = config.load(p, ['field.b0="7 G"', "numerics.seed=4", "nd.diamagnetic=true"])
    assert rc["field.b0"] == pytest.approx(7e-4)
    assert rc["numerics.seed"] == 4
    assert rc["nd.diamagnetic"] is True


def test_bare_override_is_string():
    assert config.parse_override("field.b0=10 G") == ("field", "b0", "10 G")


def test_resolved_roundtrip():
    rc = config.build(overrides=['field.b0="3 G"', 'field.ramp="quadratic"', "sequence.symmetric=true"])
    again = config.build(rc.resolved())
    assert again.values == rc.values


def test_quadratic_ramp_builds_ramped_field():
    rc = config.build(overrides=['field.ramp="quadratic"'])
    assert rc.field_config.ramp.mode == "quadratic"


def test_symmetric_sequence():
    rc = config.build(overrides=["sequence.symmetric=true"])
    assert [s.spin for s in rc.sequence.arm2] == [1, -1, 1]


def test_with_values():
    rc = config.build()
    rc2 = rc.with_values(field__b0=2e-3)
    assert rc2["field.b0"] == 2e-3
    assert rc["field.b0"] == pytest.approx(1e-3)


@pytest.mark.parametrize(
    "data, overrides, match",
    [
        ({"bogus": {}}, [], "unknown section"),
        ({"field": {"b00": "1 G"}}, [], "field.b00"),
        ({"field": {"b0": "1 nm"}}, [], "field.b0"),
        ({"field": {"ramp": "cubic"}}, [], "field.ramp"),
        ({"sequence": {"arm1": [0, 2, 0]}}, [], "sequence.arm1"),
        ({"nd": {"diamagnetic": "yes"}}, [], "nd.diamagnetic"),
        ({"numerics": {"steps_per_pulse": 1.5}}, [], "numerics.steps_per_pulse"),
        ({"numerics": {"steps_per_pulse": 0}}, [], "numerics.steps_per_pulse"),
        ({"nd": {"nv_distance": "30 nm"}}, [], "nv_distance"),
        ({"field": 3}, [], "must be a table"),
        ({}, ["b0=1"], "section.key=value"),
        ({}, ["field.nope=1"], "field.nope"),
    ],
)
def test_errors_name_the_field(data, overrides, match):
    with pytest.raises(ConfigError, match=match):
        config.build(data, overrides)


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        config.load(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("[field\nb0 = 1\n")
    with pytest.raises(ConfigError, match="line 1"):
        config.load(bad)
