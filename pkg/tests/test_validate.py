from sgisim import geometry, validate


def test_quick_suite_passes():
    results = validate.run_all(quick=True)
    assert len(results) == 7
    assert all(r.passed for r in results), [r.line() for r in results if not r.passed]


def test_torque_oracle_catches_sign_flip(monkeypatch):
    orig = geometry.dbpar_dtheta
    monkeypatch.setattr(geometry, "dbpar_dtheta", lambda *a, **k: -orig(*a, **k))
    r = validate.torque_oracle(20)
    assert not r.passed


def test_result_line_format():
    r = validate.OracleResult("x", 1e-9, 1e-6, "note")
    assert r.passed and r.line().startswith("PASS")
    assert not validate.OracleResult("x", float("nan"), 1.0).passed
