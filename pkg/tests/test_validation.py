import pytest

from paramgeom import validation


@pytest.mark.parametrize("name", ["geometry", "resonance", "determinants", "lmg-curvature", "fidelity"])
def test_quick_checks_pass(name):
    r = validation.run_checks([name])[0]
    assert r.passed, r.detail
    assert r.to_dict()["name"] == name


def test_unknown_check():
    with pytest.raises(KeyError):
        validation.run_checks(["nope"])


def test_overrides_reach_the_check():
    (r,) = validation.run_checks(["anomaly"], anomaly={"n": 3, "tol": 0.0})
    assert r.detail["points"] == 6 and not r.passed


def test_exceptions_become_failures():
    (r,) = validation.run_checks(["fidelity"], fidelity={"delta": 0.5})
    assert not r.passed and "error" in r.detail


def test_random_points_respect_phase_and_resonance_gap():
    for phase in ("normal", "superradiant"):
        for p in validation.random_dicke_points(50, phase, seed=3):
            assert p.phase == phase and abs(p.omega - 1) >= 0.05
