import math

import numpy as np
import pytest

from paramgeom import analysis
from paramgeom.analysis import (MAXIMUM, MINIMUM, FitResult, SweepResult, curvature_crossing,
                                find_peaks, fit, power_zero, slope_at_critical, sweep)
from paramgeom.errors import CriticalPoint, NoBracket, SingularFit


def test_sweep_records_failures_as_absent():
    def point(x):
        if x == 1.0:
            raise CriticalPoint("x")
        return {"a": x * x}
    s = sweep(point, [0.0, 1.0, 2.0], "x", ("a", "b"))
    assert s.values["a"] == [0.0, None, 4.0]
    assert s.values["b"] == [None, None, None]
    assert np.isnan(s.column("a")[1])


def test_sweep_empty_and_unsorted():
    s = sweep(lambda x: {"a": x}, [], "x", ("a",))
    assert s.grid == [] and list(s.rows()) == []
    with pytest.raises(ValueError):
        SweepResult("x", [1.0, 0.0], {"a": [1, 2]})


def test_dicke_sweep_diverges_near_critical():
    s = analysis.dicke_sweep(np.arange(0.40, 0.446, 0.005), curvature=False)
    g = s.column("g11_cl")
    assert np.all(np.diff(g) > 0) and g[-1] > 10 * g[0]
    assert set(s.values["phase"]) == {"normal"}


def test_lmg_thermo_sweep_symmetric_has_no_curvature():
    s = analysis.lmg_thermo_sweep([0.5, 1.0, 1.5], -0.5, 100)
    assert s.values["R_q"][0] == pytest.approx(-4.0247487373415289)
    assert s.values["R_q"][1] is None and s.values["phase"][1] is None
    assert s.values["R_q"][2] is None and s.values["det_q"][2] == 0


def test_find_peaks_parabola():
    xs = np.linspace(0, 4, 41)
    s = SweepResult("h", list(xs), {"y": list(-(xs - 2) ** 2)})
    (p,) = find_peaks(s, "y")
    assert p.kind == MAXIMUM and p.location == pytest.approx(2.0) and p.height == pytest.approx(0.0)
    assert find_peaks(SweepResult("h", list(xs), {"y": list(xs)}), "y") == []


def test_find_peaks_polish_and_idempotence():
    f = lambda x: math.cos(3 * x)
    xs = np.linspace(0.1, 2.9, 15)
    s = SweepResult("x", list(xs), {"y": [f(x) for x in xs]})
    peaks = find_peaks(s, "y", f, tol=1e-9)
    assert [p.kind for p in peaks] == [MINIMUM, MAXIMUM]
    assert peaks[0].location == pytest.approx(math.pi / 3, abs=1e-7)
    loc, _ = analysis.polish_extremum(f, peaks[1].location - 0.05, peaks[1].location + 0.05, MAXIMUM, 1e-9)
    assert abs(loc - peaks[1].location) < 1e-7


def test_fit_loglin_exact():
    j = np.array([12, 50, 100, 500.0])
    f = fit("LOGLIN", j, j**1.5 * math.e**2)
    assert f.coefficients[0] == pytest.approx(1.5, abs=1e-12)
    assert f.coefficients[1] == pytest.approx(2.0, abs=1e-12)


def test_fit_lin_and_singular():
    j = np.array([1.0, 2.0, 5.0, 9.0])
    f = fit("LIN", j, -34.2 - 0.65 * j)
    np.testing.assert_allclose(f.coefficients, [-34.2, -0.65], atol=1e-12)
    with pytest.raises(SingularFit):
        fit("LIN", [3.0], [1.0])
    with pytest.raises(SingularFit):
        fit("LIN", [3.0, 3.0, 3.0], [1.0, 2.0, 3.0])
    with pytest.raises(SingularFit):
        slope_at_critical([12], -0.5, slopes=[-30.0])
    assert slope_at_critical([1, 2, 3], -0.5, slopes=[1.0, 3.0, 5.0]).coefficients[1] == pytest.approx(2.0)


def test_fit_power_recovers_coefficients():
    j = np.array(analysis.DEFAULT_J_SET, dtype=float)
    y = -4.645 - 3.882 * j**-0.812
    f = fit("POWER", j, y)
    np.testing.assert_allclose(f.coefficients, [-4.645, -3.882, 0.812], rtol=1e-6)
    assert f.limit() == pytest.approx(-4.645, rel=1e-6)


def test_fit_rat1_and_fixed_pole_models():
    h = np.linspace(0.6, 0.95, 8)
    f = fit("RAT1", h, -4.6 + 0.3 / (h - 1.02))
    np.testing.assert_allclose(f.coefficients, [-4.6, 0.3, 1.02], rtol=1e-6)
    g = fit("RAT2F", h, 1.5 + 0.2 / (h - 1) ** 2)
    np.testing.assert_allclose(g.coefficients, [1.5, 0.2], rtol=1e-10)
    q = fit("POLY2", h, 1 + 2 * h + 3 * h * h)
    np.testing.assert_allclose(q.coefficients, [1, 2, 3], rtol=1e-10)
    with pytest.raises(ValueError):
        fit("NOPE", h, h)


def test_fit_deterministic():
    j = np.array(analysis.DEFAULT_J_SET, dtype=float)
    y = 0.3 - 2 * j**-0.7 + 1e-3 * np.sin(j)
    assert fit("POWER", j, y) == fit("POWER", j, y)


def test_power_zero_and_crossing():
    f = FitResult("POWER", (-0.365, 3.4, 0.7), 0.0)
    z = power_zero(f)
    assert f(z) == pytest.approx(0.0, abs=1e-12)
    j = np.array([12, 16, 20, 30, 40, 60, 100.0])
    assert curvature_crossing(j, -0.365 + 3.4 * j**-0.7) == pytest.approx(z, rel=1e-6)
    with pytest.raises(NoBracket):
        curvature_crossing(j, 1.0 + j**-0.5)


def test_g11_peak_approaches_transition():
    locs = []
    for j in (50, 100):
        (p,) = [q for q in find_peaks(analysis.lmg_exact_sweep(np.linspace(0.8, 1.2, 81), -0.5, j, False), "g11")
                if q.kind == MAXIMUM]
        locs.append(p.location)
    assert locs[0] < locs[1] < 1.0


def test_curvature_precursor_shape_j100():
    rec = analysis.lmg_peak_record(100, -0.5)
    r1, r2 = rec.peaks["R_1"], rec.peaks["R_2"]
    assert r1.kind == MINIMUM and r2.kind == MAXIMUM and r1.location < r2.location
    assert r1.height < -4 < r2.height
    assert rec.peaks["g12_1"].height < 0 < rec.peaks["g12_2"].height


def test_mesh_precursors():
    # the h spacing has to resolve the precursor width j^(-2/3) ~ 0.046
    hs = np.round(np.arange(0.80, 1.0001, 0.002), 10)
    gs = np.linspace(-0.52, -0.48, 5)
    metrics, curv = analysis.lmg_mesh(100, hs, gs)
    assert len(metrics) == len(hs) and len(metrics[0]) == 5
    inner = list(hs[2:-2])
    col = SweepResult("h", inner, {"R": [curv[i][2].R for i in range(2, len(hs) - 2)]})
    kinds = [p.kind for p in find_peaks(col, "R")]
    assert kinds == [MINIMUM, MAXIMUM]
    k = int(np.argmin(np.abs(hs - 0.9)))
    assert curv[k][2].R == pytest.approx(analysis.exact_curvature(100, hs[k], -0.5), rel=1e-2)


def test_small_peak_study_structure():
    st = analysis.peak_study(-0.5, (12, 16, 20, 24), slopes=False)
    d = st.to_dict()
    assert set(d["table"]) == {"g11", "g12_1", "g12_2", "g22_1", "g22_2", "g22_3"}
    assert d["fits_in_j"]["R_1"]["model"] == "POWER"
    assert d["slopes"] is None
    j, loc, hgt = st.series("g11")
    assert list(j) == [12, 16, 20, 24] and np.all(np.diff(hgt) > 0)
    with pytest.raises(SingularFit):
        analysis.peak_study(-0.5, (50,), slopes=False)


def test_critical_slope_settles():
    s = analysis.critical_slope(12, -0.5)
    assert -40 < s < -10
