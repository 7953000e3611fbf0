import numpy as np
import pytest

from paramgeom import dicke, torus
from paramgeom.dicke import ActionAssignment, DickeParams
from paramgeom.errors import DcLeakage, IllConditionedProjection, WrongPhase
from paramgeom.torus import (CorrelatorSeries, TorusSample, connected_correlator, harmonic_dictionary,
                             regularized_metric, torus_metric, torus_metric_matrix)

P = DickeParams(1.0, 0.8, 0.3)


def _series(freq, c):
    freqs = np.array([0.0, freq])
    return CorrelatorSeries(freqs, np.array([0.0, c]), np.zeros(2), ("dc", "2e1"))


def test_single_harmonic_regularization():
    s = _series(2.0, 3.0)
    g = regularized_metric({(0, 0): s, (0, 1): s, (1, 1): s})
    assert g.g11 == pytest.approx(3.0 / 4.0)


def test_dc_leakage():
    s = CorrelatorSeries(np.array([0.0, 1.0]), np.array([1.0, 1.0]), np.zeros(2), ("dc", "2e1"))
    with pytest.raises(DcLeakage):
        regularized_metric({(0, 0): s, (0, 1): s, (1, 1): s})


def test_pipeline_matches_closed_form():
    got = torus_metric(P)
    ref = dicke.classical_metric(P)
    np.testing.assert_allclose(got.components(), ref.components(), rtol=1e-6)


def test_pipeline_superradiant():
    p = DickeParams(1.0, 0.8, 0.7)
    np.testing.assert_allclose(torus_metric(p).components(), dicke.classical_metric(p).components(), rtol=1e-6)


def test_symmetry_from_independent_pipelines():
    m = torus_metric_matrix(P)
    assert abs(m[0, 1] - m[1, 0]) < 1e-9 * np.linalg.norm(m)


def test_series_is_clean():
    for i, j in ((0, 0), (0, 1), (1, 1)):
        s = connected_correlator(P, i=i, j=j)
        assert s.residual < 1e-8
        assert np.max(np.abs(s.sin_coeffs)) < 1e-8 * max(np.max(np.abs(s.cos_coeffs)), 1e-300)


def test_decoupled_lambda_series_only_mixed_harmonics():
    s = connected_correlator(DickeParams(1.0, 0.8, 0.0), i=1, j=1)
    peak = np.max(np.abs(s.cos_coeffs))
    for lab, c in zip(s.labels, s.cos_coeffs):
        if lab in ("sum", "diff"):
            assert abs(c) > 1e-3 * peak
        else:
            assert abs(c) < 1e-10 * peak


def test_quadrature_convergence():
    a = torus_metric(P, n_angles=128).components()
    b = torus_metric(P, n_angles=256).components()
    np.testing.assert_allclose(a, b, rtol=1e-9)


def test_action_scaling():
    a = ActionAssignment.classical(0.5, 0.5)
    b = ActionAssignment.classical(1.0, 1.0)
    ga, gb = torus_metric(P, actions=a), torus_metric(P, actions=b)
    np.testing.assert_allclose(gb.components(), 4 * np.array(ga.components()), rtol=1e-6)
    np.testing.assert_allclose(ga.components(), dicke.classical_metric(P, actions=a).components(), rtol=1e-6)


def test_ill_conditioned_projection():
    with pytest.raises(IllConditionedProjection):
        connected_correlator(P, T_samples=np.linspace(0, 1e-3, 40))


def test_bad_inputs():
    with pytest.raises(ValueError):
        connected_correlator(P, n_angles=16)
    with pytest.raises(WrongPhase):
        connected_correlator(P, phase=dicke.SUPERRADIANT)
    with pytest.raises(ValueError):
        TorusSample(7.0, 0.0, 0.5, 0.5)


def test_harmonic_dictionary():
    f, labels = harmonic_dictionary((0.8, 1.0))
    np.testing.assert_allclose(f, [0, 1.6, 2.0, 1.8, 0.2])
    assert labels[0] == "dc"


def test_wrong_sign_breaks_agreement():
    got = torus_metric(P, sign=-1.0)
    assert got.g11 < 0
