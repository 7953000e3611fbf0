import math

import numpy as np
import pytest
from scipy.optimize import approx_fprime

from paramgeom import lmg
from paramgeom.errors import CriticalPoint, WrongPhase
from paramgeom.geometry import ParameterPoint, scalar_curvature_fd
from paramgeom.lmg import (BROKEN, MAXIMUM, MINIMUM, SADDLE, SYMMETRIC, LmgActions, LmgParams,
                           broken_curvature, broken_determinant, broken_metrics, energy_surface,
                           fixed_points, ground_energy, symmetric_metrics)


def test_params_validation():
    with pytest.raises(ValueError):
        LmgParams(-0.1, 0.0)
    with pytest.raises(ValueError):
        LmgParams(0.5, 1.0)
    with pytest.raises(CriticalPoint):
        LmgParams(1.0, 0.0).phase
    assert LmgParams(1.3, 0.1).phase == SYMMETRIC
    assert LmgParams(0.3, 0.1).phase == BROKEN


def test_energy_surface_examples():
    assert energy_surface(LmgParams(2, 0, 1), 0.0, 0.0) == -4
    assert energy_surface(LmgParams(0.5, 0, 1), math.acos(0.5), 0.0) == pytest.approx(-1.25)
    for g in (-0.5, 0.3):
        assert energy_surface(LmgParams(0.7, g, 3), math.pi / 2, math.pi / 2) == pytest.approx(-3 * g)


def test_canonical_chart_matches_sphere():
    p = LmgParams(0.7, -0.4, 5.0)
    rng = np.random.default_rng(0)
    for _ in range(20):
        th, ph = rng.uniform(0, math.pi), rng.uniform(0, 2 * math.pi)
        r = 2 * math.sqrt(p.j) * math.sin(th / 2)
        Q, P = r * math.cos(ph), r * math.sin(ph)
        assert lmg.classical_hamiltonian(p, Q, P) == pytest.approx(energy_surface(p, th, ph), abs=1e-12)


def test_rotated_chart_minimum():
    p = LmgParams(0.4, -0.3, 2.0)
    assert lmg.rotated_hamiltonian(p, 0.0, 0.0) == pytest.approx(ground_energy(p))
    grad = approx_fprime([0.0, 0.0], lambda x: lmg.rotated_hamiltonian(p, x[0], x[1]), 1e-7)
    assert np.allclose(grad, 0, atol=1e-5)
    assert np.isnan(lmg.rotated_hamiltonian(p, 3.0, 0.0))
    with pytest.raises(WrongPhase):
        lmg.rotated_hamiltonian(LmgParams(1.5, 0.0), 0.0, 0.0)


def _hessian_kind(p, th, ph, h=1e-4):
    """Classify a stationary point numerically on the sphere (not valid at poles)."""
    f = lambda a, b: energy_surface(p, a, b)
    H = np.array([[(f(th + h, ph) - 2 * f(th, ph) + f(th - h, ph)) / h**2,
                   (f(th + h, ph + h) - f(th + h, ph - h) - f(th - h, ph + h) + f(th - h, ph - h)) / (4 * h * h)],
                  [0, (f(th, ph + h) - 2 * f(th, ph) + f(th, ph - h)) / h**2]])
    H[1, 0] = H[0, 1]
    ev = np.linalg.eigvalsh(H)
    return MINIMUM if ev.min() > 0 else MAXIMUM if ev.max() < 0 else SADDLE


def test_fixed_points_symmetric():
    pts = fixed_points(LmgParams(1.3, 0.1, 1.0))
    mins = [q for q in pts if q.kind == MINIMUM]
    assert len(mins) == 1 and mins[0].theta0 == 0.0
    assert mins[0].energy == pytest.approx(-2.6)


def test_fixed_points_broken():
    p = LmgParams(0.3, 0.1, 1.0)
    pts = fixed_points(p)
    mins = [q for q in pts if q.kind == MINIMUM]
    assert len(mins) == 2
    assert {q.phi0 for q in mins} == {0.0, math.pi}
    assert all(q.theta0 == pytest.approx(math.acos(0.3)) and q.energy == pytest.approx(-1.09) for q in mins)
    # the north pole is stationary but a saddle here, not a maximum
    north = [q for q in pts if q.theta0 == 0.0][0]
    assert north.kind == SADDLE
    for q in pts:
        if 0 < q.theta0 < math.pi:
            assert _hessian_kind(p, q.theta0, q.phi0) == q.kind
            grad = approx_fprime([q.theta0, q.phi0], lambda x: energy_surface(p, x[0], x[1]), 1e-8)
            assert np.allclose(grad, 0, atol=1e-6)


def test_fixed_points_h_zero():
    mins = [q for q in fixed_points(LmgParams(0.0, 0.0)) if q.kind == MINIMUM]
    assert mins and all(q.theta0 == pytest.approx(math.pi / 2) for q in mins)


def test_ground_energy():
    assert ground_energy(LmgParams(0.5, 0.0)) == pytest.approx(-1.25)
    assert ground_energy(LmgParams(1 - 1e-12, 0.0)) == pytest.approx(-2.0)
    assert ground_energy(LmgParams(1 + 1e-12, 0.0)) == pytest.approx(-2.0)
    d2 = lambda h, e=1e-4: (ground_energy(LmgParams(h + e, 0, 2)) - 2 * ground_energy(LmgParams(h, 0, 2))
                            + ground_energy(LmgParams(h - e, 0, 2))) / e**2
    assert d2(0.99) == pytest.approx(-4.0, rel=1e-6)
    assert abs(d2(1.01)) < 1e-6


def test_symmetric_metrics():
    cl, q = symmetric_metrics(LmgParams(2, 0))
    np.testing.assert_allclose(q.components(), [1 / 128] * 3, rtol=1e-14)
    assert cl == q
    for h in (1.1, 1.7, 3.0):
        q = symmetric_metrics(LmgParams(h, -0.5))[1]
        assert abs(q.det) <= 1e-15 * q.g11 * q.g22
    near = [symmetric_metrics(LmgParams(1 + d, -0.5))[1] for d in (1e-2, 1e-4)]
    assert near[1].g11 > 1e3 * near[0].g11 and near[1].g12 > 10 * near[0].g12
    assert near[1].g22 == pytest.approx(1 / (32 * 1.5**2), rel=1e-3)
    with pytest.raises(WrongPhase):
        symmetric_metrics(LmgParams(0.5, 0))


def test_broken_metrics():
    cl, q = broken_metrics(LmgParams(0, 0, 1))
    assert q.components() == (0.5, 0.0, 1 / 32)
    assert cl == q
    cl, _ = broken_metrics(LmgParams(0.5, -0.5, 1), LmgActions.classical(2.0))
    assert cl.g22 == pytest.approx(4 / (32 * 1.5**2))
    with pytest.raises(WrongPhase):
        broken_metrics(LmgParams(1.5, 0))


def test_broken_determinant():
    for h, g, j in ((0.0, 0.0, 1.0), (0.5, -0.5, 100.0), (0.9, 0.6, 7.0)):
        p = LmgParams(h, g, j)
        assert broken_determinant(p) == pytest.approx(j / (64 * math.sqrt((1 - h * h) * (1 - g) ** 5)), rel=1e-14)
        assert broken_metrics(p)[1].det == pytest.approx(broken_determinant(p), rel=1e-12)
    cl = broken_metrics(LmgParams(0.5, -0.5, 3.0), LmgActions(0.3, 0.2))[0]
    assert cl.det == pytest.approx(broken_determinant(LmgParams(0.5, -0.5, 3.0), LmgActions(0.3, 0.2)), rel=1e-12)


def test_broken_curvature():
    assert broken_curvature(LmgParams(0, 0, 1)) == pytest.approx(-8.0)
    assert broken_curvature(LmgParams(0, 0, 1e9)) == pytest.approx(-4.0, abs=1e-8)
    R = [abs(broken_curvature(LmgParams(1 - d, -0.5, 1))) for d in (1e-2, 1e-4, 1e-8)]
    assert R[0] < R[1] < R[2] and R[2] > 1e3


@pytest.mark.parametrize("h,g,j", [(0.2, -0.7, 1.0), (0.6, 0.3, 1.0), (0.8, -0.1, 100.0)])
def test_broken_curvature_against_fd(h, g, j):
    f = lmg.metric_field(j, dps=40)
    R = scalar_curvature_fd(f, ParameterPoint(h, g), 1e-8).R
    assert float(R) == pytest.approx(broken_curvature(LmgParams(h, g, j)), rel=1e-10)


def test_symmetric_field_is_degenerate():
    from paramgeom.errors import DegenerateMetric
    f = lmg.metric_field(1.0, phase=SYMMETRIC)
    with pytest.raises(DegenerateMetric):
        scalar_curvature_fd(f, ParameterPoint(1.5, 0.0), 1e-3)
