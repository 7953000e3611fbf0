import math

import mpmath
import numpy as np
import pytest

from paramgeom.errors import DegenerateMetric, DomainViolation, GridTooSmall
from paramgeom.geometry import (MetricDerivatives, MetricField, MetricTensor2D, ParameterPoint,
                                curvature_from_mesh, determinant, scalar_curvature_closed,
                                scalar_curvature_fd, stencil_offsets)
from paramgeom import lmg
from paramgeom.validation import (FLAT_POLAR, HYPERBOLIC, SPHERE, flat_derivatives,
                                  hyperbolic_derivatives, sphere_derivatives)


def test_determinant_examples():
    assert determinant(MetricTensor2D(1, 0, 1)) == 1
    assert determinant(MetricTensor2D(1 / 128, 1 / 128, 1 / 128)) == 0
    assert determinant(MetricTensor2D(0.5, 0, 1 / 32)) == pytest.approx(1 / 64, abs=0)


def test_tensor_helpers():
    g = MetricTensor2D(2.0, 1.0, 3.0)
    assert g.det == 5.0
    assert g.trace == 5.0
    np.testing.assert_array_equal(g.as_array(), [[2, 1], [1, 3]])
    assert g.is_psd()
    assert not MetricTensor2D(1.0, 2.0, 1.0).is_psd()
    assert (g - g).components() == (0.0, 0.0, 0.0)
    assert MetricTensor2D.outer((1.0, 2.0)).components() == (1.0, 2.0, 4.0)


def test_closed_flat_sphere_hyperbolic():
    assert scalar_curvature_closed(flat_derivatives()).R == 0.0
    for th in (0.3, 1.0, 2.5):
        assert scalar_curvature_closed(sphere_derivatives(th)).R == pytest.approx(2.0, abs=1e-12)
    for y in (0.5, 1.0, 3.0):
        assert scalar_curvature_closed(hyperbolic_derivatives(y)).R == pytest.approx(-2.0, abs=1e-12)


def test_closed_sinh_hyperbolic():
    x = 0.7
    s, c = math.sinh(x), math.cosh(x)
    Z = MetricTensor2D(0.0, 0.0, 0.0)
    d = MetricDerivatives(MetricTensor2D(1.0, 0.0, s * s), MetricTensor2D(0, 0, 2 * s * c), Z,
                          MetricTensor2D(0, 0, 2 * (c * c + s * s)), Z, Z)
    assert scalar_curvature_closed(d).R == pytest.approx(-2.0, abs=1e-12)


def test_closed_lmg_broken_origin():
    # R at h = gamma = 0, j = 1 by the closed form and by finite differences
    assert lmg.broken_curvature(lmg.LmgParams(0.0, 0.0, 1.0)) == pytest.approx(-8.0)
    f = lmg.metric_field(1.0, dps=40)
    R = scalar_curvature_fd(f, ParameterPoint(0.3, 0.0), step=1e-6).R
    assert R == pytest.approx(lmg.broken_curvature(lmg.LmgParams(0.3, 0.0, 1.0)), rel=1e-10)


def test_degenerate_metric_raises():
    Z = MetricTensor2D(0.0, 0.0, 0.0)
    g = MetricTensor2D(1 / 128, 1 / 128, 1 / 128)
    with pytest.raises(DegenerateMetric):
        scalar_curvature_closed(MetricDerivatives(g, Z, Z, Z, Z, Z))


def test_fd_flat_and_sphere():
    flat = MetricField(lambda p: MetricTensor2D(1.0, 0.0, 1.0))
    assert abs(scalar_curvature_fd(flat, ParameterPoint(0.2, -3.0), 1e-3).R) < 1e-10
    assert scalar_curvature_fd(SPHERE, ParameterPoint(1.0, 0.0), 1e-4).R == pytest.approx(2.0, abs=1e-6)
    assert scalar_curvature_fd(HYPERBOLIC, ParameterPoint(0.0, 1.3), 1e-4).R == pytest.approx(-2.0, abs=1e-6)
    assert abs(scalar_curvature_fd(FLAT_POLAR, ParameterPoint(1.2, 0.4), 1e-3).R) < 1e-8


def test_fd_lmg_broken_matches_closed_form():
    f = lmg.metric_field(100.0)
    p = ParameterPoint(0.5, -0.5)
    R = scalar_curvature_fd(f, p, 1e-3).R
    assert R == pytest.approx(lmg.broken_curvature(lmg.LmgParams(0.5, -0.5, 100.0)), rel=1e-5)


def test_fd_domain_violation():
    f = lmg.metric_field(1.0)
    with pytest.raises(DomainViolation):
        scalar_curvature_fd(f, ParameterPoint(0.9999, 0.0), 1e-3)


def test_fd_fourth_order_convergence():
    p = ParameterPoint(1.0, 0.0)
    e1 = abs(scalar_curvature_fd(SPHERE, p, 0.02).R - 2.0)
    e2 = abs(scalar_curvature_fd(SPHERE, p, 0.01).R - 2.0)
    assert 12.0 < e1 / e2 < 20.0


def test_fd_refine_improves():
    p = ParameterPoint(1.0, 0.0)
    plain = abs(scalar_curvature_fd(SPHERE, p, 0.05).R - 2.0)
    refined = abs(scalar_curvature_fd(SPHERE, p, 0.05, refine=True).R - 2.0)
    assert refined < plain / 10


def test_fd_in_mpmath_precision():
    f = MetricField(lambda p: MetricTensor2D(1, 0, mpmath.sin(p.x1) ** 2), dps=40)
    R = scalar_curvature_fd(f, ParameterPoint(1.0, 0.0), 1e-8).R
    assert abs(R - 2) < 1e-12


def test_stencil_is_symmetric():
    offs = set(stencil_offsets())
    assert (0, 0) in offs
    assert all((-a, -b) in offs for a, b in offs)


def test_mesh_identity_and_sphere():
    ident = [[MetricTensor2D(1.0, 0.0, 1.0)] * 7 for _ in range(7)]
    out = curvature_from_mesh(ident, (0.1, 0.1))
    assert out[0][0] is None and out[6][6] is None
    assert all(out[i][k].R == 0.0 for i in range(2, 5) for k in range(2, 5))

    h = 0.02
    xs = 1.0 + h * np.arange(-4, 5)
    grid = [[MetricTensor2D(1.0, 0.0, math.sin(x) ** 2) for _ in range(9)] for x in xs]
    out = curvature_from_mesh(grid, (h, h))
    assert out[4][4].R == pytest.approx(2.0, abs=1e-6)


def test_mesh_missing_samples_and_too_small():
    grid = [[MetricTensor2D(1.0, 0.0, 1.0)] * 7 for _ in range(7)]
    grid[3][3] = None
    out = curvature_from_mesh(grid, (0.1, 0.1))
    assert out[3][3] is None and out[2][2] is None
    with pytest.raises(GridTooSmall):
        curvature_from_mesh([[MetricTensor2D(1, 0, 1)] * 4] * 4, (0.1, 0.1))


def test_parameter_point_rejects_nan():
    with pytest.raises(ValueError):
        ParameterPoint(float("nan"), 0.0)
