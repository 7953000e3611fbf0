"""Two-parameter metrics and their scalar curvature.

The curvature is evaluated from the Brioschi-type expression

    R = (A + B) / sqrt(g)
    A = d/dx1 [ (g12/g11 * d2 g11 - d1 g22) / sqrt(g) ]
    B = d/dx2 [ (2 d1 g12 - d2 g11 - g12/g11 * d1 g11) / sqrt(g) ]

with the contraction R = g^{ij} R^k_{ikj}, so the unit sphere has R = +2.
The outer derivatives are expanded by the product rule, which means only
first and second partials of the three metric components are needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import mpmath
import numpy as np

from .errors import DegenerateMetric, DomainViolation, GridTooSmall

DET_RTOL = 1e-12


@dataclass(frozen=True)
class ParameterPoint:
    x1: float
    x2: float

    def __post_init__(self):
        if not (math.isfinite(self.x1) and math.isfinite(self.x2)):
            raise ValueError(f"non-finite parameter point ({self.x1}, {self.x2})")

    def shifted(self, d1: float = 0.0, d2: float = 0.0) -> "ParameterPoint":
        return ParameterPoint(self.x1 + d1, self.x2 + d2)


@dataclass(frozen=True)
class MetricTensor2D:
    """Symmetric 2x2 tensor stored as (g11, g12, g22).

    Also used to carry component-wise partial derivatives of a metric,
    in which case positivity obviously does not apply.
    """

    g11: float
    g12: float
    g22: float

    @property
    def det(self) -> float:
        return determinant(self)

    @property
    def trace(self) -> float:
        return self.g11 + self.g22

    def as_array(self) -> np.ndarray:
        return np.array([[self.g11, self.g12], [self.g12, self.g22]])

    def eigvals(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.as_array())

    def is_psd(self, rtol: float = 1e-10) -> bool:
        return bool(self.eigvals()[0] >= -rtol * abs(self.trace))

    def components(self) -> tuple[float, float, float]:
        return (self.g11, self.g12, self.g22)

    def __sub__(self, other: "MetricTensor2D") -> "MetricTensor2D":
        return MetricTensor2D(self.g11 - other.g11, self.g12 - other.g12, self.g22 - other.g22)

    def __add__(self, other: "MetricTensor2D") -> "MetricTensor2D":
        return MetricTensor2D(self.g11 + other.g11, self.g12 + other.g12, self.g22 + other.g22)

    def scaled(self, c: float) -> "MetricTensor2D":
        return MetricTensor2D(c * self.g11, c * self.g12, c * self.g22)

    @classmethod
    def outer(cls, u, v=None) -> "MetricTensor2D":
        """Symmetrised outer product of two gradients (u_i v_j + u_j v_i)/2."""
        if v is None:
            v = u
        return cls(u[0] * v[0], 0.5 * (u[0] * v[1] + u[1] * v[0]), u[1] * v[1])


ZERO = MetricTensor2D(0.0, 0.0, 0.0)


def determinant(g: MetricTensor2D) -> float:
    return g.g11 * g.g22 - g.g12 * g.g12


class MetricField:
    """A metric-valued function of a ParameterPoint with a validity domain."""

    def __init__(
        self,
        evaluator: Callable[[ParameterPoint], MetricTensor2D],
        domain: Optional[Callable[[ParameterPoint], bool]] = None,
        name: str = "",
        dps: Optional[int] = None,
    ):
        self.evaluator = evaluator
        self.domain = domain if domain is not None else (lambda p: True)
        self.name = name
        # working precision (decimal digits) for fields evaluated with mpmath
        self.dps = dps

    def __call__(self, p: ParameterPoint) -> MetricTensor2D:
        if not self.domain(p):
            raise DomainViolation(f"{self.name or 'field'}: point {p} outside domain")
        return self.evaluator(p)

    def contains(self, p: ParameterPoint) -> bool:
        return bool(self.domain(p))


@dataclass(frozen=True)
class MetricDerivatives:
    """Metric at a point with the partials the curvature formula consumes.

    d1, d2 hold d/dx1 and d/dx2 of (g11, g12, g22); d11, d12, d22 hold the
    second partials d^2/dx1^2, d^2/dx1dx2 and d^2/dx2^2 of the same triple.
    """

    g: MetricTensor2D
    d1: MetricTensor2D
    d2: MetricTensor2D
    d11: MetricTensor2D
    d12: MetricTensor2D
    d22: MetricTensor2D

    def swapped(self) -> "MetricDerivatives":
        """Same geometry with x1 and x2 relabelled."""

        def sw(t: MetricTensor2D) -> MetricTensor2D:
            return MetricTensor2D(t.g22, t.g12, t.g11)

        return MetricDerivatives(sw(self.g), sw(self.d2), sw(self.d1), sw(self.d22), sw(self.d12), sw(self.d11))


@dataclass(frozen=True)
class CurvatureResult:
    R: float
    method: str  # "closed-form" | "finite-difference"
    step: float = 0.0


def degeneracy_threshold(g: MetricTensor2D, rtol: float = DET_RTOL) -> float:
    return rtol * (g.g11 + g.g22) ** 2


def _curvature_expr(g11, g12, g22, d1, d2, d11, d12, d22):
    """Expanded curvature formula; all arguments may be numpy arrays.

    d1..d22 are (c11, c12, c22) triples of derivative values.
    """
    a1_11, a1_12, a1_22 = d1
    a2_11, a2_12, a2_22 = d2
    det = g11 * g22 - g12 * g12
    det1 = a1_11 * g22 + g11 * a1_22 - 2.0 * g12 * a1_12
    det2 = a2_11 * g22 + g11 * a2_22 - 2.0 * g12 * a2_12
    sq = det**0.5
    inv_sq = 1.0 / sq
    # d_k(det^{-1/2}) = -det_k / (2 det^{3/2})
    dinv1 = -0.5 * det1 / (det * sq)
    dinv2 = -0.5 * det2 / (det * sq)

    ratio = g12 / g11
    ratio1 = (a1_12 * g11 - g12 * a1_11) / (g11 * g11)
    ratio2 = (a2_12 * g11 - g12 * a2_11) / (g11 * g11)

    u = ratio * a2_11 - a1_22
    du1 = ratio1 * a2_11 + ratio * d12[0] - d11[2]
    v = 2.0 * a1_12 - a2_11 - ratio * a1_11
    dv2 = 2.0 * d12[1] - d22[0] - ratio2 * a1_11 - ratio * d12[0]

    A = dinv1 * u + inv_sq * du1
    B = dinv2 * v + inv_sq * dv2
    return (A + B) * inv_sq


def scalar_curvature_closed(d: MetricDerivatives, det_rtol: float = DET_RTOL) -> CurvatureResult:
    g = d.g
    det = determinant(g)
    if not det > degeneracy_threshold(g, det_rtol):
        raise DegenerateMetric(f"metric determinant {det:.3e} below threshold at {g}")
    R = _curvature_expr(
        g.g11, g.g12, g.g22,
        d.d1.components(), d.d2.components(),
        d.d11.components(), d.d12.components(), d.d22.components(),
    )
    R = float(R)
    if not math.isfinite(R):
        raise DegenerateMetric(f"non-finite curvature at {g}")
    return CurvatureResult(R, "closed-form", 0.0)


# 5-point central weights: first derivative (÷12h) and second derivative (÷12h^2)
_W1 = {-2: 1.0, -1: -8.0, 1: 8.0, 2: -1.0}
_W2 = {-2: -1.0, -1: 16.0, 0: -30.0, 1: 16.0, 2: -1.0}


def stencil_offsets() -> list[tuple[int, int]]:
    """Grid offsets (in units of the step) touched by the curvature stencil."""
    offs = [(0, 0)]
    for k in (-2, -1, 1, 2):
        offs += [(k, 0), (0, k)]
    for k in (1, 2):
        offs += [(k, k), (k, -k), (-k, k), (-k, -k)]
    return offs


def _cross(at, k):
    return at(k, k) - at(k, -k) - at(-k, k) + at(-k, -k)


def _mixed(at, step1, step2):
    # (4 D(h) - D(2h)) / 3 cancels the O(h^2) term of the diagonal cross stencil
    return (4.0 * _cross(at, 1) - 0.25 * _cross(at, 2)) / (12.0 * step1 * step2)


def derivatives_from_samples(samples: dict, step1: float, step2: float) -> MetricDerivatives:
    """Build MetricDerivatives from metric values at stencil_offsets()."""
    arr = {k: np.array(v.components()) for k, v in samples.items()}
    d1 = sum(w * arr[(k, 0)] for k, w in _W1.items()) / (12.0 * step1)
    d2 = sum(w * arr[(0, k)] for k, w in _W1.items()) / (12.0 * step2)
    d11 = sum(w * arr[(k, 0)] for k, w in _W2.items()) / (12.0 * step1**2)
    d22 = sum(w * arr[(0, k)] for k, w in _W2.items()) / (12.0 * step2**2)
    d12 = _mixed(lambda a, b: arr[(a, b)], step1, step2)
    mt = lambda a: MetricTensor2D(float(a[0]), float(a[1]), float(a[2]))
    return MetricDerivatives(samples[(0, 0)], mt(d1), mt(d2), mt(d11), mt(d12), mt(d22))


def metric_derivatives_fd(field: MetricField, p: ParameterPoint, step: float,
                          step2: Optional[float] = None) -> MetricDerivatives:
    if not step > 0:
        raise ValueError("step must be positive")
    s2 = step if step2 is None else step2
    base = p
    if field.dps is not None:
        # exact offsets: float64 rounding of x + k*step would swamp tiny steps
        base = ParameterPoint(mpmath.mpf(p.x1), mpmath.mpf(p.x2))
        step, s2 = mpmath.mpf(step), mpmath.mpf(s2)
    samples = {}
    for k1, k2 in stencil_offsets():
        q = base.shifted(k1 * step, k2 * s2)
        if not field.contains(q):
            raise DomainViolation(f"stencil point {q} leaves the domain of {field.name or 'field'}")
        samples[(k1, k2)] = field.evaluator(q)
    return derivatives_from_samples(samples, step, s2)


def scalar_curvature_fd(field: MetricField, p: ParameterPoint, step: float = 1e-4,
                        refine: bool = False, step2: Optional[float] = None,
                        det_rtol: float = DET_RTOL) -> CurvatureResult:
    """Curvature from central finite differences of a metric field.

    With ``refine`` the estimates at ``step`` and ``step/2`` are combined by
    Richardson extrapolation assuming an O(step^4) leading error (all
    stencils are fourth order). Fields that
    declare ``dps`` are differenced and contracted in mpmath at that precision.
    """
    if field.dps is not None:
        with mpmath.workdps(field.dps):
            return _curvature_fd(field, p, step, refine, step2, det_rtol)
    return _curvature_fd(field, p, step, refine, step2, det_rtol)


def _curvature_fd(field, p, step, refine, step2, det_rtol):
    R = scalar_curvature_closed(metric_derivatives_fd(field, p, step, step2), det_rtol).R
    if refine:
        half2 = None if step2 is None else step2 / 2
        Rh = scalar_curvature_closed(metric_derivatives_fd(field, p, step / 2, half2), det_rtol).R
        R = (16.0 * Rh - R) / 15.0
    return CurvatureResult(R, "finite-difference", step)


def curvature_from_mesh(samples, spacing: tuple[float, float],
                        det_rtol: float = DET_RTOL) -> list[list[Optional[CurvatureResult]]]:
    """Curvature on the interior of a uniform mesh of metric samples.

    ``samples[i][k]`` is the metric at (x1_0 + i*h1, x2_0 + k*h2); entries may
    be None where the metric is unavailable. The two outermost rows and
    columns, points whose stencil touches a missing sample, and degenerate
    points come back as None.
    """
    n1 = len(samples)
    n2 = len(samples[0]) if n1 else 0
    if n1 < 5 or n2 < 5:
        raise GridTooSmall(f"need at least 5x5 samples, got {n1}x{n2}")
    h1, h2 = spacing
    G = np.full((n1, n2, 3), np.nan)
    for i in range(n1):
        for k in range(n2):
            t = samples[i][k]
            if t is not None:
                G[i, k] = t.components()

    c = slice(2, n1 - 2), slice(2, n2 - 2)

    def at(di, dk):
        return G[2 + di:n1 - 2 + di, 2 + dk:n2 - 2 + dk]

    d1 = sum(w * at(k, 0) for k, w in _W1.items()) / (12.0 * h1)
    d2 = sum(w * at(0, k) for k, w in _W1.items()) / (12.0 * h2)
    d11 = sum(w * at(k, 0) for k, w in _W2.items()) / (12.0 * h1**2)
    d22 = sum(w * at(0, k) for k, w in _W2.items()) / (12.0 * h2**2)
    d12 = _mixed(at, h1, h2)
    g = G[c]
    split = lambda a: (a[..., 0], a[..., 1], a[..., 2])
    det = g[..., 0] * g[..., 2] - g[..., 1] ** 2
    thresh = det_rtol * (g[..., 0] + g[..., 2]) ** 2
    with np.errstate(all="ignore"):
        R = _curvature_expr(g[..., 0], g[..., 1], g[..., 2],
                            split(d1), split(d2), split(d11), split(d12), split(d22))
    ok = np.isfinite(R) & (det > thresh)

    out: list[list[Optional[CurvatureResult]]] = [[None] * n2 for _ in range(n1)]
    for i in range(n1 - 4):
        for k in range(n2 - 4):
            if ok[i, k]:
                out[i + 2][k + 2] = CurvatureResult(float(R[i, k]), "finite-difference", float(h1))
    return out
