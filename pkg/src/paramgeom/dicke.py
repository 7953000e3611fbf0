"""Dicke model in the thermodynamic limit (truncated Holstein-Primakoff).

Parameters are x = (omega, lambda) with the level splitting omega0 held
fixed. Both phases reduce to two coupled oscillators with potential
matrix K = [[a, b], [b, d]]; the normal frequencies are the square roots of
its eigenvalues and the mixing angle satisfies tan(2 alpha) = 2b / (d - a).
All gradients below are hand-differentiated from those closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import mpmath

from .errors import AngleSingular, CriticalPoint, WrongPhase
from .geometry import MetricField, MetricTensor2D, ParameterPoint

NORMAL = "normal"
SUPERRADIANT = "superradiant"


def _sqrt(x):
    # evaluators also run on mpmath numbers for extended-precision stencils
    return mpmath.sqrt(x) if isinstance(x, mpmath.mpf) else math.sqrt(x)


@dataclass(frozen=True)
class DickeParams:
    omega0: float
    omega: float
    lam: float

    def __post_init__(self):
        if not (self.omega0 > 0 and self.omega > 0):
            raise ValueError("omega0 and omega must be positive")
        if not self.lam >= 0:
            raise ValueError("lambda must be non-negative")

    @property
    def lambda_c(self) -> float:
        return critical_coupling(self)

    @property
    def phase(self) -> str:
        lc = self.lambda_c
        if self.lam == lc:
            raise CriticalPoint(f"lambda = lambda_c = {lc}")
        return NORMAL if self.lam < lc else SUPERRADIANT


@dataclass(frozen=True)
class ActionAssignment:
    """Values substituted for the action variables and, separately, their squares.

    The quantisation rule used throughout is I = 1/2 for terms linear in an
    action and I^2 = 1 for quadratic ones, which is not (1/2)^2.
    """

    I1: float = 0.5
    I2: float = 0.5
    I1sq: float = 1.0
    I2sq: float = 1.0

    def __post_init__(self):
        if min(self.I1, self.I2, self.I1sq, self.I2sq) <= 0:
            raise ValueError("action assignments must be positive")

    @classmethod
    def classical(cls, I1: float, I2: float) -> "ActionAssignment":
        """Assignment where the squares really are the squares."""
        return cls(I1, I2, I1 * I1, I2 * I2)


DEFAULT_ACTIONS = ActionAssignment()


@dataclass(frozen=True)
class NormalModeData:
    eps1: float
    eps2: float
    alpha: float
    grad_eps1: tuple[float, float]
    grad_eps2: tuple[float, float]
    grad_alpha: tuple[float, float]


def critical_coupling(p: DickeParams) -> float:
    return _sqrt(p.omega * p.omega0) / 2.0


def _resolve_phase(p: DickeParams, phase: Optional[str]) -> str:
    actual = p.phase
    if phase is not None and phase != actual:
        raise WrongPhase(f"lambda={p.lam} is in the {actual} phase, not {phase}")
    return actual


def potential_matrix(p: DickeParams, phase: str):
    """Entries (a, b, d) of K and their gradients w.r.t. (omega, lambda)."""
    w, w0, l = p.omega, p.omega0, p.lam
    if phase == NORMAL:
        r = _sqrt(w * w0)
        a, b, d = w * w, 2.0 * l * r, w0 * w0
        da = (2.0 * w, 0.0)
        db = (l * _sqrt(w0 / w), 2.0 * r)
        dd = (0.0, 0.0)
    else:
        a, b, d = w * w, w * w0, 16.0 * l**4 / (w * w)
        da = (2.0 * w, 0.0)
        db = (w0, 0.0)
        dd = (-32.0 * l**4 / w**3, 64.0 * l**3 / (w * w))
    return (a, b, d), (da, db, dd)


def _frequencies_squared(p: DickeParams, phase: str) -> tuple[float, float, float]:
    """(eps1^2, eps2^2, discriminant) in closed form for each phase."""
    w, w0, l = p.omega, p.omega0, p.lam
    if phase == NORMAL:
        S = w * w + w0 * w0
        D = _sqrt((w * w - w0 * w0) ** 2 + 16.0 * l * l * w * w0)
        det = w * w0 * (w * w0 - 4.0 * l * l)
    else:
        S = (16.0 * l**4 + w**4) / (w * w)
        D = _sqrt(((16.0 * l**4 - w**4) / (w * w)) ** 2 + 4.0 * w * w * w0 * w0)
        det = 16.0 * l**4 - w * w * w0 * w0
    e2sq = 0.5 * (S + D)
    # product form avoids the S - D cancellation next to the critical point
    e1sq = det / e2sq
    return e1sq, e2sq, D


def normal_mode_data(p: DickeParams, phase: Optional[str] = None) -> NormalModeData:
    phase = _resolve_phase(p, phase)
    (a, b, d), (da, db, dd) = potential_matrix(p, phase)
    s, c = 2.0 * b, d - a
    if c == 0.0:
        if phase == NORMAL:
            raise AngleSingular("omega == omega0: use the resonant formulas")
        raise AngleSingular("lambda == omega/2 in the superradiant phase")

    e1sq, e2sq, D = _frequencies_squared(p, phase)
    eps1, eps2 = _sqrt(e1sq), _sqrt(e2sq)

    grad_e1, grad_e2, grad_al = [], [], []
    for k in range(2):
        dS = da[k] + dd[k]
        dD = ((d - a) * (dd[k] - da[k]) + 4.0 * b * db[k]) / D
        ddet = da[k] * d + a * dd[k] - 2.0 * b * db[k]
        de2sq = 0.5 * (dS + dD)
        de1sq = (ddet - e1sq * de2sq) / e2sq
        grad_e1.append(de1sq / (2.0 * eps1))
        grad_e2.append(de2sq / (2.0 * eps2))
        ds, dc = 2.0 * db[k], dd[k] - da[k]
        grad_al.append(0.5 * (c * ds - s * dc) / (s * s + c * c))

    # reported in (-pi/4, pi/4); the gradient is branch independent
    alpha = 0.5 * math.atan(s / c)
    return NormalModeData(eps1, eps2, alpha, tuple(grad_e1), tuple(grad_e2), tuple(grad_al))


def _frequency_terms(m: NormalModeData):
    t1 = MetricTensor2D.outer(m.grad_eps1).scaled(1.0 / (8.0 * m.eps1**2))
    t2 = MetricTensor2D.outer(m.grad_eps2).scaled(1.0 / (8.0 * m.eps2**2))
    ta = MetricTensor2D.outer(m.grad_alpha)
    return t1, t2, ta


def classical_metric(p: DickeParams, phase: Optional[str] = None,
                     actions: ActionAssignment = DEFAULT_ACTIONS) -> MetricTensor2D:
    m = normal_mode_data(p, phase)
    t1, t2, ta = _frequency_terms(m)
    ratio = m.eps1 / m.eps2 + m.eps2 / m.eps1
    return t1.scaled(actions.I1sq) + t2.scaled(actions.I2sq) + ta.scaled(ratio * actions.I1 * actions.I2)


def quantum_metric(p: DickeParams, phase: Optional[str] = None) -> MetricTensor2D:
    m = normal_mode_data(p, phase)
    t1, t2, ta = _frequency_terms(m)
    ratio = m.eps1 / m.eps2 + m.eps2 / m.eps1
    return t1 + t2 + ta.scaled(0.25 * ratio - 0.5)


def anomaly_term(p: DickeParams, phase: Optional[str] = None) -> MetricTensor2D:
    """Ordering correction: classical (default actions) minus quantum metric."""
    m = normal_mode_data(p, phase)
    return MetricTensor2D.outer(m.grad_alpha).scaled(0.5)


def _resonant_normal(w, l) -> tuple[MetricTensor2D, MetricTensor2D]:
    r = _sqrt(w * w - 4 * l * l)
    q = w * w - 4 * l * l
    g12 = l * (4 * l * l - 3 * w * w) / (8 * w * q * q)
    g22 = (4 * l * l + w * w) / (4 * q * q)
    g11_cl = (16 * l**4 * w**3 - 8 * l**2 * w**5 + w**7
              + l**2 * r * (8 * l**4 - 6 * l**2 * w**2 + 2 * w**4)) / (32 * l**2 * w**2 * r**5)
    # at resonance the ordering term is diag(1/(32 lambda^2), 0)
    g11_q = g11_cl - 1 / (32 * l * l)
    return MetricTensor2D(g11_cl, g12, g22), MetricTensor2D(g11_q, g12, g22)


def resonant_quantum_g11_alt(w: float, l: float) -> float:
    """Alternative closed form for the resonant quantum g11.

    Kept for comparison only: it disagrees with the omega0 -> omega limit of
    the general quantum metric and turns negative for lambda close to omega/2.
    """
    r = math.sqrt(w * w - 4.0 * l * l)
    return (-16 * l**6 + 48 * l**4 * w**2 - 23 * l**2 * w**4 + 3 * w**6
            - w * r * (4 * l**4 - 3 * l**2 * w**2 + w**4)) / (16 * w**2 * r**5 * (w + r))


def resonant_metrics(omega: float, lam: float, phase: Optional[str] = None):
    """(classical, quantum) metrics at omega0 = omega.

    The normal phase uses the dedicated closed forms (g12, g22 shared by both
    metrics); the superradiant phase substitutes omega0 = omega into the
    general expressions, which are regular there.
    """
    p = DickeParams(omega, omega, lam)
    actual = p.phase
    if phase is not None and phase != actual:
        raise WrongPhase(f"lambda={lam} is in the {actual} phase, not {phase}")
    if actual == NORMAL:
        if lam == 0.0:
            raise AngleSingular("resonant g11 diverges at lambda = 0")
        return _resonant_normal(omega, lam)
    return classical_metric(p, SUPERRADIANT), quantum_metric(p, SUPERRADIANT)


def ground_state_energy(p: DickeParams, j: float) -> float:
    """Leading (order j) ground-state energy E_g."""
    if not j > 0:
        raise ValueError("j must be positive")
    w, w0, l = p.omega, p.omega0, p.lam
    if l <= critical_coupling(p):
        return -j * w0
    return -j * (2.0 * l * l / w + w0 * w0 * w / (8.0 * l * l))


def metric_field(kind: str = "quantum", omega0: float = 1.0, phase: Optional[str] = None,
                 resonant: bool = False, actions: ActionAssignment = DEFAULT_ACTIONS,
                 dps: Optional[int] = None) -> MetricField:
    """MetricField over (omega, lambda).

    ``kind`` is "quantum" or "classical". With ``phase`` set the domain is
    restricted to that phase, so finite-difference stencils never straddle
    the transition. With ``resonant`` the field is the omega0 = omega family
    and ``omega0`` is ignored.

    Close to the critical coupling the metric is a huge rank-one piece plus
    an O(1) remainder, and double precision differences cannot resolve the
    curvature. ``dps`` switches evaluation to mpmath with that many digits;
    the geometry routines pick this up from the field.
    """
    if kind not in ("quantum", "classical"):
        raise ValueError(f"unknown metric kind {kind!r}")

    def params(x1, x2) -> DickeParams:
        return DickeParams(x1 if resonant else omega0, x1, x2)

    def domain(pt: ParameterPoint) -> bool:
        if pt.x1 <= 0 or pt.x2 < 0:
            return False
        p = params(pt.x1, pt.x2)
        if pt.x2 == critical_coupling(p):
            return False
        if resonant:
            if pt.x2 == 0.0:
                return False
        elif pt.x1 == omega0:
            return False
        return phase is None or p.phase == phase

    def compute(x1, x2) -> MetricTensor2D:
        if resonant:
            cl, q = resonant_metrics(x1, x2)
            return q if kind == "quantum" else cl
        p = params(x1, x2)
        return quantum_metric(p) if kind == "quantum" else classical_metric(p, actions=actions)

    def evaluate(pt: ParameterPoint) -> MetricTensor2D:
        if dps is None:
            return compute(pt.x1, pt.x2)
        with mpmath.workdps(dps):
            return compute(mpmath.mpf(pt.x1), mpmath.mpf(pt.x2))

    label = f"dicke-{kind}{'-resonant' if resonant else ''}"
    return MetricField(evaluate, domain, label, dps=dps)


def frequency_sum_rule(p: DickeParams, phase: Optional[str] = None) -> float:
    """eps1^2 + eps2^2 expected from the trace of the potential matrix."""
    phase = _resolve_phase(p, phase)
    w, w0, l = p.omega, p.omega0, p.lam
    if phase == NORMAL:
        return w * w + w0 * w0
    return (16.0 * l**4 + w**4) / (w * w)

