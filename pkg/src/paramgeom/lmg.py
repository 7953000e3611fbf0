"""Lipkin-Meshkov-Glick model in the thermodynamic limit.

H = -2h Jz - (Jx^2 + gamma Jy^2)/j with h >= 0 and -1 < gamma < 1.
Parameters are ordered (x1, x2) = (h, gamma). The symmetric phase is
h > 1, the broken phase 0 <= h < 1; h = 1 itself is rejected everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CriticalPoint, WrongPhase
from .geometry import MetricField, MetricTensor2D, ParameterPoint

SYMMETRIC = "symmetric"
BROKEN = "broken"

MINIMUM = "minimum"
MAXIMUM = "maximum"
SADDLE = "saddle"


@dataclass(frozen=True)
class LmgParams:
    h: float
    gamma: float
    j: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.h) and self.h >= 0):
            raise ValueError(f"h must be finite and >= 0, got {self.h}")
        if not -1.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (-1, 1), got {self.gamma}")
        if not self.j > 0:
            raise ValueError(f"j must be positive, got {self.j}")

    @property
    def phase(self) -> str:
        if self.h == 1.0:
            raise CriticalPoint("h = 1 is the critical point")
        return SYMMETRIC if self.h > 1.0 else BROKEN


@dataclass(frozen=True)
class LmgActions:
    """Action identification for the single LMG mode.

    ``I`` multiplies terms linear in the action, ``Isq`` the quadratic ones.
    The quantum metric is recovered with I = 1/2, Isq = 1.
    """
    I: float = 0.5
    Isq: float = 1.0

    @classmethod
    def classical(cls, I: float) -> "LmgActions":
        return cls(I, I * I)


QUANTUM_ACTIONS = LmgActions()


@dataclass(frozen=True)
class FixedPoint:
    theta0: float
    phi0: float
    kind: str
    energy: float


def _require(p: LmgParams, phase: str):
    if p.phase != phase:
        raise WrongPhase(f"h={p.h} is in the {p.phase} phase, not {phase}")


def energy_surface(p: LmgParams, theta, phi):
    """Mean-field energy on the Bloch sphere (theta measured from +z)."""
    st2 = np.sin(theta) ** 2
    return -p.j * (2.0 * p.h * np.cos(theta) + st2 * (np.cos(phi) ** 2 + p.gamma * np.sin(phi) ** 2))


def classical_hamiltonian(p: LmgParams, Q, P):
    """Energy surface in the canonical (Q, P) chart centred on the north pole."""
    r2 = np.asarray(P) ** 2 + np.asarray(Q) ** 2
    return -2.0 * p.h * p.j + p.h * r2 - (p.gamma * P**2 + Q**2) * (1.0 - r2 / (4.0 * p.j))


def rotated_hamiltonian(p: LmgParams, Q, P):
    """Energy surface in the chart centred on a broken-phase minimum.

    NaN outside the chart (P^2 + Q^2 > 4j).
    """
    _require(p, BROKEN)
    h, g, j = p.h, p.gamma, p.j
    Q = np.asarray(Q, dtype=float)
    P = np.asarray(P, dtype=float)
    r2 = P**2 + Q**2
    with np.errstate(invalid="ignore"):
        root = np.sqrt(1.0 - r2 / (4.0 * j))
    return (-j * (1.0 + h * h) + (1.0 - g) * P**2 + (1.0 - h * h) * Q**2
            + h / math.sqrt(j) * math.sqrt(1.0 - h * h) * Q * r2 * root
            + r2 * (g * P**2 + h * h * Q**2 - (1.0 - h * h) * r2) / (4.0 * j))


def _kind(c1: float, c2: float) -> str:
    if c1 > 0 and c2 > 0:
        return MINIMUM
    if c1 < 0 and c2 < 0:
        return MAXIMUM
    return SADDLE


def fixed_points(p: LmgParams) -> list[FixedPoint]:
    """Stationary points of the energy surface, classified by their Hessian.

    Near either pole the surface is quadratic in the local chart with
    coefficients along the phi = 0 and phi = pi/2 directions; those signs
    decide the kind.
    """
    h, g, j = p.h, p.gamma, p.j
    phase = p.phase
    pts = [
        FixedPoint(0.0, 0.0, _kind(h - 1.0, h - g), -2.0 * h * j),
        FixedPoint(math.pi, 0.0, _kind(-h - 1.0, -h - g), 2.0 * h * j),
    ]
    if phase == BROKEN:
        t0 = math.acos(h)
        e = -j * (1.0 + h * h)
        pts += [FixedPoint(t0, 0.0, MINIMUM, e), FixedPoint(t0, math.pi, MINIMUM, e)]
    # stationary points on the phi = +-pi/2 meridian exist when |h| < |gamma|
    if abs(h) < abs(g) and g != 0:
        t1 = math.acos(h / g)
        e = float(energy_surface(p, t1, math.pi / 2))
        kind = SADDLE if g > 0 else MAXIMUM
        pts += [FixedPoint(t1, math.pi / 2, kind, e), FixedPoint(t1, 3 * math.pi / 2, kind, e)]
    return pts


def ground_energy(p: LmgParams) -> float:
    if p.h < 1.0:
        return -p.j * (1.0 + p.h * p.h)
    return -2.0 * p.h * p.j


def symmetric_metrics(p: LmgParams, actions: LmgActions = QUANTUM_ACTIONS):
    """(classical, quantum) metrics in the symmetric phase; both are singular."""
    _require(p, SYMMETRIC)
    h, g = p.h, p.gamma
    q11 = ((1.0 - g) / ((h - 1.0) * (h - g))) ** 2 / 32.0
    q12 = (1.0 - g) / (32.0 * (h - 1.0) * (h - g) ** 2)
    q22 = 1.0 / (32.0 * (h - g) ** 2)
    quantum = MetricTensor2D(q11, q12, q22)
    return quantum.scaled(actions.Isq), quantum


def _broken(h, g, j, I, Isq):
    s = ((1.0 - h * h) * (1.0 - g)) ** 0.5  # works for mpf too
    x = h * (h * h - g) / ((1.0 - h * h) * (1.0 - g))
    g11 = j * I / s + Isq * x * x / 32.0
    g12 = Isq * h * (h * h - g) / (32.0 * (1.0 - h * h) * (1.0 - g) ** 2)
    g22 = Isq / (32.0 * (1.0 - g) ** 2)
    return MetricTensor2D(g11, g12, g22)


def broken_metrics(p: LmgParams, actions: LmgActions = QUANTUM_ACTIONS):
    """(classical, quantum) metrics in the broken phase."""
    _require(p, BROKEN)
    return (_broken(p.h, p.gamma, p.j, actions.I, actions.Isq),
            _broken(p.h, p.gamma, p.j, 0.5, 1.0))


def broken_determinant(p: LmgParams, actions: LmgActions = QUANTUM_ACTIONS) -> float:
    """Closed-form determinant of the broken-phase metric, j I Isq / (32 sqrt(...))."""
    _require(p, BROKEN)
    return p.j * actions.I * actions.Isq / (32.0 * math.sqrt((1.0 - p.h**2) * (1.0 - p.gamma) ** 5))


def broken_curvature(p: LmgParams) -> float:
    """Closed-form scalar curvature of the broken-phase quantum metric."""
    _require(p, BROKEN)
    h, g = p.h, p.gamma
    num = 7.0 * h**4 - (9.0 * g - 2.0) * h * h - 4.0 * (1.0 - g)
    return -4.0 + num / (p.j * math.sqrt((1.0 - h * h) * (1.0 - g) ** 3))


def _broken_domain(x: ParameterPoint) -> bool:
    return 0.0 <= x.x1 < 1.0 and -1.0 < x.x2 < 1.0


def _symmetric_domain(x: ParameterPoint) -> bool:
    return x.x1 > 1.0 and -1.0 < x.x2 < 1.0


def metric_field(j: float, kind: str = "quantum", phase: str = BROKEN,
                 actions: LmgActions = QUANTUM_ACTIONS, dps=None) -> MetricField:
    """Closed-form metric as a field over (h, gamma) at fixed j.

    With ``dps`` set the broken-phase field evaluates in mpmath at that precision.
    """
    if kind not in ("quantum", "classical"):
        raise ValueError(f"unknown metric kind {kind!r}")
    if phase == BROKEN:
        if kind == "quantum":
            actions = QUANTUM_ACTIONS
        def ev(x: ParameterPoint):
            return _broken(x.x1, x.x2, j, actions.I, actions.Isq)
        return MetricField(ev, _broken_domain, f"lmg-{kind}-broken-j{j}", dps=dps)
    if phase == SYMMETRIC:
        pick = 0 if kind == "classical" else 1
        def ev(x: ParameterPoint):
            return symmetric_metrics(LmgParams(x.x1, x.x2, j), actions)[pick]
        return MetricField(ev, _symmetric_domain, f"lmg-{kind}-symmetric-j{j}")
    raise ValueError(f"unknown phase {phase!r}")
