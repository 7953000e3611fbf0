"""Classical metric of the Dicke model from an explicit torus average.

This is an independent check of the closed-form classical metric. Nothing
here uses the closed-form frequencies, angles or their gradients: the
quadratic Hamiltonians are written down directly, their normal modes come
from a numerical eigendecomposition, and the deformation functions
dH/dx_i are evaluated on a grid of initial angles.

Pipeline for one pair (i, j):

1. Lambda_ij(T) = <O_i(T) O_j(0)> - <O_i(T)><O_j(0)> by tensor-product
   trapezoid quadrature over both initial angles (exact for the trig
   polynomials that occur once n_angles > 8).
2. Least-squares projection of Lambda_ij onto cos/sin(Omega T) for the
   known harmonics Omega in {0, 2e1, 2e2, e1+e2, |e1-e2|}.
3. Regularisation: each complex exponential integrates to -1/Omega^2 over
   t1 < 0 < t2, so a term c cos(Omega T) contributes +c/Omega^2 to g_ij
   once the overall minus sign of the metric definition is applied.

The harmonics at 2e_a are quadratic in the action I_a. The quantisation
rule that assigns I_a^2 independently of I_a is applied at the end, by
rescaling those coefficients by I_a^2(assigned) / I_a^2(sampled).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dicke import DEFAULT_ACTIONS, NORMAL, ActionAssignment, DickeParams
from .errors import DcLeakage, IllConditionedProjection, WrongPhase
from .geometry import MetricTensor2D

COND_MAX = 1e8
DC_TOL = 1e-8


@dataclass(frozen=True)
class TorusSample:
    phi10: float
    phi20: float
    I1: float
    I2: float

    def __post_init__(self):
        for phi in (self.phi10, self.phi20):
            if not 0.0 <= phi < 2.0 * math.pi:
                raise ValueError(f"angle {phi} outside [0, 2pi)")
        if self.I1 <= 0 or self.I2 <= 0:
            raise ValueError("actions must be positive")


@dataclass
class CorrelatorSeries:
    frequencies: np.ndarray
    cos_coeffs: np.ndarray
    sin_coeffs: np.ndarray
    labels: tuple[str, ...]
    residual: float = 0.0  # rms fit residual relative to rms signal
    actions: tuple[float, float] = (0.5, 0.5)
    pair: tuple[int, int] = (0, 0)
    T: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    values: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)


def quadratic_forms(p: DickeParams, phase: str):
    """Potential matrix K and deformation matrices dK/d(omega), dK/d(lambda).

    H = (p.p + q.K.q)/2 + const, and O_i = q.(dK/dx_i).q / 2.
    """
    w, w0, l = float(p.omega), float(p.omega0), float(p.lam)
    if phase == NORMAL:
        c = 2.0 * l * math.sqrt(w * w0)
        K = np.array([[w * w, c], [c, w0 * w0]])
        dK_w = np.array([[2.0 * w, l * math.sqrt(w0 / w)], [l * math.sqrt(w0 / w), 0.0]])
        dK_l = np.array([[0.0, 2.0 * math.sqrt(w * w0)], [2.0 * math.sqrt(w * w0), 0.0]])
    else:
        K = np.array([[w * w, w * w0], [w * w0, 16.0 * l**4 / w**2]])
        dK_w = np.array([[2.0 * w, w0], [w0, -32.0 * l**4 / w**3]])
        dK_l = np.array([[0.0, 0.0], [0.0, 64.0 * l**3 / w**2]])
    return K, (dK_w, dK_l)


def _modes(p: DickeParams, phase: Optional[str]):
    actual = p.phase
    if phase is not None and phase != actual:
        raise WrongPhase(f"lambda={p.lam} is in the {actual} phase, not {phase}")
    K, dKs = quadratic_forms(p, actual)
    ev, V = np.linalg.eigh(K)
    if ev[0] <= 0:
        raise WrongPhase("potential not positive definite")
    eps = np.sqrt(ev)
    return eps, V, dKs


def harmonic_dictionary(eps: Sequence[float]):
    e1, e2 = eps
    freqs = np.array([0.0, 2 * e1, 2 * e2, e1 + e2, abs(e2 - e1)])
    labels = ("dc", "2e1", "2e2", "sum", "diff")
    return freqs, labels


def default_times(freqs: np.ndarray, eps1: float, n: Optional[int] = None) -> np.ndarray:
    """Chebyshev nodes on [0, T_max].

    T_max covers half a period of the slowest mode and is stretched when
    two harmonics are so close that [0, pi/eps1] cannot separate them.
    """
    distinct = np.sort(freqs)
    sep = np.min(np.diff(distinct))
    tmax = math.pi / eps1
    if sep > 0:
        tmax = max(tmax, math.pi / sep)
    n = n or 8 * len(freqs)
    k = np.arange(n)
    x = np.cos((2 * k + 1) * math.pi / (2 * n))
    return np.sort(0.5 * tmax * (1.0 + x))


def _deformation_on_grid(M: np.ndarray, amp: np.ndarray, eps: np.ndarray,
                         phi1: np.ndarray, phi2: np.ndarray, t: float) -> np.ndarray:
    Q1 = amp[0] * np.sin(phi1 + eps[0] * t)
    Q2 = amp[1] * np.sin(phi2 + eps[1] * t)
    return M[0, 0] * Q1 * Q1 + 2.0 * M[0, 1] * Q1 * Q2 + M[1, 1] * Q2 * Q2


def connected_correlator(p: DickeParams, phase: Optional[str] = None,
                         actions: ActionAssignment = DEFAULT_ACTIONS, i: int = 0, j: int = 0,
                         T_samples: Optional[Sequence[float]] = None,
                         n_angles: int = 256) -> CorrelatorSeries:
    """Torus-averaged connected correlator of O_i(t1) and O_j(t2), T = t1 - t2.

    Indices are 0 (omega) and 1 (lambda).
    """
    if n_angles < 64:
        raise ValueError("n_angles must be at least 64")
    eps, V, dKs = _modes(p, phase)
    # O_i in normal coordinates: Q.M_i.Q with M_i = V^T dK_i V / 2
    Mi = 0.5 * V.T @ dKs[i] @ V
    Mj = 0.5 * V.T @ dKs[j] @ V
    I = np.array([actions.I1, actions.I2])
    amp = np.sqrt(2.0 * I / eps)

    freqs, labels = harmonic_dictionary(eps)
    T = np.asarray(T_samples if T_samples is not None else default_times(freqs, eps[0]), dtype=float)
    if len(T) < 2 * len(freqs):
        raise ValueError("need at least two T samples per candidate harmonic")

    phi = 2.0 * math.pi * np.arange(n_angles) / n_angles
    phi1, phi2 = np.meshgrid(phi, phi, indexing="ij")
    Oj0 = _deformation_on_grid(Mj, amp, eps, phi1, phi2, 0.0)
    Oj0_mean = Oj0.mean()
    lam = np.empty(len(T))
    for k, t in enumerate(T):
        Oi = _deformation_on_grid(Mi, amp, eps, phi1, phi2, t)
        lam[k] = np.mean(Oi * Oj0) - Oi.mean() * Oj0_mean

    # design matrix: constant, then cos/sin pairs for each nonzero harmonic
    cols = [np.ones_like(T)]
    for f in freqs[1:]:
        cols += [np.cos(f * T), np.sin(f * T)]
    A = np.stack(cols, axis=1)
    scale = np.linalg.norm(A, axis=0)
    cond = np.linalg.cond(A / scale)
    if not cond < COND_MAX:
        raise IllConditionedProjection(f"harmonic design matrix condition {cond:.2e} (frequencies {freqs})")
    coef, *_ = np.linalg.lstsq(A, lam, rcond=None)
    fit = A @ coef
    rms = math.sqrt(np.mean(lam**2)) or 1.0
    residual = math.sqrt(np.mean((lam - fit) ** 2)) / rms

    cos_c = np.concatenate([[coef[0]], coef[1::2]])
    sin_c = np.concatenate([[0.0], coef[2::2]])
    return CorrelatorSeries(freqs, cos_c, sin_c, labels, residual,
                            (actions.I1, actions.I2), (i, j), T, lam)


def regularized_metric(series: dict, actions: Optional[ActionAssignment] = None,
                       sign: float = 1.0) -> MetricTensor2D:
    """Regularise a full set of correlator series into a metric.

    ``series`` maps (i, j) -> CorrelatorSeries for i, j in {0, 1}; (1, 0) is
    optional and, when present, must agree with (0, 1). ``actions`` supplies
    the squared-action identification; None keeps the sampled actions as is.
    ``sign`` exists so that validation can exercise a deliberately broken
    convention; leave it at +1.
    """
    g = {}
    for key, s in series.items():
        peak = max(np.max(np.abs(s.cos_coeffs)), np.max(np.abs(s.sin_coeffs)))
        if abs(s.cos_coeffs[0]) > DC_TOL * max(peak, 1e-300):
            raise DcLeakage(f"pair {key}: DC coefficient {s.cos_coeffs[0]:.3e}")
        total = 0.0
        for f, c, lab in zip(s.frequencies[1:], s.cos_coeffs[1:], s.labels[1:]):
            if actions is not None and lab in ("2e1", "2e2"):
                a = 0 if lab == "2e1" else 1
                sampled = s.actions[a] ** 2
                assigned = actions.I1sq if a == 0 else actions.I2sq
                c = c * assigned / sampled
            total += sign * c / (f * f)
        g[key] = total
    return MetricTensor2D(g[(0, 0)], g[(0, 1)], g[(1, 1)])


def torus_metric_matrix(p: DickeParams, phase: Optional[str] = None,
                        actions: ActionAssignment = DEFAULT_ACTIONS, n_angles: int = 256,
                        sign: float = 1.0) -> np.ndarray:
    """Full 2x2 oracle metric with (0,1) and (1,0) from separate pipelines."""
    series = {(i, j): connected_correlator(p, phase, actions, i, j, n_angles=n_angles)
              for i in range(2) for j in range(2)}
    upper = regularized_metric({k: series[k] for k in [(0, 0), (0, 1), (1, 1)]}, actions, sign)
    lower = regularized_metric({(0, 0): series[(0, 0)], (0, 1): series[(1, 0)],
                                (1, 1): series[(1, 1)]}, actions, sign)
    return np.array([[upper.g11, upper.g12], [lower.g12, upper.g22]])


def torus_metric(p: DickeParams, phase: Optional[str] = None,
                 actions: ActionAssignment = DEFAULT_ACTIONS, n_angles: int = 256,
                 sign: float = 1.0) -> MetricTensor2D:
    m = torus_metric_matrix(p, phase, actions, n_angles, sign)
    return MetricTensor2D(m[0, 0], m[0, 1], m[1, 1])
