"""Exact finite-j LMG: spin matrices, Hamiltonian, spectrum and QMT.

Everything is real. The basis is |j, m> with m = -j ... j (index k = m + j).
Only Jy^2 = -(J+ - J-)^2 / 4 is ever formed, never Jy itself.

Both Jx^2 and Jy^2 change m by 0 or +-2, so H splits into two parity blocks
k even / k odd, each tridiagonal once its indices are taken in order. Both
deformation operators preserve parity, so the QMT can be computed entirely
inside the block that holds the ground state. This matters in the broken phase,
where the lowest states of the two blocks are exponentially close and the
full-space ground state is numerically ill defined.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import (DegenerateGroundState, DeltaTooLarge, NearDegeneracyWarning,
                     ProbeDegenerate, SolverFailure)
from .geometry import MetricField, MetricTensor2D, ParameterPoint

GAP_MIN_REL = 1e-12
GAP_WARN_REL = 1e-8


def _check_j(j: float) -> int:
    two_j = round(2 * j)
    if two_j < 1 or abs(2 * j - two_j) > 1e-12:
        raise ValueError(f"j must be a positive half-integer, got {j}")
    return two_j


@dataclass(frozen=True)
class SpinMatrices:
    j: float
    jz: np.ndarray      # diagonal entries m = -j ... j
    jp_abs: np.ndarray  # <m+1|J+|m> for m = -j ... j-1
    jx: np.ndarray
    jx_sq: np.ndarray
    jy_sq: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.jz)

    def casimir_residual(self) -> float:
        c = self.jx_sq + self.jy_sq + np.diag(self.jz**2)
        return float(np.max(np.abs(c - self.j * (self.j + 1) * np.eye(self.dim))))


@lru_cache(maxsize=32)
def _spin(two_j: int) -> SpinMatrices:
    j = two_j / 2.0
    m = np.arange(two_j + 1) - j
    c = np.sqrt(j * (j + 1) - m[:-1] * (m[:-1] + 1))
    jp = np.diag(c, -1)  # column m -> row m+1
    s = jp + jp.T
    a = jp - jp.T
    jx = 0.5 * s
    jx_sq = 0.25 * s @ s
    jy_sq = -0.25 * a @ a
    for arr in (m, c, jx, jx_sq, jy_sq):
        arr.setflags(write=False)
    return SpinMatrices(j, m, c, jx, jx_sq, jy_sq)


def spin_matrices(j: float) -> SpinMatrices:
    return _spin(_check_j(j))


def build_hamiltonian(j: float, h: float, gamma: float) -> np.ndarray:
    """H = -2h Jz - (Jx^2 + gamma Jy^2)/j as a dense real symmetric matrix."""
    s = spin_matrices(j)
    H = -(s.jx_sq + gamma * s.jy_sq) / j
    H[np.diag_indices_from(H)] -= 2.0 * h * s.jz
    return 0.5 * (H + H.T)


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns
    norm: float               # spectral norm of the diagonalised matrix

    @property
    def gap(self) -> float:
        return float(self.eigenvalues[1] - self.eigenvalues[0]) if len(self.eigenvalues) > 1 else math.inf


def _fix_signs(V: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def diagonalize(H: np.ndarray) -> Spectrum:
    try:
        w, V = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise SolverFailure(f"eigh failed for {H.shape[0]}x{H.shape[0]} matrix: {exc}") from exc
    return Spectrum(w, _fix_signs(V), float(np.max(np.abs(w))) if len(w) else 0.0)


def diagonalize_tridiagonal(d: np.ndarray, e: np.ndarray) -> Spectrum:
    try:
        w, V = eigh_tridiagonal(d, e)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise SolverFailure(f"tridiagonal eigensolver failed for size {len(d)}: {exc}") from exc
    return Spectrum(w, _fix_signs(V), float(np.max(np.abs(w))))


@dataclass(frozen=True)
class DeformationOps:
    o1: np.ndarray  # dH/dh = -2 Jz
    o2: np.ndarray  # dH/dgamma = -Jy^2 / j


def deformation_ops(j: float) -> DeformationOps:
    s = spin_matrices(j)
    return DeformationOps(np.diag(-2.0 * s.jz), -s.jy_sq / j)


def qmt_perturbative(s: Spectrum, ops: DeformationOps, gap_min_rel: float = GAP_MIN_REL,
                     warn_rel: float = GAP_WARN_REL) -> MetricTensor2D:
    """Sum over excited states of <0|O_i|n><n|O_j|0>/(E_n - E_0)^2.

    Built as a Gram matrix of the real vectors <n|O_i|0>/(E_n - E_0), so the
    result is PSD by construction.
    """
    w, V = s.eigenvalues, s.eigenvectors
    if len(w) < 2:
        return MetricTensor2D(0.0, 0.0, 0.0)
    scale = max(s.norm, 1e-300)
    gap = w[1] - w[0]
    if gap < gap_min_rel * scale:
        raise DegenerateGroundState(f"gap {gap:.3e} below {gap_min_rel:g} * |H| = {gap_min_rel * scale:.3e}")
    if gap < warn_rel * scale:
        warnings.warn(f"small ground-state gap {gap:.3e} (|H| = {scale:.3e})", NearDegeneracyWarning, stacklevel=2)
    v0 = V[:, 0]
    de = w[1:] - w[0]
    u1 = (V[:, 1:].T @ (ops.o1 @ v0)) / de
    u2 = (V[:, 1:].T @ (ops.o2 @ v0)) / de
    return MetricTensor2D(float(u1 @ u1), float(u1 @ u2), float(u2 @ u2))


def parity_blocks(j: float) -> tuple[np.ndarray, np.ndarray]:
    """Basis indices with (m + j) even and odd."""
    k = np.arange(_check_j(j) + 1)
    return k[k % 2 == 0], k[k % 2 == 1]


def ground_block(j: float) -> np.ndarray:
    """Indices of the parity block containing m = +j."""
    two_j = _check_j(j)
    even, odd = parity_blocks(j)
    return odd if two_j % 2 else even


@dataclass(frozen=True)
class _BlockParts:
    """Tridiagonal pieces of Jz, Jx^2 and Jy^2 restricted to one parity block."""
    idx: np.ndarray
    jz: np.ndarray
    x_d: np.ndarray
    x_e: np.ndarray
    y_d: np.ndarray
    y_e: np.ndarray


@lru_cache(maxsize=64)
def _block_parts(two_j: int, which: int) -> _BlockParts:
    j = two_j / 2.0
    s = _spin(two_j)
    idx = parity_blocks(j)[which]
    sub = lambda M: M[np.ix_(idx, idx)]
    x, y = sub(s.jx_sq), sub(s.jy_sq)
    return _BlockParts(idx, s.jz[idx], np.diag(x).copy(), np.diag(x, 1).copy(),
                       np.diag(y).copy(), np.diag(y, 1).copy())


def _block_tridiagonal(b: _BlockParts, j: float, h: float, gamma: float):
    d = -2.0 * h * b.jz - (b.x_d + gamma * b.y_d) / j
    e = -(b.x_e + gamma * b.y_e) / j
    return d, e


def _block_bottom(j: float, h: float, gamma: float, which: int) -> float:
    b = _block_parts(_check_j(j), which)
    d, e = _block_tridiagonal(b, j, h, gamma)
    if len(d) == 1:
        return float(d[0])
    return float(eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(0, 0))[0])


def _home(j: float) -> int:
    return _check_j(j) % 2


def lowest_block(j: float, h: float, gamma: float) -> np.ndarray:
    """Parity block holding the ground state.

    For integer j this is always the block containing m = +j; for
    half-integer j with gamma > 0 the other block can win, so both bottoms
    are compared (ties go to the m = +j block).
    """
    return parity_blocks(j)[_lowest_which(j, h, gamma)]


def _lowest_which(j: float, h: float, gamma: float) -> int:
    home = _home(j)
    other = 1 - home
    if len(parity_blocks(j)[other]) and _block_bottom(j, h, gamma, other) < _block_bottom(j, h, gamma, home):
        return other
    return home


def block_spectrum(j: float, h: float, gamma: float, which: int) -> tuple[Spectrum, DeformationOps]:
    """Spectrum and deformation operators in parity block ``which`` (0 even, 1 odd)."""
    b = _block_parts(_check_j(j), which)
    d, e = _block_tridiagonal(b, j, h, gamma)
    o1 = np.diag(-2.0 * b.jz)
    o2 = -(np.diag(b.y_d) + np.diag(b.y_e, 1) + np.diag(b.y_e, -1)) / j
    ops = DeformationOps(o1, o2)
    if len(d) == 1:
        return Spectrum(d.copy(), np.ones((1, 1)), abs(float(d[0]))), ops
    return diagonalize_tridiagonal(d, e), ops


@lru_cache(maxsize=200_000)
def _exact_qmt_cached(two_j: int, h: float, gamma: float, parity: bool) -> MetricTensor2D:
    j = two_j / 2.0
    if parity:
        s, ops = block_spectrum(j, h, gamma, _lowest_which(j, h, gamma))
    else:
        s, ops = diagonalize(build_hamiltonian(j, h, gamma)), deformation_ops(j)
    return qmt_perturbative(s, ops)


def exact_qmt(j: float, h: float, gamma: float, parity: bool = True) -> MetricTensor2D:
    """Exact ground-state QMT at finite j (cached per point)."""
    return _exact_qmt_cached(_check_j(j), float(h), float(gamma), bool(parity))


def _domain(x: ParameterPoint) -> bool:
    return x.x1 >= 0.0 and -1.0 < x.x2 < 1.0


def exact_metric_field(j: float, parity: bool = True) -> MetricField:
    _check_j(j)
    return MetricField(lambda x: exact_qmt(j, x.x1, x.x2, parity), _domain, f"lmg-exact-j{j}")


def _ground_state(j: float, x: ParameterPoint, gap_min_rel: float) -> np.ndarray:
    s = diagonalize(build_hamiltonian(j, x.x1, x.x2))
    if s.gap < gap_min_rel * max(s.norm, 1e-300):
        raise ProbeDegenerate(f"degenerate ground state at probe {x}")
    return s.eigenvectors[:, 0]


def _infidelity(a: np.ndarray, b: np.ndarray) -> float:
    # 1 - |<a|b>| = |a - s b|^2 / 2, which avoids cancellation
    s = 1.0 if a @ b >= 0 else -1.0
    d = a - s * b
    return 0.5 * float(d @ d)


def fidelity_oracle(j: float, x: ParameterPoint, delta: float, gap_min_rel: float = 1e-10,
                    max_infidelity: float = 1e-4) -> MetricTensor2D:
    """QMT from ground-state overlaps at displaced points (full dense spectrum)."""
    psi = _ground_state(j, x, gap_min_rel)

    def two_sided(d1: float, d2: float) -> float:
        total = 0.0
        for sgn in (1.0, -1.0):
            q = _infidelity(psi, _ground_state(j, x.shifted(sgn * d1, sgn * d2), gap_min_rel))
            if q >= max_infidelity:
                raise DeltaTooLarge(f"1 - F = {q:.3e} at displacement {(sgn * d1, sgn * d2)}")
            total += q
        return total / (delta * delta)

    g11 = two_sided(delta, 0.0)
    g22 = two_sided(0.0, delta)
    g12 = 0.5 * (two_sided(delta, delta) - g11 - g22)
    return MetricTensor2D(g11, g12, g22)
