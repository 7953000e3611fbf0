"""Self-checks run by ``paramgeom validate`` and the acceptance tests.

Each check returns a CheckResult with a verdict and the worst deviation it
saw, so a failure names the offending point rather than just "False".
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import dicke, lmg, lmg_exact, torus
from .errors import GeometryError
from .geometry import (MetricDerivatives, MetricField, MetricTensor2D, ParameterPoint,
                       scalar_curvature_closed, scalar_curvature_fd)

ZERO = MetricTensor2D(0.0, 0.0, 0.0)


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        worst = self.detail.get("worst")
        extra = f" worst={worst:.3g}" if isinstance(worst, float) else ""
        return f"{self.name}: {'PASS' if self.passed else 'FAIL'}{extra}"

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "seconds": round(self.seconds, 3), **self.detail}


def _timed(name: str, fn: Callable[[], tuple[bool, dict]]) -> CheckResult:
    t = time.perf_counter()
    try:
        ok, detail = fn()
    except GeometryError as exc:
        ok, detail = False, {"error": f"{type(exc).__name__}: {exc}"}
    return CheckResult(name, bool(ok), detail, time.perf_counter() - t)


def _rel(a: MetricTensor2D, b: MetricTensor2D) -> float:
    return float(np.linalg.norm(a.as_array() - b.as_array()) / np.linalg.norm(b.as_array()))


# --------------------------------------------------------------------------
# reference geometries

def sphere_derivatives(theta: float) -> MetricDerivatives:
    """Unit sphere in (theta, phi): g = diag(1, sin^2 theta), R = 2."""
    s, c = math.sin(theta), math.cos(theta)
    return MetricDerivatives(
        MetricTensor2D(1.0, 0.0, s * s),
        MetricTensor2D(0.0, 0.0, 2 * s * c), ZERO,
        MetricTensor2D(0.0, 0.0, 2 * (c * c - s * s)), ZERO, ZERO)


def hyperbolic_derivatives(y: float) -> MetricDerivatives:
    """Upper half-plane in (x, y): g = diag(1, 1)/y^2, R = -2."""
    a, d, dd = 1 / y**2, -2 / y**3, 6 / y**4
    return MetricDerivatives(
        MetricTensor2D(a, 0.0, a), ZERO, MetricTensor2D(d, 0.0, d),
        ZERO, ZERO, MetricTensor2D(dd, 0.0, dd))


def flat_derivatives() -> MetricDerivatives:
    return MetricDerivatives(MetricTensor2D(1.0, 0.0, 1.0), ZERO, ZERO, ZERO, ZERO, ZERO)


SPHERE = MetricField(lambda p: MetricTensor2D(1.0, 0.0, math.sin(p.x1) ** 2),
                     lambda p: 0 < p.x1 < math.pi, "unit-sphere")
HYPERBOLIC = MetricField(lambda p: MetricTensor2D(1 / p.x2**2, 0.0, 1 / p.x2**2),
                         lambda p: p.x2 > 0, "half-plane")
FLAT_POLAR = MetricField(lambda p: MetricTensor2D(1.0, 0.0, p.x1**2), lambda p: p.x1 > 0, "flat-polar")


def check_geometry(tol_closed: float = 1e-8, tol_fd: float = 1e-4) -> CheckResult:
    def run():
        worst = {}
        worst["flat_closed"] = abs(scalar_curvature_closed(flat_derivatives()).R)
        worst["flat_polar_fd"] = abs(scalar_curvature_fd(FLAT_POLAR, ParameterPoint(1.3, 0.4), 1e-3).R)
        thetas = (0.4, 1.0, 1.9, 2.6)
        worst["sphere_closed"] = max(abs(scalar_curvature_closed(sphere_derivatives(t)).R - 2) for t in thetas)
        worst["sphere_fd"] = max(abs(scalar_curvature_fd(SPHERE, ParameterPoint(t, 0.3), 1e-3).R - 2)
                                 for t in thetas)
        ys = (0.5, 1.0, 2.5)
        worst["hyperbolic_closed"] = max(abs(scalar_curvature_closed(hyperbolic_derivatives(y)).R + 2) for y in ys)
        worst["hyperbolic_fd"] = max(abs(scalar_curvature_fd(HYPERBOLIC, ParameterPoint(0.2, y), 1e-3).R + 2)
                                     for y in ys)
        ok = (worst["flat_closed"] == 0.0 and worst["flat_polar_fd"] < tol_fd
              and worst["sphere_closed"] < tol_closed and worst["hyperbolic_closed"] < tol_closed
              and worst["sphere_fd"] < tol_fd and worst["hyperbolic_fd"] < tol_fd)
        return ok, {**worst, "worst": max(worst.values())}
    return _timed("geometry", run)


# --------------------------------------------------------------------------
# Dicke

def random_dicke_points(n: int, phase: str, seed: int = 0, omega0: float = 1.0) -> list[dicke.DickeParams]:
    """Seeded points with omega in [0.5, 1.5] (kept off resonance) inside one phase."""
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < n:
        w = rng.uniform(0.5, 1.5)
        if abs(w - omega0) < 0.05:
            continue
        lc = math.sqrt(w * omega0) / 2
        f = rng.uniform(0.05, 0.95) if phase == dicke.NORMAL else rng.uniform(1.05, 2.0)
        pts.append(dicke.DickeParams(omega0, w, f * lc))
    return pts


def check_anomaly(n: int = 100, seed: int = 0, tol: float = 1e-12) -> CheckResult:
    """classical - quantum = (1/2) da da componentwise."""
    def run():
        worst, at = 0.0, None
        for phase in (dicke.NORMAL, dicke.SUPERRADIANT):
            for p in random_dicke_points(n, phase, seed):
                d = dicke.classical_metric(p) - dicke.quantum_metric(p) - dicke.anomaly_term(p)
                dev = max(abs(v) for v in d.components())
                if dev > worst:
                    worst, at = dev, (p.omega, p.lam)
        return worst < tol, {"worst": worst, "at": at, "points": 2 * n}
    return _timed("anomaly", run)


def check_resonance(omega: float = 0.8, lams=(0.1, 0.2, 0.3), tol: float = 1e-14,
                    min_gap: float = 1e-6) -> CheckResult:
    def run():
        rows = []
        ok = True
        for l in lams:
            cl, q = dicke.resonant_metrics(omega, l)
            d12, d22, d11 = abs(cl.g12 - q.g12), abs(cl.g22 - q.g22), abs(cl.g11 - q.g11)
            ok &= d12 <= tol and d22 <= tol and d11 > min_gap
            rows.append({"lambda": l, "dg12": d12, "dg22": d22, "dg11": d11})
        return ok, {"rows": rows, "worst": max(max(r["dg12"], r["dg22"]) for r in rows)}
    return _timed("resonance", run)


def check_dicke_curvature(omega: float = 0.8, dps: int = 50, step: float = 1e-9) -> CheckResult:
    """Quantum R -> -4 at the transition; both resonant curvatures diverge there."""
    def run():
        lc = math.sqrt(omega) / 2
        detail, ok = {}, True
        for sgn, phase in ((-1, dicke.NORMAL), (1, dicke.SUPERRADIANT)):
            f = dicke.metric_field("quantum", 1.0, phase=phase, dps=dps)
            R = scalar_curvature_fd(f, ParameterPoint(omega, lc + sgn * 1e-3), step).R
            detail[f"R_q({sgn:+d}e-3)"] = float(R)
            ok &= abs(R + 4) < 0.1
            lcr = omega / 2
            for kind, tag in (("quantum", "q"), ("classical", "cl")):
                f = dicke.metric_field(kind, phase=phase, resonant=True, dps=dps)
                Rr = scalar_curvature_fd(f, ParameterPoint(omega, lcr + sgn * 1e-4), step).R
                detail[f"R_res_{tag}({sgn:+d}e-4)"] = float(Rr)
                ok &= abs(Rr) > 1e3
        return ok, detail
    return _timed("dicke-curvature", run)


def check_oracle(n: int = 10, seed: int = 1, tol: float = 1e-6, n_angles: int = 256,
                 sign: float = 1.0) -> CheckResult:
    """Torus-average pipeline against the closed-form classical metric."""
    def run():
        worst, asym, at = 0.0, 0.0, None
        for phase in (dicke.NORMAL, dicke.SUPERRADIANT):
            for p in random_dicke_points(n, phase, seed):
                m = torus.torus_metric_matrix(p, phase, n_angles=n_angles, sign=sign)
                ref = dicke.classical_metric(p)
                got = MetricTensor2D(m[0, 0], m[0, 1], m[1, 1])
                dev = _rel(got, ref)
                asym = max(asym, abs(m[0, 1] - m[1, 0]) / np.linalg.norm(m))
                if dev > worst:
                    worst, at = dev, (p.omega, p.lam)
        return worst < tol and asym < 1e-9, {"worst": worst, "at": at, "asymmetry": asym}
    return _timed("oracle", run)


# --------------------------------------------------------------------------
# LMG

def check_determinants(tol_sym: float = 1e-15, tol_broken: float = 1e-12) -> CheckResult:
    def run():
        sym = 0.0
        for h in np.linspace(1.05, 3.0, 10):
            for g in np.linspace(-0.9, 0.9, 5):
                _, q = lmg.symmetric_metrics(lmg.LmgParams(h, g, 1.0))
                sym = max(sym, abs(q.det) / (q.g11 * q.g22))
        brk = 0.0
        for h in np.linspace(0.0, 0.95, 10):
            for g in np.linspace(-0.9, 0.9, 5):
                for j in (1.0, 100.0):
                    p = lmg.LmgParams(h, g, j)
                    _, q = lmg.broken_metrics(p)
                    brk = max(brk, abs(q.det / lmg.broken_determinant(p) - 1))
        return sym < tol_sym and brk < tol_broken, {"symmetric_rel_det": sym, "broken_rel_dev": brk,
                                                    "worst": max(sym, brk)}
    return _timed("determinants", run)


def check_lmg_curvature(n: int = 20, seed: int = 2, tol: float = 1e-5, js=(1.0, 100.0),
                        step: float = 1e-3) -> CheckResult:
    """Closed-form broken-phase R against finite differences of the metric field."""
    def run():
        rng = np.random.default_rng(seed)
        pts = [(rng.uniform(0.05, 0.9), rng.uniform(-0.9, 0.9)) for _ in range(n)]
        worst, at = 0.0, None
        for j in js:
            f = lmg.metric_field(j)
            for h, g in pts:
                Rc = lmg.broken_curvature(lmg.LmgParams(h, g, j))
                Rf = scalar_curvature_fd(f, ParameterPoint(h, g), step).R
                dev = abs(Rf - Rc) / abs(Rc)
                if dev > worst:
                    worst, at = dev, (j, h, g)
        return worst < tol, {"worst": worst, "at": at}
    return _timed("lmg-curvature", run)


def check_fidelity(j: float = 10, gamma: float = -0.5, hs=(1.3, 1.5, 2.0), delta: float = 1e-3,
                   tol: float = 1e-3) -> CheckResult:
    """Perturbative QMT against the fidelity-overlap oracle."""
    def run():
        worst, rows = 0.0, []
        for h in hs:
            a = lmg_exact.exact_qmt(j, h, gamma, parity=False)
            b = lmg_exact.fidelity_oracle(j, ParameterPoint(h, gamma), delta)
            dev = max(abs(x - y) / abs(x) for x, y in zip(a.components(), b.components()))
            rows.append({"h": h, "rel_dev": dev})
            worst = max(worst, dev)
        return worst < tol, {"worst": worst, "rows": rows}
    return _timed("fidelity", run)


def check_finite_j(j: float = 500, gamma: float = -0.5, tol: float = 0.05, margin: float = 0.2,
                   n: int = 31) -> CheckResult:
    """Exact g11 against the thermodynamic closed form away from h = 1."""
    def run():
        hs = np.concatenate([np.linspace(0.2, 1 - margin - 1e-9, n), np.linspace(1 + margin + 1e-9, 1.8, n)])
        worst, at = 0.0, None
        for h in hs:
            p = lmg.LmgParams(float(h), gamma, j)
            _, q = (lmg.broken_metrics(p) if p.phase == lmg.BROKEN else lmg.symmetric_metrics(p))
            e = lmg_exact.exact_qmt(j, float(h), gamma)
            dev = abs(e.g11 - q.g11) / abs(q.g11)
            if dev > worst:
                worst, at = dev, float(h)
        return worst < tol, {"worst": worst, "at_h": at}
    return _timed("finite-j", run)


CHECKS: dict[str, Callable[..., CheckResult]] = {
    "geometry": check_geometry,
    "anomaly": check_anomaly,
    "resonance": check_resonance,
    "dicke-curvature": check_dicke_curvature,
    "oracle": check_oracle,
    "determinants": check_determinants,
    "lmg-curvature": check_lmg_curvature,
    "fidelity": check_fidelity,
    "finite-j": check_finite_j,
}


def run_checks(names: Optional[list[str]] = None, **overrides) -> list[CheckResult]:
    """Run the named checks (all by default). ``overrides`` maps check name -> kwargs."""
    names = list(CHECKS) if not names else names
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown check(s): {', '.join(unknown)}")
    return [CHECKS[n](**overrides.get(n, {})) for n in names]
