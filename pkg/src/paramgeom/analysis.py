"""Sweeps, peak detection, curve fits and finite-size extrapolation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from . import dicke, lmg, lmg_exact
from .errors import GeometryError, NoBracket, SingularFit
from .geometry import ParameterPoint, curvature_from_mesh, scalar_curvature_fd

DEFAULT_J_SET = (12, 16, 20, 24, 28, 32, 40, 50, 75, 100, 125, 175, 250, 300, 500)

# Dicke curvature needs extended precision near the transition
DICKE_DPS = 50
DICKE_STEP = 1e-9


# --------------------------------------------------------------------------
# sweeps

@dataclass
class SweepResult:
    axis: str
    grid: list[float]
    values: dict[str, list[Optional[float]]]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("sweep grid must be strictly increasing")
        for k, v in self.values.items():
            if len(v) != len(self.grid):
                raise ValueError(f"column {k} has {len(v)} entries for {len(self.grid)} grid points")

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if v is None else v for v in self.values[name]], dtype=float)

    def rows(self) -> Iterable[dict]:
        for i, x in enumerate(self.grid):
            yield {self.axis: x, **{k: v[i] for k, v in self.values.items()}}


def sweep(point: Callable[[float], dict], grid: Sequence[float], axis: str,
          columns: Sequence[str], metadata: Optional[dict] = None) -> SweepResult:
    """Evaluate ``point`` on every grid value.

    ``point`` returns a dict of quantities; anything it omits, or a
    GeometryError it raises, becomes an absent (None) entry.
    """
    values: dict[str, list] = {c: [] for c in columns}
    for x in grid:
        try:
            row = point(float(x))
        except GeometryError:
            row = {}
        for c in columns:
            values[c].append(row.get(c))
    return SweepResult(axis, [float(x) for x in grid], values, dict(metadata or {}))


def _curv(field, p, step):
    try:
        return scalar_curvature_fd(field, p, step=step).R
    except GeometryError:
        return None


DICKE_COLUMNS = ("g11_cl", "g12_cl", "g22_cl", "g11_q", "g12_q", "g22_q", "R_cl", "R_q", "phase")


def dicke_point(omega0: float, omega: float, lam: float, resonant: bool = False,
                curvature: bool = True, dps: int = DICKE_DPS, step: float = DICKE_STEP) -> dict:
    if resonant:
        omega0 = omega
    p = dicke.DickeParams(omega0, omega, lam)
    phase = p.phase
    if resonant:
        cl, q = dicke.resonant_metrics(omega, lam)
    else:
        cl, q = dicke.classical_metric(p), dicke.quantum_metric(p)
    row = dict(zip(DICKE_COLUMNS[:6], cl.components() + q.components()), phase=phase)
    if curvature:
        x = ParameterPoint(omega, lam)
        for kind, key in (("classical", "R_cl"), ("quantum", "R_q")):
            f = dicke.metric_field(kind, omega0, phase=phase, resonant=resonant, dps=dps)
            row[key] = _curv(f, x, step)
    return row


def dicke_sweep(lambdas: Sequence[float], omega0: float = 1.0, omega: float = 0.8,
                resonant: bool = False, curvature: bool = True) -> SweepResult:
    return sweep(lambda l: dicke_point(omega0, omega, l, resonant, curvature), lambdas, "lambda",
                 DICKE_COLUMNS, {"omega0": omega if resonant else omega0, "omega": omega, "resonant": resonant})


LMG_THERMO_COLUMNS = ("g11_cl", "g12_cl", "g22_cl", "g11_q", "g12_q", "g22_q", "det_q", "R_q", "phase")


def lmg_thermo_point(h: float, gamma: float, j: float,
                     actions: lmg.LmgActions = lmg.QUANTUM_ACTIONS) -> dict:
    p = lmg.LmgParams(h, gamma, j)
    if p.phase == lmg.SYMMETRIC:
        cl, q = lmg.symmetric_metrics(p, actions)
        R = None  # metric is degenerate: curvature undefined
    else:
        cl, q = lmg.broken_metrics(p, actions)
        R = lmg.broken_curvature(p)
    return dict(zip(LMG_THERMO_COLUMNS[:6], cl.components() + q.components()),
                det_q=q.det, R_q=R, phase=p.phase)


def lmg_thermo_sweep(hs: Sequence[float], gamma: float, j: float) -> SweepResult:
    return sweep(lambda h: lmg_thermo_point(h, gamma, j), hs, "h", LMG_THERMO_COLUMNS,
                 {"gamma": gamma, "j": j})


LMG_EXACT_COLUMNS = ("g11", "g12", "g22", "det", "R")


def precursor_scale(j: float) -> float:
    """Width of the finite-size precursor region around h = 1, ~ j^(-2/3)."""
    return j ** (-2.0 / 3.0)


def default_fd_step(j: float) -> float:
    """Finite-difference step for curvature of the exact QMT.

    Used with Richardson refinement (step and step/2). A fixed fraction of
    the precursor width keeps the truncation error uniform in j: halving
    the step moves R by ~1e-4 for small j, while for j >= 250 smaller steps
    start to amplify rounding noise (~1e-3).
    """
    return 0.06 * precursor_scale(j)


def exact_curvature(j: float, h: float, gamma: float, step: Optional[float] = None,
                    refine: bool = True) -> float:
    f = lmg_exact.exact_metric_field(j)
    return scalar_curvature_fd(f, ParameterPoint(h, gamma), step=step or default_fd_step(j), refine=refine).R


def lmg_exact_point(j: float, h: float, gamma: float, curvature: bool = True,
                    step: Optional[float] = None) -> dict:
    g = lmg_exact.exact_qmt(j, h, gamma)
    row = dict(zip(LMG_EXACT_COLUMNS[:3], g.components()), det=g.det)
    if curvature:
        try:
            row["R"] = exact_curvature(j, h, gamma, step)
        except GeometryError:
            row["R"] = None
    return row


def lmg_exact_sweep(hs: Sequence[float], gamma: float, j: float, curvature: bool = True,
                    step: Optional[float] = None) -> SweepResult:
    return sweep(lambda h: lmg_exact_point(j, h, gamma, curvature, step), hs, "h", LMG_EXACT_COLUMNS,
                 {"gamma": gamma, "j": j})


def lmg_mesh(j: float, hs: Sequence[float], gammas: Sequence[float]):
    """Exact QMT on an (h, gamma) mesh plus curvature on its interior.

    Returns (metrics, curvature) as nested lists indexed [i_h][i_gamma].
    """
    hs, gammas = list(hs), list(gammas)
    metrics = [[lmg_exact.exact_qmt(j, h, g) for g in gammas] for h in hs]
    spacing = (hs[1] - hs[0], gammas[1] - gammas[0]) if len(hs) > 1 and len(gammas) > 1 else (1.0, 1.0)
    return metrics, curvature_from_mesh(metrics, spacing)


# --------------------------------------------------------------------------
# peaks

MAXIMUM = "maximum"
MINIMUM = "minimum"


@dataclass(frozen=True)
class Peak:
    location: float
    height: float
    kind: str
    index: int = 0


def _parabola(x0, x1, x2, y0, y1, y2):
    d = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0)
    if d == 0:
        return x1, y1
    n = (x1 - x0) ** 2 * (y1 - y2) - (x1 - x2) ** 2 * (y1 - y0)
    xv = x1 - 0.5 * n / d
    if not min(x0, x2) <= xv <= max(x0, x2):
        return x1, y1
    # value of the interpolating parabola at its vertex
    L = lambda x: (y0 * (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2))
                   + y1 * (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2))
                   + y2 * (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1)))
    return xv, L(xv)


def polish_extremum(func: Callable[[float], float], lo: float, hi: float, kind: str,
                    tol: float = 1e-6) -> tuple[float, float]:
    """Locate an extremum of ``func`` inside [lo, hi] by bounded Brent search."""
    sgn = 1.0 if kind == MINIMUM else -1.0
    res = minimize_scalar(lambda x: sgn * func(x), bounds=(lo, hi), method="bounded",
                          options={"xatol": tol})
    return float(res.x), float(sgn * res.fun)


def find_peaks(s: SweepResult, quantity: str, func: Optional[Callable[[float], float]] = None,
               tol: float = 1e-6) -> list[Peak]:
    """All interior local extrema of a sampled quantity.

    Each is refined by a parabola through its three-point neighbourhood; if
    ``func`` (the underlying model) is given the location is then polished
    by a bounded search between the neighbouring grid points.
    """
    x = np.asarray(s.grid, dtype=float)
    y = s.column(quantity)
    peaks = []
    for i in range(1, len(x) - 1):
        y0, y1, y2 = y[i - 1], y[i], y[i + 1]
        if not (np.isfinite(y0) and np.isfinite(y1) and np.isfinite(y2)):
            continue
        if y1 > y0 and y1 >= y2:
            kind = MAXIMUM
        elif y1 < y0 and y1 <= y2:
            kind = MINIMUM
        else:
            continue
        loc, height = _parabola(x[i - 1], x[i], x[i + 1], y0, y1, y2)
        if func is not None:
            loc, height = polish_extremum(func, x[i - 1], x[i + 1], kind, tol)
        peaks.append((loc, height, kind))
    peaks.sort()
    return [Peak(float(l), float(hv), k, n) for n, (l, hv, k) in enumerate(peaks)]


# --------------------------------------------------------------------------
# fits

MODELS = {
    "POLY2": 3,   # a + b h + c h^2
    "RAT1": 3,    # a + b / (h - c)
    "RAT1F": 2,   # a + b / (h - 1)
    "RAT2F": 2,   # a + b / (h - 1)^2
    "POWER": 3,   # a + b j^(-p)
    "LOGLIN": 2,  # ln|y| = m ln j + n  (coefficients m, n)
    "LIN": 2,     # a + b j
}


@dataclass(frozen=True)
class FitResult:
    model: str
    coefficients: tuple[float, ...]
    residual: float

    def __post_init__(self):
        if len(self.coefficients) != MODELS[self.model]:
            raise ValueError(f"{self.model} takes {MODELS[self.model]} coefficients")
        if not math.isfinite(self.residual):
            raise ValueError("non-finite fit residual")

    def __call__(self, x):
        return evaluate_model(self.model, self.coefficients, np.asarray(x, dtype=float))

    def limit(self) -> float:
        """j -> infinity limit of a POWER fit (or the constant of RAT fits)."""
        if self.model not in ("POWER", "RAT1", "RAT1F", "RAT2F"):
            raise ValueError(f"no asymptote defined for {self.model}")
        return self.coefficients[0]


def evaluate_model(model: str, c, x):
    if model == "POLY2":
        return c[0] + c[1] * x + c[2] * x * x
    if model == "RAT1":
        return c[0] + c[1] / (x - c[2])
    if model == "RAT1F":
        return c[0] + c[1] / (x - 1.0)
    if model == "RAT2F":
        return c[0] + c[1] / (x - 1.0) ** 2
    if model == "POWER":
        return c[0] + c[1] * x ** (-c[2])
    if model == "LOGLIN":
        return np.exp(c[0] * np.log(x) + c[1])
    if model == "LIN":
        return c[0] + c[1] * x
    raise ValueError(f"unknown model {model!r}")


def _linear(A: np.ndarray, y: np.ndarray):
    if np.linalg.matrix_rank(A) < A.shape[1]:
        raise SingularFit("rank-deficient design matrix")
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return coef


def _rms(r) -> float:
    return float(np.sqrt(np.mean(np.square(r))))


def _nonlinear(model: str, x: np.ndarray, y: np.ndarray, grid: np.ndarray, basis) -> FitResult:
    # coarse scan of the nonlinear coefficient with (a, b) solved linearly,
    # then Levenberg-Marquardt on all three from the best scan point
    best = None
    for t in grid:
        A = np.column_stack([np.ones_like(x), basis(x, t)])
        if not np.all(np.isfinite(A)) or np.linalg.matrix_rank(A) < 2:
            continue
        ab, *_ = np.linalg.lstsq(A, y, rcond=None)
        r = _rms(A @ ab - y)
        if best is None or r < best[0]:
            best = (r, ab[0], ab[1], t)
    if best is None:
        raise SingularFit(f"{model}: no admissible starting point")
    c0 = np.array(best[1:])
    res = least_squares(lambda c: evaluate_model(model, c, x) - y, c0, method="lm")
    c = res.x if res.success and np.all(np.isfinite(res.x)) else c0
    r = _rms(evaluate_model(model, c, x) - y)
    if r > best[0]:
        c, r = c0, best[0]
    return FitResult(model, tuple(float(v) for v in c), r)


def fit(model: str, xs, ys) -> FitResult:
    """Least-squares fit of one of the MODELS."""
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}")
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape:
        raise ValueError("xs and ys differ in length")
    k = MODELS[model]
    if len(x) < k + 1:
        raise SingularFit(f"{model} needs at least {k + 1} points, got {len(x)}")
    one = np.ones_like(x)
    if model == "LIN":
        c = _linear(np.column_stack([one, x]), y)
        return FitResult(model, tuple(map(float, c)), _rms(c[0] + c[1] * x - y))
    if model == "POLY2":
        c = _linear(np.column_stack([one, x, x * x]), y)
        return FitResult(model, tuple(map(float, c)), _rms(evaluate_model(model, c, x) - y))
    if model in ("RAT1F", "RAT2F"):
        e = 1 if model == "RAT1F" else 2
        c = _linear(np.column_stack([one, 1.0 / (x - 1.0) ** e]), y)
        return FitResult(model, tuple(map(float, c)), _rms(evaluate_model(model, c, x) - y))
    if model == "LOGLIN":
        if np.any(x <= 0) or np.any(y == 0):
            raise SingularFit("LOGLIN needs positive abscissae and nonzero ordinates")
        ly = np.log(np.abs(y))
        c = _linear(np.column_stack([np.log(x), one]), ly)
        return FitResult(model, tuple(map(float, c)), _rms(c[0] * np.log(x) + c[1] - ly))
    if model == "POWER":
        if np.any(x <= 0):
            raise SingularFit("POWER needs positive abscissae")
        return _nonlinear(model, x, y, np.linspace(0.05, 3.0, 296), lambda x, p: x ** (-p))
    # RAT1: pole scanned outside the data range on either side
    span = float(np.ptp(x)) or 1.0
    lo, hi = float(x.min()), float(x.max())
    grid = np.concatenate([lo - span * np.geomspace(1e-3, 20.0, 200),
                           hi + span * np.geomspace(1e-3, 20.0, 200)])
    return _nonlinear(model, x, y, grid, lambda x, c: 1.0 / (x - c))


def power_zero(f: FitResult) -> float:
    """j at which a POWER fit a + b j^-p crosses zero."""
    a, b, p = f.coefficients
    if a == 0 or b / a >= 0 or p == 0:
        raise NoBracket("fitted curve never crosses zero for j > 0")
    return float((-b / a) ** (1.0 / p))


# --------------------------------------------------------------------------
# finite-j precursors of the LMG transition

PEAK_NAMES = ("g11", "g12_1", "g12_2", "g22_1", "g22_2", "g22_3", "R_1", "R_2")


@dataclass
class PeakRecord:
    j: float
    gamma: float
    peaks: dict[str, Optional[Peak]]


def _pick(peaks: list[Peak], pattern: Sequence[str]) -> list[Optional[Peak]]:
    """First run of consecutive peaks matching ``pattern`` of kinds."""
    kinds = [p.kind for p in peaks]
    n = len(pattern)
    for i in range(len(peaks) - n + 1):
        if kinds[i:i + n] == list(pattern):
            return peaks[i:i + n]
    return [None] * n


def lmg_peak_record(j: float, gamma: float, n_metric: int = 241, n_curv: int = 61,
                    tol: float = 1e-6, step: Optional[float] = None) -> PeakRecord:
    """Precursor peaks of the exact QMT components and of R at one j.

    Metric components are scanned over 1 +- 6u and R over [1 - 5u, 1 + u],
    with u = j^(-2/3) the precursor width; every extremum is then polished
    against the exact model.
    """
    u = precursor_scale(j)
    step = step or default_fd_step(j)
    hs = np.linspace(max(0.02, 1.0 - 6.0 * u), 1.0 + 6.0 * u, n_metric)
    ms = lmg_exact_sweep(hs, gamma, j, curvature=False)
    comp = lambda name: (lambda h: getattr(lmg_exact.exact_qmt(j, h, gamma), name))

    out: dict[str, Optional[Peak]] = {}
    p11 = [p for p in find_peaks(ms, "g11", comp("g11"), tol) if p.kind == MAXIMUM]
    out["g11"] = max(p11, key=lambda p: p.height) if p11 else None

    p12 = find_peaks(ms, "g12", comp("g12"), tol)
    mins = [p for p in p12 if p.kind == MINIMUM]
    maxs = [p for p in p12 if p.kind == MAXIMUM]
    out["g12_1"] = min(mins, key=lambda p: p.height) if mins else None
    out["g12_2"] = max(maxs, key=lambda p: p.height) if maxs else None

    p22 = find_peaks(ms, "g22", comp("g22"), tol)
    out["g22_1"], out["g22_2"], out["g22_3"] = _pick(p22, (MAXIMUM, MINIMUM, MAXIMUM))

    hr = np.linspace(max(0.02, 1.0 - 5.0 * u), 1.0 + u, n_curv)
    rs = sweep(lambda h: {"R": exact_curvature(j, h, gamma, step)}, hr, "h", ("R",))
    pr = find_peaks(rs, "R", lambda h: exact_curvature(j, h, gamma, step), tol)
    out["R_1"], out["R_2"] = _pick(pr, (MINIMUM, MAXIMUM))
    return PeakRecord(j, gamma, out)


def critical_slope(j: float, gamma: float, h0: float = 1.0, rel: float = 0.01,
                   start: Optional[float] = None, min_step: float = 1e-5,
                   fd_step: Optional[float] = None) -> float:
    """dR/dh at h0 by central differences, halving until two estimates agree to ``rel``."""
    s = start or 0.2 * precursor_scale(j)
    R = lambda h: exact_curvature(j, h, gamma, fd_step)
    prev = (R(h0 + s) - R(h0 - s)) / (2 * s)
    while s > min_step:
        s /= 2
        cur = (R(h0 + s) - R(h0 - s)) / (2 * s)
        if abs(cur - prev) <= rel * abs(cur):
            return cur
        prev = cur
    raise GeometryError(f"dR/dh at h={h0} did not settle to {rel:.0%} (j={j})")


def slope_at_critical(j_set: Sequence[float], gamma: float, slopes: Optional[Sequence[float]] = None) -> FitResult:
    """LIN fit of dR/dh at h = 1 against j."""
    if slopes is None:
        slopes = [critical_slope(j, gamma) for j in j_set]
    return fit("LIN", j_set, slopes)


def curvature_crossing(js: Sequence[float], maxima: Sequence[float]) -> float:
    """j at which the POWER fit of the R maxima crosses zero."""
    y = np.asarray(maxima, dtype=float)
    if not (np.any(y > 0) and np.any(y < 0)):
        raise NoBracket("R maxima do not change sign over the given j range")
    return power_zero(fit("POWER", js, y))


@dataclass
class PeakStudy:
    gamma: float
    records: list[PeakRecord]
    loglin: dict[str, FitResult]
    in_h: dict[str, FitResult]
    in_j: dict[str, FitResult]
    crossing: Optional[float]
    slope_fit: Optional[FitResult] = None
    slopes: Optional[list[float]] = None

    def series(self, name: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(j, location, height) of one named peak across the j-set."""
        rows = [(r.j, r.peaks[name].location, r.peaks[name].height)
                for r in self.records if r.peaks.get(name) is not None]
        if not rows:
            return np.zeros(0), np.zeros(0), np.zeros(0)
        j, loc, hgt = map(np.array, zip(*rows))
        return j, loc, hgt

    def to_dict(self) -> dict:
        fr = lambda f: None if f is None else {"model": f.model, "coefficients": list(f.coefficients),
                                               "residual": f.residual}
        return {
            "gamma": self.gamma,
            "peaks": [{"j": r.j, **{k: (None if p is None else {"location": p.location, "height": p.height,
                                                             "kind": p.kind})
                                    for k, p in r.peaks.items()}} for r in self.records],
            "table": {k: {"m": f.coefficients[0], "n": f.coefficients[1]} for k, f in self.loglin.items()},
            "fits_in_h": {k: fr(f) for k, f in self.in_h.items()},
            "fits_in_j": {k: fr(f) for k, f in self.in_j.items()},
            "crossing_j": self.crossing,
            "slopes": None if self.slopes is None else [{"j": j, "dRdh": s} for j, s in
                                                        zip([r.j for r in self.records], self.slopes)],
            "slope_fit": fr(self.slope_fit),
        }


H_MODELS = {"g11": "RAT2F", "g12_1": "RAT1F", "g12_2": "RAT1F", "g22_1": "POLY2",
            "g22_2": "POLY2", "g22_3": "POLY2", "R_1": "RAT1", "R_2": "RAT1"}


def peak_study(gamma: float, j_set: Sequence[float] = DEFAULT_J_SET, slopes: bool = True,
               progress: Optional[Callable[[str], None]] = None, **kw) -> PeakStudy:
    """Peaks for every j, log-log fits of peak heights, fits in h and in j, and crossing.

    Fit failures (e.g. SingularFit for too small a j-set) propagate; a
    missing zero crossing of the R maxima is reported as None.
    """
    records = []
    for j in j_set:
        records.append(lmg_peak_record(j, gamma, **kw))
        if progress:
            progress(f"peaks j={j}")
    study = PeakStudy(gamma, records, {}, {}, {}, None)
    for name in PEAK_NAMES:
        j, loc, hgt = study.series(name)
        if len(j) == 0:
            continue
        study.in_h[name] = fit(H_MODELS[name], loc, hgt)
        if name.startswith("R"):
            study.in_j[name] = fit("POWER", j, hgt)
        else:
            study.loglin[name] = fit("LOGLIN", j, hgt)
    j, _, hmax = study.series("R_2")
    try:
        study.crossing = curvature_crossing(j, hmax)
    except GeometryError:
        study.crossing = None
    if slopes:
        study.slopes = []
        for jj in j_set:
            study.slopes.append(critical_slope(jj, gamma))
            if progress:
                progress(f"slope j={jj}")
        study.slope_fit = slope_at_critical(j_set, gamma, study.slopes)
    return study
