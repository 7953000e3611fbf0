"""Command-line front end.

Every command writes a table (CSV or JSON) to --out or standard output.
Exit codes: 0 ok, 1 validation failure, 2 configuration error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Optional, Sequence

import numpy as np

from . import analysis, lmg, validation
from .errors import GeometryError

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2, 3


class ConfigError(Exception):
    pass


# --------------------------------------------------------------------------
# parsing helpers

def parse_grid(spec: str) -> list[float]:
    """``start:end:step`` (end kept when within half a step) or a single value."""
    parts = spec.split(":")
    try:
        nums = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"bad grid {spec!r}: expected start:end:step")
    if len(nums) == 1:
        return nums
    if len(nums) != 3:
        raise ConfigError(f"bad grid {spec!r}: expected start:end:step")
    start, end, step = nums
    if not step > 0:
        raise ConfigError(f"grid step must be positive in {spec!r}")
    if end < start:
        return []
    n = int(math.floor((end - start) / step + 0.5))
    # 15 significant digits strip the k * step accumulation noise
    return [float(f"{start + k * step:.15g}") for k in range(n + 1)]


def parse_j_set(spec: str) -> list[float]:
    try:
        js = [float(x) for x in spec.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"bad j-set {spec!r}")
    if not js or any(j <= 0 for j in js):
        raise ConfigError("j-set must be a nonempty list of positive numbers")
    return js


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return "" if not math.isfinite(v) else format(float(v), ".17g")
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        return float(v) if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_table(columns: Sequence[str], rows: Sequence[dict], fmt: str, out: Optional[str],
                metadata: Optional[dict] = None):
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])
        text = buf.getvalue()
    else:
        doc = {"metadata": metadata or {}, "columns": list(columns),
               "rows": [{c: _jsonable(r.get(c)) for c in columns} for r in rows]}
        text = json.dumps(doc, indent=1) + "\n"
    _emit(text, out)


def _emit(text: str, out: Optional[str]):
    if out and out != "-":
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _grid(args, name: str) -> list[float]:
    spec = getattr(args, name)
    if spec is None:
        raise ConfigError(f"--{name.replace('_', '-')} is required")
    g = parse_grid(spec)
    if not g:
        raise ConfigError(f"--{name.replace('_', '-')} {spec!r} is empty")
    return g


# --------------------------------------------------------------------------
# commands

def cmd_dicke_metrics(args) -> int:
    lams = _grid(args, "lambda_grid")
    s = analysis.dicke_sweep(lams, args.omega0, args.omega, args.resonant, not args.no_curvature)
    cols = ["lambda", *analysis.DICKE_COLUMNS]
    write_table(cols, list(s.rows()), args.format, args.out, s.metadata)
    return EXIT_OK


def cmd_lmg_thermo(args) -> int:
    if args.h is not None:
        hs = [args.h]
    else:
        hs = _grid(args, "h_grid")
    s = analysis.lmg_thermo_sweep(hs, args.gamma, args.j)
    write_table(["h", *analysis.LMG_THERMO_COLUMNS], list(s.rows()), args.format, args.out, s.metadata)
    return EXIT_OK


def cmd_lmg_exact(args) -> int:
    hs = [args.h] if args.h is not None else _grid(args, "h_grid")
    s = analysis.lmg_exact_sweep(hs, args.gamma, args.j, not args.no_curvature, args.fd_step)
    write_table(["h", *analysis.LMG_EXACT_COLUMNS], list(s.rows()), args.format, args.out, s.metadata)
    return EXIT_OK


def cmd_lmg_mesh(args) -> int:
    if args.mesh:
        try:
            hspec, gspec = args.mesh.split(",")
        except ValueError:
            raise ConfigError("--mesh expects H_GRID,GAMMA_GRID")
        hs, gs = parse_grid(hspec), parse_grid(gspec)
    else:
        hs, gs = _grid(args, "h_grid"), _grid(args, "gamma_grid")
    if len(hs) < 5 or len(gs) < 5:
        raise ConfigError("mesh needs at least 5 points along each axis")
    metrics, curv = analysis.lmg_mesh(args.j, hs, gs)
    rows = []
    for i, h in enumerate(hs):
        for k, g in enumerate(gs):
            m, c = metrics[i][k], curv[i][k]
            rows.append({"h": h, "gamma": g, "g11": m.g11, "g12": m.g12, "g22": m.g22, "det": m.det,
                         "R": None if c is None else c.R})
    write_table(["h", "gamma", "g11", "g12", "g22", "det", "R"], rows, args.format, args.out,
                {"j": args.j})
    return EXIT_OK


def cmd_lmg_phase_space(args) -> int:
    p = lmg.LmgParams(args.h, args.gamma, args.j)
    if args.fixed_points:
        rows = [vars(fp) for fp in lmg.fixed_points(p)]
        write_table(["theta0", "phi0", "kind", "energy"], rows, args.format, args.out, vars(p))
        return EXIT_OK
    qs, ps = _grid(args, "q_grid"), _grid(args, "p_grid")
    if args.chart == "rotated":
        H = lambda q, pp: lmg.rotated_hamiltonian(p, q, pp)
    else:
        H = lambda q, pp: lmg.classical_hamiltonian(p, q, pp)
    rows = [{"Q": q, "P": pp, "H": float(H(q, pp))} for q in qs for pp in ps]
    write_table(["Q", "P", "H"], rows, args.format, args.out, {**vars(p), "chart": args.chart})
    return EXIT_OK


def cmd_peaks_fits(args) -> int:
    js = parse_j_set(args.j_set) if args.j_set else list(analysis.DEFAULT_J_SET)
    progress = (lambda m: print(m, file=sys.stderr)) if args.verbose else None
    study = analysis.peak_study(args.gamma, js, slopes=not args.no_slopes, progress=progress)
    if args.format == "csv":
        rows = [{"j": r.j, "peak": name, "location": p.location, "height": p.height, "kind": p.kind}
                for r in study.records for name, p in r.peaks.items() if p is not None]
        write_table(["j", "peak", "location", "height", "kind"], rows, "csv", args.out)
    else:
        _emit(json.dumps(study.to_dict(), indent=1) + "\n", args.out)
    return EXIT_OK


TOL_FLAGS = {
    "tol_anomaly": ("anomaly", "tol"),
    "tol_oracle": ("oracle", "tol"),
    "tol_fidelity": ("fidelity", "tol"),
    "tol_curvature": ("lmg-curvature", "tol"),
    "tol_det": ("determinants", "tol_broken"),
}

DEFAULT_CHECKS = ["geometry", "anomaly", "resonance", "dicke-curvature", "oracle",
                  "determinants", "lmg-curvature", "fidelity"]


def cmd_validate(args) -> int:
    names = [n.strip() for n in args.only.split(",")] if args.only else DEFAULT_CHECKS
    unknown = [n for n in names if n not in validation.CHECKS]
    if unknown:
        raise ConfigError(f"unknown check(s): {', '.join(unknown)}; known: {', '.join(validation.CHECKS)}")
    over: dict[str, dict] = {}
    for flag, (check, key) in TOL_FLAGS.items():
        v = getattr(args, flag)
        if v is not None:
            over.setdefault(check, {})[key] = v
    seed = args.seed
    over.setdefault("anomaly", {})["seed"] = seed
    over.setdefault("oracle", {})["seed"] = seed + 1
    over.setdefault("lmg-curvature", {})["seed"] = seed + 2
    if args.inject == "regsign":
        over["oracle"]["sign"] = -1.0
    results = validation.run_checks(names, **over)
    ok = all(r.passed for r in results)
    doc = {"passed": ok, "checks": [r.to_dict() for r in results]}
    _emit(json.dumps(doc, indent=1, default=_jsonable) + "\n", args.out)
    for r in results:
        if not r.passed:
            print(f"check failed: {r.name}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_VALIDATION


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="paramgeom", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON file whose keys are flag names; command-line flags win")
    sub = p.add_subparsers(dest="command")

    def common(sp):
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
        sp.add_argument("--out", help="output file (default: stdout)")
        sp.add_argument("--seed", type=int, default=0)
        return sp

    sp = common(sub.add_parser("dicke-metrics", help="Dicke classical/quantum metrics and curvature"))
    sp.add_argument("--omega0", type=float, default=1.0)
    sp.add_argument("--omega", type=float, default=0.8)
    sp.add_argument("--lambda-grid", dest="lambda_grid")
    sp.add_argument("--resonant", action="store_true", help="use omega0 = omega")
    sp.add_argument("--no-curvature", action="store_true")
    sp.set_defaults(func=cmd_dicke_metrics)

    sp = common(sub.add_parser("lmg-thermo", help="LMG thermodynamic-limit metrics and curvature"))
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--h", type=float)
    sp.add_argument("--h-grid", dest="h_grid")
    sp.add_argument("--j", type=float, default=1.0)
    sp.set_defaults(func=cmd_lmg_thermo)

    sp = common(sub.add_parser("lmg-exact", help="exact finite-j QMT and curvature along h"))
    sp.add_argument("--j", type=float, required=True)
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--h", type=float)
    sp.add_argument("--h-grid", dest="h_grid")
    sp.add_argument("--no-curvature", action="store_true")
    sp.add_argument("--fd-step", type=float, help="curvature step (default scales as j^-2/3)")
    sp.set_defaults(func=cmd_lmg_exact)

    sp = common(sub.add_parser("lmg-mesh", help="exact QMT on an (h, gamma) mesh with interior curvature"))
    sp.add_argument("--j", type=float, required=True)
    sp.add_argument("--h-grid", dest="h_grid")
    sp.add_argument("--gamma-grid", dest="gamma_grid")
    sp.add_argument("--mesh", help="H_GRID,GAMMA_GRID in one flag")
    sp.set_defaults(func=cmd_lmg_mesh)

    sp = common(sub.add_parser("lmg-phase-space", help="LMG classical energy surface on a (Q, P) grid"))
    sp.add_argument("--h", type=float, required=True)
    sp.add_argument("--gamma", type=float, required=True)
    sp.add_argument("--j", type=float, default=1.0)
    sp.add_argument("--q-grid", dest="q_grid", default="-2:2:0.05")
    sp.add_argument("--p-grid", dest="p_grid", default="-2:2:0.05")
    sp.add_argument("--chart", choices=("pole", "rotated"), default="pole",
                    help="canonical chart at the north pole, or at a broken-phase minimum")
    sp.add_argument("--fixed-points", action="store_true", help="list stationary points instead")
    sp.set_defaults(func=cmd_lmg_phase_space)

    sp = common(sub.add_parser("peaks-fits", help="finite-j peaks, log-log and extrapolation fits"))
    sp.add_argument("--gamma", type=float, default=-0.5)
    sp.add_argument("--j-set", dest="j_set", help="comma-separated j values")
    sp.add_argument("--no-slopes", action="store_true", help="skip dR/dh at h = 1")
    sp.add_argument("--verbose", action="store_true")
    sp.set_defaults(func=cmd_peaks_fits, format="json")

    sp = common(sub.add_parser("validate", help="run the built-in consistency checks"))
    sp.add_argument("--only", help=f"comma-separated subset of: {', '.join(validation.CHECKS)}")
    sp.add_argument("--inject", choices=("regsign",), help=argparse.SUPPRESS)
    for flag in TOL_FLAGS:
        sp.add_argument("--" + flag.replace("_", "-"), dest=flag, type=float)
    sp.set_defaults(func=cmd_validate)
    return p


def _glue_negative_values(argv: list[str]) -> list[str]:
    """Turn ``--flag -0.6:-0.4:0.05`` into ``--flag=-0.6:-0.4:0.05``.

    argparse only accepts a leading '-' in a value when it parses as a plain
    number, which grid specs do not.
    """
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else ""
        if (tok.startswith("--") and "=" not in tok and len(nxt) > 1 and nxt[0] == "-"
                and (nxt[1].isdigit() or nxt[1] == ".")):
            out.append(f"{tok}={nxt}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def _config_argv(path: str) -> list[str]:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    argv = []
    command = cfg.pop("command", None)
    for k, v in cfg.items():
        flag = "--" + k.replace("_", "-")
        if v is True:
            argv.append(flag)
        elif v is False or v is None:
            continue
        elif isinstance(v, list):
            argv += [flag, ",".join(str(x) for x in v)]
        else:
            argv += [flag, str(v)]
    return ([command] if command else []), argv


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        if "--config" in argv:
            i = argv.index("--config")
            if i + 1 >= len(argv):
                raise ConfigError("--config needs a path")
            path = argv[i + 1]
            rest = argv[:i] + argv[i + 2:]
            command, flags = _config_argv(path)
            if rest and not rest[0].startswith("-"):
                command, rest = [rest[0]], rest[1:]
            argv = command + flags + rest  # later flags override earlier ones
        try:
            args = parser.parse_args(_glue_negative_values(argv))
        except SystemExit as exc:
            return EXIT_OK if exc.code == 0 else EXIT_CONFIG
        if not getattr(args, "command", None):
            parser.print_help(sys.stderr)
            return EXIT_CONFIG
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GeometryError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def run():
    sys.exit(main())
