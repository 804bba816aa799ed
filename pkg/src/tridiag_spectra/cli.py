"""Command-line front end.

Every command writes a table (CSV by default, JSON with ``--format json``)
preceded by ``# key: value`` metadata lines recording all parameters, so a
run is reproducible from its own output.  Exit status: 0 on success, 1 for
invalid input, 2 when a computation misses its accuracy target.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .basis import PotentialParams, potential_landmarks, potential_value
from .errors import AccuracyError, TridiagError
from .resonances import DEFAULT_SIZE, DEFAULT_THETA, RotationConfig, complex_spectrum
from .scattering import PhaseShiftCurve, locate_resonance, phase_shift_curve
from .spectra import (
    DEFAULT_N,
    bound_state_count,
    c_spectrum,
    critical_strengths,
    energy_levels,
    energy_spectrum,
    gamma_spectrum,
    recover_parameters,
)
from .wavefunction import DEFAULT_TRUNCATION, eigenfunction_solution

EXIT_OK, EXIT_INPUT, EXIT_ACCURACY = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.15g" % x
    return str(x)


class Table:
    def __init__(self, columns, rows, meta):
        self.columns = list(columns)
        self.rows = [list(r) for r in rows]
        self.meta = meta

    def to_csv(self) -> str:
        buf = io.StringIO()
        for k, v in self.meta.items():
            buf.write(f"# {k}: {_fmt(v)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(x) for x in r])
        return buf.getvalue()

    def to_json(self) -> str:
        def conv(x):
            if isinstance(x, (np.integer,)):
                return int(x)
            if isinstance(x, (np.floating, float)):
                return float("%.15g" % x)
            if isinstance(x, np.bool_):
                return bool(x)
            return x

        doc = {
            "meta": {k: conv(v) for k, v in self.meta.items()},
            "columns": self.columns,
            "rows": [[conv(x) for x in r] for r in self.rows],
        }
        return json.dumps(doc, indent=1) + "\n"


def read_csv_table(text: str):
    """Parse CSV output of this tool into ``(meta, columns, rows)``."""
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            k, _, v = line[2:].partition(": ")
            meta[k] = v
        elif line:
            body.append(line)
    rows = list(csv.reader(body))
    return meta, rows[0], rows[1:]


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("TRIDIAG_SPECTRA_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    items = list(items)
    n = _threads()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def _params(args) -> PotentialParams:
    if args.C is None or args.gamma is None:
        raise UsageError("--C and --gamma are required")
    return PotentialParams(lam=args.lam, C=args.C, gamma=args.gamma)


def _energy_unit(args):
    """Factor converting eps to the reported energy unit and the column name."""
    if args.physical_units:
        return 0.5 * args.lam**2, "E"
    return 1.0, "eps"


def _base_meta(args) -> dict:
    meta = {"command": args.command, "version": __version__}
    for k, v in sorted(vars(args).items()):
        if k in ("command", "func", "out", "format"):
            continue
        meta[f"arg.{k}"] = "none" if v is None else v
    meta["energy_unit"] = "E = eps lam^2 / 2" if args.physical_units else "eps = 2E/lam^2"
    return meta


def _eps_grid(lo, hi, n):
    return np.linspace(hi, lo, n)


# -- commands ---------------------------------------------------------------

def cmd_potential(args):
    p = _params(args)
    r_min = args.r_min if args.r_min is not None else 0.01 / p.lam
    r_max = args.r_max if args.r_max is not None else 10.0 / p.lam
    r = np.linspace(r_min, r_max, args.points)
    V = potential_value(p, r)
    meta = _base_meta(args)
    meta.update({"V0": p.V0, "D": p.D, "Z_eff": p.Z_eff})
    if p.in_main_class:
        lm = potential_landmarks(p)
        meta.update({"r0": lm.r0, "r1": lm.r1, "V_extremum": lm.V_extremum})
    else:
        meta["banner"] = "outside main solvability class 0 < gamma < 1 (gamma*V0 > 0 holds)"
    return Table(["r", "V"], zip(r, V), meta), EXIT_OK


def cmd_critical(args):
    meta = _base_meta(args)
    n_max = args.n_max
    if args.eps_min is not None:
        grid = _eps_grid(args.eps_min, args.eps if args.eps is not None else 0.0, args.points)
        if args.gamma is None:
            res = _pmap(lambda e: critical_strengths(e, args.N), grid)
        else:
            res = _pmap(lambda e: (c_spectrum(e, args.gamma, args.N).positive,
                                   c_spectrum(e, args.gamma, args.N).negative), grid)
        rows = []
        for e, (cp, cm) in zip(grid, res):
            for n in range(n_max + 1):
                rows.append([e, n, cp[n] if n < cp.size else np.inf, cm[n] if n < cm.size else -np.inf])
        cols = ["eps", "n", "C_plus", "C_minus"]
        return Table(cols, rows, meta), EXIT_OK
    eps = 0.0 if args.eps is None else args.eps
    if args.gamma is None:
        cp, cm = critical_strengths(eps, args.N)
        cols = ["n", "C_plus", "C_minus"]
    else:
        spec = c_spectrum(eps, args.gamma, args.N)
        cp, cm = spec.positive, spec.negative
        cols = ["n", "C_hat_plus", "C_hat_minus"]
    rows = [[n, cp[n] if n < cp.size else np.inf, cm[n] if n < cm.size else -np.inf] for n in range(n_max + 1)]
    return Table(cols, rows, meta), EXIT_OK


def _parse_grid(text):
    if text is None:
        return None
    if text.startswith("@"):
        with open(text[1:]) as fh:
            vals = [float(t) for t in fh.read().replace(",", " ").split()]
    else:
        vals = [float(t) for t in text.split(",") if t.strip()]
    return np.array(vals)


def cmd_spectrum(args):
    p = _params(args)
    meta = _base_meta(args)
    count = bound_state_count(p.gamma, p.C, args.N)
    meta["bound_states"] = count
    unit, name = _energy_unit(args)
    if count == 0:
        meta["note"] = "0 bound states"
        return Table(["n", name, name + "_fit"], [], meta), EXIT_OK
    levels = energy_levels(p.gamma, p.C, M=args.M, eps_grid=_parse_grid(args.seed_grid), N=args.N)
    rows = [[lv.n, lv.eps * unit, lv.eps_fit * unit] for lv in levels]
    if len(levels) < count:
        meta["note"] = f"{count - len(levels)} level(s) not reached by the energy grid"
    return Table(["n", name, name + "_fit"], rows, meta), EXIT_OK


def cmd_resonances(args):
    p = _params(args)
    cfg = RotationConfig.for_params(p, l=args.l, theta=args.theta, N=args.N, eta=args.eta)
    meta = _base_meta(args)
    meta.update({"eta_used": cfg.eta, "N_used": cfg.N, "K_used": cfg.quad_order})
    cs = complex_spectrum(p, cfg, check_quadrature=True)
    unit, name = _energy_unit(args)
    rows = [[k, e.real * unit, e.imag * unit, d] for k, e, d in cs.rows()]
    meta["bound_count"] = int(np.sum(cs.kinds == "bound"))
    meta["resonance_count"] = int(np.sum(cs.kinds == "resonance"))
    return Table(["kind", "re_" + name, "im_" + name, "drift"], rows, meta), EXIT_OK


def fit_from_table(columns, rows):
    """Resonance fit from serialized curve rows (as text)."""
    e = np.array([float(r[columns.index("eps")]) for r in rows])
    d = np.array([float(r[columns.index("delta")]) for r in rows])
    return locate_resonance(PhaseShiftCurve(l=0, eps=e, delta=d))


def cmd_phaseshift(args):
    p = _params(args)
    lo = 0.1 if args.eps_min is None else args.eps_min
    hi = 8.0 if args.eps_max is None else args.eps_max
    meta = _base_meta(args)
    curve = phase_shift_curve(p, args.l, (lo, hi), n_samples=args.points)
    meta["samples"] = curve.eps.size
    status = EXIT_OK
    # values are rounded to the serialized precision so a re-read refits identically
    e = np.array([float(_fmt(x)) for x in curve.eps])
    d = np.array([float(_fmt(x)) for x in curve.delta])
    rows = [[a, b] for a, b in zip(e, d)]
    if args.find_resonance:
        fit = locate_resonance(PhaseShiftCurve(l=args.l, eps=e, delta=d))
        if fit is None:
            meta["resonance"] = "not found"
        else:
            unit, _ = _energy_unit(args)
            meta.update({"resonance": "found", "eps_res": fit.eps_res, "width": fit.width,
                         "fit_residual": fit.residual})
            if args.physical_units:
                meta.update({"E_res": fit.eps_res * unit, "E_width": fit.width * unit})
    return Table(["eps", "delta"], rows, meta), status


def _parse_levels(text):
    out = []
    for part in text.split(","):
        if ".." in part:
            a, b = part.split("..")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    if any(n < 0 for n in out):
        raise UsageError("levels must be non-negative")
    return out


def _radial_norm(sol):
    """``lam * int psi**2 dr`` by adaptive quadrature over the decay range."""
    from scipy.integrate import quad

    lam = sol.params.lam
    rho_end = max(46.0 / sol.mu, 10.0)
    edges = np.concatenate([[0.0], np.geomspace(0.05, rho_end, 12)])
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        total += quad(lambda x: sol(x / lam) ** 2, a, b, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    return float(total)


def cmd_wavefunction(args):
    p = _params(args)
    levels = _parse_levels(args.level)
    meta = _base_meta(args)
    eps = energy_spectrum(p.gamma, p.C, M=args.M)
    meta["bound_states"] = eps.size
    missing = [n for n in levels if n >= eps.size]
    if missing:
        raise UsageError(f"level not bound: level {missing[0]} requested but only {eps.size} bound state(s) exist")
    r_max = args.r_max if args.r_max is not None else 20.0 / p.lam
    r = np.linspace(0.0, r_max, args.points)
    cols, data = ["r"], [r]
    status = EXIT_OK
    for n in levels:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sol = eigenfunction_solution(p, eps[n], N=args.N, method=args.method)
        norm = _radial_norm(sol)
        meta[f"level{n}.eps"] = eps[n]
        meta[f"level{n}.nodes"] = sol.nodes()
        meta[f"level{n}.norm"] = norm
        meta[f"level{n}.omega"] = sol.omega
        if abs(norm - 1.0) > args.norm_tol:
            status = EXIT_ACCURACY
            meta[f"level{n}.diagnostic"] = f"norm misses 1 by {abs(norm - 1):.2e}"
        cols.append(f"psi_{n}")
        data.append(sol(r))
    return Table(cols, zip(*data), meta), status


def cmd_param_spectrum(args):
    meta = _base_meta(args)
    lo = -20.0 if args.eps_min is None else args.eps_min
    hi = 0.0 if args.eps_max is None else args.eps_max
    grid = _eps_grid(lo, hi, args.points)
    rows = []
    if args.sweep == "gamma":
        if args.C is None:
            raise UsageError("--sweep gamma needs --C")
        specs = _pmap(lambda e: gamma_spectrum(e, args.C, args.N), grid)
        outside = False
        for e, s in zip(grid, specs):
            window = s.values[(s.values >= args.gamma_min) & (s.values <= args.gamma_max)]
            for n, g in enumerate(window[: args.n_max + 1]):
                rows.append([e, n, g, bool(0 < g < 1)])
                outside |= not 0 < g < 1
        if outside:
            meta["banner"] = "values outside the main solvability class 0 < gamma < 1 are included; no accuracy guarantee"
        return Table(["eps", "n", "gamma", "in_main_class"], rows, meta), EXIT_OK
    if args.gamma is None:
        raise UsageError("--sweep C needs --gamma")
    specs = _pmap(lambda e: c_spectrum(e, args.gamma, args.N), grid)
    for e, s in zip(grid, specs):
        for sign, br in ((1, s.positive), (-1, s.negative)):
            for n, c in enumerate(br[: args.n_max + 1]):
                rows.append([e, sign, n, c])
    return Table(["eps", "branch", "n", "C"], rows, meta), EXIT_OK


def cmd_recover(args):
    target = _parse_grid(args.levels)
    if target is None or target.size == 0:
        raise UsageError("--levels is required")
    g, c, res = recover_parameters(target, sign=1 if args.sign > 0 else -1, M=args.M, N=args.N)
    meta = _base_meta(args)
    meta.update({"gamma": g, "C": c, "residual": res})
    lv = -energy_spectrum(g, c, M=args.M, N=args.N)
    rows = [[n, t, lv[n] if n < lv.size else np.nan] for n, t in enumerate(np.sort(target)[::-1])]
    return Table(["n", "target_minus_eps", "fitted_minus_eps"], rows, meta), EXIT_OK


# -- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--lambda", dest="lam", type=float, default=1.0, help="inverse length lam (default 1)")
    common.add_argument("--C", type=float, help="dimensionless strength C")
    common.add_argument("--gamma", type=float, help="shape parameter gamma")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--physical-units", action="store_true", help="report E = eps lam^2/2")

    parser = _Parser(prog="tridiag-spectra", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("potential", parents=[common], help="potential curve and landmarks")
    p.add_argument("--r-min", type=float)
    p.add_argument("--r-max", type=float)
    p.add_argument("--points", type=int, default=400)
    p.set_defaults(func=cmd_potential)

    p = sub.add_parser("critical", parents=[common], help="critical strengths / zero-energy thresholds")
    p.add_argument("--eps", type=float)
    p.add_argument("--eps-min", type=float, help="sweep eps from --eps (default 0) down to this value")
    p.add_argument("--points", type=int, default=41)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--N", type=int, default=DEFAULT_N, help="tridiagonal matrix size")
    p.set_defaults(func=cmd_critical)

    p = sub.add_parser("spectrum", parents=[common], help="S-wave energy spectrum")
    p.add_argument("--M", type=int, default=20, help="continued-fraction order")
    p.add_argument("--seed-grid", help="comma-separated eps samples or @file")
    p.add_argument("--N", type=int, default=DEFAULT_N, help="tridiagonal matrix size")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("resonances", parents=[common], help="complex-rotation bound states and resonances")
    p.add_argument("--l", type=int, default=0)
    p.add_argument("--theta", type=float, default=DEFAULT_THETA)
    p.add_argument("--eta", type=float)
    p.add_argument("--N", type=int, default=DEFAULT_SIZE, help="Laguerre basis size")
    p.set_defaults(func=cmd_resonances)

    p = sub.add_parser("phaseshift", parents=[common], help="scattering phase shift curve")
    p.add_argument("--l", type=int, default=0)
    p.add_argument("--eps-min", type=float)
    p.add_argument("--eps-max", type=float)
    p.add_argument("--points", type=int, default=200)
    p.add_argument("--find-resonance", action="store_true")
    p.set_defaults(func=cmd_phaseshift)

    p = sub.add_parser("wavefunction", parents=[common], help="normalized S-wave bound states")
    p.add_argument("--level", default="0", help="level list, e.g. 0,2 or 0..3")
    p.add_argument("--M", type=int, default=20)
    p.add_argument("--method", choices=["recursion", "eigenvector"], default="eigenvector")
    p.add_argument("--r-max", type=float)
    p.add_argument("--points", type=int, default=401)
    p.add_argument("--norm-tol", type=float, default=1e-6)
    p.add_argument("--N", type=int, default=DEFAULT_TRUNCATION, help="expansion truncation")
    p.set_defaults(func=cmd_wavefunction)

    p = sub.add_parser("param-spectrum", parents=[common], help="parameter spectrum over an energy range")
    p.add_argument("--sweep", choices=["gamma", "C"], required=True)
    p.add_argument("--gamma-min", type=float, default=-2.0)
    p.add_argument("--gamma-max", type=float, default=3.0)
    p.add_argument("--eps-min", type=float)
    p.add_argument("--eps-max", type=float)
    p.add_argument("--points", type=int, default=41)
    p.add_argument("--n-max", type=int, default=10)
    p.add_argument("--N", type=int, default=DEFAULT_N, help="tridiagonal matrix size")
    p.set_defaults(func=cmd_param_spectrum)

    p = sub.add_parser("recover", parents=[common], help="search (gamma, C) for a list of -eps levels")
    p.add_argument("--levels", required=True, help="comma-separated -eps values or @file")
    p.add_argument("--sign", type=int, default=1)
    p.add_argument("--M", type=int, default=20)
    p.add_argument("--N", type=int, default=DEFAULT_N, help="tridiagonal matrix size")
    p.set_defaults(func=cmd_recover)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_INPUT
        table, status = args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AccuracyError as exc:
        print(f"accuracy target missed: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    except TridiagError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = table.to_json() if args.format == "json" else table.to_csv()
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return status


if __name__ == "__main__":
    sys.exit(main())
