"""Command-line entry point: ``opmethod {solve,scan-omega,tables,compare,wavefunction}``.

All energies and couplings cross this boundary in table units (2E, 2*lambda).
Exit codes: 0 ok, 1 comparison failure, 2 bad input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys

import numpy as np

from . import __version__
from .iteration import IterationError, residual
from .omega import (
    EscalationBudgetExceeded,
    NoExtremumInRange,
    ScanFailed,
    auto_solve,
    find_extremum,
    scan_omega,
    solve_at,
    solve_fixed,
    S_MAX_LADDER,
)
from .oracles import OracleError, fd_solve, pencil_eigen_near
from .pencil import PotentialSpec, SpectrumDomainError, assemble
from .fock import FrequencyContext
from .tables import SCHEMA_VERSION, run_tables, _round15
from .wavefunction import evaluate_psi

EXIT_OK, EXIT_COMPARE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


class InputError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps({k: _round15(v) for k, v in obj.items()}, indent=2)


def _spec(args) -> PotentialSpec:
    spec = PotentialSpec.from_table_units(args.L, args.lambda2, args.g)
    try:
        return spec.validate()
    except SpectrumDomainError as exc:
        raise InputError(str(exc)) from exc


def _pair(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(t) for t in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected 'lo,hi', got {text!r}") from exc
    return lo, hi


def _depths(text: str) -> list:
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        out.append(math.inf if tok in ("inf", "oo") else int(tok))
    return out


def _potential_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--L", type=int, required=True, help="potential power, 1..4")
    p.add_argument("--lambda2", type=float, required=True, help="2*lambda (table units)")
    p.add_argument("--g", type=float, required=True)
    p.add_argument("--level", type=int, default=0)


def _solve(spec, args):
    """Dispatch to fixed, fixed-omega or automatic solve; returns (result, s_max)."""
    if args.omega is not None and args.smax is not None:
        return solve_fixed(spec, args.level, args.omega, args.smax, basis=args.basis, e_tol=args.etol), args.smax
    if args.omega is not None:
        return solve_at(spec, args.level, args.omega, S_MAX_LADDER[-1], basis=args.basis, e_tol=args.etol), S_MAX_LADDER[-1]
    sol = auto_solve(spec, args.level, target_digits=args.digits)
    if args.smax is not None:
        return solve_fixed(spec, args.level, sol.omega, args.smax, basis=args.basis, e_tol=args.etol), args.smax
    return sol.result, sol.s_max


def cmd_solve(args) -> int:
    spec = _spec(args)
    try:
        res, s_max = _solve(spec, args)
    except (IterationError, EscalationBudgetExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    out = {
        "schema_version": SCHEMA_VERSION,
        "L": spec.L,
        "lambda2": spec.lambda2,
        "g": spec.g,
        "level": args.level,
        "energy2": res.energy2,
        "energy": res.energy,
        "omega": res.omega,
        "s_max": s_max,
        "basis": res.dim,
        "converged": res.converged,
        "residual": res.residual_norm,
        "iterations": res.iterations_used,
    }
    print(_dump(out))
    return EXIT_OK if res.converged else EXIT_NUMERIC


def cmd_scan_omega(args) -> int:
    spec = _spec(args)
    lo, hi = args.omega_range
    try:
        scan = scan_omega(spec, args.level, args.depths, lo, hi, steps=args.steps)
    except ScanFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    fh = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["omega", "s", "energy2", "converged"])
        for omega, s, e2, ok in scan.to_csv_rows():
            w.writerow([f"{omega:.15g}", "inf" if s == math.inf else s, "" if not math.isfinite(e2) else f"{e2:.15g}", int(ok)])
    finally:
        if fh is not sys.stdout:
            fh.close()
    if args.extremum:
        try:
            ext = find_extremum(scan, args.extremum_depth)
            print(f"extremum omega={ext.omega:.15g} energy2={2 * ext.energy:.15g} candidates={len(ext.candidates)}", file=sys.stderr)
        except NoExtremumInRange as exc:
            print(f"extremum: none ({exc})", file=sys.stderr)
    return EXIT_OK


def cmd_tables(args) -> int:
    report = run_tables(args.table, profile=args.tolerance_profile, jobs=args.jobs)
    print(report.format_table(), file=sys.stderr)
    text = json.dumps(report.to_dict(timings=args.timings), indent=2)
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK if report.ok else EXIT_COMPARE


def cmd_compare(args) -> int:
    spec = _spec(args)
    try:
        sol = auto_solve(spec, args.level, target_digits=args.digits)
        fd = fd_solve(spec, args.level)
        # shift from the FD value keeps the pencil oracle independent of the OM answer
        pencil = assemble(spec, FrequencyContext.for_power(sol.omega, sol.dim, spec.L))
        pe = pencil_eigen_near(pencil, fd.energy)
    except (IterationError, EscalationBudgetExceeded, OracleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    om = sol.energy
    out = {
        "schema_version": SCHEMA_VERSION,
        "L": spec.L,
        "lambda2": spec.lambda2,
        "g": spec.g,
        "level": args.level,
        "om_energy2": 2 * om,
        "pencil_energy2": pe.energy2,
        "fd_energy2": fd.energy2,
        "fd_error_estimate2": 2 * fd.error_estimate,
        "om_vs_pencil": 2 * abs(om - pe.energy),
        "om_vs_fd": 2 * abs(om - fd.energy),
        "pencil_vs_fd": 2 * abs(pe.energy - fd.energy),
        "omega": sol.omega,
        "basis": sol.dim,
    }
    print(_dump(out))
    return EXIT_OK


def cmd_wavefunction(args) -> int:
    spec = _spec(args)
    try:
        res, _ = _solve(spec, args)
    except (IterationError, EscalationBudgetExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    lo, hi = args.x_range
    xs = np.linspace(lo, hi, args.points)
    wave = evaluate_psi(res.coeffs, spec.g, res.omega, xs, level=args.level)
    fh = open(args.output, "w", newline="") if args.output else sys.stdout
    try:
        fh.write(
            f"# n={args.level} L={spec.L} lambda2={spec.lambda2:.15g} g={spec.g:.15g} "
            f"omega={res.omega:.15g} energy2={res.energy2:.15g}\n"
        )
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "psi"])
        for x, v in zip(wave.xs, wave.values):
            w.writerow([f"{x:.15g}", f"{v:.15g}"])
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opmethod", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def solver_flags(p):
        p.add_argument("--omega", type=float)
        p.add_argument("--smax", type=int)
        p.add_argument("--basis", type=int)
        p.add_argument("--digits", type=int, default=10)
        p.add_argument("--etol", type=float)

    p = sub.add_parser("solve", help="energy of one level")
    _potential_args(p)
    solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("scan-omega", help="E^(s)(omega) curves as CSV")
    _potential_args(p)
    p.add_argument("--depths", type=_depths, default=[0, 3, 50])
    p.add_argument("--omega-range", type=_pair, default=(0.5, 5.0))
    p.add_argument("--steps", type=int, default=48)
    p.add_argument("--output")
    p.add_argument("--extremum", action="store_true", help="report the stationary point on stderr")
    p.add_argument("--extremum-depth", type=int, help="row to search (default: deepest finite s > 0)")
    p.set_defaults(func=cmd_scan_omega)

    p = sub.add_parser("tables", help="rerun the benchmark tables")
    p.add_argument("--table", choices=["1", "2", "3", "4", "all"], default="all")
    p.add_argument("--tolerance-profile", choices=["strict", "default"], default="default")
    p.add_argument("--jobs", type=int)
    p.add_argument("--json", help="write the JSON report here instead of stdout")
    p.add_argument("--timings", action="store_true", help="include wall times in the JSON")
    p.set_defaults(func=cmd_tables)

    p = sub.add_parser("compare", help="OM vs pencil and finite-difference oracles")
    _potential_args(p)
    p.add_argument("--digits", type=int, default=10)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("wavefunction", help="sample the normalized eigenfunction")
    _potential_args(p)
    solver_flags(p)
    p.add_argument("--x-range", type=_pair, default=(-6.0, 6.0))
    p.add_argument("--points", type=int, default=241)
    p.add_argument("--output")
    p.set_defaults(func=cmd_wavefunction)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
