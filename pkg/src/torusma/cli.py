"""Command-line interface: solve, path, verify, sweep, oracle-check.

Exit codes: 0 success, 1 usage or configuration error, 2 solver failure,
3 continuity path stalled.  All artifacts (CSV, JSON, binary fields) are
byte-reproducible from the configuration except for a timestamp confined
to CSV header comments.
"""
from __future__ import annotations

import argparse
import csv
import datetime
import json
import os
import sys

import numpy as np

from .grid import (FourierTerm, PeriodicGrid, ScalarField, fourier_field,
                   zeros)
from .forms import PositivityViolation
from .ma_core import Family, MAProblem, perturbed_metric, residual
from .elliptic import IncompatibleRHS, NoConvergence, SpectrumHit
from .continuity import (ConeExit, ContinuityPath, NewtonConfig, PathRecord,
                         newton_solve, run_path, write_path_csv)
from .estimates import build_report, lp_sweep
from .oracle import case_by_name, dense_newton, registry
from .serialize import load_field, save_field

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_STALLED = 3

_FAMILIES = {f.value: f for f in Family}

SOLVER_ERRORS = (ConeExit, NoConvergence, IncompatibleRHS, SpectrumHit,
                 PositivityViolation)


class ConfigError(Exception):
    pass


def parse_f_terms(text: str, real_dim: int) -> list[FourierTerm]:
    """Parse 'kind:modes:amplitude[:phase]' terms separated by ';'.

    Example: "cos:1,0:0.1;sin:0,1:0.05:1.57".
    """
    terms = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(":")
        if len(parts) not in (3, 4):
            raise ConfigError(f"bad F term {chunk!r}: expected "
                              "kind:modes:amplitude[:phase]")
        kind, modes_txt, amp_txt = parts[:3]
        try:
            modes = tuple(int(m) for m in modes_txt.split(","))
            amplitude = float(amp_txt)
            phase = float(parts[3]) if len(parts) == 4 else 0.0
        except ValueError as e:
            raise ConfigError(f"bad F term {chunk!r}: {e}") from e
        if kind not in ("cos", "sin"):
            raise ConfigError(f"bad F term {chunk!r}: kind must be cos or sin")
        if len(modes) != real_dim:
            raise ConfigError(f"bad F term {chunk!r}: needs {real_dim} "
                              "mode entries")
        terms.append(FourierTerm(kind, modes, amplitude, phase))
    return terms


def _build_grid(args) -> PeriodicGrid:
    try:
        return PeriodicGrid(args.n, args.N)
    except ValueError as e:
        raise ConfigError(str(e)) from e


def _build_F(args, grid: PeriodicGrid) -> ScalarField:
    if getattr(args, "f_file", None):
        if not os.path.exists(args.f_file):
            raise ConfigError(f"F field file not found: {args.f_file}")
        F = load_field(args.f_file)
        if F.grid != grid:
            raise ConfigError("F field file grid does not match --n/--N")
        return F
    if getattr(args, "f", None):
        return fourier_field(grid, parse_f_terms(args.f, grid.real_dim))
    return zeros(grid)


def _config_payload(args, command: str) -> dict:
    keys = ("n", "N", "family", "f", "t", "seed", "schedule_points",
            "t_max", "amplitudes", "q", "tol")
    payload = {"command": command}
    for k in keys:
        if hasattr(args, k):
            payload[k] = getattr(args, k)
    return payload


def _write_json(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _outdir(args) -> str:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def cmd_solve(args) -> int:
    grid = _build_grid(args)
    F = _build_F(args, grid)
    family = _FAMILIES[args.family]
    out = _outdir(args)
    _write_json(os.path.join(out, "config.json"),
                _config_payload(args, "solve"))
    problem = MAProblem(grid, F, family, args.t)
    info: dict = {}
    diagnostics = {"converged": False}
    code = EXIT_OK
    try:
        phi = newton_solve(problem, None, NewtonConfig(tol_residual=args.tol),
                           info)
        diagnostics.update(converged=True, iterations=info["iterations"],
                           residual_inf=info["residual_inf"])
        save_field(os.path.join(out, "phi.kmaf"), phi)
    except SOLVER_ERRORS as e:
        diagnostics.update(error=f"{type(e).__name__}: {e}")
        code = EXIT_SOLVER
    _write_json(os.path.join(out, "solve.json"), diagnostics)
    print(json.dumps(diagnostics, sort_keys=True))
    return code


def cmd_path(args) -> int:
    grid = _build_grid(args)
    F = _build_F(args, grid)
    family = _FAMILIES[args.family]
    out = _outdir(args)
    _write_json(os.path.join(out, "config.json"),
                _config_payload(args, "path"))
    schedule = np.linspace(0.0, args.t_max, args.schedule_points)
    path = run_path(grid, F, family, schedule,
                    NewtonConfig(tol_residual=args.tol))
    write_path_csv(path, os.path.join(out, "path.csv"))
    summary = {"completed": path.completed, "records": len(path.records),
               "failed_t": path.failed_t, "failure": path.failure}
    if path.records:
        save_field(os.path.join(out, "phi.kmaf"), path.final_phi)
    _write_json(os.path.join(out, "path.json"), summary)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK if path.completed else EXIT_STALLED


def _load_run(input_dir: str):
    cfg_path = os.path.join(input_dir, "config.json")
    phi_path = os.path.join(input_dir, "phi.kmaf")
    if not (os.path.exists(cfg_path) and os.path.exists(phi_path)):
        raise ConfigError(f"missing config.json or phi.kmaf in {input_dir}")
    with open(cfg_path) as fh:
        cfg = json.load(fh)
    phi = load_field(phi_path)
    grid = phi.grid
    if cfg.get("f"):
        F = fourier_field(grid, parse_f_terms(cfg["f"], grid.real_dim))
    else:
        F = zeros(grid)
    family = _FAMILIES[cfg["family"]]
    t = cfg.get("t", cfg.get("t_max", 1.0))
    return cfg, grid, F, family, float(t), phi


def cmd_verify(args) -> int:
    cfg, grid, F, family, t, phi = _load_run(args.input)
    problem = MAProblem(grid, F, family, t)
    r = residual(phi, problem)
    gp = perturbed_metric(phi, problem)
    rec = PathRecord(t=t, phi=phi, newton_iters=0,
                     residual_inf=float(np.abs(r.values).max()),
                     min_eig_gprime=float(gp.min_eig.min()),
                     max_eig_gprime=float(gp.max_eig.max()),
                     sup_phi=float(phi.values.max()),
                     inf_phi=float(phi.values.min()),
                     sup_S=0.0, energy_identity_err=0.0)
    path = ContinuityPath(family, [rec], completed=True)
    csv_path = os.path.join(args.input, "path.csv")
    if family is Family.NEG_C1 and os.path.exists(csv_path):
        # per-record sup bounds straight from the stored path diagnostics
        path = _path_from_csv(csv_path, family, phi)
    report = build_report(path, F)
    out = _outdir(args)
    with open(os.path.join(out, "report.json"), "w") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    with open(os.path.join(out, "report.txt"), "w") as fh:
        fh.write(report.to_table())
        fh.write("\n")
    print(report.to_table())
    if args.report_only:
        return EXIT_OK
    return EXIT_OK if report.all_passed() else EXIT_SOLVER


def _path_from_csv(csv_path: str, family: Family,
                   final_phi: ScalarField) -> ContinuityPath:
    records = []
    with open(csv_path) as fh:
        rows = [r for r in fh if not r.startswith("#")]
    reader = csv.DictReader(rows)
    for row in reader:
        records.append(PathRecord(
            t=float(row["t"]), phi=final_phi,
            newton_iters=int(row["newton_iters"]),
            residual_inf=float(row["residual_inf"]),
            min_eig_gprime=float(row["min_eig_gprime"]),
            max_eig_gprime=float(row["max_eig_gprime"]),
            sup_phi=float(row["sup_phi"]), inf_phi=float(row["inf_phi"]),
            sup_S=float(row["sup_S"]),
            energy_identity_err=float(row["energy_identity_err"])))
    return ContinuityPath(family, records, completed=True)


def cmd_sweep(args) -> int:
    grid = _build_grid(args)
    F_unit = _build_F(args, grid)
    try:
        amplitudes = [float(a) for a in args.amplitudes.split(",")]
    except ValueError as e:
        raise ConfigError(f"bad amplitude list: {e}") from e
    entries, rows = lp_sweep(grid, F_unit, amplitudes, args.q)
    out = _outdir(args)
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
    with open(os.path.join(out, "sweep.csv"), "w", newline="") as fh:
        fh.write(f"# written {stamp}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("amplitude", "eF_lq", "sup_phi", "ratio", "error"))
        for row in sorted(rows, key=lambda r: r["amplitude"]):
            writer.writerow((f"{row['amplitude']:.17g}",
                             f"{row['eF_lq']:.17g}",
                             f"{row['sup_phi']:.17g}",
                             f"{row['ratio']:.17g}", row["error"]))
    failures = [r for r in rows if r["error"]]
    for row in rows:
        print(f"amplitude={row['amplitude']:g} sup_phi={row['sup_phi']:.6g} "
              f"ratio={row['ratio']:.6g} {row['error']}")
    if failures and not args.allow_fail:
        return EXIT_SOLVER
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    cases = registry() if args.case is None else [case_by_name(args.case)]
    tol = 1e-8
    worst = 0.0
    ok = True
    for case in cases:
        grid = PeriodicGrid(case.n, 16 if case.n == 1 else 8)
        problem = case.problem(grid)
        phi_spectral = newton_solve(problem)
        phi_dense = dense_newton(problem)
        diff = float(np.abs(phi_spectral.values - phi_dense.values).max())
        star = float(np.abs(phi_spectral.values
                            - case.aligned_phi_star(grid).values).max())
        passed = diff < tol and star < tol
        ok = ok and passed
        worst = max(worst, diff, star)
        print(f"{case.name}: solver-oracle diff {diff:.3e}, "
              f"recovery error {star:.3e} "
              f"[{'ok' if passed else 'FAIL'}]")
    print(f"worst discrepancy {worst:.3e}")
    return EXIT_OK if ok else EXIT_SOLVER


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=1, choices=(1, 2),
                   help="complex dimension")
    p.add_argument("--N", type=int, default=64, help="grid resolution per axis")
    p.add_argument("--f", type=str, default="",
                   help="F data as 'kind:modes:amplitude[:phase];...'")
    p.add_argument("--f-file", type=str, default="",
                   help="F data as a binary field file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=str, default="", help="output directory")
    p.add_argument("--tol", type=float, default=1e-10)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torusma",
        description="Monge-Ampere solves and estimate verification on flat "
                    "complex tori")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="single-parameter Newton solve")
    _add_common(p)
    p.add_argument("--family", default="cy", choices=sorted(_FAMILIES))
    p.add_argument("--t", type=float, default=1.0)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("path", help="continuity run in t")
    _add_common(p)
    p.add_argument("--family", default="neg-c1", choices=sorted(_FAMILIES))
    p.add_argument("--schedule-points", type=int, default=21)
    p.add_argument("--t-max", type=float, default=1.0)
    p.set_defaults(func=cmd_path)

    p = sub.add_parser("verify", help="estimate report for a finished run")
    p.add_argument("--input", required=True, help="directory of a solve/path run")
    p.add_argument("--out", type=str, default="")
    p.add_argument("--report-only", action="store_true",
                   help="emit the report but always exit 0")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="amplitude sweep of sup|phi| vs data norm")
    _add_common(p)
    p.add_argument("--amplitudes", required=True,
                   help="comma-separated amplitude list")
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--allow-fail", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle-check", help="manufactured cases vs dense solver")
    p.add_argument("--case", default=None)
    p.set_defaults(func=cmd_oracle_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except KeyError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


def entrypoint() -> None:
    sys.exit(main())
