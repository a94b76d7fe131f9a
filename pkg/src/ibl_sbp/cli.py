"""Command-line entry point: operator checks, MMS study, spectrum and flat-plate runs.

Exit codes: 0 success, 1 acceptance failure, 2 usage or config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import logging
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .sbp import check_operator
from .solver import NewtonFailure, write_history_csv

log = logging.getLogger("ibl_sbp")

EXIT_OK, EXIT_ACCEPT, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULTS = {
    "check-operators": {"orders": "1,2,3", "n": "21", "inject_fault": "false"},
    "mms": {
        "orders": "1,2,3", "grids": "21,41,61,81", "dt": "1e-4", "t_end": "1.0",
        "mu": "0.01", "alpha": "1.0", "sigma": "0.0", "newton_tol": "1e-8",
        "h_convention": "n", "reuse_factorization": "true", "refactor_every": "50",
        "rate_window": "0.35", "magnitude_factor": "3.0",
    },
    "spectrum": {
        "N": "16", "M": "16", "s": "2", "include_bcs": "true", "alpha": "1.0",
        "mu": "0.01", "u0": "ones", "x0": "0", "x1": "1", "y0": "0", "y1": "1",
    },
    "blasius": {
        "x0": "0", "x1": "10", "y0": "0", "y1": "4", "N": "80", "M": "80", "beta": "4.0",
        "s": "2", "mu": "0.01", "alpha": "0.0", "sigma": "1.0", "U_inf": "1.0", "p_inf": "0.0",
        "dt": "0.01", "steady_rel_tol": "1e-8", "max_steps": "20000", "ser": "true",
        "dt_max": "1e4", "stations": "3,5,7,9",
    },
}


class UsageError(Exception):
    pass


# config handling

def load_config(command: str, path: str | None, overrides: list[str]) -> dict[str, str]:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp.read_dict({command: DEFAULTS[command]})
    if path:
        if not Path(path).is_file():
            raise UsageError(f"config file not found: {path}")
        try:
            cp.read(path)
        except configparser.Error as exc:
            raise UsageError(f"bad config file: {exc}") from exc
    for item in overrides:
        key, sep, value = item.partition("=")
        section, dot, name = key.partition(".")
        if not sep or not dot or not name:
            raise UsageError(f"--set expects section.key=value, got {item!r}")
        if not cp.has_section(section):
            cp.add_section(section)
        cp.set(section, name, value)
    sect = dict(cp[command])
    unknown = set(sect) - set(DEFAULTS[command])
    if unknown:
        raise UsageError(f"unknown keys in [{command}]: {sorted(unknown)}")
    return sect


def _int(c, k):
    try:
        return int(c[k])
    except ValueError as exc:
        raise UsageError(f"{k} must be an integer") from exc


def _float(c, k):
    try:
        return float(c[k])
    except ValueError as exc:
        raise UsageError(f"{k} must be a number") from exc


def _bool(c, k):
    v = c[k].strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"{k} must be a boolean")


def _ints(c, k):
    try:
        return [int(x) for x in c[k].split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"{k} must be a comma-separated integer list") from exc


def _floats(c, k):
    try:
        return [float(x) for x in c[k].split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"{k} must be a comma-separated number list") from exc


def write_manifest(out: Path, command: str, cfg: dict, status: int, wall: float, files: list[str]):
    canon = json.dumps({command: cfg}, sort_keys=True)
    manifest = {
        "command": command,
        "config": cfg,
        "inputs_sha256": hashlib.sha256(canon.encode()).hexdigest(),
        "versions": {"ibl_sbp": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": scipy.__version__},
        "wall_time_s": wall,
        "exit_status": status,
        "outputs": sorted(files),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))


# commands

def cmd_check_operators(c: dict, out: Path) -> tuple[int, list[str]]:
    orders = _ints(c, "orders")
    n = _int(c, "n")
    fault = _bool(c, "inject_fault")
    if not orders or any(s not in (1, 2, 3) for s in orders):
        raise UsageError("orders must be drawn from 1,2,3")
    rows, ok = [], True
    for s in orders:
        rep = check_operator(s, n, inject_fault=fault)
        for prop, (viol, tol) in rep.items():
            passed = viol <= tol
            ok &= passed
            rows.append((f"SBP({2 * s},{s})", prop, viol, tol, passed))
            print(f"SBP({2 * s},{s}) {prop:<28} max violation {viol:.3e} (tol {tol:.0e}) "
                  f"{'PASS' if passed else 'FAIL'}")
    with open(out / "operator_report.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["family", "property", "max_violation", "tolerance", "pass"])
        for r in rows:
            w.writerow([r[0], r[1], f"{r[2]:.17e}", f"{r[3]:.1e}", r[4]])
    return (EXIT_OK if ok else EXIT_ACCEPT), ["operator_report.csv"]


def cmd_mms(c: dict, out: Path) -> tuple[int, list[str]]:
    from .mms import (REFERENCE, build_reports, compare_with_reference, format_table,
                      run_case, write_reports_csv)

    orders, grids = _ints(c, "orders"), _ints(c, "grids")
    if not orders or not grids:
        raise UsageError("orders and grids must be non-empty")
    kw = dict(dt=_float(c, "dt"), t_end=_float(c, "t_end"), mu=_float(c, "mu"),
              alpha=_float(c, "alpha"), sigma=_float(c, "sigma"),
              newton_tol=_float(c, "newton_tol"),
              reuse_factorization=_bool(c, "reuse_factorization"),
              refactor_every=_int(c, "refactor_every"))
    cases, failed = [], []
    for s in orders:
        for N in sorted(grids):
            try:
                cases.append(run_case(s, N, **kw))
            except (NewtonFailure, FloatingPointError) as exc:
                log.error("case s=%d N=%d failed: %s", s, N, exc)
                failed.append((s, N))
    reports = build_reports(cases, c["h_convention"])
    write_reports_csv(out / "mms_report.csv", reports)
    text = "\n\n".join(format_table(reports, v) for v in ("u", "v", "p", "all"))
    (out / "mms_tables.txt").write_text(text + "\n")
    print(text)
    files = ["mms_report.csv", "mms_tables.txt"]
    if failed:
        return EXIT_NUMERIC, files
    checks = compare_with_reference(reports, _float(c, "rate_window"), _float(c, "magnitude_factor"))
    with open(out / "mms_acceptance.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["variable", "s", "N", "quantity", "measured", "reference", "pass"])
        for row in checks:
            w.writerow(row)
    files.append("mms_acceptance.csv")
    ok = all(r[-1] for r in checks) if checks else True
    return (EXIT_OK if ok else EXIT_ACCEPT), files


def cmd_spectrum(c: dict, out: Path) -> tuple[int, list[str]]:
    from .boundary import default_specs
    from .grid import build_grid, make_operators
    from .spatial import SbpSatScheme
    from .spectrum import (MAX_DENSE_NODES, frozen_operator_matrix, spectrum,
                           symmetric_part_min_eig, write_spectrum_csv, write_summary_json)

    N, M, s = _int(c, "N"), _int(c, "M"), _int(c, "s")
    if N < 1 or M < 1:
        raise UsageError("grid sizes must be positive")
    if N * M > MAX_DENSE_NODES:
        raise UsageError(f"{N}x{M} exceeds the dense eigensolve cap of {MAX_DENSE_NODES} nodes")
    try:
        grid = build_grid((_float(c, "x0"), _float(c, "x1"), _float(c, "y0"), _float(c, "y1")), N, M, s=s)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    ops = make_operators(grid, s)
    sc = SbpSatScheme(grid, ops, default_specs(alpha=_float(c, "alpha")), _float(c, "mu"))
    if c["u0"] == "ones":
        U0 = np.ones(sc.size)
    elif c["u0"] == "free_stream":
        U0 = np.r_[np.ones(sc.nm), np.zeros(2 * sc.nm)]
    else:
        raise UsageError("u0 must be 'ones' or 'free_stream'")
    include = _bool(c, "include_bcs")
    A = frozen_operator_matrix(U0, sc, include)
    lam, summ = spectrum(A)
    sym = symmetric_part_min_eig(A, sc.Pd)
    write_spectrum_csv(out / "eigenvalues.csv", lam)
    write_summary_json(out / "spectrum_summary.json", summ, include_bcs=include,
                       symmetric_part_min_eig=sym)
    print(f"min Re {summ.min_re:.6e}  max Re {summ.max_re:.6e}  "
          f"n(Re<=0) {summ.n_nonpositive}  symmetric-part min eig {sym:.3e}")
    return EXIT_OK, ["eigenvalues.csv", "spectrum_summary.json"]


def cmd_blasius(c: dict, out: Path) -> tuple[int, list[str]]:
    from .blasius import solve_blasius, write_profiles_csv
    from .flatplate import FlatPlateConfig, run_flat_plate

    fc = FlatPlateConfig(
        x0=_float(c, "x0"), x1=_float(c, "x1"), y0=_float(c, "y0"), y1=_float(c, "y1"),
        N=_int(c, "N"), M=_int(c, "M"), beta=_float(c, "beta"), s=_int(c, "s"),
        mu=_float(c, "mu"), alpha=_float(c, "alpha"), sigma=_float(c, "sigma"),
        U_inf=_float(c, "U_inf"), p_inf=_float(c, "p_inf"), dt=_float(c, "dt"),
        steady_rel_tol=_float(c, "steady_rel_tol"), max_steps=_int(c, "max_steps"),
        ser=_bool(c, "ser"), dt_max=_float(c, "dt_max"))
    stations = _floats(c, "stations")
    table = solve_blasius()
    table.export_csv(out / "blasius_table.csv")
    try:
        res = run_flat_plate(fc, table)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    sc = res.scheme
    u, v, p = res.fields
    X, Y = sc.grid.mesh()
    with open(out / "field.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "j", "x", "y", "u", "v", "p"])
        for k in range(sc.nm):
            i, j = divmod(k, sc.grid.M)
            w.writerow([i, j] + [f"{a:.17e}" for a in (X[k], Y[k], u[k], v[k], p[k])])
    files = ["blasius_table.csv", "field.csv", "history.csv"]
    write_history_csv(out / "history.csv", res.run.history)
    inside = [x for x in stations if sc.grid.x_nodes[0] <= x <= sc.grid.x_nodes[-1]]
    if inside and fc.U_inf != 0:
        profiles = res.profiles(inside)
        write_profiles_csv(out / "profiles.csv", profiles)
        files.append("profiles.csv")
        for pr in profiles:
            print(f"x = {pr.x_station:.4f}: max u error {pr.max_u_err:.4f}%  max v error {pr.max_v_err:.4f}%")
    x, tau, ref = res.wall_shear()
    with open(out / "wall_shear.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "tau_w_computed", "tau_w_similarity"])
        for row in zip(x, tau, ref):
            w.writerow([f"{a:.17e}" for a in row])
    files.append("wall_shear.csv")
    print(f"steady run: {res.run.steps} steps, converged={res.run.converged}")
    return (EXIT_OK if res.run.converged else EXIT_NUMERIC), files


COMMANDS = {
    "check-operators": cmd_check_operators,
    "mms": cmd_mms,
    "spectrum": cmd_spectrum,
    "blasius": cmd_blasius,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ibl-sbp", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="INI file with a [%s] section" % name)
        sp.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one config value (repeatable)")
        sp.add_argument("--out", default=f"runs/{name}", help="output directory")
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    t0 = time.perf_counter()
    try:
        cfg = load_config(args.command, args.config, args.set)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        status, files = COMMANDS[args.command](cfg, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NewtonFailure, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    write_manifest(out, args.command, cfg, status, time.perf_counter() - t0, files)
    return status


if __name__ == "__main__":
    sys.exit(main())
