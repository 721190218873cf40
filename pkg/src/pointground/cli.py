"""Command-line front end: solve single problems, run scans, verify.

Exit codes: 0 success, 1 usage/configuration error, 2 numerical
non-convergence or a failed check -- nothing else.  Output files are
JSON records or CSV tables with floats printed to 17 significant
digits, so a round-trip load reproduces every numeric field exactly.
No plotting: CSV is the plot interface.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import espace as es
from . import functionals as fn
from . import verify as vf
from .grid import DEFAULT_N, DEFAULT_R_MAX, DEFAULT_R_MIN, build_grid
from .solver import (MultistartError, SolveOptions, multistart,
                     result_to_record)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; the contract says 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _float_list(text: str) -> list[float]:
    items = [piece for piece in text.split(",") if piece.strip()]
    if not items:
        raise argparse.ArgumentTypeError("expected a comma-separated list of numbers")
    try:
        return [float(piece) for piece in items]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


_COMMON_DEFAULTS = {
    "problem": "nlse",
    "alpha": 0.0,
    "p": 2.25,
    "mass": 0.5,
    "grid_n": DEFAULT_N,
    "grid_rmin": DEFAULT_R_MIN,
    "grid_rmax": DEFAULT_R_MAX,
    "max_iter": 50_000,
    "grad_tol": 1e-8,
    "step0": 1.0,
    "armijo_c": 1e-4,
    "armijo_shrink": 0.5,
    "seed": 0,
    "jobs": None,      # falls back to POINTGROUND_JOBS, then 1
    "out": None,
    "format": "json",
    "include_phi": False,
    "allow_p_beyond_theory": False,
    "kind": None,
    "masses": None,
    "mus": None,
    "save_state": None,
    "config": None,
}


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON file with option values; flags override")
    sub.add_argument("--problem", choices=fn.PROBLEM_KINDS)
    sub.add_argument("--alpha", type=float, help="point-interaction strength, >= 0")
    sub.add_argument("--p", type=float, help="nonlinearity exponent")
    sub.add_argument("--mass", type=float, help="target mass rho")
    sub.add_argument("--allow-p-beyond-theory", action="store_true", default=None,
                     dest="allow_p_beyond_theory")
    sub.add_argument("--grid-n", type=int, help="grid node count")
    sub.add_argument("--grid-rmin", type=float)
    sub.add_argument("--grid-rmax", type=float)
    sub.add_argument("--max-iter", type=int)
    sub.add_argument("--grad-tol", type=float)
    sub.add_argument("--step0", type=float)
    sub.add_argument("--armijo-c", type=float, dest="armijo_c")
    sub.add_argument("--armijo-shrink", type=float, dest="armijo_shrink")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--jobs", type=int, help="max concurrent scan points "
                     "(default: POINTGROUND_JOBS or 1)")
    sub.add_argument("--out", help="output path (default: stdout for scans)")


def build_parser() -> _Parser:
    parser = _Parser(prog="pointground",
                     description="Ground states of 3D energies with a point interaction")
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", help="minimize one problem",
                                parents=[], add_help=True)
    _add_common(solve)
    solve.add_argument("--include-phi", action="store_true", default=None,
                       dest="include_phi", help="embed the phi samples in the record")
    solve.add_argument("--format", choices=("json", "csv"))
    solve.add_argument("--save-state", dest="save_state",
                       help="also write the winning state as a "
                            "{lambda, q, n, r_min, r_max, phi} record")

    scan = commands.add_parser("scan", help="run a mass or sub-additivity scan")
    _add_common(scan)
    scan.add_argument("--kind", choices=("mass", "subadd"))
    scan.add_argument("--masses", type=_float_list,
                      help="comma-separated strictly decreasing rho values (kind=mass)")
    scan.add_argument("--mus", type=_float_list,
                      help="comma-separated mu values inside (0, mass) (kind=subadd)")

    ver = commands.add_parser("verify", help="run the identity/GN/scaling-path suite")
    _add_common(ver)

    return parser


def _merge_config(args: argparse.Namespace, parser: _Parser) -> dict:
    merged = dict(_COMMON_DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config file: {exc}")
        if not isinstance(loaded, dict):
            parser.error("config file must hold a JSON object")
        unknown = sorted(set(loaded) - set(_COMMON_DEFAULTS))
        if unknown:
            parser.error(f"unknown config keys: {', '.join(unknown)}")
        merged.update(loaded)
    for key in _COMMON_DEFAULTS:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            merged[key] = flag_value
    if merged["jobs"] is None:
        env = os.environ.get("POINTGROUND_JOBS", "").strip()
        merged["jobs"] = int(env) if env else 1
    return merged


def _problem_spec(cfg: dict) -> fn.ProblemSpec:
    return fn.ProblemSpec(cfg["problem"], float(cfg["alpha"]), float(cfg["p"]),
                          float(cfg["mass"]),
                          allow_p_beyond_theory=bool(cfg["allow_p_beyond_theory"]))


def _grid(cfg: dict):
    return build_grid(int(cfg["grid_n"]), float(cfg["grid_rmin"]), float(cfg["grid_rmax"]))


def _options(cfg: dict) -> SolveOptions:
    return SolveOptions(max_iter=int(cfg["max_iter"]), grad_tol=float(cfg["grad_tol"]),
                        step0=float(cfg["step0"]), armijo_c=float(cfg["armijo_c"]),
                        armijo_shrink=float(cfg["armijo_shrink"]), seed=int(cfg["seed"]))


def _write_text(path: str | None, text: str) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_solve(cfg: dict) -> int:
    spec = _problem_spec(cfg)
    grid = _grid(cfg)
    options = _options(cfg)
    if cfg["include_phi"] and cfg["format"] == "csv":
        raise ValueError("--include-phi requires the json output format")
    try:
        result = multistart(spec, options, grid)
    except MultistartError as err:
        sys.stderr.write("no start converged; per-start diagnostics:\n")
        for diag in err.diagnostics:
            sys.stderr.write(f"  {diag}\n")
        return EXIT_NUMERICAL
    if cfg["save_state"]:
        es.save_state(result.state, cfg["save_state"])
    record = result_to_record(spec, result, include_phi=bool(cfg["include_phi"]))
    if cfg["format"] == "csv":
        keys = list(record)
        lines = ",".join(keys) + "\n" + ",".join(vf._csv_cell(record[k]) for k in keys) + "\n"
        _write_text(cfg["out"], lines)
    else:
        text = json.dumps(record) + "\n"
        _write_text(cfg["out"], text)
    return EXIT_OK if result.converged else EXIT_NUMERICAL


def cmd_scan(cfg: dict) -> int:
    spec = _problem_spec(cfg)
    grid = _grid(cfg)
    options = _options(cfg)
    jobs = max(int(cfg["jobs"]), 1)
    if cfg["kind"] == "mass":
        if not cfg["masses"]:
            raise ValueError("scan --kind mass requires --masses")
        report = vf.small_mass_scan(spec, cfg["masses"], grid, options, jobs=jobs)
    elif cfg["kind"] == "subadd":
        if not cfg["mus"]:
            raise ValueError("scan --kind subadd requires --mus")
        report = vf.subadditivity_scan(spec, cfg["mus"], grid, options, jobs=jobs)
    else:
        raise ValueError("scan requires --kind mass or --kind subadd")
    _write_text(cfg["out"], report.csv_text())
    return EXIT_OK if report.overall_pass else EXIT_NUMERICAL


def cmd_verify(cfg: dict) -> int:
    grid = _grid(cfg)
    seed = int(cfg["seed"])
    lines = []
    ok_all = True

    identity = vf.identity_suite(grid, seed=seed)
    for row, ok in zip(identity.rows, identity.passes):
        ok_all &= ok
        lines.append(f"{'PASS' if ok else 'FAIL'} identity {row['check']} {row['param']} "
                     f"residual={row['residual']:.3e} tol={row['tol']:.1e}")

    gn = vf.gn_scan(grid, seed=seed) if grid.n == DEFAULT_N and seed == 0 \
        else vf.gn_scan(grid, seed=seed, frozen=None)
    for row, ok in zip(gn.rows, gn.passes):
        ok_all &= ok
        lines.append(f"{'PASS' if ok else 'FAIL'} gn r={row['r']:g} "
                     f"k_hat={row['k_hat']:.6f} scaling_dev={row['scaling_dev']:.3e}")

    spec = _problem_spec(cfg)
    options = _options(cfg)
    try:
        result = multistart(spec, options, grid)
        probe = vf.pohozaev_probe(spec, result)
        for row, ok in zip(probe.rows, probe.passes):
            ok_all &= ok
            lines.append(f"{'PASS' if ok else 'FAIL'} pohozaev beta={row['beta']:g} "
                         f"rel_dev={row['rel_dev']:.3e} "
                         f"stationary_residual={row['stationary_residual']:.6g}")
    except (MultistartError, ValueError):
        ok_all = False
        lines.append("FAIL pohozaev solve did-not-converge")

    table = "\n".join(lines) + "\n"
    _write_text(cfg["out"], table)
    if cfg["out"]:
        sys.stdout.write(table)
    return EXIT_OK if ok_all else EXIT_NUMERICAL


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _merge_config(args, parser)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "scan":
            return cmd_scan(cfg)
        return cmd_verify(cfg)
    except ValueError as exc:
        sys.stderr.write(f"pointground: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
