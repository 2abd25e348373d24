"""Command-line interface.

Exit codes: 0 success, 2 input/parse error, 3 solver error, 4 a scan found a
visibility below 1/sqrt(2), 5 verification failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import formats
from .lp import OPTIMAL, LpProblem, SizeError, SolverError, solve, verify_model, verify_witness
from .predictions import SettingsSpec, build_prediction_matrix
from .scans import EVEN, RANDOM_COPLANAR, RANDOM_VECTOR, ScanConfig, run_even_spaced_scan, run_random_scan

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_GUARD, EXIT_VERIFY = 0, 2, 3, 4, 5


class InputError(Exception):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(x.replace("−", "-")) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}")


def _n_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split("..")
        return int(lo), int(hi)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a range like 2..7, got {text!r}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--format", choices=("json", "text"), default="text")
    g.add_argument("--v-cap", type=float, default=4.0, help="upper bound imposed on V (default 4)")
    g.add_argument("--tolerance", type=float, default=1e-9)
    g.add_argument("--threads", type=int, default=None, help="pricing threads (default: all cores)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--backend", choices=("auto", "dense", "cg"), default="auto")
    g.add_argument("-o", "--output", type=Path, help="write the result here instead of stdout")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="bellvis", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-settings", parents=[common], help="critical visibility for measurement settings")
    a = p.add_mutually_exclusive_group(required=True)
    a.add_argument("--alpha", type=_floats, help="side A angles, comma-separated (use --alpha=-45,0 for negatives)")
    a.add_argument("--a-file", type=Path)
    b = p.add_mutually_exclusive_group(required=True)
    b.add_argument("--beta", type=_floats, help="side B angles, comma-separated")
    b.add_argument("--b-file", type=Path)
    p.add_argument("--degrees", action="store_true", help="--alpha/--beta are in degrees")

    p = sub.add_parser("solve-data", parents=[common], help="critical visibility for a measured matrix")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", type=Path)
    src.add_argument("--fixture", choices=formats.FIXTURES)

    p = sub.add_parser("scan-even", parents=[common], help="evenly spaced N x N coplanar scans")
    p.add_argument("--n-range", type=_n_range, default=(2, 7))
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("scan-random", parents=[common], help="random settings scans")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--m", type=int, default=5)
    p.add_argument("--vectors", action="store_true", help="draw directions on the sphere instead of angles")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("fixtures", parents=[common], help="list or print bundled data matrices")
    p.add_argument("--show", choices=formats.FIXTURES)

    p = sub.add_parser("verify", parents=[common], help="re-check the certificates in a result document")
    p.add_argument("--result", type=Path, required=True)
    return parser


def _read(path: Path) -> str:
    try:
        return path.read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _side(values, path, degrees, expected):
    if values is not None:
        return np.radians(values) if degrees else np.array(values)
    side, arr = formats.parse_settings(_read(path))
    if side != expected:
        raise InputError(f"{path} declares side {side}, expected {expected}")
    return arr


def _emit(args, data: bytes) -> None:
    if args.output:
        args.output.write_bytes(data)
    else:
        sys.stdout.write(data.decode())


def _solve(args, q: np.ndarray) -> int:
    prob = LpProblem(q, v_cap=args.v_cap, tolerance=args.tolerance)
    backend = "column_generation" if args.backend == "cg" else args.backend
    result = solve(prob, backend=backend, threads=args.threads)
    _emit(args, formats.write_result(result, args.format))
    return EXIT_OK


def cmd_solve_settings(args) -> int:
    a = _side(args.alpha, args.a_file, args.degrees, "A")
    b = _side(args.beta, args.b_file, args.degrees, "B")
    try:
        spec = SettingsSpec(a, b)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    return _solve(args, build_prediction_matrix(spec).values)


def cmd_solve_data(args) -> int:
    q = formats.load_fixture(args.fixture) if args.fixture else formats.parse_matrix(_read(args.input))
    return _solve(args, q.values)


def _scan_output(args, report) -> int:
    if args.format == "json":
        data = json.dumps(report.to_dict(), indent=2) + "\n"
    else:
        s = report.summary
        lines = [f"{r.index:5d}  {r.n}x{r.m}  {r.digest}  "
                 f"{'-' if r.critical_v is None else formats.truncate(r.critical_v)}  {r.status}"
                 f"{'  chsh' + str(r.chsh_subset) if r.chsh_subset else ''}"
                 for r in report.records]
        lines.append(f"trials {s['trials']}, solved {s['solved']}, errors {s['errors']}")
        if s["min_v"] is not None:
            lines.append(f"min V {formats.truncate(s['min_v'])}, max V {formats.truncate(s['max_v'])}, "
                         f"mean V {formats.truncate(s['mean_v'])}")
        lines.append(f"below 1/sqrt(2): {s['below_threshold']}, "
                     f"classification violations: {len(s['classification_violations'])}")
        data = "\n".join(lines) + "\n"
    _emit(args, data.encode())
    if report.guard_fired:
        print(f"conjecture guard: {report.summary['below_threshold']} trial(s) below 1/sqrt(2): "
              f"{report.summary['below_threshold_trials']}", file=sys.stderr)
        return EXIT_GUARD
    return EXIT_OK


def cmd_scan_even(args) -> int:
    cfg = ScanConfig(EVEN, n_range=args.n_range, v_cap=args.v_cap, tolerance=args.tolerance,
                     backend="column_generation" if args.backend == "cg" else args.backend)
    return _scan_output(args, run_even_spaced_scan(cfg, workers=args.workers))


def cmd_scan_random(args) -> int:
    cfg = ScanConfig(RANDOM_VECTOR if args.vectors else RANDOM_COPLANAR, n=args.n, m=args.m,
                     count=args.count, seed=args.seed, v_cap=args.v_cap, tolerance=args.tolerance,
                     backend="column_generation" if args.backend == "cg" else args.backend)
    return _scan_output(args, run_random_scan(cfg, workers=args.workers))


def cmd_fixtures(args) -> int:
    if args.show:
        q = formats.load_fixture(args.show).values
        out = "\n".join(" ".join(f"{x:6.3f}" for x in row) for row in q) + "\n"
    else:
        out = "".join(f"{name}  {q.shape[0]}x{q.shape[1]}\n"
                      for name, q in formats.bundled_fixtures().items())
    _emit(args, out.encode())
    return EXIT_OK


def cmd_verify(args) -> int:
    result = formats.read_result(_read(args.result))
    doc_digest = json.loads(_read(args.result))["input"].get("sha256")
    if doc_digest != formats.matrix_digest(result.q):
        print("verify: input matrix does not match its sha256 digest", file=sys.stderr)
        return EXIT_VERIFY
    if result.status != OPTIMAL:
        raise InputError(f"status {result.status!r} carries no certificates to verify")
    if result.model is None:
        raise InputError("result document has no model")
    if result.witness is None:
        raise InputError("result document has no witness")
    failures = []
    mrep = verify_model(result.model, result.q)
    if not mrep.passed:
        failures.append(f"model: max deviation {mrep.max_deviation:.3g}, "
                        f"probability sum deviation {mrep.sum_deviation:.3g}")
    if abs(result.model.achieved_v - result.critical_v) > 1e-9:
        failures.append("model: achieved_v differs from critical_v")
    wrep = verify_witness(result.witness, result.q, result.critical_v)
    if not wrep.passed:
        failures.extend(f"witness: {f}" for f in wrep.failures)
    if failures:
        for f in failures:
            print(f"verify failed: {f}", file=sys.stderr)
        return EXIT_VERIFY
    _emit(args, (f"verified: model deviation {mrep.max_deviation:.3g}, "
                 f"witness bound {wrep.lhv_bound:.12f} ({wrep.method}), gap {wrep.gap:.3g}\n").encode())
    return EXIT_OK


COMMANDS = {
    "solve-settings": cmd_solve_settings,
    "solve-data": cmd_solve_data,
    "scan-even": cmd_scan_even,
    "scan-random": cmd_scan_random,
    "fixtures": cmd_fixtures,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InputError, formats.ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SolverError, SizeError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
