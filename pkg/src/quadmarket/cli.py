"""Command-line front end.

Subcommands
-----------
solve   Solve an instance file and print a certified run report.
scarf   Emit a Scarf instance (base or ramped) as JSON.
sweep   Solve Scarf over a demand range and print one table row per demand.
verify  Re-check a stored run report, or fuzz the search against the oracle.

Exit codes: 0 success, 2 input error, 3 infeasible, 4 certificate failure.
Certificate failures on linear-mode instances (some bidder with r = 0)
only print a warning.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

from .dispatch import TOL_KKT, TOL_P, NonOptimalSolution
from .model import InstanceFormatError, instance_to_dict, load_instance
from .scarf import BASELINE_DEMAND, scarf_instance
from .search import InfeasibleMarket

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_CERTIFICATE = 4


class InputError(Exception):
    pass


def _emit(text: str, out: str | None) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def _fail(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def parse_demands(text: str) -> list[float]:
    """``lo:hi:step`` inclusive of ``hi``; a bare number is a single demand."""
    parts = text.split(":")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise InputError(f"bad demand range {text!r}; expected lo:hi:step") from None
    if len(vals) == 1:
        vals = [vals[0], vals[0], 1.0]
    elif len(vals) == 2:
        vals.append(1.0)
    if len(vals) != 3 or not all(math.isfinite(v) for v in vals):
        raise InputError(f"bad demand range {text!r}; expected lo:hi:step")
    lo, hi, step = vals
    if step <= 0 or hi < lo or lo < 0:
        raise InputError(f"bad demand range {text!r}; need 0 <= lo <= hi and step > 0")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [lo + i * step for i in range(count)]


def _number(x: float) -> str:
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def cmd_solve(args) -> int:
    from .report import run

    inst = load_instance(args.instance)
    report = run(inst, args.mode, tol_p=args.tol_p, tol_kkt=args.tol_kkt)
    _emit(report.to_json(), args.out)
    if not report.certified:
        msg = "certificate checks failed: " + ", ".join(report.failing())
        if report.linear_mode:
            _warn(msg + " (linear-mode instance)")
            return EXIT_OK
        _fail(msg)
        return EXIT_CERTIFICATE
    return EXIT_OK


def cmd_scarf(args) -> int:
    if args.r1 < 0 or args.r2 < 0:
        raise InputError("ramping coefficients must be nonnegative")
    if args.demand < 0:
        raise InputError("demand must be nonnegative")
    try:
        inst = scarf_instance(args.demand, args.r1, args.r2, args.baseline_demand)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    _emit(json.dumps(instance_to_dict(inst), indent=2), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .golden import SWEEP_COLUMNS, row_from_case, solve_case

    if args.r1 < 0 or args.r2 < 0:
        raise InputError("ramping coefficients must be nonnegative")
    rows, bad = [], []
    for D in parse_demands(args.demands):
        case = solve_case(D, args.r1, args.r2, args.mode, args.tol_kkt)
        rows.append(row_from_case(case))
        failing = list(case.kkt.failing)
        if not case.gap.passed:
            failing.append("duality_gap")
        if not case.equilibrium.passed:
            failing.append("equilibrium")
        if failing:
            bad.append((D, case.quadratic, failing))
    if args.format == "json":
        text = json.dumps([r.as_dict() for r in rows], indent=2)
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for r in rows:
            writer.writerow([_number(v) for v in r.values()])
        text = buf.getvalue()
    _emit(text, args.out)
    status = EXIT_OK
    for D, quadratic, failing in bad:
        msg = f"demand {D:g}: certificate checks failed: {', '.join(failing)}"
        if quadratic:
            _fail(msg)
            status = EXIT_CERTIFICATE
        else:
            _warn(msg + " (linear-mode instance)")
    return status


def cmd_verify(args) -> int:
    if args.oracle:
        from .oracle import fuzz_agreement

        outcome = fuzz_agreement(args.seed, args.count)
        print(f"oracle agreement: {outcome.agree}/{outcome.count} (seed {args.seed})")
        for f in outcome.failures:
            print(f"  instance {f['index']} (n={f['n']}): search {f['search']!r} vs oracle {f['oracle']!r}")
        return EXIT_OK if outcome.passed else EXIT_CERTIFICATE
    if not args.report:
        raise InputError("verify needs a report path or --oracle")
    from .report import load_report, verify_report

    try:
        data = load_report(args.report)
        outcome = verify_report(data, args.tol_kkt)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"unreadable report: {exc}") from None
    except ValueError as exc:
        raise InputError(str(exc)) from None
    worst = max(outcome.residuals.values(), default=0.0)
    print(f"kkt worst residual {worst:.3e}, duality gap {outcome.gap:.3e}, "
          f"max uplift {outcome.max_uplift:.3e}")
    if outcome.passed:
        print("verified")
        return EXIT_OK
    msg = "failing: " + ", ".join(outcome.failing)
    if outcome.linear_mode and "digest" not in outcome.failing and "objective" not in outcome.failing:
        _warn(msg + " (linear-mode instance)")
        return EXIT_OK
    print(msg)
    return EXIT_CERTIFICATE


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--tol-p", type=float, default=TOL_P, help="price bisection tolerance")
    shared.add_argument("--tol-kkt", type=float, default=TOL_KKT, help="KKT residual tolerance")
    shared.add_argument("--mode", choices=("exhaustive", "bnb"), default="exhaustive")
    shared.add_argument("--out", metavar="PATH", help="write output here instead of stdout")

    parser = argparse.ArgumentParser(prog="quadmarket", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[shared], help="solve an instance file")
    p.add_argument("--instance", required=True, metavar="PATH")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("scarf", parents=[shared], help="emit a Scarf instance")
    p.add_argument("--demand", type=float, required=True)
    p.add_argument("--r1", type=float, default=0.0)
    p.add_argument("--r2", type=float, default=0.0)
    p.add_argument("--baseline-demand", type=float, default=BASELINE_DEMAND)
    p.set_defaults(func=cmd_scarf)

    p = sub.add_parser("sweep", parents=[shared], help="solve Scarf over a demand range")
    p.add_argument("--demands", default="56:70:2", metavar="LO:HI:STEP")
    p.add_argument("--r1", type=float, default=0.0)
    p.add_argument("--r2", type=float, default=0.0)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", parents=[shared], help="re-check a report or fuzz against the oracle")
    p.add_argument("report", nargs="?", metavar="REPORT")
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=200)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, InstanceFormatError, FileNotFoundError, IsADirectoryError) as exc:
        _fail(str(exc))
        return EXIT_INPUT
    except InfeasibleMarket as exc:
        _fail(f"infeasible: {exc}")
        return EXIT_INFEASIBLE
    except NonOptimalSolution as exc:
        _fail(f"certificate: {exc}")
        return EXIT_CERTIFICATE


if __name__ == "__main__":
    sys.exit(main())
