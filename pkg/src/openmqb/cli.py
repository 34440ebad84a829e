"""Command-line interface: ``openmqb compile | certify | simulate | verify-noise | report``.

Exit codes: 0 success, 2 infeasible, 3 certification or verification
failure, 4 input error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import OpenMQBError
from .experiment import CompiledExperiment, certify, compile_file, simulate, verify_noise
from .planner import budget_csv
from .synth import plans_csv
from .units import TIME, parse_quantity

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_FAIL = 3
EXIT_INPUT = 4

log = logging.getLogger("openmqb")


def _time(text):
    try:
        return parse_quantity(text, TIME, "--horizon")
    except OpenMQBError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _perturb(text):
    label, sep, factor = text.rpartition("=")
    if not sep:
        raise argparse.ArgumentTypeError("expected LABEL=FACTOR")
    try:
        return label, float(factor)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad factor {factor!r}") from None


def _emit(text, path):
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_compile(args):
    exp = compile_file(args.config)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = args.name or Path(args.config).stem
    exp.save(out / f"{stem}.experiment.json")
    (out / f"{stem}.report.txt").write_text(exp.report())
    (out / f"{stem}.budget.csv").write_text(budget_csv(exp.budget))
    (out / f"{stem}.plans.csv").write_text(plans_csv(exp.plans))
    if not args.quiet:
        sys.stdout.write(exp.report())
    return EXIT_OK


def cmd_certify(args):
    exp = CompiledExperiment.load(args.experiment)
    rep = certify(exp, horizon=args.horizon, tolerance=args.tolerance, points=args.points,
                  perturb=dict(args.perturb or []))
    if args.output:
        Path(args.output).write_text(rep.to_csv())
    print(rep.text())
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_simulate(args):
    exp = CompiledExperiment.load(args.experiment)
    names = [n for n in (args.observables or "").split(";") if n] or None
    _, text = simulate(exp, frame=args.frame, observables=names, horizon=args.horizon, points=args.points)
    _emit(text, args.output)
    return EXIT_OK


def cmd_verify_noise(args):
    exp = CompiledExperiment.load(args.experiment)
    reports = verify_noise(exp, n_traj=args.trajectories, seed=args.seed)
    ok = all(r.passed for r in reports)
    if args.output:
        rows = [reports[0].to_csv().splitlines()[0]] if reports else ["channel,target_s-1,fitted_s-1,stderr_s-1,result,note"]
        for r in reports:
            rows.extend(r.to_csv().splitlines()[1:])
        Path(args.output).write_text("\n".join(rows) + "\n")
    for r in reports:
        print(r.text())
    if not reports:
        print("no noise plans to verify")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_report(args):
    exp = CompiledExperiment.load(args.experiment)
    if args.format == "text":
        _emit(exp.report(), args.output)
    elif args.format == "budget-csv":
        _emit(budget_csv(exp.budget), args.output)
    else:
        _emit(plans_csv(exp.plans), args.output)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="openmqb", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"openmqb {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compile", help="plan F, budget and controls; write the experiment file")
    c.add_argument("config")
    c.add_argument("-o", "--output-dir", default=".")
    c.add_argument("--name", help="output file stem (default: config stem)")
    c.add_argument("-q", "--quiet", action="store_true")
    c.set_defaults(func=cmd_compile)

    c = sub.add_parser("certify", help="compare molecular and rescaled simulator evolutions")
    c.add_argument("experiment")
    c.add_argument("--horizon", type=_time, help="molecular-time horizon, e.g. '200 fs'")
    c.add_argument("--tolerance", type=float, default=1e-8)
    c.add_argument("--points", type=int)
    c.add_argument("--perturb", type=_perturb, action="append", metavar="LABEL=FACTOR",
                   help="scale one simulator rate (diagnostic)")
    c.add_argument("-o", "--output", help="CSV of trace distance vs time")
    c.set_defaults(func=cmd_certify)

    c = sub.add_parser("simulate", help="propagate one frame and write observables as CSV")
    c.add_argument("experiment")
    c.add_argument("--frame", choices=("molecular", "simulator"), default="molecular")
    c.add_argument("--observables", help="';'-separated names, e.g. 'pop:0;n:nu1;coh:0,1'")
    c.add_argument("--horizon", type=_time)
    c.add_argument("--points", type=int)
    c.add_argument("-o", "--output", help="CSV path (default stdout)")
    c.set_defaults(func=cmd_simulate)

    c = sub.add_parser("verify-noise", help="trajectory-ensemble check of the dephasing plans")
    c.add_argument("experiment")
    c.add_argument("--trajectories", type=int)
    c.add_argument("--seed", type=int)
    c.add_argument("-o", "--output", help="verification CSV")
    c.set_defaults(func=cmd_verify_noise)

    c = sub.add_parser("report", help="print the stored report")
    c.add_argument("experiment")
    c.add_argument("--format", choices=("text", "budget-csv", "plans-csv"), default="text")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except OpenMQBError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
