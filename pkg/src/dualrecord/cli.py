"""Command-line front end.

    dualrecord estimate TABLE --direction prone [--bootstrap 1000 --seed 1] [--json]
    dualrecord simulate --config paper-tables --reps 1000 --seed 7 [--out FILE]
    dualrecord profile TABLE --direction averse [--n-max 1000]

Exit codes: 0 ok, 2 input error, 3 estimation infeasible.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classic import (log_integrated_jeffreys, log_integrated_uniform, lp_estimate,
                      nour_estimate)
from .exceptions import DualRecordError
from .integrated import estimate, estimate_with_bootstrap, select_hyperparams, tb_profile
from .simulation import ConfigError, StudyConfig, load_scenarios, run_study
from .tables import Direction, TableFormatError, read_table, validate

EXIT_INPUT = 2
EXIT_INFEASIBLE = 3

DIRECTIONS = [d.value for d in Direction]


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _load(path):
    try:
        return read_table(path)
    except TableFormatError as exc:
        raise CliError(f"cannot parse table: {exc}", EXIT_INPUT) from None


def _fmt(x) -> str:
    if x is None:
        return "n/a"
    return f"{x:.6g}"


def estimate_report(table, direction, bootstrap=None, seed=0) -> dict:
    if bootstrap:
        res = estimate_with_bootstrap(table, direction, reps=bootstrap, seed=seed)
    else:
        res = estimate(table, direction)
    report = {
        "table": {"x11": table.x11, "x10": table.x10, "x01": table.x01},
        "x0": table.x0,
        "direction": res.direction.value,
        "point": res.point,
        "n0": res.n0,
        "tie": res.tie,
        "hyperparams": {"n_star": res.hyper.n_star, "b": res.hyper.b, "r2": res.hyper.r2,
                        "s1": res.hyper.s1, "s2": res.hyper.s2},
        "lp": None,
        "lp_raw": None,
        "nour": None,
        "warnings": list(res.warnings),
    }
    try:
        lp = lp_estimate(table)
        report["lp"], report["lp_raw"] = lp.point, lp.raw
    except DualRecordError:
        pass
    try:
        report["nour"] = nour_estimate(table)
    except DualRecordError:
        pass
    if bootstrap:
        report["bootstrap"] = {"reps": bootstrap, "seed": seed, "se": res.se,
                               "ci": list(res.ci), "failures": res.bootstrap_failures}
    return report


def format_report(rep: dict) -> str:
    t = rep["table"]
    h = rep["hyperparams"]
    lines = [
        f"table        x11={t['x11']} x10={t['x10']} x01={t['x01']} (x0={rep['x0']})",
        f"direction    {rep['direction']}",
        f"estimate     {rep['point']}" + ("  (tie with next integer)" if rep["tie"] else ""),
        f"n0           {_fmt(rep['n0'])}",
        f"N*           {_fmt(h['n_star'])}",
        f"b            {_fmt(h['b'])}",
        f"r2           {_fmt(h['r2'])}",
        f"s1           {_fmt(h['s1'])}",
        f"s2           {_fmt(h['s2'])}",
        f"lincoln-petersen {rep['lp'] if rep['lp'] is not None else 'n/a'} (raw {_fmt(rep['lp_raw'])})",
        f"nour         {_fmt(rep['nour'])}",
    ]
    if "bootstrap" in rep:
        b = rep["bootstrap"]
        lines += [
            f"bootstrap    reps={b['reps']} seed={b['seed']} failures={b['failures']}",
            f"se           {_fmt(b['se'])}",
            f"95% ci       {_fmt(b['ci'][0])} {_fmt(b['ci'][1])}",
        ]
    for w in rep["warnings"]:
        lines.append(f"warning      {w}")
    return "\n".join(lines) + "\n"


def cmd_estimate(args, out) -> int:
    table = _load(args.table)
    if args.bootstrap is not None and args.bootstrap < 100:
        raise CliError("--bootstrap needs at least 100 replicates", EXIT_INPUT)
    try:
        rep = estimate_report(table, args.direction, args.bootstrap, args.seed)
    except DualRecordError as exc:
        flags = validate(table)
        extra = f" [{flags}]" if not flags.ok else ""
        raise CliError(f"estimation infeasible: {exc}{extra}", EXIT_INFEASIBLE) from None
    if args.json:
        out.write(json.dumps(rep, indent=2) + "\n")
    else:
        out.write(format_report(rep))
    return 0


def cmd_simulate(args, out) -> int:
    try:
        scenarios = load_scenarios(args.config)
        config = StudyConfig(scenarios, reps=args.reps, seed=args.seed)
    except (ConfigError, ValueError) as exc:
        raise CliError(f"bad config: {exc}", EXIT_INPUT) from None
    summary = run_study(config, workers=args.workers)
    text = summary.to_csv()
    if args.out:
        Path(args.out).write_text(text)
    else:
        out.write(text)
    return 0


def _tsv(x) -> str:
    return "nan" if x is None or math.isnan(x) else repr(float(x))


def cmd_profile(args, out) -> int:
    table = _load(args.table)
    n_max = args.n_max if args.n_max is not None else 10 * table.x0
    if n_max < table.x0:
        raise CliError(f"--n-max {n_max} is below x0 = {table.x0}", EXIT_INPUT)
    try:
        hyper = select_hyperparams(table, args.direction)
    except DualRecordError as exc:
        raise CliError(f"estimation infeasible: {exc}", EXIT_INFEASIBLE) from None
    n_lo = max(table.x0, table.x1dot + 1)
    tb = np.full(n_max - table.x0 + 1, np.nan)
    if n_max >= n_lo:
        tb[n_lo - table.x0:] = tb_profile(table, hyper, n_lo, n_max)
    out.write("N\tlogL_tb\tlogL_uniform\tlogL_jeffreys\n")
    for i, N in enumerate(range(table.x0, n_max + 1)):
        if N > table.x0:
            u, j = log_integrated_uniform(N, table), log_integrated_jeffreys(N, table)
        else:
            u = j = None
        out.write(f"{N}\t{_tsv(tb[i])}\t{_tsv(u)}\t{_tsv(j)}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dualrecord",
        description="Population size from dependent dual-record (two-list) data.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate N for one table")
    p.add_argument("table", help="JSON {\"x11\":..,\"x10\":..,\"x01\":..} or CSV with header x11,x10,x01")
    p.add_argument("--direction", required=True, choices=DIRECTIONS)
    p.add_argument("--bootstrap", type=int, metavar="INT", help="parametric bootstrap replicates")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="run a replication study")
    p.add_argument("--config", required=True, metavar="PATH|paper-tables")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("profile", help="tabulate log-likelihood profiles over N")
    p.add_argument("table")
    p.add_argument("--direction", required=True, choices=DIRECTIONS)
    p.add_argument("--n-max", type=int, dest="n_max", metavar="INT", help="default 10 * x0")
    p.set_defaults(func=cmd_profile)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except CliError as exc:
        print(f"dualrecord: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
