"""Command-line front end: ``qcore expand|dissect|verify|family|oracle``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import catalog as catalog_mod
from .cores import BudgetExceededError as EnumerationBudgetError
from .cores import count_cores, count_pairs
from .dissect import ProgressionSelector, extract
from .expr import Evaluator, QExprError
from .series import LaurentSeries, PrecisionError
from .verify import (DEFAULT_BUDGET, DEFAULT_ORDER, EXIT_FAIL, EXIT_OK, EXIT_PRECISION, EXIT_USAGE,
                     FAMILIES, VerificationReport, run_catalog, run_family)

SCHEMA_VERSION = 1

FAMILY_DEFAULTS = {"thm1.1": (2, 40), "thm1.2": (2, 60), "thm4.1": (2, 20)}


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    order: int = DEFAULT_ORDER
    catalog_path: Path | None = None
    output_format: str = "table"
    jobs: int = 1
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.order < 1:
            raise UsageError("--order must be >= 1")
        if self.jobs < 1:
            raise UsageError("--jobs must be >= 1")
        if self.output_format not in ("table", "json", "csv"):
            raise UsageError(f"unknown format {self.output_format!r}")
        if self.budget < self.order:
            raise PrecisionError(f"order {self.order} exceeds the budget of {self.budget}")


# -- rendering ---------------------------------------------------------------


def _dump_json(obj) -> str:
    return json.dumps({"schema": SCHEMA_VERSION, **obj}, indent=2, sort_keys=True)


def _dump_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue().rstrip("\n")


def series_terms(s: LaurentSeries, order: int) -> list[tuple[int, str]]:
    """(exponent, coefficient) on [valuation, order); the zero series starts at 0."""
    lo = 0 if s.is_zero else s.valuation
    return [(e, str(s[e])) for e in range(lo, order)]


def render_series(command: str, expr: str, s: LaurentSeries, order: int, fmt: str, **extra) -> str:
    terms = series_terms(s, order)
    if fmt == "json":
        return _dump_json({"command": command, "expr": expr, "order": order, **extra,
                           "terms": [{"exponent": e, "coefficient": c} for e, c in terms]})
    if fmt == "csv":
        return _dump_csv(["exponent", "coefficient"], terms)
    return " ".join(f"{e}:{c}" for e, c in terms)


def render_report(command: str, report: VerificationReport, fmt: str, **extra) -> str:
    items = [i.to_dict() for i in report.items]
    counts = {s: sum(1 for i in report.items if i.status == s)
              for s in ("pass", "fail", "insufficient-precision")}
    if fmt == "json":
        return _dump_json({"command": command, **extra, "items": items, "summary": counts,
                           "exit_code": report.exit_code})
    rows = [[d["id"], d["status"], *(d["window"] or ["", ""]), d["witness"], d["lhs"], d["rhs"], d["detail"]]
            for d in items]
    if fmt == "csv":
        return _dump_csv(["id", "status", "lo", "hi", "witness", "lhs", "rhs", "detail"],
                         [["" if x is None else x for x in r] for r in rows])
    width = max([len(d["id"]) for d in items] + [2])
    lines = []
    for d in items:
        line = f"{d['id']:<{width}}  {d['status']:<22}"
        if d["window"]:
            line += f"  [{d['window'][0]}, {d['window'][1]})"
        if d["witness"] is not None:
            line += f"  witness {d['witness']}: {d['lhs']} != {d['rhs']}"
        if d["detail"]:
            line += f"  {d['detail']}"
        lines.append(line.rstrip())
    lines.append(f"{counts['pass']} passed, {counts['fail']} failed, "
                 f"{counts['insufficient-precision']} insufficient precision")
    return "\n".join(lines)


# -- commands ----------------------------------------------------------------


def cmd_expand(args, cfg: RunConfig) -> int:
    s = Evaluator().expand(args.expr, cfg.order)
    print(render_series("expand", args.expr, s, cfg.order, cfg.output_format))
    return EXIT_OK


def cmd_dissect(args, cfg: RunConfig) -> int:
    try:
        sel = ProgressionSelector(args.mod, args.res)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    need = sel.t * (cfg.order - 1) + sel.r + 1
    if need > cfg.budget:
        raise PrecisionError(f"dissection needs {need} coefficients, over the budget of {cfg.budget}")
    s = extract(Evaluator().expand(args.expr, need), sel).truncate(cfg.order)
    print(render_series("dissect", args.expr, s, cfg.order, cfg.output_format, mod=sel.t, res=sel.r))
    return EXIT_OK


def _load_catalog(cfg: RunConfig):
    return catalog_mod.load(cfg.catalog_path)


def cmd_verify(args, cfg: RunConfig) -> int:
    if args.all == bool(args.id):
        raise UsageError("give either --all or at least one --id")
    cat = _load_catalog(cfg)
    ids = None
    if args.id:
        ids = [i for chunk in args.id for i in chunk.split(",") if i]
        unknown = [i for i in ids if i not in cat.ids()]
        if unknown:
            raise UsageError(f"unknown id {', '.join(unknown)}; known ids: {', '.join(cat.ids())}")
    # without --order every record uses its own window
    report = run_catalog(cat, args.order, ids, cfg.jobs, cfg.budget)
    print(render_report("verify", report, cfg.output_format, order=args.order))
    return report.exit_code


def cmd_family(args, cfg: RunConfig) -> int:
    if args.name in FAMILY_DEFAULTS:
        k_def, n_def = FAMILY_DEFAULTS[args.name]
        k_max = k_def if args.kmax is None else args.kmax
        n_max = n_def if args.nmax is None else args.nmax
        if k_max < 0 or n_max < (1 if args.name == "thm1.1" else 0):
            raise UsageError("--kmax must be >= 0 and --nmax must be positive")
        report = run_family(args.name, k_max, n_max, cfg.budget)
    else:
        report = run_family(args.name, args.kmax, args.nmax, cfg.budget, _load_catalog(cfg))
    print(render_report("family", report, cfg.output_format, family=args.name))
    return report.exit_code


def cmd_oracle(args, cfg: RunConfig) -> int:
    t, top = args.t, args.max
    if t < 2:
        raise UsageError("--t must be >= 2")
    if top < 0:
        raise UsageError("--max must be >= 0")
    cores = count_cores(t, top).values
    pairs = count_pairs(t, top)
    header = ["n", "c", "A"]
    rows = [[n, cores[n], pairs[n]] for n in range(top + 1)]
    agree = True
    if args.compare:
        ev = Evaluator()
        cs = ev.expand(f"f{t}^{t}/f1", top + 1)
        ps = ev.expand(f"f{t}^{2 * t}/f1^2", top + 1)
        header += ["c_series", "A_series", "agree"]
        for row in rows:
            n = row[0]
            ok = cs[n] == row[1] and ps[n] == row[2]
            agree &= ok
            row += [str(cs[n]), str(ps[n]), "yes" if ok else "no"]
    if cfg.output_format == "json":
        out = _dump_json({"command": "oracle", "t": t, "max": top, "compare": args.compare,
                          "rows": [dict(zip(header, r)) for r in rows]})
    elif cfg.output_format == "csv":
        out = _dump_csv(header, rows)
    else:
        widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)]
        out = "\n".join("  ".join(str(x).rjust(w) for x, w in zip(r, widths)) for r in [header, *rows])
    print(out)
    return EXIT_OK if agree else EXIT_FAIL


# -- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("table", "json", "csv"), default="table")
    common.add_argument("--budget", type=int, default=None,
                        help=f"max coefficients per series (env QCORE_BUDGET, default {DEFAULT_BUDGET})")
    common.add_argument("--catalog", type=Path, default=None,
                        help="identity catalog file (env QCORE_CATALOG)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="qcore", description="Exact q-series expansion and identity checks.")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("expand", parents=[common], help="expand an expression")
    e.add_argument("expr")
    e.add_argument("--order", type=int, default=20)
    e.set_defaults(func=cmd_expand)

    d = sub.add_parser("dissect", parents=[common], help="coefficients along t*n + r")
    d.add_argument("expr")
    d.add_argument("--mod", type=int, required=True)
    d.add_argument("--res", type=int, required=True)
    d.add_argument("--order", type=int, default=20)
    d.set_defaults(func=cmd_dissect)

    v = sub.add_parser("verify", parents=[common], help="check catalog records")
    v.add_argument("--all", action="store_true")
    v.add_argument("--id", action="append", default=[])
    v.add_argument("--order", type=int, default=None,
                   help="upper end of every identity window (default: each record's own)")
    v.add_argument("--jobs", type=int, default=1)
    v.set_defaults(func=cmd_verify)

    f = sub.add_parser("family", parents=[common], help="run a parameterized family")
    f.add_argument("name", choices=FAMILIES)
    f.add_argument("--kmax", type=int, default=None)
    f.add_argument("--nmax", type=int, default=None)
    f.set_defaults(func=cmd_family)

    o = sub.add_parser("oracle", parents=[common], help="count t-cores by enumeration")
    o.add_argument("--t", type=int, required=True)
    o.add_argument("--max", type=int, required=True)
    o.add_argument("--compare", action="store_true")
    o.set_defaults(func=cmd_oracle)
    return p


def _budget(args) -> int:
    if args.budget is not None:
        return args.budget
    env = os.environ.get("QCORE_BUDGET")
    if env is None:
        return DEFAULT_BUDGET
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"QCORE_BUDGET is not an integer: {env!r}") from None


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        order = getattr(args, "order", None)
        cfg = RunConfig(order=DEFAULT_ORDER if order is None else order,
                        catalog_path=args.catalog, output_format=args.format,
                        jobs=getattr(args, "jobs", 1), budget=_budget(args))
        return args.func(args, cfg)
    except UsageError as exc:
        parser.exit(EXIT_USAGE, f"qcore: error: {exc}\n")
    except (PrecisionError, EnumerationBudgetError) as exc:
        print(f"qcore: insufficient precision: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except (QExprError, catalog_mod.CatalogError, KeyError, ValueError) as exc:
        print(f"qcore: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as exc:
        print(f"qcore: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
