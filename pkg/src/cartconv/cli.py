"""Command line front end: scene JSON (or a fixture name) in, JSON/CSV out.

Exit status: 0 success, 1 schema or usage error, 2 resource limit hit
(partial results flagged), 3 internal verification failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, Sequence

from gmpy2 import mpq

from . import __version__
from .fixtures import FIXTURES
from .functional import (
    SimpleFunction,
    eval_J,
    eval_J_rlx_minformula,
    eval_J_rlx_search,
    max_pair_envelope,
    structure_report,
)
from .geometry import NormKind
from .hull import cartesian_hull, has_basic_convexification
from .lp_approx import LpProblem, default_ladder, gamma_sweep
from .rational import fmt_q, to_q
from .serialize import (
    SchemaError,
    dumps,
    norm_from_json,
    point_from_json,
    point_json,
    region_json,
    scalar_json,
    scene_from_json,
    squares_json,
    union_json,
)
from .squares import LimitError, VerificationError, grid_consistency, maximal_squares
from .supremand import (
    HullNonConvergence,
    Supremand,
    eval_envelope_search,
    eval_W,
    eval_W4_search,
    eval_W_hat,
)

EXIT_SCHEMA, EXIT_LIMIT, EXIT_VERIFY = 1, 2, 3
WORKERS_ENV = "CARTCONV_WORKERS"

COMMANDS = ("squares", "hull", "check-basic", "w-eval", "envelope-eval", "supremal-eval",
            "relax-eval", "structure-report", "gamma-sweep", "selftest")


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _pmap(fn: Callable, items: Sequence) -> list:
    """Map in input order; threads only when the worker variable asks for them."""
    n = _workers()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def _norm_note(norm: NormKind) -> str:
    if norm.exact:
        return "inner norm linf (exact sublevel geometry)"
    return (f"inner norm l2 approximated by a circumscribed {norm.k}-gon; "
            "sublevel sets overshoot by at most 1/cos(pi/k)")


# ---------------------------------------------------------------- input


def _load(arg: str) -> dict:
    if arg.upper() in FIXTURES and not os.path.exists(arg):
        return {"fixture": arg.upper()}
    try:
        with open(arg, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise SchemaError(f"{arg!r} is neither a fixture name nor a readable file") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON in {arg}: {exc}") from exc


def _parse_point(text: str) -> tuple:
    return point_from_json([c for c in text.split(",")])


def _parse_values(text: str) -> list:
    return [_parse_point(t) for t in text.split(";") if t.strip()]


class _Ctx:
    def __init__(self, args):
        self.args = args
        self.doc = _load(args.input)
        self.E = scene_from_json(self.doc)
        self.norm = NormKind.parse(args.norm) if args.norm else norm_from_json(self.doc)
        self.q = self.doc.get("q", 1)
        self.S = Supremand.from_union(self.E, self.norm, self.q, max_iter=args.max_iter, limit=args.limit_atoms)
        self.eps = to_q(args.tol)

    def head(self, command: str) -> dict:
        return {"command": command, "scene": union_json(self.E), "norm": str(self.norm),
                "norm_note": _norm_note(self.norm)}

    def pairs(self) -> list:
        if self.args.pair:
            out = []
            for text in self.args.pair:
                pts = _parse_values(text)
                if len(pts) != 2:
                    raise SchemaError(f"--pair needs 'xi;zeta', got {text!r}")
                out.append(tuple(pts))
            return out
        return [(point_from_json(a), point_from_json(b)) for a, b in self.doc.get("pairs", [])]

    def functions(self) -> list:
        if self.args.values:
            ws = [to_q(w) for w in self.args.weights.split(",")] if self.args.weights else None
            return [SimpleFunction.make(_parse_values(self.args.values), ws)]
        out = []
        for f in self.doc.get("functions", []):
            vals = [point_from_json(v) for v in f["values"]]
            ws = [to_q(w) for w in f["weights"]] if "weights" in f else None
            out.append(SimpleFunction.make(vals, ws))
        return out

    def levels(self) -> Optional[list]:
        if self.args.levels:
            return [to_q(x) for x in self.args.levels.split(",")]
        if "levels" in self.doc:
            return [to_q(x) for x in self.doc["levels"]]
        return None


# ---------------------------------------------------------------- commands


def cmd_squares(ctx: _Ctx) -> dict:
    ms = maximal_squares(ctx.E, limit=ctx.args.limit_atoms)
    out = ctx.head("squares")
    out.update({"count": len(ms), "hidden_count": ms.hidden_count, "squares": squares_json(ms)})
    if ctx.args.grid:
        bad = grid_consistency(ctx.E, ms, ctx.args.grid)
        out["grid_check"] = {"g": ctx.args.grid, "violations": len(bad)}
    return out


def cmd_hull(ctx: _Ctx) -> dict:
    tr = cartesian_hull(ctx.E, max_iter=ctx.args.max_iter, limit=ctx.args.limit_atoms)
    out = ctx.head("hull")
    out.update({
        "stages": [{"stage": k, "set": union_json(E), "squares": squares_json(ms)}
                   for k, (E, ms) in enumerate(zip(tr.stages, tr.squares))],
        "productive_steps": tr.iterations,
        "fixpoint_reached": tr.fixpoint_reached,
    })
    return out


def cmd_check_basic(ctx: _Ctx) -> dict:
    cert = has_basic_convexification(ctx.E, limit=ctx.args.limit_atoms)
    out = ctx.head("check-basic")
    out.update({
        "basic": cert.basic,
        "witness": region_json(cert.witness) if cert.witness is not None else None,
        "stage1": union_json(cert.stage1),
        "stage1_squares": squares_json(cert.squares1),
        "single_step": cert.single_step,
    })
    return out


def cmd_w_eval(ctx: _Ctx) -> dict:
    S = ctx.S
    rows = []
    for xi, zeta in ctx.pairs():
        row = {"xi": point_json(xi), "zeta": point_json(zeta),
               "W": scalar_json(eval_W(S, xi, zeta)),
               "W_hat": scalar_json(eval_W_hat(lambda a, b: eval_W(S, a, b), xi, zeta))}
        if S.n >= 2:
            r = eval_W4_search(S, xi, zeta, ctx.eps, cap=ctx.args.cap)
            row["W4"] = {"value": scalar_json(r.value), "status": r.status, "probes": r.probes}
        rows.append(row)
    out = ctx.head("w-eval")
    out["results"] = rows
    return out


def cmd_envelope_eval(ctx: _Ctx) -> dict:
    S = ctx.S

    def one(pair):
        xi, zeta = pair
        row = {"xi": point_json(xi), "zeta": point_json(zeta), "W": scalar_json(eval_W(S, xi, zeta))}
        try:
            r = eval_envelope_search(S, xi, zeta, ctx.eps)
            row.update({"value": scalar_json(S.power(r.value)), "bracket": [scalar_json(r.lo), scalar_json(r.hi)],
                        "probes": r.probes, "status": r.status})
        except HullNonConvergence as exc:
            row.update({"value": None, "status": "hull-non-convergence", "level": scalar_json(exc.level)})
        return row

    out = ctx.head("envelope-eval")
    out["tol"] = fmt_q(ctx.eps)
    out["results"] = _pmap(one, ctx.pairs())
    return out


def cmd_supremal_eval(ctx: _Ctx) -> dict:
    out = ctx.head("supremal-eval")
    out["results"] = [{"values": [point_json(v) for v in u.values],
                       "weights": [fmt_q(w) for w in u.weights],
                       "J": scalar_json(eval_J(ctx.S, u))} for u in ctx.functions()]
    return out


def cmd_relax_eval(ctx: _Ctx) -> dict:
    S = ctx.S

    def one(u):
        r = eval_J_rlx_search(S, u, ctx.eps)
        row = {"values": [point_json(v) for v in u.values],
               "J": scalar_json(eval_J(S, u)),
               "J_rlx": scalar_json(S.power(r.value)),
               "bracket": [scalar_json(r.lo), scalar_json(r.hi)], "probes": r.probes,
               "envelope_lower_bound": scalar_json(max_pair_envelope(S, u, ctx.eps))}
        if S.n == 3:
            mf = eval_J_rlx_minformula(S, u, ctx.eps)
            row["min_formula"] = {"value": scalar_json(mf.value), "terms": [scalar_json(t) for t in mf.terms]}
        return row

    out = ctx.head("relax-eval")
    out["tol"] = fmt_q(ctx.eps)
    out["results"] = _pmap(one, ctx.functions())
    return out


def cmd_structure_report(ctx: _Ctx) -> dict:
    rep = structure_report(ctx.S, ctx.levels())
    out = ctx.head("structure-report")
    out.update({
        "levels": [fmt_q(c) for c in rep.levels],
        "basic_per_level": rep.verdicts,
        "verdict": rep.verdict,
        "witness_level": fmt_q(rep.witness_level) if rep.witness_level is not None else None,
        "witness": region_json(rep.witness) if rep.witness is not None else None,
    })
    return out


def cmd_gamma_sweep(ctx: _Ctx) -> dict:
    prob = ctx.doc.get("problem", {})
    dim = ctx.E.dim
    q = float(ctx.q)
    S = Supremand.from_union(ctx.E, ctx.norm, q, max_iter=ctx.args.max_iter, limit=ctx.args.limit_atoms)
    box = prob.get("box", [[-2] * dim, [2] * dim])
    mean = prob.get("mean", [0] * dim)
    P = LpProblem(
        S, prob.get("n_cells", 16), tuple(float(to_q(x)) for x in mean),
        [float(p) for p in prob.get("ladder", default_ladder(q))],
        ([float(to_q(x)) for x in box[0]], [float(to_q(x)) for x in box[1]]),
        restarts=prob.get("restarts", 4), max_iter=prob.get("max_iter", 3000),
        penalty=prob.get("penalty", 1e3), seed=ctx.args.seed, grid=prob.get("grid", 33))
    res = gamma_sweep(P)
    if ctx.args.csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["p", "min_value", "gap", "iterations"])
        for row in res.csv_rows():
            w.writerow([repr(float(row[0])), repr(row[1]), repr(row[2]), row[3]])
        if ctx.args.csv == "-":
            sys.stdout.write(buf.getvalue())
        else:
            with open(ctx.args.csv, "w", encoding="utf-8") as fh:
                fh.write(buf.getvalue())
    out = ctx.head("gamma-sweep")
    out.update({
        "entries": res.entries, "reference": res.reference,
        "reference_u": ({"values": [point_json(v) for v in res.reference_u.values],
                         "weights": [fmt_q(x) for x in res.reference_u.weights]}
                        if res.reference_u is not None else None),
        "reference_status": res.reference_status, "monotone": res.monotone,
        "coercivity_checked": res.coercivity_checked, "settings": res.settings,
        "note": "tolerances on the p-ladder are engineering choices; no convergence rate is known",
    })
    if res.reference_status != "ok":
        out["partial"] = True
    return out


HANDLERS = {
    "squares": cmd_squares, "hull": cmd_hull, "check-basic": cmd_check_basic,
    "w-eval": cmd_w_eval, "envelope-eval": cmd_envelope_eval,
    "supremal-eval": cmd_supremal_eval, "relax-eval": cmd_relax_eval,
    "structure-report": cmd_structure_report, "gamma-sweep": cmd_gamma_sweep,
}


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cartconv", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"cartconv {__version__}")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("input", nargs="?", help="fixture name (G1, G2, G3, G2L, G2M, G2R) or scene JSON path")
    ap.add_argument("--norm", help="inner norm: linf or l2:k (default from scene, else linf)")
    ap.add_argument("--tol", default="1/1000000", help="bisection tolerance on levels")
    ap.add_argument("--max-iter", type=int, default=16, help="hull iteration cap")
    ap.add_argument("--levels", help="comma separated raw levels for structure-report")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--limit-atoms", type=int, default=16)
    ap.add_argument("--grid", type=int, default=0, help="also run the 1/g grid oracle (squares)")
    ap.add_argument("--csv", help="gamma-sweep: write the p-table as CSV to this path ('-' for stdout)")
    ap.add_argument("--pair", action="append", metavar="XI;ZETA",
                    help="query pair 'x,y;x,y' (repeatable; use --pair=... when it starts with '-')")
    ap.add_argument("--values", help="simple function values 'x,y;x,y;...'")
    ap.add_argument("--weights", help="cell weights 'w1,w2,...' (default uniform)")
    ap.add_argument("--cap", default=None, help="level cap for W4 searches")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_SCHEMA if exc.code else 0
    if args.command == "selftest":
        from .selftest import run_selftest

        return run_selftest(sys.stdout)
    if not args.input:
        print("error: an input (fixture name or JSON path) is required", file=sys.stderr)
        return EXIT_SCHEMA
    try:
        ctx = _Ctx(args)
        out = HANDLERS[args.command](ctx)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (ValueError, ZeroDivisionError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except LimitError as exc:
        partial = {"command": args.command, "partial": True, "error": str(exc)}
        if exc.partial is not None:
            partial["squares"] = squares_json(exc.partial)
        sys.stdout.write(dumps(partial) + "\n")
        return EXIT_LIMIT
    except VerificationError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    if not (args.command == "gamma-sweep" and args.csv == "-"):
        sys.stdout.write(dumps(out) + "\n")
    return EXIT_LIMIT if out.get("partial") else 0


if __name__ == "__main__":
    sys.exit(main())
