"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from itertools import combinations

import numpy as np

from . import claims as cl
from .closed_forms import (ClosedFormError, Zeta, nonexistence_witness, vertex_pst_candidates)
from .families import cycle_plus_chord
from .graph_core import GraphError, MATRIX_KINDS, WeightedGraph, kind_q, matrix_for
from .involution import (InvolutionError, find_involutions, half_blocks, factorization_residual,
                         reduce_pair_pst, verify_block_diagonalization, verify_involution)
from .spectral import SpectralError, eigendecompose, eigenvalue_support
from .timeexpr import ExpressionError, evaluate
from .transfer import (PST_TOL, StateError, detect_pst, fidelity_curve, is_strongly_cospectral,
                       pair_state, parse_state, search_pst)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

INPUT_ERRORS = (GraphError, InvolutionError, StateError, ExpressionError, SpectralError,
                ClosedFormError, cl.ClaimError, OSError, json.JSONDecodeError)


class UsageError(Exception):
    pass


def _emit(obj, out: str | None = None) -> None:
    text = json.dumps(obj, indent=2)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _write_text(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_graph(path: str) -> WeightedGraph:
    with open(path) as fh:
        return WeightedGraph.from_dict(json.load(fh))


def _q(args) -> float:
    q = kind_q(args.matrix, evaluate(args.q))
    if q == 0:
        raise UsageError("q must be non-zero")
    return q


def _floats(text: str) -> list[float]:
    return [evaluate(s) for s in text.split(",") if s.strip()]


def _int_range(text: str) -> list[int]:
    """``7:20`` (inclusive) or ``1,2,5``."""
    if ":" in text:
        lo, hi = text.split(":", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in text.split(",") if s.strip()]


# build

BUILD_PARAMS = ("n", "m", "k", "b", "rho", "cycle", "tail", "w1", "w2")


def cmd_build(args) -> int:
    params = {p: getattr(args, p) for p in BUILD_PARAMS if getattr(args, p) is not None}
    if args.add_e:
        params["add_e"] = True
    if args.no_potential:
        params["potential"] = False
    try:
        inst = cl.build_family(args.family, params, evaluate(args.q) if args.q else None)
    except (KeyError, TypeError) as exc:
        raise UsageError(f"missing or bad parameter for {args.family}: {exc}") from None
    _emit(inst.to_dict(), args.output)
    return EXIT_OK


# analyze

def _support_info(d, x) -> list[float]:
    return [round(t, 12) for t in eigenvalue_support(d, x)]


def cmd_analyze(args) -> int:
    g = _load_graph(args.graph)
    q = _q(args)
    d = eigendecompose(matrix_for(g, args.matrix, q))
    x, y = parse_state(args.state_x, g.n), parse_state(args.state_y, g.n)
    out = {"matrix": args.matrix, "q": q, "x": str(x), "y": str(y),
           "support_x": _support_info(d, x), "support_y": _support_info(d, y)}
    try:
        out["strongly_cospectral"] = is_strongly_cospectral(d, x, y)
    except StateError:
        out["strongly_cospectral"] = None
    if args.time is not None:
        out["report"] = detect_pst(d, x, y, evaluate(args.time, q), args.tol).to_dict()
    else:
        hits = search_pst(d, x, y, evaluate(args.search, q), pst_tol=args.tol)
        out["search_t_max"] = evaluate(args.search, q)
        out["hits"] = [{"time": t, "fidelity": f} for t, f in hits]
        out["verdict"] = "PST_FOUND" if hits else "NO_PST_FOUND"
    _emit(out, args.output)
    return EXIT_OK


# involutions

def cmd_involutions(args) -> int:
    g = _load_graph(args.graph)
    q = _q(args)
    rng = np.random.default_rng(args.seed)
    times = rng.uniform(0, 10, 5)
    if args.perm is not None:
        perm = [int(s) for s in args.perm.split(",")]
        try:
            invs = [verify_involution(g, perm)]
        except InvolutionError as exc:
            _emit({"error": type(exc).__name__, "message": str(exc)})
            return EXIT_FAIL
    else:
        invs = find_involutions(g)
    t_max = evaluate(args.t_max, q)
    records = []
    for inv in invs:
        blocks = half_blocks(g, inv, q)
        witnesses = reduce_pair_pst(g, inv, q, t_max) if t_max > 0 else []
        records.append({
            **inv.to_dict(),
            "perm": list(inv.perm),
            "block_residual": verify_block_diagonalization(g, inv, q, times),
            "factorization_residual": factorization_residual(matrix_for(g, "qlap", q), blocks),
            "witnesses": [w.to_dict() for w in witnesses],
        })
    _emit(records, args.output)
    return EXIT_OK


# corpus

def cmd_corpus(args) -> int:
    records = cl.load_claims(args.claims) if args.claims else cl.default_corpus()
    if args.list:
        print(cl.dump_claims(records))
        return EXIT_OK
    records = cl.select(records, args.only)
    if not records:
        raise UsageError(f"no claims match {args.only!r}")
    results = cl.verify_claims(records, _floats(args.q_samples), args.tol)
    failed = [r for r in results if r.status != "verified"]
    if args.blocks:
        rng = np.random.default_rng(args.seed)
        times = rng.uniform(0, 10, 20)
        for q in _floats(args.q_samples):
            for rid, inst in cl.corpus_instances(q, records):
                res = verify_block_diagonalization(inst.graph, inst.involution, q, times)
                if res > 1e-10:
                    failed.append(cl.ClaimResult(f"{rid}:blocks", q, math.nan, 0.0, res, "failed"))
    csv = "\n".join([cl.CSV_HEADER] + [r.csv_row() for r in results]) + "\n"
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(csv)
    else:
        sys.stdout.write(csv)
    for r in failed:
        print(f"FAILED {r.id} q={r.q:g}: {r.detail or 'residual %.3e' % r.residual}", file=sys.stderr)
    print(f"{len(results) - len([r for r in failed if ':blocks' not in r.id])}/{len(results)} "
          f"claim checks verified", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


# fidelity curve

def cmd_fidelity_curve(args) -> int:
    g = _load_graph(args.graph)
    q = _q(args)
    d = eigendecompose(matrix_for(g, args.matrix, q))
    x, y = parse_state(args.state_x, g.n), parse_state(args.state_y, g.n)
    if args.samples < 2:
        raise UsageError("--samples must be at least 2")
    times = np.linspace(0.0, evaluate(args.t_max, q), args.samples)
    fids = fidelity_curve(d, x, y, times)
    lines = ["t,fidelity"] + [f"{t:.12e},{f:.12e}" for t, f in zip(times, fids)]
    _write_text("\n".join(lines) + "\n", args.output)
    return EXIT_OK


# sweep

SWEEP_HEADER = ("n,b,rho,zeta,vertex_candidates,gap,gap_below_one,nonexistence_status,"
                "pair_pst_hits")


def _pair_hits(n: int, b: int, rho: float, zeta: Zeta, t_max: float) -> list[str]:
    g = cycle_plus_chord(n, b, rho).graph
    d = eigendecompose(matrix_for(g, zeta.matrix_kind))
    pairs = list(combinations(range(n), 2))
    hits = []
    for (i, j), (k, l) in combinations(pairs, 2):
        found = search_pst(d, pair_state(n, i, j), pair_state(n, k, l), t_max)
        if found:
            hits.append(f"{i}-{j}>{k}-{l}@{found[0][0]:.9f}")
    return hits


def _sweep_row(point, search_max_n: int, t_max: float) -> str:
    n, b, rho, zeta = point
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cand = vertex_pst_candidates(n, b, zeta)
        rep = nonexistence_witness(n, b, rho, zeta)
    hits = " ".join(_pair_hits(n, b, rho, zeta, t_max)) if n <= search_max_n else "skipped"
    cand_s = "none" if cand is None else f"{cand[0]} {cand[1]}"
    return (f"{n},{b},{rho:g},{int(zeta)},{cand_s},{rep.gap:.12e},{int(rep.gap_below_one)},"
            f"{rep.status},{hits or 'none'}")


def cmd_sweep(args) -> int:
    if args.family != "cycle-plus-chord":
        raise UsageError("sweep supports --family cycle-plus-chord")
    zetas = [Zeta.coerce(z) for z in args.zeta.split(",")]
    points = []
    for n in _int_range(args.n_range):
        bs = _int_range(args.b_range) if args.b_range else range(1, n)
        for b in bs:
            if not 1 <= b <= n - 1:
                continue
            for rho in _floats(args.rho_range):
                for z in zetas:
                    points.append((n, b, rho, z))
    t_max = evaluate(args.t_max)
    with ThreadPoolExecutor(max_workers=cl.worker_count()) as pool:
        rows = list(pool.map(lambda p: _sweep_row(p, args.search_max_n, t_max), points))
    _write_text("\n".join([SWEEP_HEADER] + rows) + "\n", args.output)
    return EXIT_OK


def _add_walk_args(p, state_args: bool = True) -> None:
    p.add_argument("graph", help="graph JSON file")
    p.add_argument("--q", default="1", help="q value (expression allowed, e.g. sqrt(8/3))")
    p.add_argument("--matrix", choices=MATRIX_KINDS, default="qlap")
    if state_args:
        p.add_argument("--state-x", required=True, help="v:3, pair:1,4, plus:2,5 or spair:1,4:0.5")
        p.add_argument("--state-y", required=True)
    p.add_argument("-o", "--output", help="write to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qwalk", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="emit a family graph with markers, involution and claims")
    p.add_argument("--family", required=True, choices=sorted(cl.FAMILIES))
    for name in BUILD_PARAMS:
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, default=None)
    p.add_argument("--add-e", action="store_true", help="kmn-minus-matching: add the E edges")
    p.add_argument("--no-potential", action="store_true", help="c5-potential: drop the potentials")
    p.add_argument("--q", default=None, help="value of q for q-dependent parameters")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("analyze", help="check PST at a time or search for it")
    _add_walk_args(p)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--time", help="time expression in q, e.g. pi/(2q)")
    g.add_argument("--search", metavar="T_MAX", help="search (0, T_MAX] for PST")
    p.add_argument("--tol", type=float, default=PST_TOL)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("involutions", help="list involutions with block residuals and witnesses")
    _add_walk_args(p, state_args=False)
    p.add_argument("--perm", help="verify this permutation instead of searching, e.g. 2,3,0,1,4")
    p.add_argument("--t-max", default="10", help="search horizon for lifted witnesses (0 to skip)")
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_involutions)

    p = sub.add_parser(
        "corpus", help="verify the claim corpus",
        description="CSV columns: id,q,time,fidelity,residual,status (floats as %%.12e). "
                    "Exit status 1 if any claim fails.")
    p.add_argument("--q-samples", default="1,-1,0.5")
    p.add_argument("--tol", type=float, default=PST_TOL)
    p.add_argument("--only", help="comma-separated claim id prefixes")
    p.add_argument("--claims", help="JSON file of claim records (default: shipped corpus)")
    p.add_argument("--csv", help="write the CSV summary here instead of stdout")
    p.add_argument("--blocks", action="store_true",
                   help="also check the block reduction at 20 seeded random times")
    p.add_argument("--list", action="store_true", help="print the claim records as JSON")
    p.add_argument("--seed", type=int, default=42)
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("fidelity-curve", help="CSV of t,fidelity on a uniform grid")
    _add_walk_args(p)
    p.add_argument("--t-max", required=True)
    p.add_argument("--samples", type=int, default=200)
    p.set_defaults(func=cmd_fidelity_curve)

    p = sub.add_parser(
        "sweep", help="constraint checkers over chorded cycles",
        description="CSV columns: " + SWEEP_HEADER + ". pair_pst_hits lists x>y@time found "
                    "by direct search among pair states e_i - e_j (only for n <= --search-max-n).")
    p.add_argument("--family", default="cycle-plus-chord")
    p.add_argument("--n-range", required=True, help="e.g. 7:20 or 4,6")
    p.add_argument("--b-range", help="default: every b in 1..n-1")
    p.add_argument("--rho-range", default="1")
    p.add_argument("--zeta", default="-1", help="-1 or lap, 1 or signless; both as lap,signless or --zeta=-1,1")
    p.add_argument("--search-max-n", type=int, default=8)
    p.add_argument("--t-max", default="2*pi")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except INPUT_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
