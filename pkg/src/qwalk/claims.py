"""The shipped corpus of state-transfer claims and the machinery to check them.

A claim names a family with parameters (numbers or expressions in ``q``), a
matrix kind, two states in the ``parse_state`` syntax and a transfer time
expression. ``kind="no_pst"`` claims assert that a grid search up to
``horizon`` finds no PST.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import families as fam
from .graph_core import GraphError, kind_q, matrix_for
from .involution import InvolutionError, verify_involution
from .spectral import SpectralError, eigendecompose
from .timeexpr import ExpressionError, evaluate
from .transfer import (PST_TOL, StateError, default_grid_step, detect_pst, fidelity_curve,
                       parse_state, search_pst)

DEFAULT_Q_SAMPLES = (1.0, -1.0, 0.5)


class ClaimError(ValueError):
    pass


def _int(v) -> int:
    if float(v) != int(float(v)):
        raise ClaimError(f"expected an integer parameter, got {v!r}")
    return int(float(v))


def _tree(spec: dict):
    kind, size = spec.get("tree"), _int(spec.get("size", 0))
    if kind == "star":
        return fam.star(size)
    if kind == "path":
        return fam.path(size).graph
    raise ClaimError(f"unknown tree {kind!r}")


def _attach(p: dict) -> fam.FamilyInstance:
    base = build_family(p["base"], p.get("base_params", {}))
    return fam.attach_graph(base, _tree(p), p["at"])


def _custom(p: dict) -> fam.FamilyInstance:
    pots = {int(k): float(v) for k, v in p.get("potentials", {}).items()}
    return fam.custom(_int(p["n"]), [tuple(e) for e in p["edges"]], pots, p.get("perm"),
                      p.get("name", "custom"))


FAMILIES = {
    "path": lambda p: fam.path(_int(p["n"])),
    "cycle": lambda p: fam.cycle(_int(p["n"])),
    "complete-bipartite": lambda p: fam.complete_bipartite(_int(p["m"]), _int(p["n"])),
    "wheel": lambda p: fam.wheel(_int(p.get("n", 5))),
    "path-potentials": lambda p: fam.path_with_end_potentials(
        _int(p["n"]), float(p["w1"]), None if p.get("w2") is None else float(p["w2"])),
    "cycle-with-tail": lambda p: fam.cycle_with_tail(_int(p["cycle"]), _int(p["tail"])),
    "kmn-minus-matching": lambda p: fam.kmn_minus_matching(
        _int(p["m"]), _int(p["n"]), _int(p["k"]), bool(p.get("add_e", False))),
    "cycle-plus-chord": lambda p: fam.cycle_plus_chord(_int(p["n"]), _int(p["b"]), float(p["rho"])),
    "path-plus-two-edges": lambda p: fam.path_plus_two_edges(_int(p["n"])),
    "c5-potential": lambda p: fam.c5_with_potential(bool(p.get("potential", True))),
    "attach": _attach,
    "custom": _custom,
}


def _resolve(value, q: float):
    """Evaluate string leaves as expressions in ``q``; leave structure alone."""
    if isinstance(value, str):
        try:
            return evaluate(value, q)
        except ExpressionError:
            return value
    if isinstance(value, dict):
        return {k: _resolve(v, q) for k, v in value.items()}
    return value


_STRUCTURAL = {"base", "tree", "at", "edges", "perm", "name"}


def build_family(name: str, params: dict, q: float | None = None) -> fam.FamilyInstance:
    """Instantiate a registered family, evaluating q-expressions at ``q``."""
    if name not in FAMILIES:
        raise ClaimError(f"unknown family {name!r}; known: {', '.join(sorted(FAMILIES))}")
    resolved = {k: (v if k in _STRUCTURAL else _resolve(v, 1.0 if q is None else q))
                for k, v in params.items()}
    return FAMILIES[name](resolved)


@dataclass(frozen=True)
class ClaimRecord:
    id: str
    family: str
    params: dict
    x: str
    y: str
    time: str = "0"
    matrix: str = "qlap"
    q_values: tuple | None = None
    kind: str = "pst"
    horizon: float | None = None
    perm: tuple | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["q_values"] = list(self.q_values) if self.q_values is not None else None
        d["perm"] = list(self.perm) if self.perm is not None else None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ClaimRecord":
        d = dict(d)
        for key in ("q_values", "perm"):
            if d.get(key) is not None:
                d[key] = tuple(d[key])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ClaimError(f"bad claim record: {exc}") from None

    def sample_qs(self, q_samples) -> list[float]:
        if self.matrix in ("lap", "signless"):
            return [kind_q(self.matrix)]
        if self.q_values is not None:
            return [evaluate(v) for v in self.q_values]
        return [float(q) for q in q_samples]


@dataclass
class ClaimResult:
    id: str
    q: float
    time: float
    fidelity: float
    residual: float
    status: str
    detail: str = ""

    def csv_row(self) -> str:
        return (f"{self.id},{self.q:.12e},{self.time:.12e},{self.fidelity:.12e},"
                f"{self.residual:.12e},{self.status}")


CSV_HEADER = "id,q,time,fidelity,residual,status"


def _check(rec: ClaimRecord, q: float, tol: float) -> ClaimResult:
    try:
        inst = build_family(rec.family, rec.params, q)
        if rec.perm is not None:
            verify_involution(inst.graph, list(rec.perm))
        n = inst.graph.n
        x, y = parse_state(rec.x, n), parse_state(rec.y, n)
        d = eigendecompose(matrix_for(inst.graph, rec.matrix, q))
        if rec.kind == "no_pst":
            horizon = float(rec.horizon or 10.0)
            hits = search_pst(d, x, y, horizon, pst_tol=tol)
            grid = np.arange(0.0, horizon, default_grid_step(d))
            best = float(np.max(fidelity_curve(d, x, y, grid[1:]))) if len(grid) > 1 else 0.0
            best = max([best] + [f for _, f in hits])
            status = "verified" if not hits else "failed"
            return ClaimResult(rec.id, q, horizon, best, 1 - best, status,
                               "" if not hits else f"PST at t={hits[0][0]:.6f}")
        t = evaluate(rec.time, q)
        rep = detect_pst(d, x, y, t, tol)
        status = "verified" if rep.is_pst else "failed"
        return ClaimResult(rec.id, q, t, rep.fidelity, 1 - rep.fidelity, status,
                           rep.verdict.value)
    except (GraphError, InvolutionError, StateError, ExpressionError, SpectralError,
            ClaimError, KeyError, ValueError) as exc:
        return ClaimResult(rec.id, q, math.nan, 0.0, 1.0, "failed", f"{type(exc).__name__}: {exc}")


def worker_count() -> int:
    """Thread cap from ``QWALK_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("QWALK_THREADS", "1")))
    except ValueError:
        return 1


def verify_claims(records, q_samples=DEFAULT_Q_SAMPLES, tol: float = PST_TOL) -> list[ClaimResult]:
    """Check every record at every applicable q; results keep corpus order."""
    jobs = [(rec, q) for rec in records for q in rec.sample_qs(q_samples)]
    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        return list(pool.map(lambda job: _check(job[0], job[1], tol), jobs))


def select(records, only: str | None):
    if not only:
        return list(records)
    keys = [k.strip() for k in only.split(",") if k.strip()]
    return [r for r in records if any(r.id.startswith(k) for k in keys)]


def load_claims(path: str) -> list[ClaimRecord]:
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data.get("claims", [])
    return [ClaimRecord.from_dict(d) for d in data]


def dump_claims(records) -> str:
    return json.dumps([r.to_dict() for r in records], indent=2)


# Fixed-family constructions that have no dedicated constructor.
HEX_CHORDS = {  # six-cycle with two crossing chords and end potentials alpha
    "n": 6,
    "edges": [[0, 1], [1, 2], [2, 3], [3, 4], [4, 5], [5, 0], [0, 4], [5, 1]],
    "perm": [5, 4, 3, 2, 1, 0],
    "name": "hex-chords",
}
CUBIC_OCT = {  # eight-cycle a b C D c d G H with four extra edges; cubic
    "n": 8,
    "edges": [[0, 1], [1, 2], [2, 3], [3, 4], [4, 5], [5, 6], [6, 7], [7, 0],
              [0, 6], [5, 7], [1, 3], [2, 4]],
    "perm": [5, 4, 3, 2, 1, 0, 7, 6],
    "name": "cubic-oct",
}
HEPT = {  # seven-cycle a b C D c d G with two extra edges, potential 1 at a and d
    "n": 7,
    "edges": [[0, 1], [1, 2], [2, 3], [3, 4], [4, 5], [5, 6], [6, 0], [1, 3], [2, 4]],
    "potentials": {"0": 1.0, "5": 1.0},
    "perm": [5, 4, 3, 2, 1, 0, 6],
    "name": "hept",
}


def _hex(alpha: str) -> dict:
    return {**HEX_CHORDS, "potentials": {"1": alpha, "4": alpha}}


def _p3_records() -> list[ClaimRecord]:
    from .closed_forms import p3_pst_parameters
    out = []
    for k, l in ((2, 1), (4, 1), (3, 2)):
        q, tau = p3_pst_parameters(k, l)
        out.append(ClaimRecord(f"p3-vertex-{k}-{l}", "path", {"n": 3}, "v:0", "v:2",
                               f"pi*{k * k - l * l}/{4 * l}", "qlap",
                               (f"sqrt({8 * l * l}/{k * k - l * l})",)))
    return out


def default_corpus() -> list[ClaimRecord]:
    r = ClaimRecord
    recs = [
        r("cycle-tail-6-t1", "cycle-with-tail", {"cycle": 6, "tail": 1}, "pair:1,5", "pair:2,4", "pi/(2q)"),
        r("cycle-tail-6-t2", "cycle-with-tail", {"cycle": 6, "tail": 2}, "pair:1,5", "pair:2,4", "pi/(2q)"),
        r("cycle-tail-6-t5", "cycle-with-tail", {"cycle": 6, "tail": 5}, "pair:1,5", "pair:2,4", "pi/(2q)"),
        r("cycle-tail-8-t1", "cycle-with-tail", {"cycle": 8, "tail": 1}, "pair:1,7", "pair:3,5",
          "pi/(q*sqrt(2))"),
        r("cycle-tail-8-t3", "cycle-with-tail", {"cycle": 8, "tail": 3}, "pair:1,7", "pair:3,5",
          "pi/(q*sqrt(2))"),
        r("kmn-3-3-m3", "kmn-minus-matching", {"m": 3, "n": 3, "k": 3}, "pair:0,2", "pair:1,3", "pi/(2q)"),
        r("kmn-3-3-m2", "kmn-minus-matching", {"m": 3, "n": 3, "k": 2}, "pair:0,2", "pair:1,3", "pi/(2q)"),
        r("kmn-4-3-m2-e", "kmn-minus-matching", {"m": 4, "n": 3, "k": 2, "add_e": True},
          "pair:0,2", "pair:1,3", "pi/(2q)"),
        r("c5-potential", "c5-potential", {"potential": True}, "pair:1,4", "pair:2,3", "pi/2", "lap"),
        r("c5-plain-none", "c5-potential", {"potential": False}, "pair:1,4", "pair:2,3", matrix="lap",
          kind="no_pst", horizon=10.0),
        r("chord-c3-rho1", "cycle-plus-chord", {"n": 3, "b": 1, "rho": 1}, "pair:0,2", "pair:1,2",
          "pi/2", "lap"),
        r("chord-c3-rho2", "cycle-plus-chord", {"n": 3, "b": 1, "rho": 2}, "pair:0,2", "pair:1,2",
          "pi/4", "lap"),
        r("chord-c3-rho3", "cycle-plus-chord", {"n": 3, "b": 1, "rho": 3}, "pair:0,2", "pair:1,2",
          "pi/6", "lap"),
        r("chord-c4-b1", "cycle-plus-chord", {"n": 4, "b": 1, "rho": 1}, "pair:0,1", "pair:2,3",
          "pi/2", "signless"),
        r("chord-c4-b2-rho1", "cycle-plus-chord", {"n": 4, "b": 2, "rho": 1}, "pair:0,1", "pair:0,3",
          "pi/2", "lap"),
        r("chord-c4-b2-rho2", "cycle-plus-chord", {"n": 4, "b": 2, "rho": 2}, "pair:0,1", "pair:2,3",
          "pi/2", "lap"),
        r("path-p3-w1", "path-potentials", {"n": 3, "w1": 1}, "pair:0,1", "pair:1,2", "pi/(q*sqrt(2))"),
        r("path-p4-w1q", "path-potentials", {"n": 4, "w1": "1+1/q"}, "pair:0,3", "pair:1,2", "pi/(2q)"),
        r("path-p5-w1", "path-potentials", {"n": 5, "w1": 1}, "pair:0,4", "pair:1,3", "pi/(2q)"),
        r("path-p7-w1", "path-potentials", {"n": 7, "w1": 1}, "pair:0,6", "pair:2,4", "pi/(q*sqrt(2))"),
        r("path-two-edges-6", "path-plus-two-edges", {"n": 6}, "pair:0,5", "pair:1,4", "pi/(2q)"),
        r("path-two-edges-7", "path-plus-two-edges", {"n": 7}, "pair:0,6", "pair:1,5", "pi/(2q)"),
        r("path-two-edges-8", "path-plus-two-edges", {"n": 8}, "pair:0,7", "pair:1,6", "pi/(2q)"),
        r("p2-vertex", "path", {"n": 2}, "v:0", "v:1", "pi/(2q)"),
        *_p3_records(),
        r("tree-p5-star", "attach", {"base": "path-potentials", "base_params": {"n": 5, "w1": 1},
                                     "tree": "star", "size": 3, "at": "3"},
          "pair:0,4", "pair:1,3", "pi/(2q)"),
        r("tree-p5-path4", "attach", {"base": "path-potentials", "base_params": {"n": 5, "w1": 1},
                                      "tree": "path", "size": 4, "at": "3"},
          "pair:0,4", "pair:1,3", "pi/(2q)"),
        r("hex-chords", "custom", _hex("1/q-1"), "pair:1,4", "pair:2,3", "pi/(2q)"),
        r("cubic-oct", "custom", CUBIC_OCT, "pair:0,5", "pair:1,4", "pi/(2q)"),
        r("hept", "custom", HEPT, "pair:0,5", "pair:1,4", "pi/(2q)"),
        r("path4-lap-none", "path", {"n": 4}, "v:0", "v:3", matrix="lap", kind="no_pst", horizon=20.0),
    ]
    return recs


def corpus_instances(q: float, records=None) -> list[tuple[str, fam.FamilyInstance]]:
    """Graph and canonical involution of every corpus claim, built at ``q``."""
    out = []
    for rec in records if records is not None else default_corpus():
        inst = build_family(rec.family, rec.params, q)
        if inst.involution is not None:
            out.append((rec.id, inst))
    return out
