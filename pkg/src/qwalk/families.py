"""Constructors for the graph families studied, with involutions and PST claims.

Internal vertex labels are 0-based. Where the literature numbers vertices from
1, ``markers`` maps those labels (as strings) to internal vertices; named
vertices such as ``a``..``d`` or ``hub`` are markers too.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .graph_core import GraphError, WeightedGraph
from .involution import Involution, verify_involution
from .transfer import parse_state


@dataclass(frozen=True)
class Claim:
    """PST from ``x`` to ``y`` at ``time`` (an expression in ``q``).

    ``matrix`` pins the matrix kind (``lap``/``signless``) or leaves it as
    ``qlap``; ``q_values`` restricts a ``qlap`` claim to particular q.
    """

    x: str
    y: str
    time: str
    matrix: str = "qlap"
    q_values: tuple | None = None

    def to_dict(self) -> dict:
        d = {"x": self.x, "y": self.y, "time": self.time, "matrix": self.matrix}
        if self.q_values is not None:
            d["q_values"] = list(self.q_values)
        return d


@dataclass(frozen=True)
class FamilyInstance:
    graph: WeightedGraph
    involution: Involution | None = None
    markers: dict = field(default_factory=dict)
    claims: tuple = ()
    dropped_claims: tuple = ()
    name: str = ""

    def vertex(self, marker) -> int:
        if isinstance(marker, int):
            return marker
        try:
            return self.markers[str(marker)]
        except KeyError:
            raise GraphError(f"unknown marker {marker!r}") from None

    def to_dict(self) -> dict:
        d = self.graph.to_dict()
        d["family"] = self.name
        d["markers"] = dict(self.markers)
        d["involution"] = self.involution.to_dict() if self.involution else None
        d["claims"] = [c.to_dict() for c in self.claims]
        if self.dropped_claims:
            d["dropped_claims"] = [c.to_dict() for c in self.dropped_claims]
        return d


def _numbered(n: int) -> dict:
    return {str(i + 1): i for i in range(n)}


def _reflection(n: int) -> list[int]:
    return [n - 1 - v for v in range(n)]


def path(n: int) -> FamilyInstance:
    if n < 1:
        raise GraphError("path needs n >= 1")
    g = WeightedGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)])
    inv = verify_involution(g, _reflection(n)) if n >= 2 else None
    claims = (Claim("v:0", "v:1", "pi/(2q)"),) if n == 2 else ()
    return FamilyInstance(g, inv, _numbered(n), claims, name=f"path({n})")


def cycle(n: int) -> FamilyInstance:
    """Cycle on Z_n. The canonical involution is ``v -> -v mod n``."""
    if n < 3:
        raise GraphError("cycle needs n >= 3")
    g = WeightedGraph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])
    inv = verify_involution(g, [(-v) % n for v in range(n)])
    claims = {
        4: (Claim("pair:0,1", "pair:2,3", "pi/(2q)"),),
        6: (Claim("pair:1,5", "pair:2,4", "pi/(2q)"),),
        8: (Claim("pair:1,7", "pair:3,5", "pi/(q*sqrt(2))"),),
    }.get(n, ())
    return FamilyInstance(g, inv, {str(i): i for i in range(n)}, claims, name=f"cycle({n})")


def complete_bipartite(m: int, n: int) -> FamilyInstance:
    """Parts ``0..m-1`` and ``m..m+n-1``."""
    if m < 1 or n < 1:
        raise GraphError("complete_bipartite needs m, n >= 1")
    g = WeightedGraph.from_edges(m + n, [(i, m + j) for i in range(m) for j in range(n)])
    inv = None
    if m >= 2:
        perm = list(range(m + n))
        perm[0], perm[1] = 1, 0
        inv = verify_involution(g, perm)
    return FamilyInstance(g, inv, {}, name=f"complete_bipartite({m},{n})")


def wheel(n: int = 5) -> FamilyInstance:
    """Rim ``cycle(n-1)`` plus a hub ``n-1`` joined to every rim vertex.

    ``wheel(5)`` uses the labelling of the usual W5 drawing (1-based labels
    ``1..5``, hub ``5``): rim edges 1-2, 1-3, 2-4, 3-4.
    """
    if n < 4:
        raise GraphError("wheel needs n >= 4")
    hub = n - 1
    if n == 5:
        rim = [(0, 1), (0, 2), (1, 3), (2, 3)]
        perm = [2, 3, 0, 1, 4]
    else:
        r = n - 1
        rim = [(i, (i + 1) % r) for i in range(r)]
        perm = [(-v) % r for v in range(r)] + [hub]
    g = WeightedGraph.from_edges(n, rim + [(i, hub) for i in range(hub)])
    markers = _numbered(n)
    markers["hub"] = hub
    return FamilyInstance(g, verify_involution(g, perm), markers, name=f"wheel({n})")


def path_with_end_potentials(n: int, w1: float, w2: float | None = None) -> FamilyInstance:
    """``P_n(w1, w2)``: path with potential only at the two end vertices."""
    if n < 2:
        raise GraphError("path_with_end_potentials needs n >= 2")
    w2 = w1 if w2 is None else w2
    g = WeightedGraph.from_edges(n, [(i, i + 1) for i in range(n - 1)], {0: w1, n - 1: w2})
    inv = verify_involution(g, _reflection(n)) if w1 == w2 else None
    claims = ()
    if w1 == w2 == 1:
        claims = {
            3: (Claim("pair:0,1", "pair:1,2", "pi/(q*sqrt(2))"),),
            5: (Claim("pair:0,4", "pair:1,3", "pi/(2q)"),),
            7: (Claim("pair:0,6", "pair:2,4", "pi/(q*sqrt(2))"),),
        }.get(n, ())
    elif n == 4 and w1 == w2:
        # P4(1 + 1/q) at the single q for which w1 = 1 + 1/q
        claims = (Claim("pair:0,3", "pair:1,2", "pi/(2q)", q_values=(1 / (w1 - 1),)),)
    elif n == 2 and w1 == w2 == 0:
        claims = (Claim("v:0", "v:1", "pi/(2q)"),)
    return FamilyInstance(g, inv, _numbered(n), claims, name=f"P{n}({w1:g},{w2:g})")


def cycle_with_tail(cycle_len: int, tail_len: int) -> FamilyInstance:
    """C6 or C8 with a path of ``tail_len`` extra vertices hanging off vertex ``cycle_len/2``.

    Involution ``v -> -v mod cycle_len`` fixes 0 and the attachment vertex.
    Markers follow the usual drawing: ``a = 1``, ``c = cycle_len - 1`` and
    ``b``, ``d`` the neighbours of the attachment vertex on the a- and c-side.
    """
    if cycle_len not in (6, 8):
        raise GraphError("cycle_with_tail supports cycle_len 6 or 8")
    if tail_len < 1:
        raise GraphError("tail_len must be >= 1")
    L = cycle_len
    attach = L // 2
    edges = [(i, (i + 1) % L) for i in range(L)]
    edges += [(attach if i == 0 else L + i - 1, L + i) for i in range(tail_len)]
    n = L + tail_len
    g = WeightedGraph.from_edges(n, edges)
    perm = [(-v) % L for v in range(L)] + list(range(L, n))
    markers = {"a": 1, "b": attach - 1, "c": L - 1, "d": attach + 1, "attach": attach, "v": L}
    time = "pi/(2q)" if L == 6 else "pi/(q*sqrt(2))"
    claim = Claim(f"pair:{markers['a']},{markers['c']}", f"pair:{markers['b']},{markers['d']}", time)
    return FamilyInstance(g, verify_involution(g, perm), markers, (claim,),
                          name=f"cycle_with_tail({L},{tail_len})")


def kmn_minus_matching(m: int, n: int, k: int, add_E: bool = False) -> FamilyInstance:
    """``K_{m,n} - M_k`` (optionally ``+ E``) with involution ``(a b)(c d)``.

    Part X_i (i < n) is vertex ``2i``, part Y_j is ``2j + 1`` and the surplus
    X vertices follow from ``2n``; the internal label plus one is the usual
    1-based label. The matching is ``{X_i, Y_i : i < k}``, with
    ``a = X_0``, ``c = Y_0``, ``b = X_1``, ``d = Y_1``. With ``add_E`` the
    vertices a and b are joined to the last ``m - n`` vertices of X.
    """
    if k < 2 or k > min(m, n):
        raise GraphError(f"need 2 <= k <= min(m, n), got k={k}")
    if add_E and m <= n:
        raise GraphError("add_E requires m > n")
    if m < n:
        raise GraphError("m must be >= n (put the larger part first)")
    X = [2 * i for i in range(n)] + [2 * n + i for i in range(m - n)]
    Y = [2 * j + 1 for j in range(n)]
    removed = {(X[i], Y[i]) for i in range(k)}
    edges = [(x, y) for x in X for y in Y if (x, y) not in removed]
    a, b, c, d = X[0], X[1], Y[0], Y[1]
    if add_E:
        edges += [(u, x) for x in X[n:] for u in (a, b)]
    g = WeightedGraph.from_edges(m + n, edges)
    perm = list(range(m + n))
    perm[a], perm[b], perm[c], perm[d] = b, a, d, c
    markers = {"a": a, "b": b, "c": c, "d": d, **_numbered(m + n)}
    claims = ()
    if m == n or add_E:
        claims = (Claim(f"pair:{a},{b}", f"pair:{c},{d}", "pi/(2q)"),)
    name = f"K{m},{n}-M{k}" + ("+E" if add_E else "")
    return FamilyInstance(g, verify_involution(g, perm), markers, claims, name=name)


def cycle_plus_chord(n: int, b: int, rho: float) -> FamilyInstance:
    """``C_n + rho{0, b}``; a chord on an existing cycle edge adds to its weight.

    Canonical involution ``a -> b - a mod n``.
    """
    if n < 3 or not 1 <= b <= n - 1:
        raise GraphError(f"need n >= 3 and 1 <= b <= n-1, got n={n}, b={b}")
    if not rho > 0:
        raise GraphError("rho must be positive")
    g = cycle(n).graph.with_edges([(0, b, rho)])
    inv = verify_involution(g, [(b - v) % n for v in range(n)])
    claims: tuple = ()
    if n == 3 and b == 1:
        claims = (Claim("pair:0,2", "pair:1,2", f"pi/({2 * rho!r})", "lap"),)
    elif n == 4 and b == 1 and rho == 1:
        claims = (Claim("pair:0,1", "pair:2,3", "pi/2", "signless"),)
    elif n == 4 and b == 2 and rho == 1:
        claims = (Claim("pair:0,1", "pair:0,3", "pi/2", "lap"),)
    elif n == 4 and b == 2 and rho == 2:
        claims = (Claim("pair:0,1", "pair:2,3", "pi/2", "lap"),)
    return FamilyInstance(g, inv, {str(i): i for i in range(n)}, claims,
                          name=f"C{n}+{rho:g}{{0,{b}}}")


def path_plus_two_edges(n: int) -> FamilyInstance:
    """``P_n`` plus edges {2, n-2} and {3, n-1} (1-based) and potential 2 at both ends."""
    if n < 6:
        raise GraphError("path_plus_two_edges needs n >= 6")
    edges = [(i, i + 1) for i in range(n - 1)] + [(1, n - 3), (2, n - 2)]
    g = WeightedGraph.from_edges(n, edges, {0: 2.0, n - 1: 2.0})
    claim = Claim(f"pair:0,{n - 1}", f"pair:1,{n - 2}", "pi/(2q)")
    return FamilyInstance(g, verify_involution(g, _reflection(n)), _numbered(n), (claim,),
                          name=f"path_plus_two_edges({n})")


def c5_with_potential(with_potential: bool = True) -> FamilyInstance:
    """C5 on Z_5 with potential 1 at vertices 1 and 4; involution (1 4)(2 3)."""
    pot = {1: 1.0, 4: 1.0} if with_potential else {}
    g = cycle(5).graph.with_potential(pot)
    inv = verify_involution(g, [0, 4, 3, 2, 1])
    claims = (Claim("pair:1,4", "pair:2,3", "pi/2", "lap"),) if with_potential else ()
    return FamilyInstance(g, inv, {str(i): i for i in range(5)}, claims,
                          name="C5+potential" if with_potential else "C5")


def star(leaves: int) -> WeightedGraph:
    """Star with centre 0."""
    return WeightedGraph.from_edges(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def _antisymmetric(state: str, inv: Involution, n: int) -> bool:
    x = parse_state(state, n).vector
    return bool(np.allclose(x[list(inv.perm)], -x))


def attach_graph(base: FamilyInstance, tree: WeightedGraph, at_marker) -> FamilyInstance:
    """Glue ``tree`` to ``base`` by identifying tree vertex 0 with the marked vertex.

    The new vertices are fixed by the extended involution. Claims survive only
    if the attachment vertex is fixed and both claim states are antisymmetric
    under the involution (pair states across orbits); others are moved to
    ``dropped_claims``.
    """
    v = base.vertex(at_marker)
    n0 = base.graph.n
    relabel = {0: v, **{i: n0 + i - 1 for i in range(1, tree.n)}}
    extra = [(relabel[a], relabel[b], w) for (a, b), w in tree.edges.items()]
    pot = {relabel[u]: p for u, p in tree.potential.items()}
    g = WeightedGraph(n0 + tree.n - 1, dict(base.graph.edges), dict(base.graph.potential))
    g = g.with_edges(extra, pot)
    inv, keep, dropped = None, [], list(base.claims)
    if base.involution is not None and base.involution.perm[v] == v:
        perm = list(base.involution.perm) + list(range(n0, g.n))
        inv = verify_involution(g, perm)
        keep = [c for c in base.claims
                if _antisymmetric(c.x, base.involution, n0) and _antisymmetric(c.y, base.involution, n0)]
        dropped = [c for c in base.claims if c not in keep]
    return replace(base, graph=g, involution=inv, claims=tuple(keep),
                   dropped_claims=tuple(dropped), name=f"{base.name}+attach@{at_marker}")


def custom(n: int, edges, potentials=None, perm=None, name: str = "custom") -> FamilyInstance:
    g = WeightedGraph.from_edges(n, edges, potentials or {})
    inv = verify_involution(g, perm) if perm is not None else None
    return FamilyInstance(g, inv, {str(i): i for i in range(n)}, name=name)
