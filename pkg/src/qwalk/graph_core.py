"""Weighted graphs with vertex potentials and their Laplacian-type matrices.

Vertices are the integers ``0..n-1``. Loops are never stored as edges; a loop
of weight ``w`` at ``v`` is expressed as the potential ``eta(v) = w``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np


class GraphError(ValueError):
    """Raised for malformed graphs or invalid matrix parameters."""


def _key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class WeightedGraph:
    """Undirected weighted graph with an optional potential on each vertex.

    ``edges`` maps the unordered pair ``(u, v)`` with ``u < v`` to its weight.
    Use :meth:`from_edges` rather than building the mapping by hand.
    """

    n: int
    edges: Mapping[tuple[int, int], float] = field(default_factory=dict)
    potential: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.n < 0:
            raise GraphError(f"vertex count must be non-negative, got {self.n}")
        for (u, v), w in self.edges.items():
            if not (0 <= u < v < self.n):
                raise GraphError(f"bad edge ({u}, {v}) for n={self.n}")
            if not w > 0:
                raise GraphError(f"edge ({u}, {v}) has non-positive weight {w}")
        for v in self.potential:
            if not 0 <= v < self.n:
                raise GraphError(f"potential on missing vertex {v}")
        # freeze the mappings so instances can be shared safely
        object.__setattr__(self, "edges", dict(sorted(self.edges.items())))
        object.__setattr__(
            self, "potential",
            {v: float(p) for v, p in sorted(self.potential.items()) if p != 0},
        )

    @classmethod
    def from_edges(cls, n: int, edges: Iterable, potential: Mapping[int, float] | None = None):
        """Build from ``(u, v)`` or ``(u, v, w)`` tuples; duplicates are rejected."""
        emap: dict[tuple[int, int], float] = {}
        for e in edges:
            if len(e) == 2:
                u, v, w = e[0], e[1], 1.0
            elif len(e) == 3:
                u, v, w = e
            else:
                raise GraphError(f"edge entry must have 2 or 3 items: {e!r}")
            u, v = int(u), int(v)
            if u == v:
                raise GraphError(f"self-loop at {u}; use a potential instead")
            k = _key(u, v)
            if k in emap:
                raise GraphError(f"duplicate edge {k}")
            emap[k] = float(w)
        return cls(n, emap, dict(potential or {}))

    def weight(self, u: int, v: int) -> float:
        return self.edges.get(_key(u, v), 0.0)

    def eta(self, v: int) -> float:
        return self.potential.get(v, 0.0)

    def neighbors(self, v: int) -> dict[int, float]:
        out = {}
        for (a, b), w in self.edges.items():
            if a == v:
                out[b] = w
            elif b == v:
                out[a] = w
        return out

    def with_edges(self, extra: Iterable, potential: Mapping[int, float] | None = None):
        """Copy with additional edges; an edge already present gains the new weight."""
        emap = dict(self.edges)
        for e in extra:
            u, v = int(e[0]), int(e[1])
            w = float(e[2]) if len(e) > 2 else 1.0
            k = _key(u, v)
            emap[k] = emap.get(k, 0.0) + w
        pot = dict(self.potential)
        for v, p in (potential or {}).items():
            pot[v] = pot.get(v, 0.0) + p
        return WeightedGraph(self.n, emap, pot)

    def with_potential(self, potential: Mapping[int, float]):
        return WeightedGraph(self.n, self.edges, dict(potential))

    # JSON: {"n": int, "edges": [[u, v, w], ...], "potentials": {"v": value}}
    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "edges": [[u, v, w] for (u, v), w in self.edges.items()],
            "potentials": {str(v): p for v, p in self.potential.items()},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "WeightedGraph":
        try:
            n = int(data["n"])
            edges = data.get("edges", [])
            pot = {int(k): float(v) for k, v in data.get("potentials", {}).items()}
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphError(f"malformed graph JSON: {exc}") from exc
        return cls.from_edges(n, edges, pot)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "WeightedGraph":
        return cls.from_dict(json.loads(text))


def adjacency_matrix(g: WeightedGraph) -> np.ndarray:
    A = np.zeros((g.n, g.n))
    for (u, v), w in g.edges.items():
        A[u, v] = A[v, u] = w
    return A


def degree_matrix(g: WeightedGraph) -> np.ndarray:
    """Diagonal of weighted row sums. Potentials are not included."""
    return np.diag(adjacency_matrix(g).sum(axis=1))


def potential_matrix(g: WeightedGraph) -> np.ndarray:
    return np.diag([g.eta(v) for v in range(g.n)])


def q_laplacian(g: WeightedGraph, q: float) -> np.ndarray:
    """Return ``(1 - q^2) I + q^2 (Delta + Delta') - q A``.

    For zero potentials this is ``qL - (q-1)I + q(q-1)(Delta - I)``; it equals
    the Laplacian at ``q = 1`` and the signless Laplacian at ``q = -1``.
    """
    if q == 0:
        raise GraphError("q must be non-zero")
    A = adjacency_matrix(g)
    D = np.diag(A.sum(axis=1)) + potential_matrix(g)
    return (1 - q * q) * np.eye(g.n) + q * q * D - q * A


def laplacian(g: WeightedGraph) -> np.ndarray:
    A = adjacency_matrix(g)
    return np.diag(A.sum(axis=1)) + potential_matrix(g) - A


def signless_laplacian(g: WeightedGraph) -> np.ndarray:
    A = adjacency_matrix(g)
    return np.diag(A.sum(axis=1)) + potential_matrix(g) + A


MATRIX_KINDS = ("qlap", "lap", "signless")


def matrix_for(g: WeightedGraph, kind: str, q: float | None = None) -> np.ndarray:
    """Dispatch on ``kind``: ``lap`` and ``signless`` ignore ``q``."""
    if kind == "lap":
        return laplacian(g)
    if kind == "signless":
        return signless_laplacian(g)
    if kind == "qlap":
        if q is None:
            raise GraphError("qlap needs a value of q")
        return q_laplacian(g, q)
    raise GraphError(f"unknown matrix kind {kind!r}; expected one of {MATRIX_KINDS}")


def kind_q(kind: str, q: float | None = None) -> float:
    """The q value a matrix kind corresponds to."""
    return {"lap": 1.0, "signless": -1.0}.get(kind, q)


def are_twins(g: WeightedGraph, u: int, v: int) -> bool:
    """Twins share neighbours (outside ``{u, v}``) with equal weights and equal potential."""
    for x in (u, v):
        if not 0 <= x < g.n:
            raise GraphError(f"vertex {x} out of range for n={g.n}")
    if u == v:
        raise GraphError("twins must be distinct vertices")
    nu = {z: w for z, w in g.neighbors(u).items() if z != v}
    nv = {z: w for z, w in g.neighbors(v).items() if z != u}
    return nu == nv and g.eta(u) == g.eta(v)


def is_symmetric(m: np.ndarray, rtol: float = 1e-12) -> bool:
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    return bool(np.max(np.abs(m - m.T), initial=0.0) <= rtol * scale)
