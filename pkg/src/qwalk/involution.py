"""Graph involutions and the half-graph block reduction of the q-Laplacian.

For an involution ``phi`` with fixed set ``S`` and a representative set ``H``
(one vertex per 2-orbit), ordering the vertices as ``(H, phi(H), S)`` gives

    L = [[L',   A_phi, A_S],
         [A_phi, L',   A_S],
         [A_S^T, A_S^T, L_S]]

and ``M^T U_L(t) M = blockdiag(U_{L_-}(t), U_{~L_+}(t))`` where
``L_- = L' - A_phi`` and ``~L_+ = [[L' + A_phi, sqrt2 A_S], [sqrt2 A_S^T, L_S]]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .graph_core import WeightedGraph, adjacency_matrix, q_laplacian
from .spectral import eigendecompose, transition_matrix
from .transfer import (PST_TOL, PureState, detect_pst, pair_state, plus_state, raw_state,
                       search_pst, vertex_state)

EXHAUSTIVE_MAX_N = 16


class InvolutionError(ValueError):
    pass


class NotOrderTwoError(InvolutionError):
    pass


class NotAutomorphismError(InvolutionError):
    pass


class AsymmetricPotentialError(InvolutionError):
    pass


class TrivialInvolutionError(InvolutionError):
    pass


@dataclass(frozen=True)
class Involution:
    perm: tuple
    fixed: tuple
    half: tuple

    @property
    def n(self) -> int:
        return len(self.perm)

    @property
    def orbits(self) -> list[tuple[int, int]]:
        return [(u, self.perm[u]) for u in self.half]

    def image(self, v: int) -> int:
        return self.perm[v]

    def ordering(self) -> list[int]:
        """Vertex order ``(half, phi(half), fixed)`` used by the block form."""
        return list(self.half) + [self.perm[u] for u in self.half] + list(self.fixed)

    def permutation_matrix(self) -> np.ndarray:
        P = np.zeros((self.n, self.n))
        for v, w in enumerate(self.perm):
            P[w, v] = 1.0
        return P

    def with_half(self, half) -> "Involution":
        """Same involution with another choice of orbit representatives."""
        half = tuple(half)
        if sorted(min(u, self.perm[u]) for u in half) != sorted(min(o) for o in self.orbits):
            raise InvolutionError(f"{half} is not one vertex per 2-orbit")
        return Involution(self.perm, self.fixed, half)

    def to_dict(self) -> dict:
        return {"orbits": [list(o) for o in self.orbits], "fixed": list(self.fixed)}

    @classmethod
    def from_dict(cls, data: dict, n: int) -> "Involution":
        perm = list(range(n))
        for u, v in data["orbits"]:
            perm[u], perm[v] = v, u
        return cls.from_perm(perm)

    @classmethod
    def from_perm(cls, perm) -> "Involution":
        perm = tuple(int(p) for p in perm)
        fixed = tuple(v for v, w in enumerate(perm) if v == w)
        half = tuple(v for v, w in enumerate(perm) if v < w)
        return cls(perm, fixed, half)


def verify_involution(g: WeightedGraph, perm) -> Involution:
    """Check that ``perm`` is a non-trivial, potential-preserving involutory automorphism."""
    perm = [int(p) for p in perm]
    n = g.n
    if sorted(perm) != list(range(n)):
        raise InvolutionError(f"not a permutation of 0..{n - 1}: {perm}")
    if any(perm[perm[v]] != v for v in range(n)):
        raise NotOrderTwoError("permutation does not square to the identity")
    if all(perm[v] == v for v in range(n)):
        raise TrivialInvolutionError("the identity is not a non-trivial involution")
    A = adjacency_matrix(g)
    if not np.array_equal(A, A[np.ix_(perm, perm)]):
        raise NotAutomorphismError("permutation does not preserve the weighted edges")
    if any(g.eta(v) != g.eta(perm[v]) for v in range(n)):
        raise AsymmetricPotentialError("potential is not symmetric under the permutation")
    return Involution.from_perm(perm)


def _refined_colours(A: np.ndarray, pot: list[float]) -> list[int]:
    """Colour refinement seeded with potentials; automorphisms preserve colours."""
    n = len(pot)
    colours: list[int] = []
    sig = [(pot[v],) for v in range(n)]
    for _ in range(n + 1):
        keys = {s: i for i, s in enumerate(sorted(set(sig)))}
        new = [keys[s] for s in sig]
        if new == colours:
            break
        colours = new
        sig = [(colours[v], tuple(sorted((colours[u], A[v, u]) for u in range(n) if A[v, u])))
               for v in range(n)]
    return colours


def automorphisms(g: WeightedGraph, involutions_only: bool = False,
                  max_results: int = 1_000_000) -> list[tuple[int, ...]]:
    """All weighted automorphisms that also preserve the potential, by backtracking."""
    n = g.n
    A = adjacency_matrix(g)
    pot = [g.eta(v) for v in range(n)]
    colours = _refined_colours(A, pot)
    perm = [-1] * n
    used = [False] * n
    out: list[tuple[int, ...]] = []

    def consistent(v, w):
        for u in range(n):
            pu = perm[u]
            if pu < 0:
                continue
            if A[v, u] != A[w, pu]:
                return False
        if A[v, v] != A[w, w]:
            return False
        return True

    def rec(i):
        if len(out) >= max_results:
            raise InvolutionError(f"more than {max_results} automorphisms; refusing to enumerate")
        while i < n and perm[i] >= 0:
            i += 1
        if i == n:
            out.append(tuple(perm))
            return
        for w in range(n):
            if used[w] or colours[w] != colours[i]:
                continue
            if involutions_only:
                if w < i or (w != i and perm[w] >= 0):
                    continue
                perm[i], used[w] = w, True
                if w != i:
                    perm[w], used[i] = i, True
                ok = consistent(i, w) and (w == i or consistent(w, i))
                if ok:
                    rec(i + 1)
                perm[i], used[w] = -1, False
                if w != i:
                    perm[w], used[i] = -1, False
            else:
                perm[i], used[w] = w, True
                if consistent(i, w):
                    rec(i + 1)
                perm[i], used[w] = -1, False

    rec(0)
    return out


def find_involutions(g: WeightedGraph, candidates=None,
                     max_exhaustive_n: int = EXHAUSTIVE_MAX_N) -> list[Involution]:
    """Every non-trivial involution of ``g`` (exhaustive for small ``n``).

    Larger graphs need an explicit list of candidate permutations.
    """
    if candidates is not None:
        found = []
        for perm in candidates:
            try:
                inv = verify_involution(g, perm)
            except InvolutionError:
                continue
            if inv not in found:
                found.append(inv)
        return found
    if g.n > max_exhaustive_n:
        raise InvolutionError(
            f"n={g.n} exceeds the exhaustive bound {max_exhaustive_n}; pass candidates")
    perms = automorphisms(g, involutions_only=True)
    return [Involution.from_perm(p) for p in perms if any(p[v] != v for v in range(g.n))]


@dataclass(frozen=True, eq=False)
class HalfBlocks:
    Lp: np.ndarray
    Aphi: np.ndarray
    AS: np.ndarray
    LS: np.ndarray
    Lminus: np.ndarray
    Lplus: np.ndarray
    Lplus_sym: np.ndarray

    def assemble(self) -> np.ndarray:
        """Rebuild the full matrix in ``(half, phi(half), fixed)`` order."""
        return np.block([
            [self.Lp, self.Aphi, self.AS],
            [self.Aphi, self.Lp, self.AS],
            [self.AS.T, self.AS.T, self.LS],
        ])


def _induced(g: WeightedGraph, verts) -> WeightedGraph:
    idx = {v: i for i, v in enumerate(verts)}
    edges = [(idx[u], idx[v], w) for (u, v), w in g.edges.items() if u in idx and v in idx]
    pot = {idx[v]: g.eta(v) for v in verts if g.eta(v)}
    return WeightedGraph.from_edges(len(verts), edges, pot)


def half_blocks(g: WeightedGraph, inv: Involution, q: float) -> HalfBlocks:
    half, fixed = list(inv.half), list(inv.fixed)
    mirror = [inv.perm[u] for u in half]
    L = q_laplacian(g, q)
    A = adjacency_matrix(g)
    # half-graph q-Laplacian plus the degree lost to edges leaving the half graph
    deficit = A[half].sum(axis=1) - A[np.ix_(half, half)].sum(axis=1)
    Lp = q_laplacian(_induced(g, half), q) + q * q * np.diag(deficit) if half else np.zeros((0, 0))
    sdef = A[fixed].sum(axis=1) - A[np.ix_(fixed, fixed)].sum(axis=1)
    LS = q_laplacian(_induced(g, fixed), q) + q * q * np.diag(sdef) if fixed else np.zeros((0, 0))
    Aphi = L[np.ix_(half, mirror)]
    AS = L[np.ix_(half, fixed)]
    Lminus = Lp - Aphi
    Lplus = np.block([[Lp + Aphi, AS], [2 * AS.T, LS]])
    r2 = math.sqrt(2)
    Lplus_sym = np.block([[Lp + Aphi, r2 * AS], [r2 * AS.T, LS]])
    return HalfBlocks(Lp, Aphi, AS, LS, Lminus, Lplus, Lplus_sym)


def basis_matrix(g: WeightedGraph, inv: Involution) -> np.ndarray:
    """Orthogonal ``M``: pair differences, then pair sums, then fixed vertices."""
    n, h = g.n, len(inv.half)
    M = np.zeros((n, n))
    s = 1 / math.sqrt(2)
    for i, u in enumerate(inv.half):
        M[u, i], M[inv.perm[u], i] = s, -s
        M[u, h + i], M[inv.perm[u], h + i] = s, s
    for j, v in enumerate(inv.fixed):
        M[v, 2 * h + j] = 1.0
    return M


def _blockdiag(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.zeros((a.shape[0] + b.shape[0],) * 2, dtype=np.result_type(a, b))
    out[:a.shape[0], :a.shape[0]] = a
    out[a.shape[0]:, a.shape[0]:] = b
    return out


def _expm_sym(m: np.ndarray, t: float) -> np.ndarray:
    if m.shape[0] == 0:
        return np.zeros((0, 0), dtype=complex)
    return transition_matrix(eigendecompose(m), t)


def verify_block_diagonalization(g: WeightedGraph, inv: Involution, q: float, times,
                                 perm_override=None) -> float:
    """Max entrywise residual of ``M^T U(t) M - blockdiag(U_-(t), U_+~(t))`` over ``times``.

    ``perm_override`` builds ``M`` from a different permutation (negative controls).
    """
    blocks = half_blocks(g, inv, q)
    basis_inv = Involution.from_perm(perm_override) if perm_override is not None else inv
    M = basis_matrix(g, basis_inv)
    d = eigendecompose(q_laplacian(g, q))
    worst = 0.0
    for t in times:
        lhs = M.T @ transition_matrix(d, t) @ M
        rhs = _blockdiag(_expm_sym(blocks.Lminus, t), _expm_sym(blocks.Lplus_sym, t))
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def factorization_residual(L: np.ndarray, blocks: HalfBlocks) -> float:
    """Max gap between sorted eigenvalues of ``L`` and of ``L_+`` joined with ``L_-``."""
    full = np.sort(np.linalg.eigvalsh(L))
    plus = np.linalg.eigvals(blocks.Lplus) if blocks.Lplus.size else np.array([])
    minus = np.linalg.eigvalsh(blocks.Lminus) if blocks.Lminus.size else np.array([])
    if plus.size and np.max(np.abs(plus.imag)) > 1e-8:
        return math.inf
    joined = np.sort(np.concatenate([plus.real, minus]))
    return float(np.max(np.abs(full - joined)))


def spectrum_factorization_check(g: WeightedGraph, inv: Involution, q: float,
                                 tol: float = 1e-8, blocks: HalfBlocks | None = None) -> bool:
    """Spectrum of ``L`` is the union of the spectra of ``L_+`` and ``L_-``."""
    blocks = blocks if blocks is not None else half_blocks(g, inv, q)
    return factorization_residual(q_laplacian(g, q), blocks) <= tol


def lift_state(inv: Involution, half_state, sign: str) -> PureState:
    """Map a half-graph state into the full graph through ``M``.

    ``sign='-'`` takes a vector over the half vertices (the ``L_-`` sector);
    ``sign='+'`` takes a vector over half vertices followed by fixed vertices
    (the ``~L_+`` sector).
    """
    h, s = len(inv.half), len(inv.fixed)
    vec = np.asarray(getattr(half_state, "vector", half_state), dtype=float)
    r = 1 / math.sqrt(2)
    out = np.zeros(inv.n)
    if sign == "-":
        if len(vec) != h:
            raise InvolutionError(f"minus-sector state needs length {h}, got {len(vec)}")
        for i, u in enumerate(inv.half):
            out[u] += r * vec[i]
            out[inv.perm[u]] -= r * vec[i]
    elif sign == "+":
        if len(vec) != h + s:
            raise InvolutionError(f"plus-sector state needs length {h + s}, got {len(vec)}")
        for i, u in enumerate(inv.half):
            out[u] += r * vec[i]
            out[inv.perm[u]] += r * vec[i]
        for j, v in enumerate(inv.fixed):
            out[v] += vec[h + j]
    else:
        raise InvolutionError(f"sign must be '+' or '-', got {sign!r}")
    nz = np.flatnonzero(np.abs(vec) > 0)
    if len(nz) == 1 and abs(abs(vec[nz[0]]) - 1) < 1e-12 and vec[nz[0]] > 0:
        i = int(nz[0])
        if sign == "-":
            return pair_state(inv.n, inv.half[i], inv.perm[inv.half[i]])
        if i < h:
            return plus_state(inv.n, inv.half[i], inv.perm[inv.half[i]])
        return vertex_state(inv.n, inv.fixed[i - h])
    return raw_state(out)


@dataclass
class LiftedWitness:
    """A PST witness found in a half-graph block and re-checked on the full graph."""

    x: PureState
    y: PureState
    time: float
    fidelity: float
    sector: str

    def to_dict(self) -> dict:
        return {"x": str(self.x), "y": str(self.y), "time": self.time,
                "fidelity": self.fidelity, "sector": self.sector}


def reduce_pair_pst(g: WeightedGraph, inv: Involution, q: float, t_max: float,
                    pst_tol: float = PST_TOL, first_only: bool = True,
                    sectors: str = "-+") -> list[LiftedWitness]:
    """Vertex PST inside ``L_-`` and ``~L_+``, lifted to pair/plus/vertex PST on ``g``.

    ``sectors`` selects which blocks to search. Every lifted witness is
    re-verified against the full q-Laplacian.
    """
    blocks = half_blocks(g, inv, q)
    full = eigendecompose(q_laplacian(g, q))
    out = []
    for sign, block in (("-", blocks.Lminus), ("+", blocks.Lplus_sym)):
        m = block.shape[0]
        if sign not in sectors or m < 2:
            continue
        d = eigendecompose(block)
        eye = np.eye(m)
        for i, j in combinations(range(m), 2):
            hits = search_pst(d, eye[i], eye[j], t_max, pst_tol=pst_tol)
            if first_only:
                hits = hits[:1]
            for t, _ in hits:
                x, y = lift_state(inv, eye[i], sign), lift_state(inv, eye[j], sign)
                rep = detect_pst(full, x, y, t, pst_tol)
                if rep.verdict.value == "PST":
                    out.append(LiftedWitness(x, y, t, rep.fidelity, sign))
    return out
