"""Closed-form spectra for cycles and chord perturbations, PST constraint checkers
and generators for the path results.

Cycles are labelled ``0..n-1``; ``zeta = -1`` selects the Laplacian and
``zeta = +1`` the signless Laplacian. A chord ``rho{0, b}`` is the rank-one
update ``rho w w^T`` with ``w = e_0 + zeta e_b``.
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from fractions import Fraction
from itertools import combinations

import numpy as np
from scipy.linalg import expm

from .families import FamilyInstance, cycle, cycle_plus_chord, path, path_with_end_potentials
from .graph_core import (WeightedGraph, adjacency_matrix, kind_q, laplacian, q_laplacian,
                         signless_laplacian)
from .involution import (InvolutionError, automorphisms, find_involutions,
                         half_blocks, reduce_pair_pst)
from .spectral import SpectralError, eigendecompose, transition_matrix
from .transfer import PST_TOL, TransferReport, detect_pst, vertex_state

ZERO_TOL = 1e-10
RESIDUAL_TOL = 1e-9


class ClosedFormError(ValueError):
    pass


class SearchSpaceError(ClosedFormError):
    pass


class Zeta(IntEnum):
    SIGNLESS = 1
    LAPLACIAN = -1

    @classmethod
    def coerce(cls, value) -> "Zeta":
        if isinstance(value, str):
            key = value.strip().lower()
            if key in ("lap", "laplacian", "-1"):
                return cls.LAPLACIAN
            if key in ("signless", "+1", "1"):
                return cls.SIGNLESS
        elif value in (1, -1):
            return cls(int(value))
        raise ClosedFormError(f"zeta must be +1 (signless) or -1 (Laplacian), got {value!r}")

    @property
    def matrix_kind(self) -> str:
        return "lap" if self is Zeta.LAPLACIAN else "signless"


def cycle_matrix(n: int, zeta) -> np.ndarray:
    """``L(C_n)`` for zeta=-1, ``Q(C_n)`` for zeta=+1."""
    g = cycle(n).graph
    return laplacian(g) if Zeta.coerce(zeta) is Zeta.LAPLACIAN else signless_laplacian(g)


def chord_matrix(n: int, b: int, rho: float, zeta) -> np.ndarray:
    g = cycle_plus_chord(n, b, rho).graph
    return laplacian(g) if Zeta.coerce(zeta) is Zeta.LAPLACIAN else signless_laplacian(g)


def chord_vector(n: int, b: int, zeta) -> np.ndarray:
    w = np.zeros(n)
    w[0] += 1.0
    w[b % n] += float(Zeta.coerce(zeta))
    return w


def cycle_theta(n: int, j: int, zeta) -> float:
    return 2 + 2 * float(Zeta.coerce(zeta)) * math.cos(2 * j * math.pi / n)


def _cos_vec(n: int, j: int) -> np.ndarray:
    k = np.arange(n)
    return math.sqrt(2 / n) * np.cos(2 * j * k * math.pi / n)


def _sin_vec(n: int, j: int) -> np.ndarray:
    k = np.arange(n)
    return math.sqrt(2 / n) * np.sin(2 * j * k * math.pi / n)


def cycle_eigenpair(n: int, j: int, zeta) -> tuple[float, tuple[np.ndarray, ...]]:
    """Eigenvalue ``theta_j`` of the cycle and its orthonormal eigenvectors.

    Returns ``(v_0,)`` for j=0, the alternating vector for j=n/2, and
    ``(v_j, v_{n-j})`` (cosine, sine) otherwise.
    """
    if n < 3:
        raise ClosedFormError("cycle needs n >= 3")
    if not 0 <= j <= n // 2:
        raise ClosedFormError(f"j must satisfy 0 <= j <= {n // 2}, got {j}")
    theta = cycle_theta(n, j, zeta)
    if j == 0:
        return theta, (np.full(n, 1 / math.sqrt(n)),)
    if 2 * j == n:
        return theta, ((-1.0) ** np.arange(n) / math.sqrt(n),)
    return theta, (_cos_vec(n, j), _sin_vec(n, j))


class Branch(str, Enum):
    ORTHOGONAL = "orthogonal_case"
    GENERIC = "generic_case"


@dataclass(frozen=True, eq=False)
class PerturbedEigvec:
    """Eigenvector ``z_j`` of ``theta_j`` that survives every chord weight."""

    n: int
    b: int
    j: int
    zeta: Zeta
    vector: np.ndarray
    branch: Branch

    @property
    def theta(self) -> float:
        return cycle_theta(self.n, self.j, self.zeta)

    def entry(self, k: int) -> float:
        """``e_k^T z_j`` from the trigonometric closed form."""
        n, b, j = self.n, self.b, self.j
        if self.branch is Branch.ORTHOGONAL:
            return 2 / math.sqrt(n) * math.cos(2 * j * k * math.pi / n - math.pi / 4)
        if self.zeta is Zeta.SIGNLESS:
            return -4 / n * math.cos(b * j * math.pi / n) * math.sin((2 * k - b) * j * math.pi / n)
        return -4 / n * math.sin(b * j * math.pi / n) * math.cos((2 * k - b) * j * math.pi / n)

    def closed_form(self) -> np.ndarray:
        return np.array([self.entry(k) for k in range(self.n)])

    def residual(self, rho: float) -> float:
        M = chord_matrix(self.n, self.b, rho, self.zeta)
        return float(np.linalg.norm(M @ self.vector - self.theta * self.vector))


def perturbed_eigvec(n: int, b: int, j: int, zeta) -> PerturbedEigvec:
    zeta = Zeta.coerce(zeta)
    if not 1 <= j < n / 2:
        raise ClosedFormError(f"j must satisfy 1 <= j < n/2, got j={j}, n={n}")
    if not 1 <= b <= n - 1:
        raise ClosedFormError(f"b must satisfy 1 <= b <= n-1, got {b}")
    w = chord_vector(n, b, zeta)
    vc, vs = _cos_vec(n, j), _sin_vec(n, j)
    a, c = float(w @ vc), float(w @ vs)
    if abs(a) <= ZERO_TOL and abs(c) <= ZERO_TOL:
        return PerturbedEigvec(n, b, j, zeta, vc + vs, Branch.ORTHOGONAL)
    return PerturbedEigvec(n, b, j, zeta, c * vc - a * vs, Branch.GENERIC)


def interlacing_check(B: np.ndarray, C: np.ndarray, tol: float = RESIDUAL_TOL) -> bool:
    """Eigenvalues of ``B + C`` interlace those of ``B`` for rank-one PSD ``C``.

    With ``alpha`` the spectrum of B and ``gamma`` that of B + C, both in
    decreasing order: ``gamma_1 >= alpha_1 >= gamma_2 >= ... >= gamma_n >= alpha_n``.
    """
    B, C = np.asarray(B, float), np.asarray(C, float)
    if B.shape != C.shape or B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ClosedFormError("B and C must be square matrices of equal shape")
    if not (np.allclose(B, B.T) and np.allclose(C, C.T)):
        raise ClosedFormError("B and C must be symmetric")
    ev = np.linalg.eigvalsh(C)
    scale = max(1.0, float(np.max(np.abs(ev))))
    if ev[0] < -tol * scale:
        raise ClosedFormError("C is not positive semidefinite")
    if ev[-1] <= tol * scale or (len(ev) > 1 and abs(ev[-2]) > tol * scale):
        raise ClosedFormError("C is not rank one")
    alpha = np.linalg.eigvalsh(B)[::-1]
    gamma = np.linalg.eigvalsh(B + C)[::-1]
    upper = np.all(gamma >= alpha - tol)
    lower = np.all(alpha[:-1] >= gamma[1:] - tol)
    return bool(upper and lower)


def _as_vertex(x: Fraction, n: int) -> int | None:
    return int(x) % n if x.denominator == 1 else None


def vertex_pst_candidates(n: int, b: int, zeta) -> tuple[int, int] | None:
    """The only vertex pair that can host vertex PST in ``C_n + rho{0, b}``.

    ``None`` when the candidate labels are not integers.
    """
    zeta = Zeta.coerce(zeta)
    half_b = Fraction(b, 2)
    if zeta is Zeta.LAPLACIAN:
        pair = (half_b + Fraction(n, 4), half_b + Fraction(3 * n, 4))
    elif 2 * b != n:
        pair = (half_b, half_b + Fraction(n, 2))
    else:
        pair = (Fraction(3 * n, 8), Fraction(7 * n, 8))
    k, l = (_as_vertex(x, n) for x in pair)
    return None if k is None or l is None else (k, l)


@dataclass(frozen=True)
class PairPredicate:
    """Membership test for pair states ``e_k - e_l`` that may carry PST.

    ``residue`` is the required value of ``k + l`` mod n, or ``None`` when no
    pair qualifies.
    """

    n: int
    b: int
    zeta: Zeta
    residue: int | None

    def __call__(self, k: int, l: int) -> bool:
        if self.residue is None or k % self.n == l % self.n:
            return False
        return (k + l) % self.n == self.residue

    def sums(self) -> list[int]:
        """Admissible values of ``k + l`` for labels in ``0..n-1``."""
        if self.residue is None:
            return []
        return [s for s in (self.residue, self.residue + self.n) if s <= 2 * self.n - 3]

    def pairs(self) -> list[tuple[int, int]]:
        return [(k, l) for k, l in combinations(range(self.n), 2) if self(k, l)]


def pair_pst_candidates(n: int, b: int, zeta) -> PairPredicate:
    zeta = Zeta.coerce(zeta)
    if n < 13:
        warnings.warn(f"pair constraints are established for n >= 13; n={n} is outside that range",
                      stacklevel=2)
    if zeta is Zeta.LAPLACIAN:
        residue = b % n
    elif 2 * b != n:
        residue = (b + n // 2) % n if n % 2 == 0 else None
    else:
        residue = (n // 4) % n if n % 4 == 0 else None
    return PairPredicate(n, b, zeta, residue)


def gap_formula(n: int, zeta) -> tuple[str, float]:
    """Closed form for the eigenvalue gap used by the periodicity obstruction."""
    if Zeta.coerce(zeta) is Zeta.LAPLACIAN:
        return "4|sin(5pi/n) sin(pi/n)|", 4 * abs(math.sin(5 * math.pi / n) * math.sin(math.pi / n))
    return "4|sin(6pi/n) sin(2pi/n)|", 4 * abs(math.sin(6 * math.pi / n) * math.sin(2 * math.pi / n))


GAP_MARGIN = 1e-12


@dataclass
class NonexistenceReport:
    """Numerically verified preconditions for ruling out vertex PST on a chorded cycle.

    This is evidence, never a proof. ``status`` is one of ``excluded by
    candidate constraints`` (no integral candidate vertex exists),
    ``verified preconditions`` (gap below 1 and both eigenvalues supported on
    the candidates) or ``inconclusive``.
    """

    n: int
    b: int
    rho: float
    zeta: Zeta
    indices: tuple[int, int]
    gap_formula: str
    gap: float
    gap_numeric: float
    gap_below_one: bool
    in_argument_range: bool
    candidates: tuple[int, int] | None
    candidate_entries: dict = field(default_factory=dict)
    support: dict = field(default_factory=dict)
    numeric_support: dict = field(default_factory=dict)
    status: str = "inconclusive"
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n": self.n, "b": self.b, "rho": self.rho, "zeta": int(self.zeta),
            "eigenvalue_indices": list(self.indices), "gap_formula": self.gap_formula,
            "gap": self.gap, "gap_numeric": self.gap_numeric, "gap_below_one": self.gap_below_one,
            "in_argument_range": self.in_argument_range,
            "candidates": list(self.candidates) if self.candidates else None,
            "candidate_entries": {str(k): v for k, v in self.candidate_entries.items()},
            "support": {str(k): v for k, v in self.support.items()},
            "numeric_support": {str(k): v for k, v in self.numeric_support.items()},
            "status": self.status, "notes": list(self.notes),
        }


def _numeric_support(M: np.ndarray, theta: float, k: int, tol: float = 1e-8) -> bool:
    vals, vecs = np.linalg.eigh(M)
    sel = np.abs(vals - theta) <= tol * max(1.0, float(vals[-1] - vals[0]))
    return bool(np.linalg.norm(vecs[k, sel]) > tol)


def nonexistence_witness(n: int, b: int, rho: float, zeta) -> NonexistenceReport:
    zeta = Zeta.coerce(zeta)
    if not 1 <= b <= n - 1 or not rho > 0 or n < 3:
        raise ClosedFormError(f"invalid parameters n={n}, b={b}, rho={rho}")
    lap = zeta is Zeta.LAPLACIAN
    i, j = (2, 3) if lap else (2, 4)
    formula, gap = gap_formula(n, zeta)
    gap_numeric = abs(cycle_theta(n, j, zeta) - cycle_theta(n, i, zeta))
    report = NonexistenceReport(
        n, b, rho, zeta, (i, j), formula, gap, gap_numeric,
        gap_below_one=gap < 1 - GAP_MARGIN,
        in_argument_range=n >= (15 if lap else 9),
        candidates=vertex_pst_candidates(n, b, zeta))
    if not report.in_argument_range:
        report.notes.append("n is below the range covered by the nonexistence argument")
    if not report.gap_below_one:
        report.notes.append("eigenvalue gap is not below 1")
    if report.candidates is None:
        report.status = "excluded by candidate constraints"
        report.notes.append("no integral candidate vertices: z_1 has no zero entry pair")
        return report
    M = chord_matrix(n, b, rho, zeta)
    for idx in (i, j):
        if not idx < n / 2:
            report.notes.append(f"theta_{idx} has no chord-stable eigenvector for n={n}")
            continue
        z = perturbed_eigvec(n, b, idx, zeta)
        for k in report.candidates:
            e = z.entry(k)
            report.candidate_entries[(idx, k)] = e
            report.support[(idx, k)] = abs(e) > ZERO_TOL
            report.numeric_support[(idx, k)] = _numeric_support(M, z.theta, k)
    supported = all(report.support.get((idx, k), False)
                    for idx in (i, j) for k in report.candidates)
    if not supported:
        report.notes.append(f"theta_{i} or theta_{j} is not in the support of a candidate vertex")
    if report.gap_below_one and report.in_argument_range and supported:
        report.status = "verified preconditions"
    return report


def p3_pst_parameters(k: int, l: int) -> tuple[float, float]:
    """``(q, tau)`` giving vertex PST between the ends of ``P_3``."""
    if int(k) != k or int(l) != l:
        raise ClosedFormError("k and l must be integers")
    if not k > l >= 1:
        raise ClosedFormError(f"need k > l >= 1, got k={k}, l={l}")
    if (k - l) % 2 == 0:
        raise ClosedFormError(f"k and l must have opposite parity, got k={k}, l={l}")
    q = math.sqrt(8 * l * l / (k * k - l * l))
    tau = math.pi * (k * k - l * l) / (4 * l)
    return q, tau


def verify_p3_pst(k: int, l: int, pst_tol: float = PST_TOL) -> TransferReport:
    q, tau = p3_pst_parameters(k, l)
    d = eigendecompose(q_laplacian(path(3).graph, q))
    return detect_pst(d, vertex_state(3, 0), vertex_state(3, 2), tau, pst_tol)


def end_loop_adjacency(n: int, loop: float) -> np.ndarray:
    """Adjacency matrix of ``P_n`` with loops of weight ``loop`` at both ends."""
    A = adjacency_matrix(path(n).graph)
    A[0, 0] += loop
    A[n - 1, n - 1] += loop
    return A


def path_potential_equivalence(n: int, omega: float, q: float, times) -> float:
    """Max over ``i, j, t`` of ``| |U_L(t)_ij| - |exp(-itqA')_ij| |``.

    ``L`` is the q-Laplacian of ``P_n(omega)`` and ``A'`` the adjacency
    matrix of the path with end loops ``(1 - omega) q``.
    """
    if q == 0:
        raise ClosedFormError("q must be non-zero")
    d = eigendecompose(q_laplacian(path_with_end_potentials(n, omega).graph, q))
    A = end_loop_adjacency(n, (1 - omega) * q)
    worst = 0.0
    for t in times:
        lhs = np.abs(transition_matrix(d, t))
        rhs = np.abs(expm(-1j * t * q * A))
        worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def pn_omega_half_blocks(n: int, omega: float, q: float) -> np.ndarray:
    """Minus-sector matrix of ``P_n(omega)`` under the reflection, as a path on ``k`` vertices."""
    if n < 2:
        raise ClosedFormError("need n >= 2")
    k = n // 2
    L = q_laplacian(path(k).graph, q)
    L[0, 0] += q * q * omega
    L[k - 1, k - 1] += q * q + q if n % 2 == 0 else q * q
    return L


def chord_arc(n: int, b: int) -> list[int]:
    """Vertices strictly between ``b/2`` and ``b/2 + n/2`` going up the cycle, in path order."""
    arc = [v for v in range(n) if 0 < (2 * v - b) % (2 * n) < n]
    return sorted(arc, key=lambda v: (2 * v - b) % (2 * n))


def chord_minus_path(n: int, b: int, rho: float) -> tuple[list[int], WeightedGraph]:
    """Laplacian minus sector of ``C_n + rho{0, b}`` as a weighted path with potentials.

    The path runs along ``chord_arc``. Each cycle edge leaving the arc adds
    potential 1 if it lands on a fixed vertex and 2 if it lands on the mirror
    of its endpoint; the chord adds ``2 rho`` at ``b``.
    """
    if not 1 <= b <= n - 1 or n < 3:
        raise ClosedFormError(f"invalid n={n}, b={b}")
    arc = chord_arc(n, b)
    pos = {v: i for i, v in enumerate(arc)}
    pot: dict[int, float] = {}
    for v in arc:
        for u in ((v - 1) % n, (v + 1) % n):
            if u in pos:
                continue
            mirror = (b - u) % n
            if mirror == u:
                pot[pos[v]] = pot.get(pos[v], 0.0) + 1.0
            elif mirror == v:
                pot[pos[v]] = pot.get(pos[v], 0.0) + 2.0
            else:
                raise ClosedFormError("arc boundary is neither fixed nor mirrored")
    pot[pos[b]] = pot.get(pos[b], 0.0) + 2 * rho
    edges = [(i, i + 1) for i in range(len(arc) - 1)]
    return arc, WeightedGraph.from_edges(len(arc), edges, pot)


def chord_minus_check(n: int, b: int, rho: float) -> float:
    """Max deviation between ``chord_minus_path`` and the block reduction at q=1."""
    inst = cycle_plus_chord(n, b, rho)
    arc, p = chord_minus_path(n, b, rho)
    blocks = half_blocks(inst.graph, inst.involution.with_half(arc), 1.0)
    return float(np.max(np.abs(blocks.Lminus - laplacian(p))))


@dataclass
class SearchWitness:
    """Pair PST found after inserting edges (and potentials) into a base graph."""

    graph: WeightedGraph
    inserted: tuple
    potentials: dict
    x: str
    y: str
    time: float
    fidelity: float
    q: float
    matrix: str
    involution: tuple

    def to_dict(self) -> dict:
        return {
            "n": self.graph.n,
            "edges": [[u, v, w] for (u, v), w in sorted(self.graph.edges.items())],
            "inserted": [list(e) for e in self.inserted],
            "potentials": {str(v): p for v, p in sorted(self.potentials.items())},
            "states": [self.x, self.y],
            "time": self.time,
            "q": self.q,
            "matrix": self.matrix,
            "involution": list(self.involution),
            "fidelity": self.fidelity,
        }


def _canonical(edges, pot: dict, autos) -> tuple:
    best = None
    for p in autos:
        key = (tuple(sorted(tuple(sorted((p[u], p[v]))) for u, v in edges)),
               tuple(sorted((p[v], val) for v, val in pot.items())))
        if best is None or key < best:
            best = key
    return best


def _threads(workers: int | None) -> int:
    if workers is not None:
        return max(1, workers)
    try:
        return max(1, int(os.environ.get("QWALK_THREADS", "1")))
    except ValueError:
        return 1


def perturbation_search(base, num_edges: int, potential_menu=None, q: float = 1.0,
                        t_max: float = 10.0, matrix: str = "qlap", max_n: int = 16,
                        max_subsets: int = 200_000, limit: int | None = None,
                        workers: int | None = None) -> list[SearchWitness]:
    """Insert ``num_edges`` new unit edges into ``base`` and look for pair PST.

    ``potential_menu`` is a list of potential assignments ``{vertex: value}``
    tried with every edge set (default: none). Candidates are deduplicated up
    to automorphisms of the base graph. Each candidate with a non-trivial
    involution is reduced to its minus sector; hits are re-verified on the
    full graph. ``limit`` stops after that many witnesses.
    """
    g0 = base.graph if isinstance(base, FamilyInstance) else base
    if g0.n > max_n:
        raise SearchSpaceError(f"n={g0.n} exceeds the search bound {max_n}")
    qv = kind_q(matrix, q)
    menu = [dict(m) for m in potential_menu] if potential_menu else [{}]
    non_edges = [e for e in combinations(range(g0.n), 2) if e not in g0.edges]
    if math.comb(len(non_edges), num_edges) * len(menu) > max_subsets:
        raise SearchSpaceError(
            f"{math.comb(len(non_edges), num_edges) * len(menu)} candidates exceed {max_subsets}")
    autos = automorphisms(g0)
    seen, jobs = set(), []
    for subset in combinations(non_edges, num_edges):
        for pot in menu:
            key = _canonical(subset, pot, autos)
            if key not in seen:
                seen.add(key)
                jobs.append((subset, pot))

    def run(job):
        subset, pot = job
        g = g0.with_edges(list(subset), pot)
        try:
            invs = find_involutions(g, max_exhaustive_n=max_n)
        except InvolutionError:
            return []
        found = []
        for inv in invs:
            try:
                hits = reduce_pair_pst(g, inv, qv, t_max, sectors="-")
            except SpectralError:
                continue
            for h in hits:
                found.append(SearchWitness(g, tuple(subset), dict(pot), str(h.x), str(h.y),
                                           h.time, h.fidelity, qv, matrix, inv.perm))
            if found:
                break
        return found

    out: list[SearchWitness] = []
    n_threads = _threads(workers)
    chunk = max(1, 4 * n_threads)
    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        for start in range(0, len(jobs), chunk):
            for found in pool.map(run, jobs[start:start + chunk]):
                out.extend(found)
            if limit is not None and len(out) >= limit:
                return out[:limit]
    return out
