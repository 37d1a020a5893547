"""Randomized invariants of the walk, the spectral data and the reductions."""
import json
import math
from pathlib import Path

import numpy as np
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy.linalg import expm

from qwalk.claims import corpus_instances, default_corpus, build_family
from qwalk.closed_forms import ClosedFormError, interlacing_check
from qwalk.graph_core import WeightedGraph, are_twins, q_laplacian, matrix_for
from qwalk.involution import find_involutions, reduce_pair_pst, verify_block_diagonalization
from qwalk.spectral import eigendecompose, is_fixed_state, transition_matrix
from qwalk.timeexpr import evaluate
from qwalk.transfer import (Verdict, detect_pst, fidelity, is_strongly_cospectral, parse_state,
                            raw_state, search_pst, standard_states)

FIXTURES = Path(__file__).parent / "fixtures"

weights = st.sampled_from([1.0, 1.0, 1.0, 2.0, 0.5, 1.5])
q_values = st.sampled_from([1.0, -1.0, 0.5, 2.0, -0.7, 1.3])
times = st.floats(0.0, 20.0, allow_nan=False)


@st.composite
def graphs(draw, min_n=2, max_n=7):
    n = draw(st.integers(min_n, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    edges = [(u, v, draw(weights)) for u, v in chosen]
    pot_vs = draw(st.lists(st.integers(0, n - 1), unique=True, max_size=2))
    pot = {v: draw(st.sampled_from([-1.0, 0.5, 1.0, 2.0])) for v in pot_vs}
    return WeightedGraph.from_edges(n, edges, pot)


@st.composite
def twin_graphs(draw):
    """A random graph plus a copy ``u'`` of one vertex ``u``; returns ``(g, u, u')``."""
    g = draw(graphs(min_n=2, max_n=6))
    u = draw(st.integers(0, g.n - 1))
    twin = g.n
    edges = [(a, b, w) for (a, b), w in g.edges.items()]
    edges += [(v, twin, w) for v, w in g.neighbors(u).items()]
    if draw(st.booleans()):
        edges.append((u, twin, draw(weights)))
    pot = dict(g.potential)
    if u in pot:
        pot[twin] = pot[u]
    return WeightedGraph.from_edges(g.n + 1, edges, pot), u, twin


@given(graphs(), q_values)
def test_projectors_complete_and_orthogonal(g, q):
    L = q_laplacian(g, q)
    d = eigendecompose(L)
    F = d.projectors
    assert np.allclose(sum(F), np.eye(g.n), atol=1e-9)
    for i, A in enumerate(F):
        assert np.allclose(A @ A, A, atol=1e-9)
        for B in F[i + 1:]:
            assert np.allclose(A @ B, 0, atol=1e-9)
    assert np.allclose(d.reconstruct(), L, atol=1e-9)


@given(graphs(), q_values, times)
def test_walk_unitary_and_matches_expm(g, q, t):
    L = q_laplacian(g, q)
    U = transition_matrix(eigendecompose(L), t)
    assert np.allclose(U.conj().T @ U, np.eye(g.n), atol=1e-9)
    assert np.allclose(U, expm(1j * t * L), atol=1e-8)


@given(graphs(), q_values, times, times)
def test_walk_group_property(g, q, s, t):
    d = eigendecompose(q_laplacian(g, q))
    assert np.allclose(transition_matrix(d, s) @ transition_matrix(d, t),
                       transition_matrix(d, s + t), atol=1e-9)


@given(graphs(), q_values, times)
def test_fidelity_is_symmetric(g, q, t):
    d = eigendecompose(q_laplacian(g, q))
    states = standard_states(g.n)[:4]
    for x in states:
        for y in states:
            assert abs(fidelity(d, x, y, t) - fidelity(d, y, x, t)) <= 1e-9


@given(st.integers(2, 8), st.data())
def test_interlacing_random(n, data):
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    X = rng.normal(size=(n, n))
    w = rng.normal(size=n)
    assume(np.linalg.norm(w) > 1e-3)
    assert interlacing_check((X + X.T) / 2, data.draw(st.floats(0.1, 10)) * np.outer(w, w))


@given(graphs(min_n=3))
def test_interlacing_rejects_negative(g):
    B = q_laplacian(g, 1.0)
    w = np.zeros(g.n)
    w[0] = 1.0
    try:
        interlacing_check(B, -np.outer(w, w))
    except ClosedFormError:
        return
    raise AssertionError("negative rank-one update accepted")


@given(twin_graphs(), q_values)
def test_twin_difference_is_eigenvector(data, q):
    g, u, v = data
    assert are_twins(g, u, v)
    L = q_laplacian(g, q)
    z = np.zeros(g.n)
    z[u], z[v] = 1.0, -1.0
    theta = z @ L @ z / 2
    assert np.linalg.norm(L @ z - theta * z) <= 1e-10


@given(twin_graphs(), q_values, times)
def test_fixed_states_never_report_pst(data, q, t):
    g, u, v = data
    d = eigendecompose(q_laplacian(g, q))
    z = np.zeros(g.n)
    z[u], z[v] = 1.0, -1.0
    x = raw_state(z)
    assert is_fixed_state(d, x)
    for y in standard_states(g.n):
        if abs(abs(np.dot(x.vector, y.vector)) - 1) <= 1e-12:
            continue
        rep = detect_pst(d, x, y, t)
        assert rep.verdict is Verdict.FIXED_STATE and rep.verdict is not Verdict.PST


@given(graphs(max_n=6), q_values)
def test_pst_hits_are_strongly_cospectral_and_monogamous(g, q):
    d = eigendecompose(q_laplacian(g, q))
    states = standard_states(g.n)
    x = states[0]
    for y in states[1:10]:
        if abs(abs(np.dot(x.vector, y.vector)) - 1) <= 1e-12:
            continue
        for t, _ in search_pst(d, x, y, 8.0):
            assert is_strongly_cospectral(d, x, y)
            for z in states:
                if abs(np.dot(z.vector, y.vector)) <= 1e-12:
                    assert fidelity(d, x, z, t) <= 1e-4


@given(graphs(max_n=6), q_values, st.lists(times, min_size=1, max_size=5))
def test_block_diagonalization_for_found_involutions(g, q, ts):
    for inv in find_involutions(g):
        assert verify_block_diagonalization(g, inv, q, ts) <= 1e-9


def _witness_triples():
    out = []
    for rec in default_corpus():
        if rec.kind != "pst":
            continue
        for q in rec.sample_qs((1.0, -1.0, 0.5)):
            g = build_family(rec.family, rec.params, q).graph
            M = matrix_for(g, rec.matrix, q)
            out.append((M, parse_state(rec.x, g.n), parse_state(rec.y, g.n),
                        evaluate(rec.time, q)))
    for group in json.loads((FIXTURES / "search_witnesses.json").read_text()).values():
        for w in group:
            g = WeightedGraph.from_dict(w)
            x, y = (parse_state(s, g.n) for s in w["states"])
            out.append((q_laplacian(g, w["q"]), x, y, w["time"]))
    return out


def test_every_witness_is_strongly_cospectral():
    for M, x, y, t in _witness_triples():
        d = eigendecompose(M)
        rep = detect_pst(d, x, y, t)
        assert rep.is_pst
        if rep.verdict is Verdict.PST:
            assert rep.strongly_cospectral and is_strongly_cospectral(d, x, y)


def test_lifted_witnesses_are_pst():
    for q in (1.0, 0.5):
        for _, inst in corpus_instances(q)[:12]:
            d = eigendecompose(q_laplacian(inst.graph, q))
            for w in reduce_pair_pst(inst.graph, inst.involution, q, 2 * math.pi):
                assert detect_pst(d, w.x, w.y, w.time).fidelity >= 1 - 1e-9
                assert is_strongly_cospectral(d, w.x, w.y)
