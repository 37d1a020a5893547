import json
import math
import warnings
from pathlib import Path

import numpy as np
import pytest

from qwalk.closed_forms import (Branch, ClosedFormError, SearchSpaceError, Zeta, chord_arc,
                                chord_matrix, chord_minus_check, chord_minus_path, chord_vector,
                                cycle_eigenpair, cycle_matrix, interlacing_check,
                                nonexistence_witness, p3_pst_parameters, pair_pst_candidates,
                                path_potential_equivalence, perturbation_search,
                                perturbed_eigvec, pn_omega_half_blocks, verify_p3_pst,
                                vertex_pst_candidates)
from qwalk.families import cycle, cycle_plus_chord, path_with_end_potentials
from qwalk.graph_core import WeightedGraph, q_laplacian
from qwalk.involution import half_blocks, lift_state
from qwalk.spectral import eigendecompose
from qwalk.transfer import detect_pst, parse_state, search_pst, vertex_state

FIXTURES = Path(__file__).parent / "fixtures"


def test_zeta_coercion():
    assert Zeta.coerce("lap") is Zeta.LAPLACIAN
    assert Zeta.coerce(1) is Zeta.SIGNLESS
    with pytest.raises(ClosedFormError):
        Zeta.coerce(0)


def test_cycle_eigenpair_examples():
    theta, vs = cycle_eigenpair(4, 0, -1)
    assert theta == 0 and np.allclose(vs[0], 0.5)
    theta, _ = cycle_eigenpair(6, 1, -1)
    assert theta == pytest.approx(1.0)
    assert theta == pytest.approx(sorted(np.linalg.eigvalsh(cycle_matrix(6, -1)))[1])
    theta, _ = cycle_eigenpair(5, 2, 1)
    assert theta == pytest.approx(0.381966, abs=1e-6)
    _, vs = cycle_eigenpair(6, 3, 1)
    assert np.allclose(vs[0] * math.sqrt(6), [1, -1, 1, -1, 1, -1])
    with pytest.raises(ClosedFormError):
        cycle_eigenpair(6, 4, 1)


def test_cycle_eigenpairs_match_numeric():
    for n in range(3, 25):
        for z in (-1, 1):
            M = cycle_matrix(n, z)
            numeric = np.sort(np.linalg.eigvalsh(M))
            closed = []
            for j in range(n // 2 + 1):
                theta, vs = cycle_eigenpair(n, j, z)
                closed += [theta] * len(vs)
                for v in vs:
                    assert np.linalg.norm(M @ v - theta * v) <= 1e-10
            assert np.allclose(np.sort(closed), numeric, atol=1e-10)


def test_perturbed_branches():
    p = perturbed_eigvec(8, 4, 1, 1)
    assert p.branch is Branch.ORTHOGONAL
    k = np.arange(8)
    assert np.allclose(p.vector, 2 / math.sqrt(8) * np.cos(2 * k * math.pi / 8 - math.pi / 4))
    assert perturbed_eigvec(8, 4, 2, 1).branch is Branch.GENERIC
    g = perturbed_eigvec(6, 2, 1, -1)
    assert g.branch is Branch.GENERIC
    for rho in (1, 2):
        assert g.residual(rho) <= 1e-9
    with pytest.raises(ClosedFormError):
        perturbed_eigvec(8, 4, 4, 1)


def test_perturbed_closed_forms_and_invariants():
    for n in range(3, 17):
        for b in range(1, n):
            for z in (-1, 1):
                w = chord_vector(n, b, z)
                for j in range(1, (n + 1) // 2):
                    p = perturbed_eigvec(n, b, j, z)
                    assert abs(w @ p.vector) <= 1e-10
                    assert np.allclose(p.closed_form(), p.vector, atol=1e-12)
                    for rho in (1, 2, 5):
                        assert p.residual(rho) <= 1e-9


def test_interlacing_examples(rng):
    from qwalk.graph_core import laplacian, signless_laplacian
    B = laplacian(cycle(6).graph)
    C = laplacian(cycle_plus_chord(6, 2, 1).graph) - B
    assert interlacing_check(B, C)
    Bq = signless_laplacian(cycle(5).graph)
    Cq = signless_laplacian(cycle_plus_chord(5, 2, 3).graph) - Bq
    assert interlacing_check(Bq, Cq)
    for _ in range(50):
        X = rng.normal(size=(8, 8))
        w = rng.normal(size=8)
        assert interlacing_check((X + X.T) / 2, rng.uniform(0.1, 5) * np.outer(w, w))


def test_interlacing_rejects_bad_c():
    B = np.eye(3)
    with pytest.raises(ClosedFormError):
        interlacing_check(B, -np.outer([1, 0, 0], [1, 0, 0]))
    with pytest.raises(ClosedFormError):
        interlacing_check(B, np.eye(3))
    with pytest.raises(ClosedFormError):
        interlacing_check(B, np.zeros((3, 3)))


def test_vertex_candidates_examples():
    assert vertex_pst_candidates(8, 2, -1) == (3, 7)
    assert vertex_pst_candidates(8, 2, 1) == (1, 5)
    assert vertex_pst_candidates(9, 2, -1) is None
    assert vertex_pst_candidates(16, 8, 1) == (6, 14)
    assert vertex_pst_candidates(12, 6, 1) is None


def test_candidate_zero_entries():
    for n in range(7, 25):
        for b in range(1, n):
            for z in (-1, 1):
                cand = vertex_pst_candidates(n, b, z)
                if cand:
                    z1 = perturbed_eigvec(n, b, 1, z)
                    assert all(abs(z1.vector[k]) <= 1e-10 for k in cand)


def test_pair_candidates_examples():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        p = pair_pst_candidates(14, 3, -1)
    assert p(1, 2) and not p(2, 5)
    p = pair_pst_candidates(16, 8, 1)
    assert p.sums() == [4, 20]
    assert pair_pst_candidates(14, 5, 1).sums() == [12]
    # b > n/2 also admits k + l = b - n/2
    p = pair_pst_candidates(14, 10, 1)
    assert p(0, 3) and 3 in p.sums()
    assert pair_pst_candidates(15, 4, 1).residue is None
    with pytest.warns(UserWarning):
        pair_pst_candidates(10, 2, -1)


def test_pair_predicate_matches_zero_differences():
    for n in range(13, 21):
        for b in range(1, n):
            for z in (-1, 1):
                pred = pair_pst_candidates(n, b, z)
                v = perturbed_eigvec(n, b, 1, z).vector
                for k in range(n):
                    for l in range(k + 1, n):
                        assert (abs(v[k] - v[l]) <= 1e-10) == pred(k, l)


def test_nonexistence_examples():
    r = nonexistence_witness(15, 2, 1, -1)
    assert r.gap == pytest.approx(4 * math.sin(math.pi / 3) * math.sin(math.pi / 15))
    assert r.gap == pytest.approx(0.7202272, abs=1e-6)
    assert r.gap == pytest.approx(r.gap_numeric, abs=1e-12)
    assert r.gap_below_one and r.status == "excluded by candidate constraints"
    r = nonexistence_witness(22, 3, 1, 1)
    assert r.gap < 1 and r.gap_below_one
    r = nonexistence_witness(12, 2, 1, -1)
    assert not r.gap_below_one and r.status == "inconclusive"
    assert json.dumps(r.to_dict())


def test_nonexistence_support_checks_agree_with_numeric():
    for args in ((16, 2, 1, -1), (20, 6, 2, -1), (24, 4, 1, 1), (16, 8, 1, 1)):
        r = nonexistence_witness(*args)
        assert r.support == r.numeric_support
        # odd-index eigenvectors vanish at the Laplacian candidates
        if args[3] == -1:
            assert not any(r.support[(3, k)] for k in r.candidates)
            assert r.status == "inconclusive"


def test_gap_ranges():
    for n in range(15, 25):
        assert nonexistence_witness(n, 1, 1, -1).gap < 1
    for n in range(22, 31):
        assert nonexistence_witness(n, 1, 1, 1).gap < 1


def test_p3_parameters():
    q, tau = p3_pst_parameters(2, 1)
    assert q == pytest.approx(math.sqrt(8 / 3)) and tau == pytest.approx(3 * math.pi / 4)
    q, tau = p3_pst_parameters(4, 1)
    assert q == pytest.approx(math.sqrt(8 / 15)) and tau == pytest.approx(15 * math.pi / 4)
    for k, l in ((2, 1), (4, 1), (3, 2)):
        assert verify_p3_pst(k, l).is_pst
    with pytest.raises(ClosedFormError):
        p3_pst_parameters(3, 1)
    with pytest.raises(ClosedFormError):
        p3_pst_parameters(1, 2)


def test_path_equivalence_examples(rng):
    assert path_potential_equivalence(4, 0.7, 1.3, rng.uniform(0, 10, 20)) <= 1e-10
    assert path_potential_equivalence(2, 0.0, 2.0, rng.uniform(0, 10, 20)) <= 1e-10
    assert path_potential_equivalence(6, -1.0, -1.0, rng.uniform(0, 10, 20)) <= 1e-10
    with pytest.raises(ClosedFormError):
        path_potential_equivalence(4, 1.0, 0.0, [1.0])


def test_pn_half_blocks_cross_check():
    for n in range(2, 10):
        for omega in (-1.0, 0.0, 0.7, 1.0, 2.0):
            for q in (-1.0, 0.5, 1.0, 1.3):
                inst = path_with_end_potentials(n, omega)
                block = half_blocks(inst.graph, inst.involution, q).Lminus
                assert np.allclose(pn_omega_half_blocks(n, omega, q), block, atol=1e-12)


@pytest.mark.parametrize("n,omega,claim_y,time", [
    (4, 2.0, "pair:1,2", math.pi / 2),
    (5, 1.0, "pair:1,3", math.pi / 2),
    (7, 1.0, "pair:2,4", math.pi / math.sqrt(2)),
])
def test_pn_half_blocks_lift(n, omega, claim_y, time):
    Lm = pn_omega_half_blocks(n, omega, 1.0)
    k = Lm.shape[0]
    d = eigendecompose(Lm)
    target = int(claim_y.split(",")[0].split(":")[1])
    rep = detect_pst(d, vertex_state(k, 0), vertex_state(k, target), time)
    assert rep.is_pst
    inst = path_with_end_potentials(n, omega)
    e0, et = np.eye(k)[0], np.eye(k)[target]
    x, y = lift_state(inst.involution, e0, "-"), lift_state(inst.involution, et, "-")
    assert str(y) == claim_y
    full = eigendecompose(q_laplacian(inst.graph, 1.0))
    assert detect_pst(full, x, y, time).is_pst


def test_chord_arc_contains_b_not_zero():
    for n in range(3, 14):
        for b in range(1, n):
            arc = chord_arc(n, b)
            assert b in arc and 0 not in arc


def test_chord_minus_path_matches_blocks():
    for n in range(3, 16):
        for b in range(1, n):
            for rho in (1.0, 2.0, 3.5):
                assert chord_minus_check(n, b, rho) == 0.0


def test_chord_minus_path_b1_end_potential():
    arc, p = chord_minus_path(9, 1, 2.0)
    assert arc[0] == 1
    assert p.eta(0) == pytest.approx(2 * 2.0 + 2)


def test_perturbation_search_c6_two_edges():
    hits = perturbation_search(cycle(6), 2, t_max=10, matrix="lap")
    assert hits
    for h in hits:
        assert h.fidelity >= 1 - 1e-9
        assert len(h.inserted) == 2
        assert set(h.to_dict()) >= {"edges", "potentials", "states", "time", "q", "matrix"}


def test_perturbation_search_base_cycle():
    hits = perturbation_search(cycle(6), 0, t_max=10, matrix="lap")
    assert len(hits) == 1 and hits[0].inserted == ()


def test_perturbation_search_potential_menu():
    hits = perturbation_search(cycle(5), 0, potential_menu=[{}, {1: 1.0, 4: 1.0}], t_max=4,
                               matrix="lap")
    assert any(h.potentials == {1: 1.0, 4: 1.0} for h in hits)


def test_perturbation_search_bounds():
    with pytest.raises(SearchSpaceError):
        perturbation_search(cycle(17), 1)
    with pytest.raises(SearchSpaceError):
        perturbation_search(cycle(12), 6, max_subsets=1000)


def test_frozen_search_witnesses():
    data = json.loads((FIXTURES / "search_witnesses.json").read_text())
    assert data["c6_two_edges_lap"] and data["c8_four_edges_q_half"]
    for key, group in data.items():
        for w in group:
            g = WeightedGraph.from_dict(w)
            d = eigendecompose(q_laplacian(g, w["q"]))
            x, y = (parse_state(s, g.n) for s in w["states"])
            rep = detect_pst(d, x, y, w["time"])
            assert rep.fidelity >= 1 - 1e-9, key
