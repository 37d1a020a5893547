import math

import numpy as np
import pytest

from qwalk.families import (attach_graph, c5_with_potential, complete_bipartite, custom, cycle,
                            cycle_plus_chord, cycle_with_tail, kmn_minus_matching, path,
                            path_plus_two_edges, path_with_end_potentials, star, wheel)
from qwalk.graph_core import GraphError, are_twins, matrix_for
from qwalk.involution import verify_involution
from qwalk.spectral import eigendecompose
from qwalk.timeexpr import evaluate
from qwalk.transfer import detect_pst, parse_state, search_pst

ALL = [path(2), path(3), cycle(4), cycle(6), cycle(8), wheel(5), wheel(6), complete_bipartite(3, 3),
       path_with_end_potentials(3, 1), path_with_end_potentials(4, 2), path_with_end_potentials(5, 1),
       path_with_end_potentials(7, 1), path_with_end_potentials(2, 0),
       cycle_with_tail(6, 1), cycle_with_tail(6, 3), cycle_with_tail(6, 5), cycle_with_tail(8, 1),
       kmn_minus_matching(3, 3, 2), kmn_minus_matching(3, 3, 3), kmn_minus_matching(4, 3, 2, True),
       cycle_plus_chord(3, 1, 1), cycle_plus_chord(3, 1, 2), cycle_plus_chord(4, 1, 1),
       cycle_plus_chord(4, 2, 1), cycle_plus_chord(4, 2, 2), cycle_plus_chord(8, 4, 1),
       path_plus_two_edges(6), path_plus_two_edges(7), path_plus_two_edges(8), c5_with_potential(),
       attach_graph(path_with_end_potentials(5, 1), star(3), "3"),
       attach_graph(path_with_end_potentials(5, 1), path(4).graph, "3")]


def _claim_qs(inst, claim):
    if claim.matrix in ("lap", "signless"):
        return [1.0 if claim.matrix == "lap" else -1.0]
    return list(claim.q_values) if claim.q_values else [1.0, -1.0, 0.5]


@pytest.mark.parametrize("inst", ALL, ids=lambda i: i.name)
def test_involution_valid(inst):
    if inst.involution is not None:
        verify_involution(inst.graph, inst.involution.perm)
    for v in inst.markers.values():
        assert 0 <= v < inst.graph.n


@pytest.mark.parametrize("inst", [i for i in ALL if i.claims], ids=lambda i: i.name)
def test_carried_claims_verify(inst):
    n = inst.graph.n
    for claim in inst.claims:
        for q in _claim_qs(inst, claim):
            d = eigendecompose(matrix_for(inst.graph, claim.matrix, q))
            rep = detect_pst(d, parse_state(claim.x, n), parse_state(claim.y, n), evaluate(claim.time, q))
            assert rep.is_pst, (inst.name, claim, q, rep.fidelity)
            if q > 0:
                assert evaluate(claim.time, q) > 0


def test_sizes():
    assert len(cycle(4).graph.edges) == 4
    assert len(complete_bipartite(3, 3).graph.edges) == 9
    assert len(wheel(5).graph.edges) == 8
    with pytest.raises(GraphError):
        cycle(2)
    with pytest.raises(GraphError):
        wheel(3)


def test_path_potentials():
    g = path_with_end_potentials(5, 1).graph
    assert [g.eta(v) for v in range(5)] == [1, 0, 0, 0, 1]
    q = 1.0
    g4 = path_with_end_potentials(4, 1 + 1 / q).graph
    assert [g4.eta(v) for v in range(4)] == [2, 0, 0, 2]
    assert path_with_end_potentials(2, 0).graph == path(2).graph


def test_cycle_tail_claims():
    assert cycle_with_tail(6, 3).claims[0].time == "pi/(2q)"
    assert cycle_with_tail(8, 1).claims[0].time == "pi/(q*sqrt(2))"
    with pytest.raises(GraphError):
        cycle_with_tail(7, 1)


def test_kmn_labels():
    g = kmn_minus_matching(3, 3, 2).graph
    # 1-based labels: removed edges {1,2} and {3,4}
    assert (0, 1) not in g.edges and (2, 3) not in g.edges
    assert len(g.edges) == 7
    g2 = kmn_minus_matching(4, 3, 2, True).graph
    assert (0, 6) in g2.edges and (2, 6) in g2.edges
    with pytest.raises(GraphError):
        kmn_minus_matching(3, 3, 2, True)
    with pytest.raises(GraphError):
        kmn_minus_matching(3, 3, 1)


def test_kmn_twins():
    g = kmn_minus_matching(4, 4, 2).graph
    assert are_twins(g, 4, 6) and are_twins(g, 5, 7)
    assert not are_twins(g, 0, 4)


def test_chord_shapes():
    g = cycle_plus_chord(3, 1, 2.0).graph
    assert g.weight(0, 1) == 3.0
    g4 = cycle_plus_chord(4, 2, 1).graph
    assert g4.weight(0, 2) == 1.0 and len(g4.edges) == 5
    assert cycle_plus_chord(8, 4, 1).graph.weight(0, 4) == 1.0
    with pytest.raises(GraphError):
        cycle_plus_chord(5, 0, 1)


def test_path_plus_two_edges_bounds():
    g = path_plus_two_edges(6).graph
    assert (1, 3) in g.edges and (2, 4) in g.edges
    with pytest.raises(GraphError):
        path_plus_two_edges(5)


def test_attach_non_fixed_drops_claims():
    inst = attach_graph(path_with_end_potentials(5, 1), star(2), "2")
    assert inst.claims == () and len(inst.dropped_claims) == 1
    with pytest.raises(GraphError):
        attach_graph(path_with_end_potentials(5, 1), star(2), "nope")


def test_c5_without_potential_no_pst():
    inst = c5_with_potential(False)
    d = eigendecompose(matrix_for(inst.graph, "lap"))
    assert search_pst(d, parse_state("pair:1,4", 5), parse_state("pair:2,3", 5), 10.0) == []


def test_custom_and_json():
    inst = custom(3, [(0, 1), (1, 2)], perm=[2, 1, 0])
    d = inst.to_dict()
    assert d["involution"] == {"orbits": [[0, 2]], "fixed": [1]}
    assert math.isclose(d["edges"][0][2], 1.0)
