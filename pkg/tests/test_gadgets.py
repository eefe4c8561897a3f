from __future__ import annotations

import networkx as nx
import numpy as np
import pytest

from msgames.gadgets import (
    build_domset_structure,
    build_I_np,
    build_I_pspace,
    build_J,
    build_J_prime,
    build_skyscraper,
)
from msgames.qbf import QbfInstance
from msgames.structures import save_structure
from msgames.symmetry import is_automorphism


def as_digraph(S) -> nx.DiGraph:
    G = nx.DiGraph()
    G.add_nodes_from(range(S.n))
    G.add_edges_from(S.relations["E"])
    return G


def independent_domset_count(n: int, k: int) -> int:
    """Vertex count of the stacked structure, tallied part by part."""
    poles = 2  # only the top red pair survives elision
    inner_ends = 4 * (k - 1)  # q, q', r, r' of levels 2..k
    middles = 8 * n * k
    auxiliaries = sum(4 * level + 4 * (level - 1) for level in range(1, k + 1))
    bottom = 2 * n + 2 * (n + 1)
    return poles + inner_ends + middles + auxiliaries + bottom


# ---------------------------------------------------------------- I_j


@pytest.mark.parametrize("j", [1, 2, 3])
def test_np_gadget_size(j):
    assert build_I_np(j).structure.n == 10 + 8 * j


def test_np_gadget_auxiliary_in_degrees():
    g = build_I_np(2)
    S = g.structure
    for i in range(1, 5):
        assert len(S.in_neighbors(g[f"c_{i}"])) - 1 == 2
        assert len(S.in_neighbors(g[f"d_{i}"])) - 1 == 1


def test_np_gadget_has_the_pole_fixing_swap():
    g = build_I_np(1)
    q, qq, r, rr, p, pp = (g[x] for x in ("q", "q'", "r", "r'", "p", "p'"))
    swaps = [
        perm for perm in g.automorphism_generators
        if perm[p] == p and perm[pp] == pp and perm[q] == qq and perm[r] == rr
    ]
    assert swaps and all(is_automorphism(g.structure, s) for s in swaps)


def test_plain_np_gadget_marks_green_with_loops():
    g = build_I_np(1, colored=False)
    loops = {a for a, b in g.structure.relations["E"] if a == b}
    assert loops == {g["r"], g["r'"]}


# ---------------------------------------------------------------- dominating-set structure


def test_p3_k1_size_matches_independent_count():
    g = build_domset_structure(nx.path_graph(3), 1)
    assert g.structure.n == independent_domset_count(3, 1) == 44


@pytest.mark.parametrize("n, k", [(1, 1), (2, 2), (4, 1), (3, 3)])
def test_domset_size_matches_independent_count(n, k):
    assert build_domset_structure(nx.path_graph(n), k).structure.n == independent_domset_count(n, k)


@pytest.mark.parametrize("k", [1, 2])
def test_step5_edge_contributions(k):
    G = nx.path_graph(3)
    notes = build_domset_structure(G, k).notes
    assert notes["step5_vertex_edges"] == 32 * k * G.number_of_nodes()
    assert notes["step5_edge_edges"] == 64 * k * G.number_of_edges()


def test_null_vertices_have_no_out_neighbors():
    g = build_domset_structure(nx.cycle_graph(4), 2)
    for name in ("null_q'", "null_r'"):
        assert g.structure.out_neighbors(g[name]) == []


def test_empty_graph_is_rejected():
    with pytest.raises(ValueError):
        build_domset_structure(nx.Graph(), 1)


# ---------------------------------------------------------------- J and J'


@pytest.mark.parametrize("builder", [build_J, build_J_prime])
@pytest.mark.parametrize("j", [1, 2])
def test_J_sizes(builder, j):
    assert builder(j).structure.n == 7 + 8 * j


def test_J_q_in_neighborhoods():
    g = build_J(1)
    assert set(g.structure.in_neighbors(g["q"])) == {g[f"c_{i}"] for i in range(1, 5)}
    h = build_J_prime(1)
    assert set(h.structure.in_neighbors(h["q"])) == {h[x] for x in ("c_1", "c_3", "d_1", "d_3")}


def _moves_q_to_q_prime(g) -> bool:
    G = as_digraph(g.structure)
    matcher = nx.algorithms.isomorphism.DiGraphMatcher(G, G)
    return any(iso[g["q"]] == g["q'"] for iso in matcher.isomorphisms_iter())


def test_only_J_prime_swaps_its_outputs():
    assert _moves_q_to_q_prime(build_J_prime(1))
    assert not _moves_q_to_q_prime(build_J(1))


# ---------------------------------------------------------------- PSPACE gadget and skyscraper


def test_pspace_gadget_size_j2():
    assert build_I_pspace(2).structure.n == 288 * 2 - 112 == 464


def test_pspace_star_and_diamond_counts():
    g = build_I_pspace(2)
    S = g.structure

    def split(pole):
        labels = [S.label(e) for e in S.out_neighbors(g[pole])]
        return sum(x.startswith("c") for x in labels), sum(x.startswith("d") for x in labels)

    assert split("p") == (8, 8)
    assert split("p'") == (4, 12)


def test_pspace_gadget_needs_j_at_least_two():
    with pytest.raises(ValueError):
        build_I_pspace(1)


PHI = QbfInstance(2, (("e", 1), ("a", 2)), ((1,), (1, -2)))


def test_skyscraper_null_vertices_are_sinks():
    g = build_skyscraper(PHI, 2)
    S = g.structure
    nulls = [e for e in range(S.n) if S.label(e).startswith("null_")]
    assert len(nulls) == 2
    assert all(S.out_neighbors(e) == [] for e in nulls)


@pytest.mark.parametrize("t", [0, 3])
def test_skyscraper_rejects_bad_threshold(t):
    with pytest.raises(ValueError):
        build_skyscraper(PHI, t)


@pytest.mark.parametrize("clauses", [((1,), (1, -2)), ((2,), (-2,)), ((1, 2), (-1, -2))])
def test_informal_labels_follow_clause_edges(clauses):
    phi = QbfInstance(2, (("e", 1), ("a", 2)), clauses)
    g = build_skyscraper(phi, 1)
    S = g.structure
    clause_vertices = {}
    for e in range(S.n):
        label = S.label(e)
        if label.startswith("v_C") or label.startswith("v'_C"):
            clause_vertices[e] = clauses[int(label.split("C")[1]) - 1]
    assert g.informal_labels
    covered = 0
    # a literal absent from every clause labels vertices with no clause in-neighbour
    for e, tag in g.informal_labels.items():
        var = int(tag[3:-1])
        literal = var if tag.startswith("T") else -var
        sources = {c for c in clause_vertices if e in S.out_neighbors(c)}
        expected = {c for c, clause in clause_vertices.items() if literal in clause}
        assert sources == expected
        covered += bool(sources)
    assert covered


# ---------------------------------------------------------------- shared invariants


def _all_gadgets():
    yield build_I_np(1)
    yield build_I_np(3, colored=False)
    yield build_J(3)
    yield build_J_prime(3)
    yield build_I_pspace(2)
    yield build_I_pspace(3)
    yield build_domset_structure(nx.path_graph(3), 2)
    yield build_domset_structure(nx.cycle_graph(4), 3)
    yield build_skyscraper(PHI, 1)


def test_every_generator_is_an_automorphism():
    for g in _all_gadgets():
        assert g.automorphism_generators
        for perm in g.automorphism_generators:
            assert sorted(perm.tolist()) == list(range(g.structure.n))
            assert is_automorphism(g.structure, perm)


def test_every_designated_name_is_an_element():
    for g in _all_gadgets():
        assert all(0 <= e < g.structure.n for e in g.designated.values())


def test_builders_are_deterministic():
    makers = [
        lambda: build_I_np(2),
        lambda: build_I_pspace(2),
        lambda: build_domset_structure(nx.path_graph(4), 2),
        lambda: build_skyscraper(PHI, 2),
    ]
    for make in makers:
        assert save_structure(make().structure) == save_structure(make().structure)


def test_automorphism_check_rejects_a_non_automorphism():
    g = build_I_np(1)
    perm = np.arange(g.structure.n)
    perm[[g["p"], g["q"]]] = perm[[g["q"], g["p"]]]
    assert not is_automorphism(g.structure, perm)
