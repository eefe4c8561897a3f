from __future__ import annotations

import itertools

import networkx as nx
import pytest

from msgames import oracles
from msgames.ef import EfPosition
from msgames.ms import MsPosition
from msgames.qbf import QbfInstance
from msgames.structures import PebbledStructure, digraph

ALTERNATING = (("e", 1), ("a", 2))
ALL_CLAUSES = [c for r in (1, 2) for c in itertools.combinations((1, -1, 2, -2), r) if not (len(c) == 2 and c[0] == -c[1])]


def test_min_domset_on_small_graphs():
    assert oracles.min_domset_bruteforce(nx.path_graph(3)) == 1
    assert oracles.min_domset_bruteforce(nx.empty_graph(3)) == 3
    assert oracles.min_domset_bruteforce(nx.cycle_graph(6)) == 2


@pytest.mark.parametrize("n", range(1, 7))
def test_complete_graphs_need_one_vertex(n):
    assert oracles.min_domset_bruteforce(nx.complete_graph(n)) == 1


def test_cap_is_enforced():
    with pytest.raises(ValueError):
        oracles.min_domset_bruteforce(nx.path_graph(5), cap=4)


def test_has_domset_is_monotone():
    for G in [nx.path_graph(5), nx.empty_graph(4), nx.star_graph(3), nx.cycle_graph(5)]:
        answers = [oracles.has_domset(G, k) for k in range(0, G.number_of_nodes() + 1)]
        assert answers == sorted(answers)


def test_witness_dominates():
    G = nx.path_graph(5)
    witness = oracles.dominating_witness(G, 2)
    assert len(witness) == 2
    assert set(witness) | {u for v in witness for u in G[v]} == set(G)
    assert oracles.dominating_witness(G, 1) is None


def test_qbf_single_clause_true():
    phi = QbfInstance(2, ALTERNATING, ((1,),))
    assert oracles.qbf_true(phi) and oracles.maxqsat_value(phi) == 1


def test_qbf_contradictory_universal_clauses():
    phi = QbfInstance(2, ALTERNATING, ((2,), (-2,)))
    assert oracles.maxqsat_value(phi) == 1
    assert not oracles.qbf_true(phi)


def test_truth_table_agrees_on_every_small_instance():
    count = 0
    for m in (1, 2, 3):
        for clauses in itertools.combinations_with_replacement(ALL_CLAUSES, m):
            phi = QbfInstance(2, ALTERNATING, clauses)
            value = oracles.maxqsat_value(phi)
            assert 0 <= value <= m
            assert oracles.qbf_true(phi) == oracles.qbf_truth_table(phi) == (value == m)
            count += 1
    assert count > 100


def test_identical_singletons_under_both_references():
    P = PebbledStructure(digraph(3, [(0, 1), (1, 2)]))
    assert oracles.naive_ef(EfPosition(P, P, 2)) == oracles.DUPLICATOR
    assert oracles.naive_ms_subset(MsPosition((P,), (P,), 2)) == oracles.DUPLICATOR


def test_references_see_edge_versus_edgeless():
    A, B = PebbledStructure(digraph(2, [(0, 1)])), PebbledStructure(digraph(2, []))
    assert oracles.naive_ef(EfPosition(A, B, 2)) == oracles.SPOILER
    assert oracles.naive_ms_subset(MsPosition((A,), (B,), 1)) == oracles.DUPLICATOR


def test_oracles_do_not_import_the_package():
    import ast
    import inspect

    tree = ast.parse(inspect.getsource(oracles))
    for node in ast.walk(tree):
        if isinstance(node, ast.ImportFrom):
            assert node.level == 0 and not (node.module or "").startswith("msgames")
        if isinstance(node, ast.Import):
            assert all(not alias.name.startswith("msgames") for alias in node.names)
