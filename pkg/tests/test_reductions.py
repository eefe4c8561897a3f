from __future__ import annotations

import itertools

import networkx as nx
import pytest

from msgames import oracles
from msgames.ef import ef_winner
from msgames.ms import run_spoiler_script
from msgames.qbf import QbfInstance
from msgames.reductions import (
    ReductionOutput,
    approx_domset,
    approx_maxqsat,
    domset_ef_rounds,
    domset_ms_rounds,
    exact_solver,
    hybrid_solver,
    qsat_ms_rounds,
    reduce_domset_to_ef,
    reduce_domset_to_ms,
    reduce_qsat_to_ms,
)
from msgames.scripts import spoiler_script_domset, spoiler_script_skyscraper
from msgames.search import Winner

ALTERNATING = (("e", 1), ("a", 2))
CLAUSES = [c for r in (1, 2) for c in itertools.combinations((1, -1, 2, -2), r) if not (len(c) == 2 and c[0] == -c[1])]
SMALL_QBFS = [QbfInstance(2, ALTERNATING, cs) for m in (1, 2) for cs in itertools.combinations_with_replacement(CLAUSES, m)]


def ef_verdict(compiled):
    gens = compiled.gadget.automorphism_generators
    return ef_winner(compiled.instance, None, gens, gens)


# ---------------------------------------------------------------- round budgets


@pytest.mark.parametrize("k", range(1, 8))
def test_domset_round_budgets(k):
    assert domset_ef_rounds(k) == k + 1
    assert domset_ms_rounds(k) == (2 * k + 1, k + 1)


@pytest.mark.parametrize("k, m, t", [(1, 2, 2), (1, 2, 1), (2, 5, 3), (3, 4, 1)])
def test_qsat_round_budgets(k, m, t):
    assert qsat_ms_rounds(k, m, t) == (2 * k + m - t + 2, 2 * k + m - t + 1)


def test_qsat_budget_example():
    assert qsat_ms_rounds(1, 2, 2) == (4, 3)


def test_output_requires_ordered_thresholds():
    with pytest.raises(ValueError):
        ReductionOutput(None, 2, 2, {})


# ---------------------------------------------------------------- compilers


@pytest.mark.parametrize(
    "G, expected",
    [(nx.path_graph(3), Winner.SPOILER), (nx.empty_graph(2), Winner.DUPLICATOR), (nx.empty_graph(1), Winner.SPOILER)],
)
def test_domset_ef_examples(G, expected):
    compiled = reduce_domset_to_ef(G, 1)
    assert compiled.spoiler_rounds == compiled.instance.rounds_remaining == 2
    assert oracles.has_domset(G, 1) == (expected is Winner.SPOILER)
    assert ef_verdict(compiled) is expected


def test_domset_ms_spoiler_example():
    G = nx.path_graph(3)
    compiled = reduce_domset_to_ms(G, 1)
    assert (compiled.spoiler_rounds, compiled.duplicator_rounds) == (3, 2)
    script = spoiler_script_domset(compiled.gadget, oracles.dominating_witness(G, 1))
    assert run_spoiler_script(script, compiled.instance).won


def test_domset_ms_duplicator_example():
    compiled = reduce_domset_to_ms(nx.empty_graph(2), 1)
    assert exact_solver()(compiled, compiled.duplicator_rounds) is Winner.DUPLICATOR


def test_qsat_spoiler_example():
    phi = QbfInstance(2, ALTERNATING, ((1,), (1, -2)))
    assert oracles.maxqsat_value(phi) == 2
    compiled = reduce_qsat_to_ms(phi, 2)
    assert compiled.spoiler_rounds == 4
    assert run_spoiler_script(spoiler_script_skyscraper(compiled.gadget, phi), compiled.instance).won


def test_provenance_records_the_source():
    compiled = reduce_qsat_to_ms(QbfInstance(2, ALTERNATING, ((2,), (-2,))), 1)
    assert compiled.provenance["problem"] == "qsat"
    assert (compiled.provenance["k"], compiled.provenance["m"], compiled.provenance["t"]) == (1, 2, 1)
    assert reduce_domset_to_ms(nx.path_graph(3), 2).provenance["graph"] == {"vertices": 3, "edges": [[1, 2], [2, 3]]}


def test_at_rounds_keeps_the_position():
    compiled = reduce_domset_to_ms(nx.path_graph(2), 1)
    moved = compiled.at_rounds(7)
    assert moved.rounds_remaining == 7 and moved.left == compiled.instance.left


# ---------------------------------------------------------------- drivers with injected solvers


def oracle_domset_solver(compiled, rounds):
    G = nx.empty_graph(range(1, compiled.provenance["graph"]["vertices"] + 1))
    G.add_edges_from(compiled.provenance["graph"]["edges"])
    return Winner.SPOILER if oracles.has_domset(G, compiled.provenance["k"]) else Winner.DUPLICATOR


def test_literal_driver_reports_k_minus_one():
    for G in [nx.path_graph(3), nx.empty_graph(3), nx.cycle_graph(5)]:
        opt = oracles.min_domset_bruteforce(G)
        assert approx_domset(G, oracle_domset_solver) == opt - 1
        assert approx_domset(G, oracle_domset_solver, text_semantics=True) == opt


def test_driver_falls_back_to_vertex_count():
    assert approx_domset(nx.path_graph(4), lambda c, r: Winner.DUPLICATOR) == 4


def test_driver_propagates_unknown():
    calls = []
    result = approx_domset(nx.path_graph(4), lambda c, r: Winner.UNKNOWN, on_query=lambda *a: calls.append(a))
    assert result is Winner.UNKNOWN and len(calls) == 1


def test_driver_query_rounds():
    seen = []
    approx_domset(nx.empty_graph(3), lambda c, r: Winner.DUPLICATOR, on_query=lambda k, r, v: seen.append((k, r)))
    assert seen == [(1, 1), (2, 2), (3, 3)]
    seen.clear()
    approx_domset(nx.empty_graph(3), lambda c, r: Winner.DUPLICATOR, True, lambda k, r, v: seen.append((k, r)))
    assert seen == [(1, 2), (2, 3), (3, 4)]


def test_exact_driver_on_single_vertex():
    assert approx_domset(nx.empty_graph(1), hybrid_solver()) in (1, 2)
    assert approx_domset(nx.empty_graph(1), hybrid_solver(), text_semantics=True) in (1, 2)


def qsat_claims(spoiler_when_unclear: bool):
    """Spoiler at ``2k+m-t+2`` rounds if the value reaches t; Duplicator one round lower if it does not.

    A query for t is posed at ``2k+m-(t+1)+2`` rounds, so its answer is pinned
    down only through the claim for ``t + 1``, applied to the structure built
    for ``t``.
    """

    def solve(compiled, rounds):
        p = compiled.provenance
        phi = QbfInstance(2, ALTERNATING, tuple(tuple(c) for c in p["clauses"]))
        value = oracles.maxqsat_value(phi)
        if value < p["t"] and rounds <= compiled.duplicator_rounds:
            return Winner.DUPLICATOR
        if value >= p["t"] + 1:
            return Winner.SPOILER
        return Winner.SPOILER if spoiler_when_unclear else Winner.DUPLICATOR

    return solve


@pytest.mark.parametrize("unclear", [False, True])
def test_qsat_driver_within_contract_under_the_claims(unclear):
    for phi in SMALL_QBFS:
        opt = oracles.maxqsat_value(phi)
        assert approx_maxqsat(phi, qsat_claims(unclear)) in (opt - 1, opt)


def test_qsat_driver_queries_descend():
    phi = QbfInstance(2, ALTERNATING, ((1,), (2,)))
    seen = []
    assert approx_maxqsat(phi, lambda c, r: Winner.DUPLICATOR, lambda t, r, v: seen.append((t, r))) == 0
    assert seen == [(2, 3), (1, 4)]


def test_qsat_driver_propagates_unknown():
    phi = QbfInstance(2, ALTERNATING, ((1,),))
    assert approx_maxqsat(phi, lambda c, r: Winner.UNKNOWN) is Winner.UNKNOWN
