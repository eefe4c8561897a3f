from __future__ import annotations

import networkx as nx
import pytest

from msgames import oracles
from msgames.corpus import check_bridge, check_discard_and_subsets, check_ef_dominance
from msgames.gadgets import build_domset_structure, build_skyscraper
from msgames.logic import separates
from msgames.ms import (
    LEFT,
    RIGHT,
    CompositionError,
    MsPosition,
    ScriptError,
    SpoilerMove,
    StrategyScript,
    check_duplicator_strategy,
    discard,
    ef_guided_duplicator,
    mirror_duplicator,
    ms_certificate,
    ms_strategy_to_formula,
    ms_winner,
    oblivious_response,
    parallel_compose,
    run_composed,
    run_spoiler_script,
    solver_script,
)
from msgames.qbf import QbfInstance
from msgames.scripts import (
    domset_position,
    domset_split_script,
    spoiler_script_domset,
    spoiler_script_skyscraper,
)
from msgames.search import Winner
from msgames.structures import PebbledStructure, Schema, Structure, StructuralError, digraph, matching_pair

EDGE = digraph(2, [(0, 1)])
EMPTY2 = digraph(2, [])
PATH3 = digraph(3, [(0, 1), (1, 2)])


def constant_script(side: str, rounds: int, element: int = 0) -> StrategyScript:
    def step(pos, i):
        return SpoilerMove(side, f"x{len(pos.colors_used) + 1}", tuple(element for _ in pos.side(side)))

    return StrategyScript("constant", step, (side,) * rounds)


def domset_instance(G, k):
    g = build_domset_structure(G, k)
    return g, {g.structure: g.automorphism_generators}


# ---------------------------------------------------------------- oblivious answers and discarding


def test_oblivious_answer_copies_every_element():
    pos = MsPosition.of([EDGE], [PATH3], 2)
    after = oblivious_response(pos, SpoilerMove(LEFT, "x1", (0,)))
    assert len(after.right) == 3 and len(after.left) == 1
    assert after.rounds_remaining == 1


def test_single_element_universes_stay_singletons():
    one = digraph(1, [(0, 0)])
    pos = MsPosition.of([one], [digraph(1, [])], 3)
    for side in (LEFT, RIGHT, LEFT):
        pos = oblivious_response(pos, SpoilerMove(side, f"x{len(pos.colors_used) + 1}", (0,)))
        assert len(pos.left) == len(pos.right) == 1


def test_reused_color_is_an_error():
    pos = MsPosition.of([PebbledStructure(EDGE, (("x1", 0),))], [PebbledStructure(EDGE, (("x1", 1),))], 1)
    with pytest.raises(StructuralError):
        oblivious_response(pos, SpoilerMove(LEFT, "x1", (1,)))


def test_first_round_survivors_realize_the_same_type():
    g, _ = domset_instance(nx.path_graph(3), 1)
    S = g.structure
    pos = domset_position(g, 3)
    u = g["<c^1_1,v0>"]
    after = discard(oblivious_response(pos, SpoilerMove(LEFT, "x1", (u,))))
    moved = pos.left[0].extend("x1", u)
    expected = {w for w in range(S.n) if matching_pair(moved, pos.right[0].extend("x1", w))}
    survivors = {dict(Q.pebbles)["x1"] for Q in after.right}
    assert survivors == expected
    assert survivors <= set(S.out_neighbors(g["a'"]))


def test_first_round_survivors_are_the_far_star_and_diamond_sets():
    g, _ = domset_instance(nx.path_graph(3), 1)
    S = g.structure
    pos = domset_position(g, 3)
    after = discard(oblivious_response(pos, SpoilerMove(LEFT, "x1", (g["<c^1_1,v0>"],))))
    labels = {S.label(dict(Q.pebbles)["x1"]) for Q in after.right}
    wanted = {f"<{x}^1_{i},v{v}>" for x in "cd" for i in (3, 4) for v in range(3)}
    assert labels == wanted


def test_discard_keeps_a_fully_matching_position():
    P = PebbledStructure(PATH3, (("x1", 1),))
    pos = MsPosition((P,), (P,), 2)
    assert discard(pos) == pos
    assert discard(discard(pos)) == discard(pos)


def test_discard_empties_a_non_matching_pair():
    P = PebbledStructure(EDGE, (("x1", 0), ("x2", 1)))
    Q = PebbledStructure(EMPTY2, (("x1", 0), ("x2", 1)))
    assert discard(MsPosition((P,), (Q,), 1)).empty


# ---------------------------------------------------------------- exact solving


@pytest.mark.parametrize("m", [0, 1, 2, 3])
def test_identical_singletons_are_a_duplicator_win(m):
    assert ms_winner(MsPosition.of([PATH3], [PATH3], m)) is Winner.DUPLICATOR


@pytest.mark.parametrize("m, expected", [(1, Winner.DUPLICATOR), (2, Winner.SPOILER)])
def test_edge_versus_edgeless(m, expected):
    assert ms_winner(MsPosition.of([EDGE], [EMPTY2], m)) is expected


def test_np_gadget_one_round_is_a_duplicator_win():
    from msgames.gadgets import build_I_np

    g = build_I_np(1)
    pos = MsPosition.of([PebbledStructure(g.structure, (("x1", g["p"]),))], [PebbledStructure(g.structure, (("x1", g["p'"]),))], 1)
    assert ms_winner(pos, None, {g.structure: g.automorphism_generators}) is Winner.DUPLICATOR


def test_multi_member_sides():
    # a loop on either left member is visible to a single existential
    loop = digraph(1, [(0, 0)])
    assert ms_winner(MsPosition.of([loop, digraph(2, [(0, 0)])], [EMPTY2], 1)) is Winner.SPOILER
    assert ms_winner(MsPosition.of([loop, EMPTY2], [EMPTY2], 3)) is Winner.DUPLICATOR


def test_exact_solver_matches_subset_reference_on_small_cases():
    for left, right, m in [([EDGE], [EMPTY2], 2), ([EDGE, EMPTY2], [PATH3], 2), ([PATH3], [EDGE], 1)]:
        pos = MsPosition.of(left, right, m)
        assert ms_winner(pos).value == oracles.naive_ms_subset(pos)


def test_corpus_discard_and_subset_reference():
    report = check_discard_and_subsets(3, 2)
    assert report.checked > 4000 and report.ok, report.line()


def test_corpus_separator_bridge():
    report = check_bridge(200, seed=0)
    assert report.ok, report.line()


def test_corpus_ef_dominance():
    report = check_ef_dominance(200, seed=0)
    assert report.ok, report.line()


# ---------------------------------------------------------------- scripts


def test_constant_spoiler_fails_on_identical_singletons():
    result = run_spoiler_script(constant_script(LEFT, 2), MsPosition.of([PATH3], [PATH3], 2))
    assert not result.won and result.position.left


def test_script_longer_than_the_game_is_rejected():
    with pytest.raises(ScriptError):
        run_spoiler_script(constant_script(LEFT, 3), MsPosition.of([PATH3], [PATH3], 2))


def test_script_outside_the_universe_is_rejected():
    with pytest.raises(ScriptError):
        run_spoiler_script(constant_script(LEFT, 1, element=7), MsPosition.of([PATH3], [EDGE], 1))


def test_domset_script_wins_on_p3():
    g, _ = domset_instance(nx.path_graph(3), 1)
    script = spoiler_script_domset(g, oracles.dominating_witness(nx.path_graph(3), 1))
    result = run_spoiler_script(script, domset_position(g, 3))
    assert result.won and result.rounds_used == 3


def test_skyscraper_script_wins_at_four_rounds():
    phi = QbfInstance(2, (("e", 1), ("a", 2)), ((1, 2), (1, -2)))
    assert oracles.maxqsat_value(phi) >= 2
    g = build_skyscraper(phi, 2)
    result = run_spoiler_script(spoiler_script_skyscraper(g, phi), domset_position(g, 4))
    assert result.won, result.summary()
    assert separates(ms_strategy_to_formula(result), result.start.left, result.start.right)


# ---------------------------------------------------------------- Duplicator strategies


@pytest.mark.parametrize("m", [1, 2])
def test_identity_mirror_survives_identical_singletons(m):
    assert check_duplicator_strategy(mirror_duplicator(), MsPosition.of([PATH3], [PATH3], m))


def test_mirror_fails_where_spoiler_wins():
    assert not check_duplicator_strategy(mirror_duplicator(), MsPosition.of([EDGE], [EMPTY2], 2))


def test_ef_guided_duplicator_survives_without_a_dominating_set():
    G = nx.empty_graph(2)
    assert not oracles.has_domset(G, 1)
    g, gens = domset_instance(G, 1)
    strategy = ef_guided_duplicator(None, gens)
    assert check_duplicator_strategy(strategy, domset_position(g, 2))


# ---------------------------------------------------------------- parallel play


def test_composing_with_an_empty_block_changes_nothing():
    pos = MsPosition.of([EDGE], [EMPTY2], 2)
    script = solver_script(pos)
    alone = run_spoiler_script(script, pos)
    idle = StrategyScript("idle", lambda p, i: None, script.sides)
    composed = parallel_compose([(pos.left, pos.right, script), ([], [], idle)], script.sides)
    result = run_composed(composed, pos)
    assert alone.won and result.won
    assert [s.after for s in result.trace] == [s.after for s in alone.trace]


def test_mismatched_side_sequences_do_not_compose():
    a = constant_script(LEFT, 1)
    a.sides = (LEFT, RIGHT)
    b = constant_script(RIGHT, 1)
    b.sides = (RIGHT, LEFT)
    with pytest.raises(CompositionError):
        blocks = [([PebbledStructure(EDGE)], [PebbledStructure(EMPTY2)], a), ([PebbledStructure(PATH3)], [PebbledStructure(EDGE)], b)]
        parallel_compose(blocks, (LEFT, RIGHT))


def test_split_strategy_composes_into_a_win():
    G = nx.path_graph(3)
    g, _ = domset_instance(G, 2)
    script, start = domset_split_script(g, oracles.dominating_witness(G, 2))
    result = run_composed(script, start)
    assert result.won, result.summary()


def test_split_needs_two_levels():
    g, _ = domset_instance(nx.path_graph(3), 1)
    with pytest.raises(CompositionError):
        domset_split_script(g, [0])


# ---------------------------------------------------------------- certificates


def test_two_round_win_gives_two_quantifier_separator():
    pos = MsPosition.of([EDGE], [EMPTY2], 2)
    result = ms_certificate(pos)
    phi = ms_strategy_to_formula(result)
    assert phi.quantifier_count == result.rounds_used == 2
    assert separates(phi, pos.left, pos.right)


def test_zero_round_win_gives_quantifier_free_separator():
    schema = Schema(relations=(("E", 2), ("U", 1)), constants=("c",))
    A = Structure(schema, 2, {"U": [(0,)]}, {"c": 0})
    B = Structure(schema, 2, {"U": [(1,)]}, {"c": 0})
    pos = MsPosition.of([A], [B], 0)
    phi = ms_strategy_to_formula(ms_certificate(pos))
    assert phi.quantifier_count == 0
    assert separates(phi, pos.left, pos.right)


def test_domset_win_gives_three_quantifier_separator():
    G = nx.path_graph(3)
    g, _ = domset_instance(G, 1)
    result = run_spoiler_script(spoiler_script_domset(g, oracles.dominating_witness(G, 1)), domset_position(g, 3))
    phi = ms_strategy_to_formula(result)
    assert phi.quantifier_count == 3
    assert separates(phi, result.start.left, result.start.right)


def test_losing_run_has_no_certificate():
    result = run_spoiler_script(constant_script(LEFT, 1), MsPosition.of([PATH3], [PATH3], 1))
    with pytest.raises(StructuralError):
        ms_strategy_to_formula(result)


def test_duplicator_win_has_no_certificate():
    assert ms_certificate(MsPosition.of([EDGE], [EMPTY2], 1)) is None
