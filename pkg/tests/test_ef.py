from __future__ import annotations

import numpy as np
import pytest

from msgames import oracles
from msgames.corpus import check_ef_reference, random_ef_positions
from msgames.ef import EfPosition, ef_forced, ef_forcing_winner, ef_winner
from msgames.gadgets import build_I_np, build_J, build_J_prime
from msgames.search import SearchLimits, Winner
from msgames.structures import PebbledStructure, StructuralError, digraph
from msgames.synthesis import synth_separating

EDGE = PebbledStructure(digraph(2, [(0, 1)]))
EMPTY2 = PebbledStructure(digraph(2, []))


def pinned(gadget, *pairs):
    return PebbledStructure(gadget.structure, tuple((f"x{i + 1}", gadget[name]) for i, name in enumerate(pairs)))


@pytest.mark.parametrize("m", [0, 1, 2, 3])
def test_identical_structures_are_a_duplicator_win(m):
    P = PebbledStructure(digraph(4, [(0, 1), (1, 2), (2, 0), (3, 3)]), (("x1", 1),))
    assert ef_winner(EfPosition(P, P, m)) is Winner.DUPLICATOR


@pytest.mark.parametrize("m, expected", [(1, Winner.DUPLICATOR), (2, Winner.SPOILER)])
def test_edge_versus_edgeless(m, expected):
    assert ef_winner(EfPosition(EDGE, EMPTY2, m)) is expected
    # quantifier rank m suffices iff a prenex sentence with m quantifiers separates
    found = synth_separating([EDGE], [EMPTY2], m)
    assert (found is not None) == (expected is Winner.SPOILER)


def test_zero_rounds_is_the_matching_test():
    P = PebbledStructure(digraph(2, [(0, 1)]), (("x1", 0), ("x2", 1)))
    Q = PebbledStructure(digraph(2, []), (("x1", 0), ("x2", 1)))
    assert ef_winner(EfPosition(P, Q, 0)) is Winner.SPOILER
    assert ef_winner(EfPosition(P, P, 0)) is Winner.DUPLICATOR


def test_position_rejects_mismatched_colors():
    with pytest.raises(StructuralError):
        EfPosition(PebbledStructure(digraph(1, []), (("x1", 0),)), PebbledStructure(digraph(1, [])), 1)


@pytest.mark.parametrize("j", [1, 2])
def test_np_gadget_survives_j_rounds(j):
    g = build_I_np(j)
    pos = EfPosition(pinned(g, "p"), pinned(g, "p'"), j)
    assert ef_winner(pos, None, g.automorphism_generators, g.automorphism_generators) is Winner.DUPLICATOR


@pytest.mark.parametrize("j", [1, 2])
def test_np_gadget_forcing_in_j_plus_one_rounds(j):
    g = build_I_np(j)
    pos = EfPosition(pinned(g, "p"), pinned(g, "p'"), j + 1)
    targets = [(g["q"], g["q'"]), (g["r"], g["r'"])]
    gens = g.automorphism_generators
    assert ef_forcing_winner(pos, targets, None, gens, gens) is Winner.SPOILER


def test_forcing_needs_the_targets():
    """Without target pairs the same j+1 round game on I_1 is still a Duplicator win."""
    g = build_I_np(1)
    pos = EfPosition(pinned(g, "p"), pinned(g, "p'"), 2)
    assert ef_forcing_winner(pos, [], None) is Winner.DUPLICATOR


def test_forced_q_pair_after_c1_c4():
    g = build_I_np(1)
    pos = EfPosition(pinned(g, "p", "c_1"), pinned(g, "p'", "c_4"), 1)
    assert ef_forced(pos, g["q"], g["q'"], 1)


def test_forced_r_pair_after_c1_c3():
    g = build_I_np(1)
    pos = EfPosition(pinned(g, "p", "c_1"), pinned(g, "p'", "c_3"), 1)
    assert ef_forced(pos, g["r"], g["r'"], 1)


def test_identity_pair_is_forced_with_no_extra_rounds():
    P = PebbledStructure(digraph(3, [(0, 1), (1, 2)]), (("x1", 0),))
    for u in range(3):
        assert ef_forced(EfPosition(P, P, 1), u, u, 0)


def test_non_identity_pair_is_not_forced_on_a_symmetric_graph():
    cycle = PebbledStructure(digraph(3, [(0, 1), (1, 2), (2, 0)]))
    # the identity answer is available, so 0 -> 1 is not forced
    assert not ef_forced(EfPosition(cycle, cycle, 1), 0, 1, 2)


@pytest.mark.parametrize("builder", [build_J, build_J_prime])
def test_J_blocks_tell_c_from_d_in_two_rounds(builder):
    g = builder(1)
    c = PebbledStructure(g.structure, (("x1", g["c_1"]),))
    d = PebbledStructure(g.structure, (("x1", g["d_1"]),))
    assert ef_winner(EfPosition(c, d, 1)) is Winner.DUPLICATOR
    assert ef_winner(EfPosition(c, d, 2)) is Winner.SPOILER


def test_search_is_deterministic():
    g = build_I_np(1)
    pos = EfPosition(pinned(g, "p"), pinned(g, "p'"), 2)
    assert {ef_winner(pos) for _ in range(3)} == {Winner.DUPLICATOR}


def test_budget_exhaustion_reports_unknown():
    g = build_I_np(2)
    pos = EfPosition(pinned(g, "p"), pinned(g, "p'"), 3)
    assert ef_winner(pos, SearchLimits(max_nodes=5, max_seconds=None)) is Winner.UNKNOWN


def test_spoiler_wins_are_monotone_in_rounds():
    positions = list(random_ef_positions(80, seed=3, max_elements=6, max_rounds=3))
    for pos in positions:
        now = ef_winner(pos)
        later = ef_winner(EfPosition(pos.left, pos.right, pos.rounds_remaining + 1))
        if now is Winner.SPOILER:
            assert later is Winner.SPOILER


def test_agrees_with_unmemoized_reference():
    report = check_ef_reference(count=300, seed=0)
    assert report.checked == 300 and report.ok, report.line()


def test_orbit_reduction_does_not_change_answers():
    rng = np.random.default_rng(1)
    g = build_I_np(1)
    elements = list(range(g.structure.n))
    for _ in range(15):
        u, v = (int(x) for x in rng.choice(elements, 2))
        pos = EfPosition(PebbledStructure(g.structure, (("x1", u),)), PebbledStructure(g.structure, (("x1", v),)), 2)
        gens = g.automorphism_generators
        assert ef_winner(pos) == ef_winner(pos, None, gens, gens) == Winner(oracles.naive_ef(pos))
