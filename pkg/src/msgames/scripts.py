"""Spoiler and Duplicator scripts for the two reduction structures.

A Spoiler script decides each structure's move from that structure alone:
the labels of the vertices its pebbles sit on tell it which sub-game the
structure belongs to.  Nothing here is trusted; the executor in :mod:`ms`
plays every script against the oblivious Duplicator and reports the result.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Sequence

from .gadgets import GadgetOutput
from .ms import LEFT, RIGHT, MsPosition, ScriptError, SpoilerMove, StrategyScript, parallel_compose
from .qbf import ClauseGame, QbfInstance
from .structures import PebbledStructure, Structure, fresh_color

_MIDDLE = re.compile(r"^<([cd])\^(\d+)_(\d+),")


def _history(P: PebbledStructure, base: frozenset[str]) -> list[int]:
    """Elements pebbled during play, in round order."""
    return [e for c, e in P.pebbles if c not in base]


def is_distinguishing(S: Structure, e: int) -> bool:
    label = S.label(e)
    return label.startswith("a(") or label.startswith("b(")


def distinguishing_in_neighbors(S: Structure, e: int) -> list[int]:
    return [u for u in S.in_neighbors(e) if is_distinguishing(S, u)]


def _fresh_neighbor(P: PebbledStructure, anchor: int) -> int | None:
    taken = set(P.elements)
    for u in distinguishing_in_neighbors(P.structure, anchor):
        if u not in taken:
            return u
    return None


def _move(pos: MsPosition, side: str, choose: Callable[[PebbledStructure], int]) -> SpoilerMove:
    color = fresh_color(pos.colors_used)
    return SpoilerMove(side, color, tuple(choose(P) for P in pos.side(side)))


# ---------------------------------------------------------------- dominating set


def domset_sides(k: int) -> tuple[str, ...]:
    """Left/right pairs per level, the bottom pair played left twice, then one right round."""
    sides: list[str] = []
    for level in range(k, 0, -1):
        sides += [LEFT, LEFT if level == 1 else RIGHT]
    return tuple(sides + [RIGHT])


def _middle(S: Structure, e: int):
    m = _MIDDLE.match(S.label(e))
    if m is None:
        return None
    return m.group(1), int(m.group(2)), int(m.group(3))


def spoiler_script_domset(gadget: GadgetOutput, dominating: Sequence, base_colors: Sequence[str] = ("a",)) -> StrategyScript:
    """Spoiler's strategy on the dominating-set structure built for ``k``.

    ``dominating`` lists graph vertices (as named in the gadget) forming a
    dominating set of size at most ``k``; shorter lists are padded by
    repetition.  Round ``2r-1`` pebbles ``<c^l_1, u_r>`` on the left for
    level ``l = k+1-r``.  Round ``2r`` answers on the right by threatening
    ``r'_l`` or ``q'_l`` in star copies and by starting a count of
    distinguishing neighbours in diamond copies.  The bottom level swaps the
    threat for a left count, and the last round pebbles a null vertex.
    """
    k = int(gadget.notes["k"])
    names = list(gadget.notes["graph_vertices"])
    chosen = [str(u) if str(u) in names else f"v{u}" for u in dominating]
    if not chosen:
        raise ValueError("the dominating set must be nonempty")
    for u in chosen:
        if u not in names:
            raise ValueError(f"unknown graph vertex {u!r}")
    if len(chosen) > k:
        raise ValueError(f"a dominating set of size {len(chosen)} does not fit k = {k}")
    chosen += [chosen[-1]] * (k - len(chosen))
    base = frozenset(base_colors)
    sides = domset_sides(k)

    def counting_anchor(P: PebbledStructure, hist: list[int]) -> int | None:
        # a distinguishing neighbour pebbled in a right round starts a count
        # of the neighbours of the pebble placed just before it
        for i, e in enumerate(hist):
            if i and sides[i] == RIGHT and is_distinguishing(P.structure, e):
                return hist[i - 1]
        return None

    def left_move(P: PebbledStructure, i: int) -> int:
        hist = _history(P, base)
        anchor = counting_anchor(P, hist)
        if anchor is not None:
            fresh = _fresh_neighbor(P, anchor)
            return anchor if fresh is None else fresh
        if i == 2 * k - 1:
            # bottom level: count the star's extra neighbour on the left
            fresh = _fresh_neighbor(P, hist[-1])
            return hist[-1] if fresh is None else fresh
        r = i // 2 + 1
        level = k + 1 - r
        return gadget[f"<c^{level}_1,{chosen[r - 1]}>"]

    def right_move(Q: PebbledStructure, i: int) -> int:
        S = Q.structure
        hist = _history(Q, base)
        if counting_anchor(Q, hist) is not None:
            return hist[-1]
        if i == 2 * k:
            got = _middle(S, hist[2 * k - 2])
            if got == ("c", 1, 3):
                return gadget["null_r'"]
            if got == ("c", 1, 4):
                return gadget["null_q'"]
            return hist[-1]
        level = k - i // 2
        got = _middle(S, hist[-1])
        if got is None or got[1] != level:
            return hist[-1]
        kind, _, idx = got
        if kind == "c" and idx == 3:
            return gadget[f"r'_{level}"]
        if kind == "c" and idx == 4:
            return gadget[f"q'_{level}"]
        if kind == "d" and idx in (3, 4):
            fresh = _fresh_neighbor(Q, hist[-1])
            return hist[-1] if fresh is None else fresh
        return hist[-1]

    def step(pos: MsPosition, i: int) -> SpoilerMove:
        side = sides[i]
        if side == LEFT:
            return _move(pos, LEFT, lambda P: left_move(P, i))
        return _move(pos, RIGHT, lambda Q: right_move(Q, i))

    return StrategyScript(f"domset-spoiler(k={k})", step, sides)


def domset_position(gadget: GadgetOutput, rounds: int) -> MsPosition:
    """``({<A|a>}, {<A|a'>})`` with the given number of rounds."""
    S = gadget.structure
    return MsPosition.of([PebbledStructure(S, (("a", gadget["a"]),))], [PebbledStructure(S, (("a", gadget["a'"]),))], rounds)


def domset_split_script(gadget: GadgetOutput, dominating: Sequence, base_colors: Sequence[str] = ("a",)) -> tuple[StrategyScript, MsPosition]:
    """The level strategy after its first two rounds, played as a parallel composition.

    After the first left round and the right threat, left members split by
    where Duplicator answered the threat (``r_k``, ``q_k`` or a
    distinguishing neighbour) and right members by the threat itself.  Each
    of the three blocks is driven by its own copy of the level strategy.
    Needs ``k >= 2``: with one level the left side is a single structure at
    every round, so it cannot be split.

    Returns the composed script for the remaining rounds and its start.
    """
    from .ms import CompositionError, discard, oblivious_response

    k = int(gadget.notes["k"])
    if k < 2:
        raise CompositionError("with one level the left side never splits into disjoint blocks")
    full = spoiler_script_domset(gadget, dominating, base_colors)
    current = discard(domset_position(gadget, len(full.sides)))
    for i in range(2):
        current = discard(oblivious_response(current, full.step(current, i)))
    base = frozenset(base_colors)
    left_names = {gadget[f"r_{k}"]: "r", gadget[f"q_{k}"]: "q"}
    right_names = {gadget[f"r'_{k}"]: "r", gadget[f"q'_{k}"]: "q"}

    def block(P: PebbledStructure, names: dict) -> str:
        e = _history(P, base)[1]
        if e in names:
            return names[e]
        if is_distinguishing(P.structure, e):
            return "count"
        raise ScriptError(f"unexpected survivor {P.describe()}")

    rest = full.sides[2:]
    subgames = []
    for name in ("r", "q", "count"):
        A = [P for P in current.left if block(P, left_names) == name]
        B = [Q for Q in current.right if block(Q, right_names) == name]
        if A or B:
            script = StrategyScript(f"block-{name}", lambda pos, j: full.step(pos, j + 2), rest)
            subgames.append((A, B, script))
    return parallel_compose(subgames, rest), current


# ---------------------------------------------------------------- skyscraper


def skyscraper_sides(m: int, t: int) -> tuple[str, ...]:
    """Single floor: x1 left, ``m - t + 1`` right rounds, one left round, one right round."""
    return (LEFT,) + (RIGHT,) * (m - t + 1) + (LEFT, RIGHT)


@dataclass(frozen=True)
class _SkyLabels:
    floor: int
    kind: str
    index: int
    lower_of: str | None


_SKY = re.compile(r"^([cd])\^\{(\d+),(U|L,([cd]_\d+))\}_(\d+)$")


def _sky(S: Structure, e: int) -> _SkyLabels | None:
    m = _SKY.match(S.label(e))
    if m is None:
        return None
    return _SkyLabels(int(m.group(2)), m.group(1), int(m.group(5)), m.group(4))


def _fresh_in_neighbor(P: PebbledStructure, anchor: int) -> int | None:
    taken = set(P.elements)
    for u in P.structure.in_neighbors(anchor):
        if u not in taken:
            return u
    return None


def spoiler_script_skyscraper(gadget: GadgetOutput, phi: QbfInstance, base_colors: Sequence[str] = ("a",)) -> StrategyScript:
    """Spoiler's strategy on a one-floor skyscraper.

    Round 1 pebbles a star whose informal label follows the existential
    player's optimal first move.  Round 2 threatens the lower ``c_2`` of each
    right star's block and starts counting in-neighbours on right diamonds.
    Later right rounds keep counting, on the diamond or on the round-2
    pebble.  The one later left round finishes each left sub-game: another
    in-neighbour of the star, the clause vertex of a clause the structure's
    assignment satisfies, or a clause vertex on a two-cycle with the round-2
    pebble.  The final right round completes the count against lower
    diamonds.
    """
    phi = phi.alternating()
    k = phi.num_vars // 2
    if k != 1:
        raise ValueError("the skyscraper script covers one floor (two variables)")
    m, t = int(gadget.notes["m"]), int(gadget.notes["t"])
    sides = skyscraper_sides(m, t)
    base = frozenset(base_colors)
    game = ClauseGame(phi)
    x1_target = gadget["c^{1,U}_5" if game.best_move(()) else "c^{1,U}_7"]
    informal = gadget.informal_labels
    clause_vertex = [gadget[f"v_C{i + 1}"] for i in range(m)]

    def assignment(P: PebbledStructure) -> dict[int, bool]:
        values = {}
        for e in _history(P, base):
            tag = informal.get(e)
            if tag is not None:
                values[int(tag[3:-1])] = tag[0] == "T"
        return values

    def satisfied_clause(P: PebbledStructure) -> int | None:
        values = assignment(P)
        taken = set(P.elements)
        for i, clause in enumerate(phi.clauses):
            if clause_vertex[i] not in taken and any(values.get(abs(lit)) == (lit > 0) for lit in clause):
                return clause_vertex[i]
        return None

    def two_cycle(P: PebbledStructure, e: int) -> int | None:
        S = P.structure
        outs = set(S.out_neighbors(e))
        taken = set(P.elements)
        for u in S.in_neighbors(e):
            if u in outs and u not in taken:
                return u
        return None

    def left_move(P: PebbledStructure, i: int) -> int:
        if i == 0:
            return x1_target
        S = P.structure
        x1, x2 = _history(P, base)[:2]
        if S.holds("E", (x2, x1)):
            choice = _fresh_in_neighbor(P, x1)
        else:
            got = _sky(S, x2)
            if got is not None and got.lower_of is not None:
                choice = satisfied_clause(P) if got.kind == "c" else two_cycle(P, x2)
            else:
                choice = None
        return x1 if choice is None else choice

    def right_move(Q: PebbledStructure, i: int) -> int:
        S = Q.structure
        hist = _history(Q, base)
        x1 = hist[0]
        if i == 1:
            up = _sky(S, x1)
            if up is not None and up.lower_of is None and up.kind == "c":
                return gadget[f"c^{{1,L,c_{up.index}}}_2"]
            choice = _fresh_in_neighbor(Q, x1)
        elif S.holds("E", (hist[1], x1)):
            choice = _fresh_in_neighbor(Q, x1)
        else:
            choice = _fresh_in_neighbor(Q, hist[1])
        return hist[-1] if choice is None else choice

    def step(pos: MsPosition, i: int) -> SpoilerMove:
        side = sides[i]
        if side == LEFT:
            return _move(pos, LEFT, lambda P: left_move(P, i))
        return _move(pos, RIGHT, lambda Q: right_move(Q, i))

    return StrategyScript(f"skyscraper-spoiler(m={m},t={t})", step, sides)


def skyscraper_position(gadget: GadgetOutput, rounds: int) -> MsPosition:
    return domset_position(gadget, rounds)
