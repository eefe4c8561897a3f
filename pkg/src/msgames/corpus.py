"""Seeded instance corpora and the cross-checks run over them.

Every generator is deterministic for a given seed, so a disagreement found
once can be replayed from its index.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterator

import networkx as nx
import numpy as np

from . import oracles
from .ef import EfPosition, ef_winner
from .ms import MsPosition, discard, ms_winner
from .search import SearchLimits, Winner
from .structures import PebbledStructure, Structure, digraph
from .synthesis import synth_separating


def random_digraph(rng: np.random.Generator, max_elements: int, edge_probability: float = 0.35) -> Structure:
    n = int(rng.integers(1, max_elements + 1))
    edges = [(a, b) for a in range(n) for b in range(n) if rng.random() < edge_probability]
    return digraph(n, edges)


def random_ms_positions(
    count: int,
    seed: int = 0,
    max_elements: int = 5,
    max_per_side: int = 2,
    max_rounds: int = 3,
) -> Iterator[MsPosition]:
    """1..max_per_side digraphs per side; about half the positions carry one pebble on every member."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        pebbled = bool(rng.integers(0, 2))

        def member():
            S = random_digraph(rng, max_elements)
            return PebbledStructure(S, (("x1", int(rng.integers(0, S.n))),) if pebbled else ())

        left = [member() for _ in range(int(rng.integers(1, max_per_side + 1)))]
        right = [member() for _ in range(int(rng.integers(1, max_per_side + 1)))]
        yield MsPosition.of(left, right, int(rng.integers(0, max_rounds + 1)))


def digraph_classes(max_elements: int, loops_up_to: int = 2) -> list[Structure]:
    """One digraph per isomorphism class; self-loops only on universes of size <= ``loops_up_to``."""
    out: list[Structure] = []
    for n in range(1, max_elements + 1):
        pairs = [(a, b) for a in range(n) for b in range(n) if a != b or n <= loops_up_to]
        reps: list[nx.DiGraph] = []
        for mask in range(1 << len(pairs)):
            edges = [p for i, p in enumerate(pairs) if mask >> i & 1]
            G = nx.DiGraph()
            G.add_nodes_from(range(n))
            G.add_edges_from(edges)
            if any(nx.is_isomorphic(G, H) for H in reps):
                continue
            reps.append(G)
            out.append(digraph(n, edges))
    return out


def exhaustive_ms_positions(max_elements: int = 3, max_rounds: int = 2) -> Iterator[MsPosition]:
    """Every ordered pair (A, B) of :func:`digraph_classes` and every round count up to ``max_rounds``.

    Each pair yields the unpebbled position ({A}, {B}) and a pebbled one
    ({<A|0>, <A|last>}, {<B|0>}) whose members need not match.
    """
    classes = digraph_classes(max_elements)
    for A, B in itertools.product(classes, repeat=2):
        for m in range(max_rounds + 1):
            yield MsPosition.of([A], [B], m)
            left = [PebbledStructure(A, (("x1", 0),)), PebbledStructure(A, (("x1", A.n - 1),))]
            yield MsPosition.of(left, [PebbledStructure(B, (("x1", 0),))], m)


def random_ef_positions(count: int, seed: int = 0, max_elements: int = 4, max_rounds: int = 3) -> Iterator[EfPosition]:
    rng = np.random.default_rng(seed)
    for _ in range(count):
        A, B = random_digraph(rng, max_elements), random_digraph(rng, max_elements)
        pebbles = int(rng.integers(0, 2))
        pa = tuple(("x1", int(rng.integers(0, A.n))) for _ in range(pebbles))
        pb = tuple(("x1", int(rng.integers(0, B.n))) for _ in range(pebbles))
        yield EfPosition(PebbledStructure(A, pa), PebbledStructure(B, pb), int(rng.integers(0, max_rounds + 1)))


# ---------------------------------------------------------------- cross-checks


@dataclass
class CheckReport:
    name: str
    checked: int = 0
    disagreements: list = field(default_factory=list)
    unknown: int = 0

    @property
    def ok(self) -> bool:
        return not self.disagreements and self.unknown == 0

    def line(self) -> str:
        return f"{self.name}: {self.checked} checked, {len(self.disagreements)} disagreements, {self.unknown} unknown"


def _verdict(w) -> str:
    return w.value if isinstance(w, Winner) else str(w)


def _run(name: str, items, compare: Callable) -> CheckReport:
    report = CheckReport(name)
    for index, item in enumerate(items):
        outcome = compare(item)
        report.checked += 1
        if outcome is None:
            report.unknown += 1
        elif outcome is not True:
            report.disagreements.append((index, outcome))
    return report


def check_bridge(count: int = 200, seed: int = 0, limits: SearchLimits | None = None) -> CheckReport:
    """Spoiler wins in m rounds iff a separator with at most m quantifiers exists."""
    limits = limits or SearchLimits.unlimited()

    def compare(pos: MsPosition):
        game = ms_winner(pos, limits)
        phi = synth_separating(pos.left, pos.right, pos.rounds_remaining, limits)
        if game is Winner.UNKNOWN or phi is Winner.UNKNOWN:
            return None
        if (game is Winner.SPOILER) == (phi is not None):
            return True
        return (pos.describe(), _verdict(game), str(phi))

    return _run("separator bridge", random_ms_positions(count, seed), compare)


def check_discard_and_subsets(max_elements: int = 3, max_rounds: int = 2, limits: SearchLimits | None = None) -> CheckReport:
    """Discarding keeps the winner, and oblivious play matches the subset-choosing reference."""
    limits = limits or SearchLimits.unlimited()

    def compare(pos: MsPosition):
        game = ms_winner(pos, limits)
        pruned = ms_winner(discard(pos), limits)
        reference = oracles.naive_ms_subset(pos)
        if Winner.UNKNOWN in (game, pruned) or reference == oracles.UNKNOWN:
            return None
        if game == pruned and game.value == reference:
            return True
        return (pos.describe(), game.value, pruned.value, reference)

    return _run("discard and subset reference", exhaustive_ms_positions(max_elements, max_rounds), compare)


def check_ef_reference(count: int = 300, seed: int = 0, limits: SearchLimits | None = None) -> CheckReport:
    limits = limits or SearchLimits.unlimited()

    def compare(pos: EfPosition):
        game = ef_winner(pos, limits)
        reference = oracles.naive_ef(pos)
        if game is Winner.UNKNOWN or reference == oracles.UNKNOWN:
            return None
        return True if game.value == reference else (pos.rounds_remaining, game.value, reference)

    return _run("EF reference", random_ef_positions(count, seed), compare)


def check_ef_dominance(count: int = 200, seed: int = 0, limits: SearchLimits | None = None) -> CheckReport:
    """A Duplicator EF win on ({P}, {Q}) implies a Duplicator MS win."""
    limits = limits or SearchLimits.unlimited()

    def compare(pos: EfPosition):
        ef = ef_winner(pos, limits)
        if ef is not Winner.DUPLICATOR:
            return None if ef is Winner.UNKNOWN else True
        ms = ms_winner(MsPosition((pos.left,), (pos.right,), pos.rounds_remaining), limits)
        if ms is Winner.UNKNOWN:
            return None
        return True if ms is Winner.DUPLICATOR else (pos.rounds_remaining, "EF DUPLICATOR", ms.value)

    return _run("EF dominance", random_ef_positions(count, seed), compare)


CHECKS: dict[str, Callable[..., CheckReport]] = {
    "bridge": check_bridge,
    "discard": check_discard_and_subsets,
    "ef-reference": check_ef_reference,
    "ef-dominance": check_ef_dominance,
}
