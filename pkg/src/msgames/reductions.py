"""Compilers from dominating set and Max-Q3SAT to game instances, and the two
approximation drivers built on top of them.

Each compiler returns a :class:`ReductionOutput` holding the start position on
``({<A|a>}, {<A|a'>})`` together with the round counts at which each player is
claimed to win.  The drivers take the game solver as an argument so that tests
can inject exact, scripted or reference solvers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import networkx as nx

from .ef import EfPosition, ef_winner
from .gadgets import GadgetOutput, build_domset_structure, build_skyscraper
from .ms import MsPosition, ms_winner
from .qbf import QbfInstance
from .scripts import domset_position
from .search import SearchLimits, Winner

Instance = Union[MsPosition, EfPosition]
Solver = Callable[["ReductionOutput", int], Winner]


@dataclass(frozen=True)
class ReductionOutput:
    """A compiled game instance with its claimed round thresholds.

    ``spoiler_rounds`` is where Spoiler wins on YES inputs and
    ``duplicator_rounds`` is the largest round count at which Duplicator wins
    on NO inputs.  ``instance`` is posed at ``spoiler_rounds``.
    """

    instance: Instance
    spoiler_rounds: int
    duplicator_rounds: int
    provenance: dict
    gadget: GadgetOutput = field(repr=False, compare=False, default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if not self.duplicator_rounds < self.spoiler_rounds:
            raise ValueError("duplicator_rounds must be below spoiler_rounds")

    def at_rounds(self, rounds: int) -> Instance:
        """The same start position with a different number of rounds."""
        if isinstance(self.instance, EfPosition):
            return EfPosition(self.instance.left, self.instance.right, rounds)
        return self.instance.with_rounds(rounds)

    @property
    def generators(self) -> dict:
        """Automorphism generators keyed by structure, as the solvers expect them."""
        if self.gadget is None:
            return {}
        return {self.gadget.structure: self.gadget.automorphism_generators}


# ---------------------------------------------------------------- round budgets


def domset_ef_rounds(k: int) -> int:
    return k + 1


def domset_ms_rounds(k: int) -> tuple[int, int]:
    """(Spoiler rounds, Duplicator rounds) for the dominating-set MS instance."""
    return 2 * k + 1, k + 1


def qsat_ms_rounds(k: int, m: int, t: int) -> tuple[int, int]:
    """(Spoiler rounds, Duplicator rounds) for the skyscraper instance."""
    return 2 * k + m - t + 2, 2 * k + m - t + 1


# ---------------------------------------------------------------- compilers


def _graph_summary(G: nx.Graph) -> dict:
    nodes = sorted(G.nodes(), key=repr)
    index = {v: i + 1 for i, v in enumerate(nodes)}
    edges = sorted(tuple(sorted((index[u], index[v]))) for u, v in G.edges() if u != v)
    return {"vertices": len(nodes), "edges": [list(e) for e in edges]}


def reduce_domset_to_ef(G: nx.Graph, k: int, colored: bool = True) -> ReductionOutput:
    """EF pair ``(<A|a>, <A|a'>)``; Spoiler should win the ``k+1``-round game iff G has a dominating set of size k.

    The EF claim is a single threshold, so ``duplicator_rounds`` is ``k``: the
    top gadget alone keeps Duplicator alive for ``k`` rounds on every graph.
    """
    gadget = build_domset_structure(G, k, colored)
    ms = domset_position(gadget, domset_ef_rounds(k))
    pos = EfPosition(ms.left[0], ms.right[0], domset_ef_rounds(k))
    provenance = {"problem": "domset", "game": "ef", "k": k, "graph": _graph_summary(G)}
    return ReductionOutput(pos, domset_ef_rounds(k), k, provenance, gadget)


def reduce_domset_to_ms(G: nx.Graph, k: int, colored: bool = True) -> ReductionOutput:
    gadget = build_domset_structure(G, k, colored)
    spoiler, duplicator = domset_ms_rounds(k)
    provenance = {"problem": "domset", "game": "ms", "k": k, "graph": _graph_summary(G)}
    return ReductionOutput(domset_position(gadget, spoiler), spoiler, duplicator, provenance, gadget)


def reduce_qsat_to_ms(phi: QbfInstance, t: int) -> ReductionOutput:
    """Skyscraper instance for "at least ``t`` clauses can be kept satisfied"."""
    gadget = build_skyscraper(phi, t)
    k, m = int(gadget.notes["k"]), int(gadget.notes["m"])
    spoiler, duplicator = qsat_ms_rounds(k, m, t)
    provenance = {
        "problem": "qsat",
        "game": "ms",
        "k": k,
        "m": m,
        "t": t,
        "clauses": [list(c) for c in phi.clauses],
    }
    return ReductionOutput(domset_position(gadget, spoiler), spoiler, duplicator, provenance, gadget)


# ---------------------------------------------------------------- solvers for the drivers


def exact_solver(limits: SearchLimits | None = None) -> Solver:
    """The exact MS solver, using the gadget's automorphisms."""

    def solve(compiled: ReductionOutput, rounds: int) -> Winner:
        pos = compiled.at_rounds(rounds)
        if isinstance(pos, EfPosition):
            pos = MsPosition((pos.left,), (pos.right,), rounds)
        return ms_winner(pos, limits, compiled.generators)

    return solve


def hybrid_solver(limits: SearchLimits | None = None) -> Solver:
    """Exact MS solving with an EF shortcut for Duplicator.

    On one structure per side, a Duplicator win in the EF game carries over to
    the MS game, and the EF search is far cheaper.  Otherwise the exact MS
    solver decides, so every non-UNKNOWN verdict is exact.
    """
    exact = exact_solver(limits)

    def solve(compiled: ReductionOutput, rounds: int) -> Winner:
        pos = compiled.at_rounds(rounds)
        left, right = (pos.left, pos.right) if isinstance(pos, EfPosition) else (pos.left[0], pos.right[0])
        gens = compiled.gadget.automorphism_generators if compiled.gadget is not None else None
        ef = ef_winner(EfPosition(left, right, rounds), limits, gens, gens)
        if ef is Winner.DUPLICATOR:
            return Winner.DUPLICATOR
        return exact(compiled, rounds)

    return solve


# ---------------------------------------------------------------- approximation drivers


def approx_domset(
    G: nx.Graph,
    solver: Solver,
    text_semantics: bool = False,
    on_query: Callable[[int, int, Winner], None] | None = None,
) -> int | Winner:
    """Loop k = 1..n and stop at the first Spoiler win.

    By default the game is played with ``k`` rounds and ``k - 1`` is reported,
    as the listing reads.  ``text_semantics`` plays ``k + 1`` rounds and
    reports ``k``.  If no query says Spoiler, the vertex count is returned,
    since the whole vertex set always dominates.  An UNKNOWN verdict stops the
    loop and is returned as is.
    """
    n = G.number_of_nodes()
    for k in range(1, n + 1):
        compiled = reduce_domset_to_ms(G, k)
        rounds = k + 1 if text_semantics else k
        verdict = solver(compiled, rounds)
        if on_query is not None:
            on_query(k, rounds, verdict)
        if verdict is Winner.UNKNOWN:
            return Winner.UNKNOWN
        if verdict is Winner.SPOILER:
            return k if text_semantics else k - 1
    return n


def approx_maxqsat(
    phi: QbfInstance,
    solver: Solver,
    on_query: Callable[[int, int, Winner], None] | None = None,
) -> int | Winner:
    """Loop t = m..1 on the skyscraper for t with ``2k + m - t + 1`` rounds; report the first t Spoiler wins.

    Returns 0 when no query says Spoiler and UNKNOWN as soon as one query is
    undecided.
    """
    m = phi.num_clauses
    for t in range(m, 0, -1):
        compiled = reduce_qsat_to_ms(phi, t)
        rounds = compiled.duplicator_rounds
        verdict = solver(compiled, rounds)
        if on_query is not None:
            on_query(t, rounds, verdict)
        if verdict is Winner.UNKNOWN:
            return Winner.UNKNOWN
        if verdict is Winner.SPOILER:
            return t
    return 0
