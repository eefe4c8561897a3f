"""Bounded search for separating prenex formulas.

For a fixed quantifier prefix, whether some matrix separates two sets of
pebbled structures is a propositional question: the matrix can be taken to be
a disjunction of full atomic types, one Boolean unknown per type realized at
the leaves of the evaluation trees.  Each tree node is an AND or OR of its
children, so the question becomes a small SAT instance that we hand to a
CDCL solver.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

from pysat.formula import IDPool
from pysat.solvers import Solver

from .logic import EXISTS, FORALL, Formula, TypeConjunction, disj, separates
from .profiles import ElementCoder
from .search import Budget, BudgetExceeded, SearchLimits, SearchStats, Winner
from .structures import PebbledStructure, Schema, StructuralError, atomic_type_key, color_sort_key, fresh_color


def prefixes(length: int) -> Iterator[tuple[str, ...]]:
    """Quantifier strings of one length: fewer universals first, then lexicographic."""
    for universals in range(length + 1):
        for spots in itertools.combinations(range(length), universals):
            yield tuple(FORALL if i in spots else EXISTS for i in range(length))


def _shared_colors(members: Sequence[PebbledStructure]) -> tuple[str, ...]:
    colors = None
    for P in members:
        cs = tuple(sorted(P.colors, key=color_sort_key))
        if colors is None:
            colors = cs
        elif cs != colors:
            raise StructuralError(f"members pebbled with different colors: {colors} vs {cs}")
    return colors or ()


def bound_names(colors: Sequence[str], count: int) -> tuple[str, ...]:
    used = list(colors)
    out = []
    for _ in range(count):
        c = fresh_color(used)
        used.append(c)
        out.append(c)
    return tuple(out)


@dataclass
class _Leaf:
    type_id: int
    structure: object
    pool: tuple[int, ...]


class _Encoder:
    """Tseitin encoding of the evaluation trees for one prefix."""

    def __init__(self, coder: ElementCoder, quantifiers: Sequence[str], budget: Budget):
        self.coder = coder
        self.quantifiers = tuple(quantifiers)
        self.budget = budget
        self.ids = IDPool()
        self.clauses: list[list[int]] = []
        self.nodes: dict = {}
        self.leaves: dict[int, _Leaf] = {}

    def type_var(self, type_id: int) -> int:
        return self.ids.id(("type", type_id))

    def node(self, P: PebbledStructure, depth: int, pool: tuple[int, ...], type_id: int, codes) -> int:
        key = (P.structure, pool)
        got = self.nodes.get(key)
        if got is not None:
            return got
        self.budget.tick()
        S = P.structure
        if depth == len(self.quantifiers):
            lit = self.type_var(type_id)
            self.leaves.setdefault(type_id, _Leaf(type_id, S, pool))
            self.nodes[key] = lit
            return lit
        kids = []
        for u in range(S.n):
            child_type = self.coder.child_type(type_id, int(codes[u]))
            child_pool = pool + (u,)
            child_codes = self.coder.extend(S, codes, pool, u) if depth + 1 < len(self.quantifiers) else None
            kids.append(self.node(P, depth + 1, child_pool, child_type, child_codes))
        kids = sorted(set(kids))
        out = self.ids.id(("node", key))
        if self.quantifiers[depth] == EXISTS:
            # out <-> OR(kids)
            self.clauses.append([-out] + kids)
            self.clauses.extend([[out, -k] for k in kids])
        else:
            # out <-> AND(kids)
            self.clauses.append([out] + [-k for k in kids])
            self.clauses.extend([[-out, k] for k in kids])
        self.nodes[key] = out
        return out


def _root(coder: ElementCoder, P: PebbledStructure):
    pool = P.pool()
    return pool, coder.root_type(atomic_type_key(P)), coder.codes(P.structure, pool)


def _solve_prefix(coder, quantifiers, left, right, budget, solver_name):
    enc = _Encoder(coder, quantifiers, budget)
    roots = []
    for members, truth in ((left, True), (right, False)):
        for P in members:
            pool, t, codes = _root(coder, P)
            lit = enc.node(P, 0, pool, t, codes if quantifiers else None)
            roots.append(lit if truth else -lit)
    with Solver(name=solver_name, bootstrap_with=enc.clauses + [[r] for r in roots]) as sat:
        if not sat.solve():
            return None
        model = set(x for x in sat.get_model() if x > 0)
    chosen = [leaf for t, leaf in sorted(enc.leaves.items()) if enc.type_var(t) in model]
    return chosen


def synth_separating(
    left: Sequence[PebbledStructure],
    right: Sequence[PebbledStructure],
    m: int,
    limits: SearchLimits | None = None,
    stats: SearchStats | None = None,
    solver_name: str = "minisat22",
):
    """First separating formula with at most ``m`` quantifiers in enumeration order.

    Returns a :class:`Formula`, ``None`` when no prefix of length at most
    ``m`` admits a separating matrix, or ``Winner.UNKNOWN`` when the budget
    runs out first.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    left, right = tuple(left), tuple(right)
    colors = _shared_colors(left + right)
    if not left and not right:
        return Formula((), disj(), ())
    schema: Schema = (left + right)[0].structure.schema
    for P in left + right:
        if P.structure.schema != schema:
            raise StructuralError("members use different schemas")
    coder = ElementCoder(schema)
    budget = Budget(limits, stats)
    names = bound_names(colors, m)
    try:
        for length in range(m + 1):
            for quantifiers in prefixes(length):
                chosen = _solve_prefix(coder, quantifiers, left, right, budget, solver_name)
                if chosen is None:
                    continue
                bound = names[:length]
                terms = tuple(schema.constants) + colors + bound
                matrix = disj(
                    *(TypeConjunction.realized(leaf.structure, terms, leaf.pool).to_matrix() for leaf in chosen)
                )
                phi = Formula(tuple(zip(quantifiers, bound)), matrix, colors)
                if not separates(phi, left, right):
                    raise AssertionError(f"synthesized formula fails to separate: {phi}")
                return phi
    except BudgetExceeded:
        return Winner.UNKNOWN
    return None


def sentence_space_size(schema: Schema, m: int) -> int:
    """Syntactically distinct sentences in the full search space with exactly ``m`` quantifiers.

    Each sentence is a prefix together with a set of full types over the ``m``
    bound variables and the constants.
    """
    terms = tuple(schema.constants) + tuple(f"v{i}" for i in range(m))
    atoms = len(TypeConjunction.atoms_over(schema, terms))
    return 2**m * 2 ** (2**atoms)
