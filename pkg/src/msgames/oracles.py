"""Brute-force reference implementations used to check the production solvers.

Nothing here imports the rest of the package: structures, positions and
formulas are read through their public attributes only, and verdicts are the
plain strings ``"SPOILER"``, ``"DUPLICATOR"`` and ``"UNKNOWN"``.
"""

from __future__ import annotations

import itertools
import time

SPOILER, DUPLICATOR, UNKNOWN = "SPOILER", "DUPLICATOR", "UNKNOWN"
DEFAULT_GRAPH_CAP = 16
DEFAULT_VARIABLE_CAP = 16


class OracleBudget(Exception):
    pass


# ---------------------------------------------------------------- dominating sets


def _graph(G):
    nodes = sorted(G.nodes(), key=repr)
    nbrs = {v: set(G.neighbors(v)) - {v} for v in nodes}
    return nodes, nbrs


def min_domset_bruteforce(G, cap: int = DEFAULT_GRAPH_CAP) -> int:
    """Smallest dominating set size, by subsets in increasing size."""
    nodes, nbrs = _graph(G)
    if len(nodes) > cap:
        raise ValueError(f"graph has {len(nodes)} vertices, above the cap of {cap}")
    everything = set(nodes)
    for size in range(len(nodes) + 1):
        for subset in itertools.combinations(nodes, size):
            covered = set(subset)
            for u in subset:
                covered |= nbrs[u]
            if covered == everything:
                return size
    raise AssertionError("unreachable: the full vertex set dominates")


def dominating_witness(G, k: int, cap: int = DEFAULT_GRAPH_CAP) -> list | None:
    """A smallest dominating set if it has at most ``k`` vertices, else None."""
    nodes, nbrs = _graph(G)
    if len(nodes) > cap:
        raise ValueError(f"graph has {len(nodes)} vertices, above the cap of {cap}")
    everything = set(nodes)
    for size in range(min(k, len(nodes)) + 1):
        for subset in itertools.combinations(nodes, size):
            covered = set(subset)
            for u in subset:
                covered |= nbrs[u]
            if covered == everything:
                return list(subset)
    return None


def has_domset(G, k: int, cap: int = DEFAULT_GRAPH_CAP) -> bool:
    """Whether some dominating set has at most ``k`` vertices."""
    return min_domset_bruteforce(G, cap) <= k


# ---------------------------------------------------------------- quantified CNF


def _quantifier_order(phi):
    bound = [v for _, v in phi.prefix]
    free = [("e", v) for v in range(1, phi.num_vars + 1) if v not in set(bound)]
    return free + [(q, v) for q, v in phi.prefix]


def maxqsat_value(phi, cap: int = DEFAULT_VARIABLE_CAP) -> int:
    """Game value of the satisfied-clause count: existential max, universal min."""
    order = _quantifier_order(phi)
    if len(order) > cap:
        raise ValueError(f"{len(order)} variables exceed the cap of {cap}")
    clauses = [tuple(c) for c in phi.clauses]

    def rec(i, assignment):
        if i == len(order):
            return sum(any((lit > 0) == assignment[abs(lit)] for lit in c) for c in clauses)
        q, v = order[i]
        vals = []
        for b in (False, True):
            assignment[v] = b
            vals.append(rec(i + 1, assignment))
        del assignment[v]
        return max(vals) if q == "e" else min(vals)

    return rec(0, {})


def qbf_true(phi, cap: int = DEFAULT_VARIABLE_CAP) -> bool:
    return maxqsat_value(phi, cap) == len(phi.clauses)


def qbf_truth_table(phi) -> bool:
    """Truth by folding a full truth table from the innermost quantifier out."""
    order = _quantifier_order(phi)
    n = len(order)
    table = []
    for bits in itertools.product((False, True), repeat=n):
        val = {v: b for (_, v), b in zip(order, bits)}
        table.append(all(any((lit > 0) == val[abs(lit)] for lit in c) for c in phi.clauses))
    for q, _ in reversed(order):
        pairs = zip(table[0::2], table[1::2])
        table = [(a or b) if q == "e" else (a and b) for a, b in pairs]
    return table[0]


# ---------------------------------------------------------------- games


class _Clock:
    def __init__(self, limits):
        self.max_nodes = getattr(limits, "max_nodes", None) if limits is not None else None
        max_seconds = getattr(limits, "max_seconds", None) if limits is not None else None
        self.deadline = time.monotonic() + max_seconds if max_seconds is not None else None
        self.nodes = 0

    def tick(self):
        self.nodes += 1
        if self.max_nodes is not None and self.nodes > self.max_nodes:
            raise OracleBudget()
        if self.deadline is not None and self.nodes % 512 == 0 and time.monotonic() > self.deadline:
            raise OracleBudget()


def _pool(structure, pebbles):
    consts = [structure.constants[c] for c in structure.schema.constants]
    ordered = sorted(pebbles, key=lambda ce: ce[0])
    return tuple(ordered), consts + [e for _, e in ordered]


def _matches(A, peb_a, B, peb_b) -> bool:
    """Partial-isomorphism test written directly from the definition."""
    pa, a = _pool(A, peb_a)
    pb, b = _pool(B, peb_b)
    if [c for c, _ in pa] != [c for c, _ in pb]:
        return False
    k = len(a)
    for i in range(k):
        for j in range(k):
            if (a[i] == a[j]) != (b[i] == b[j]):
                return False
    for name, arity in A.schema.relations:
        ra, rb = A.relations[name], B.relations[name]
        for idx in itertools.product(range(k), repeat=arity):
            if (tuple(a[i] for i in idx) in ra) != (tuple(b[i] for i in idx) in rb):
                return False
    return True


def _next_color(used) -> str:
    i = 1
    while f"x{i}" in used:
        i += 1
    return f"x{i}"


def naive_ef(pos, limits=None) -> str:
    """Memo-free EF recursion over every move, including pebbled elements."""
    clock = _Clock(limits)
    A, B = pos.left.structure, pos.right.structure

    def spoiler_wins(pa, pb, m):
        clock.tick()
        if not _matches(A, pa, B, pb):
            return True
        if m == 0:
            return False
        color = _next_color([c for c, _ in pa])
        for u in range(A.universe_size):
            if all(spoiler_wins(pa + ((color, u),), pb + ((color, w),), m - 1) for w in range(B.universe_size)):
                return True
        for v in range(B.universe_size):
            if all(spoiler_wins(pa + ((color, w),), pb + ((color, v),), m - 1) for w in range(A.universe_size)):
                return True
        return False

    try:
        won = spoiler_wins(tuple(pos.left.pebbles), tuple(pos.right.pebbles), pos.rounds_remaining)
    except OracleBudget:
        return UNKNOWN
    return SPOILER if won else DUPLICATOR


def _any_match(left, right) -> bool:
    return any(_matches(P[0], P[1], Q[0], Q[1]) for P in left for Q in right)


def naive_ms_subset(pos, limits=None) -> str:
    """MS reference where Duplicator picks any nonempty set of answers per structure.

    Intermediate rounds enumerate every Spoiler placement and every family of
    nonempty answer sets.  In the last round a matching pair can only be
    created, never destroyed, by extra answers, so Duplicator's largest
    choice is taken there and Spoiler's placement is found per structure.
    """
    clock = _Clock(limits)

    def dedupe(items):
        return tuple(sorted(set(items), key=lambda P: (id(P[0]), P[1])))

    def spoiler_wins(left, right, m):
        clock.tick()
        if not _any_match(left, right):
            return True
        if m == 0:
            return False
        used = {c for P in left + right for c, _ in P[1]}
        color = _next_color(used)
        for mover, other, flip in ((left, right, False), (right, left, True)):
            # matching is symmetric, so only the final assignment to sides depends on flip
            if m == 1:
                answers = [(Q[0], Q[1] + ((color, w),)) for Q in other for w in range(Q[0].universe_size)]

                def kills(P, u):
                    Pu = (P[0], P[1] + ((color, u),))
                    return not any(_matches(Pu[0], Pu[1], R[0], R[1]) for R in answers)

                if all(any(kills(P, u) for u in range(P[0].universe_size)) for P in mover):
                    return True
                continue
            for placement in itertools.product(*(range(P[0].universe_size) for P in mover)):
                moved = dedupe((P[0], P[1] + ((color, u),)) for P, u in zip(mover, placement))
                refuted = False
                per_structure = []
                for Q in other:
                    opts = []
                    n = Q[0].universe_size
                    for size in range(n, 0, -1):
                        opts.extend(itertools.combinations(range(n), size))
                    per_structure.append(opts)
                for choice in itertools.product(*per_structure):
                    answered = dedupe(
                        (Q[0], Q[1] + ((color, w),)) for Q, ws in zip(other, choice) for w in ws
                    )
                    nl, nr = (moved, answered) if not flip else (answered, moved)
                    if not spoiler_wins(nl, nr, m - 1):
                        refuted = True
                        break
                if not refuted:
                    return True
        return False

    left = dedupe((P.structure, tuple(P.pebbles)) for P in pos.left)
    right = dedupe((Q.structure, tuple(Q.pebbles)) for Q in pos.right)
    try:
        won = spoiler_wins(left, right, pos.rounds_remaining)
    except OracleBudget:
        return UNKNOWN
    return SPOILER if won else DUPLICATOR
