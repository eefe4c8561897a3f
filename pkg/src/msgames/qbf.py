"""Quantified CNF instances, QDIMACS input/output and the clause-count game."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .structures import ParseError

EXISTS = "e"
FORALL = "a"


@dataclass(frozen=True)
class QbfInstance:
    """``prefix`` lists (quantifier, variable) outermost first; literals are DIMACS ints."""

    num_vars: int
    prefix: tuple[tuple[str, int], ...]
    clauses: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple((str(q), int(v)) for q, v in self.prefix))
        object.__setattr__(self, "clauses", tuple(tuple(int(x) for x in c) for c in self.clauses))
        seen = set()
        for q, v in self.prefix:
            if q not in (EXISTS, FORALL):
                raise ValueError(f"unknown quantifier {q!r}")
            if not 1 <= v <= self.num_vars or v in seen:
                raise ValueError(f"bad or repeated prefix variable {v}")
            seen.add(v)
        for c in self.clauses:
            if len(c) > 3:
                raise ValueError(f"clause {c} has more than three literals")
            for lit in c:
                if lit == 0 or abs(lit) > self.num_vars:
                    raise ValueError(f"literal {lit} references an undeclared variable")

    @property
    def num_clauses(self) -> int:
        return len(self.clauses)

    def full_prefix(self) -> tuple[tuple[str, int], ...]:
        """Unquantified variables are existential and outermost (QDIMACS convention)."""
        bound = {v for _, v in self.prefix}
        free = tuple((EXISTS, v) for v in range(1, self.num_vars + 1) if v not in bound)
        return free + self.prefix

    def is_alternating(self) -> bool:
        pre = self.full_prefix()
        return (
            len(pre) == self.num_vars
            and self.num_vars % 2 == 0
            and all(v == i + 1 and q == (EXISTS if i % 2 == 0 else FORALL) for i, (q, v) in enumerate(pre))
        )

    def alternating(self) -> "QbfInstance":
        """Equivalent instance with prefix E x1 A x2 ... A x2k, padding with unused variables."""
        if self.is_alternating():
            return self
        mapping, slot = {}, 0
        for q, v in self.full_prefix():
            if q != (EXISTS if slot % 2 == 0 else FORALL):
                slot += 1  # an unused variable takes the mismatched slot
            slot += 1
            mapping[v] = slot
        total = slot + slot % 2
        clauses = tuple(tuple((1 if lit > 0 else -1) * mapping[abs(lit)] for lit in c) for c in self.clauses)
        prefix = tuple((EXISTS if i % 2 == 0 else FORALL, i + 1) for i in range(total))
        return QbfInstance(total, prefix, clauses)


def parse_qdimacs(text: str) -> QbfInstance:
    num_vars = num_clauses = None
    prefix: list[tuple[str, int]] = []
    clauses: list[tuple[int, ...]] = []
    pending: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        tok = line.split()
        try:
            if tok[0] == "p":
                if len(tok) != 4 or tok[1] != "cnf":
                    raise ParseError(f"line {lineno}: expected 'p cnf <vars> <clauses>'")
                num_vars, num_clauses = int(tok[2]), int(tok[3])
            elif tok[0] in (EXISTS, FORALL):
                if num_vars is None:
                    raise ParseError(f"line {lineno}: quantifier block before problem line")
                if clauses or pending:
                    raise ParseError(f"line {lineno}: quantifier block after clauses")
                vals = [int(x) for x in tok[1:]]
                if not vals or vals[-1] != 0:
                    raise ParseError(f"line {lineno}: quantifier block must end with 0")
                prefix.extend((tok[0], v) for v in vals[:-1])
            else:
                if num_vars is None:
                    raise ParseError(f"line {lineno}: clause before problem line")
                for x in (int(t) for t in tok):
                    if x == 0:
                        clauses.append(tuple(pending))
                        pending = []
                    else:
                        pending.append(x)
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(f"line {lineno}: {exc}") from None
    if num_vars is None:
        raise ParseError("missing problem line")
    if pending:
        raise ParseError("last clause is not terminated by 0")
    if len(clauses) != num_clauses:
        raise ParseError(f"problem line declares {num_clauses} clauses, found {len(clauses)}")
    try:
        return QbfInstance(num_vars, tuple(prefix), tuple(clauses))
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def write_qdimacs(phi: QbfInstance) -> str:
    lines = [f"p cnf {phi.num_vars} {len(phi.clauses)}"]
    block: list = []
    for q, v in phi.prefix:
        if block and block[0] != q:
            lines.append(f"{block[0]} " + " ".join(map(str, block[1:])) + " 0")
            block = []
        if not block:
            block = [q]
        block.append(v)
    if block:
        lines.append(f"{block[0]} " + " ".join(map(str, block[1:])) + " 0")
    lines.extend(" ".join(map(str, c)) + " 0" for c in phi.clauses)
    return "\n".join(lines) + "\n"


class ClauseGame:
    """The alternating assignment game scored by the number of satisfied clauses.

    The existential player maximizes and the universal one minimizes; the
    instance is first made alternating so variable i is set in round i.
    """

    def __init__(self, phi: QbfInstance):
        self.phi = phi.alternating()
        self.n = self.phi.num_vars

        @lru_cache(maxsize=None)
        def value(assignment: tuple[bool, ...]) -> int:
            i = len(assignment)
            if i == self.n:
                return self.satisfied(assignment)
            branches = (value(assignment + (True,)), value(assignment + (False,)))
            return max(branches) if i % 2 == 0 else min(branches)

        self.value = value

    def satisfied(self, assignment) -> int:
        return sum(
            any((lit > 0) == assignment[abs(lit) - 1] for lit in clause) for clause in self.phi.clauses
        )

    def game_value(self) -> int:
        return self.value(())

    def best_move(self, assignment: tuple[bool, ...]) -> bool:
        """Optimal value for the next variable; ties go to TRUE."""
        i = len(assignment)
        t, f = self.value(assignment + (True,)), self.value(assignment + (False,))
        if i % 2 == 0:
            return t >= f
        return t <= f
