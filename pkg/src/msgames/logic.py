"""Prenex first-order formulas: syntax, model checking, separation and size bounds.

Text syntax (whitespace-insensitive)::

    formula  := prefix* "." matrix | matrix
    prefix   := ("EXISTS" | "FORALL") NAME
    matrix   := conj ("|" conj)*
    conj     := unit ("&" unit)*
    unit     := "!" unit | "(" matrix ")" | "TRUE" | "FALSE"
              | NAME "(" NAME ("," NAME)* ")" | NAME "=" NAME | NAME "!=" NAME

Negations are pushed to the atoms while parsing, so every matrix is kept in
negation normal form.  Identifiers inside atoms are variables when bound by
the prefix or listed as free, and constant symbols otherwise.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .structures import PebbledStructure, Structure, StructuralError, color_sort_key

EXISTS = "EXISTS"
FORALL = "FORALL"


# ---------------------------------------------------------------- syntax tree


@dataclass(frozen=True)
class Atom:
    """``relation(args)``; the relation name ``"="`` denotes equality."""

    relation: str
    args: tuple[str, ...]

    def __str__(self):
        if self.relation == "=":
            return f"{self.args[0]}={self.args[1]}"
        return f"{self.relation}({','.join(self.args)})"


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool = True

    def __str__(self):
        if self.positive:
            return str(self.atom)
        if self.atom.relation == "=":
            return f"{self.atom.args[0]}!={self.atom.args[1]}"
        return f"!{self.atom}"


@dataclass(frozen=True)
class And:
    children: tuple = ()


@dataclass(frozen=True)
class Or:
    children: tuple = ()


Matrix = Union[Literal, And, Or]
TRUE = And(())
FALSE = Or(())


def conj(*parts: Matrix) -> Matrix:
    flat = []
    for p in parts:
        if isinstance(p, And):
            flat.extend(p.children)
        elif p == FALSE:
            return FALSE
        else:
            flat.append(p)
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def disj(*parts: Matrix) -> Matrix:
    flat = []
    for p in parts:
        if isinstance(p, Or):
            flat.extend(p.children)
        elif p == TRUE:
            return TRUE
        else:
            flat.append(p)
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def negate(m: Matrix) -> Matrix:
    if isinstance(m, Literal):
        return Literal(m.atom, not m.positive)
    if isinstance(m, And):
        return disj(*(negate(c) for c in m.children))
    return conj(*(negate(c) for c in m.children))


def matrix_atoms(m: Matrix) -> Iterable[Atom]:
    if isinstance(m, Literal):
        yield m.atom
    else:
        for c in m.children:
            yield from matrix_atoms(c)


def matrix_size(m: Matrix) -> int:
    if isinstance(m, Literal):
        return 1
    return 1 + sum(matrix_size(c) for c in m.children)


def matrix_to_text(m: Matrix, top: bool = True) -> str:
    if isinstance(m, Literal):
        return str(m)
    if m == TRUE:
        return "TRUE"
    if m == FALSE:
        return "FALSE"
    if isinstance(m, And):
        body = " & ".join(matrix_to_text(c, top=False) for c in m.children)
    else:
        body = " | ".join(matrix_to_text(c, top=False) for c in m.children)
    return body if top else f"({body})"


@dataclass(frozen=True)
class Formula:
    prefix: tuple[tuple[str, str], ...]
    matrix: Matrix
    free_vars: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple((str(q), str(v)) for q, v in self.prefix))
        object.__setattr__(self, "free_vars", tuple(self.free_vars))
        bound = [v for _, v in self.prefix]
        for q, _ in self.prefix:
            if q not in (EXISTS, FORALL):
                raise StructuralError(f"unknown quantifier {q!r}")
        if len(set(bound)) != len(bound):
            raise StructuralError(f"prefix variables repeat: {bound}")
        if set(bound) & set(self.free_vars):
            raise StructuralError("a variable is both bound and free")

    @property
    def quantifier_count(self) -> int:
        return len(self.prefix)

    @property
    def quantifier_rank(self) -> int:
        # prenex: every quantifier is nested inside the previous one
        return len(self.prefix)

    @property
    def variables(self) -> tuple[str, ...]:
        return self.free_vars + tuple(v for _, v in self.prefix)

    def check(self, schema) -> None:
        """Raise unless every symbol is known and every identifier resolves."""
        names = set(self.variables)
        for atom in matrix_atoms(self.matrix):
            if atom.relation != "=":
                if not schema.has_relation(atom.relation):
                    raise StructuralError(f"unknown relation {atom.relation!r}")
                if schema.arity(atom.relation) != len(atom.args):
                    raise StructuralError(f"{atom.relation!r} applied to {len(atom.args)} arguments")
            for a in atom.args:
                if a not in names and a not in schema.constants:
                    raise StructuralError(f"unbound identifier {a!r}")

    def to_text(self) -> str:
        head = " ".join(f"{q} {v}" for q, v in self.prefix)
        body = matrix_to_text(self.matrix)
        return f"{head} . {body}" if head else body

    def __str__(self):
        return self.to_text()


# ---------------------------------------------------------------- parser

_TOKEN = re.compile(r"\s*(?:(!=)|([()&|!.,=])|([A-Za-z_][A-Za-z0-9_']*))")


def _tokenize(text: str) -> list[str]:
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise StructuralError(f"unexpected character at offset {pos}: {text[pos:pos + 10]!r}")
        out.append(m.group(1) or m.group(2) or m.group(3))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, tokens):
        self.toks = tokens
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, expect=None):
        tok = self.peek()
        if tok is None or (expect is not None and tok != expect):
            raise StructuralError(f"expected {expect or 'a token'} at token {self.i}, found {tok!r}")
        self.i += 1
        return tok

    def matrix(self):
        parts = [self.conj()]
        while self.peek() == "|":
            self.take()
            parts.append(self.conj())
        return disj(*parts)

    def conj(self):
        parts = [self.unit()]
        while self.peek() == "&":
            self.take()
            parts.append(self.unit())
        return conj(*parts)

    def unit(self):
        tok = self.peek()
        if tok == "!":
            self.take()
            return negate(self.unit())
        if tok == "(":
            self.take()
            inner = self.matrix()
            self.take(")")
            return inner
        if tok == "TRUE":
            self.take()
            return TRUE
        if tok == "FALSE":
            self.take()
            return FALSE
        name = self.take()
        if not re.match(r"[A-Za-z_]", name):
            raise StructuralError(f"expected an atom at token {self.i - 1}, found {name!r}")
        nxt = self.peek()
        if nxt == "(":
            self.take()
            args = [self.take()]
            while self.peek() == ",":
                self.take()
                args.append(self.take())
            self.take(")")
            return Literal(Atom(name, tuple(args)))
        if nxt in ("=", "!="):
            self.take()
            other = self.take()
            return Literal(Atom("=", (name, other)), nxt == "=")
        raise StructuralError(f"dangling identifier {name!r}")


def parse_formula(text: str, free_vars: Sequence[str] | None = None, constants: Iterable[str] = ()) -> Formula:
    """Parse the text syntax.  Without ``free_vars``, unbound identifiers that are
    not listed ``constants`` become free variables in palette order."""
    toks = _tokenize(text)
    p = _Parser(toks)
    prefix = []
    while p.peek() in (EXISTS, FORALL):
        q = p.take()
        prefix.append((q, p.take()))
    if prefix:
        p.take(".")
    matrix = p.matrix()
    if p.peek() is not None:
        raise StructuralError(f"trailing input at token {p.i}: {p.peek()!r}")
    if free_vars is None:
        bound = {v for _, v in prefix}
        consts = set(constants)
        seen = {a for atom in matrix_atoms(matrix) for a in atom.args}
        free_vars = sorted(seen - bound - consts, key=color_sort_key)
    return Formula(tuple(prefix), matrix, tuple(free_vars))


# ---------------------------------------------------------------- evaluation


def _relation_tensor(S: Structure, name: str) -> np.ndarray:
    arity = S.schema.arity(name)
    if arity == 1:
        return S.unary(name)
    if arity == 2:
        return S.adjacency(name)
    key = ("tensor", name)
    t = S._cache.get(key)
    if t is None:
        t = np.zeros((S.n,) * arity, dtype=bool)
        for tup in S.relations[name]:
            t[tup] = True
        S._cache[key] = t
    return t


def _compile(m: Matrix, S: Structure, inner: Sequence[str]):
    """Turn the matrix into ``f(env) -> bool array`` over the ``inner`` variables' axes."""
    n = S.n
    k = len(inner)
    shape = (n,) * k
    axis_of = {v: i for i, v in enumerate(inner)}
    grids = []
    for i in range(k):
        s = [1] * k
        s[i] = n
        grids.append(np.arange(n).reshape(s))

    def term(a, env):
        if a in axis_of:
            return grids[axis_of[a]]
        if a in env:
            return env[a]
        return S.constants[a]

    def build(node):
        if isinstance(node, Literal):
            atom, pos = node.atom, node.positive
            if atom.relation == "=":
                x, y = atom.args

                def f(env):
                    r = term(x, env) == term(y, env)
                    return np.broadcast_to(r if pos else ~np.asarray(r), shape)

                return f
            tensor = _relation_tensor(S, atom.relation)
            args = atom.args

            def f(env):
                r = tensor[tuple(term(a, env) for a in args)]
                return np.broadcast_to(r if pos else ~np.asarray(r), shape)

            return f
        kids = [build(c) for c in node.children]
        if isinstance(node, And):
            if not kids:
                return lambda env: np.ones(shape, dtype=bool)

            def f(env):
                out = kids[0](env)
                for g in kids[1:]:
                    out = out & g(env)
                return out

            return f
        if not kids:
            return lambda env: np.zeros(shape, dtype=bool)

        def f(env):
            out = kids[0](env)
            for g in kids[1:]:
                out = out | g(env)
            return out

        return f

    return build(m)


def _as_dnf(m: Matrix) -> list[tuple[Literal, ...]] | None:
    """The matrix as a list of literal conjunctions, or None if it is not in that shape."""

    def term(node):
        if isinstance(node, Literal):
            return (node,)
        if isinstance(node, And) and all(isinstance(c, Literal) for c in node.children):
            return tuple(node.children)
        return None

    if isinstance(m, Or):
        out = [term(c) for c in m.children]
        return None if any(t is None for t in out) else out
    single = term(m)
    return None if single is None else [single]


def _evaluate_dnf(S: Structure, phi: Formula, env: dict[str, int], dnf: list[tuple[Literal, ...]], orbits=None) -> bool:
    """Quantifier recursion that tracks which conjunctions are still consistent.

    A literal is checked as soon as its last variable is bound, for every
    candidate element at once.  A branch where no conjunction survives is
    false, so universal levels stop early and existential levels skip it.
    With ``orbits``, only one candidate per orbit of the automorphisms fixing
    the bound elements is expanded.
    """
    prefix = phi.prefix
    stage_of = {v: i + 1 for i, (_, v) in enumerate(prefix)}
    values = {c: S.constants[c] for c in S.schema.constants}
    staged = []
    for lits in dnf:
        by_stage: dict[int, list[Literal]] = {}
        for lit in lits:
            stage = max((stage_of.get(a, 0) for a in lit.atom.args), default=0)
            by_stage.setdefault(stage, []).append(lit)
        staged.append(by_stage)
    n = S.n
    universe = np.arange(n)

    def value(a, v):
        if a == v:
            return universe
        return values[a] if a in values else env[a]

    def atom_vector(atom: Atom, v) -> np.ndarray:
        args = [value(a, v) for a in atom.args]
        name = atom.relation
        if name == "=":
            got = np.asarray(args[0] == args[1])
        elif len(args) == 1:
            got = S.unary(name)[args[0]]
        elif len(args) == 2:
            got = S.adjacency(name)[args[0], args[1]]
        else:
            cols = np.broadcast_arrays(*[np.asarray(x) for x in args])
            rel = S.relations[name]
            got = np.array([tuple(int(c[i]) for c in cols) in rel for i in range(cols[0].size)]).reshape(cols[0].shape)
        return np.broadcast_to(got, (n,)) if v is not None else got

    def surviving(alive: list[int], stage: int, v) -> tuple[list[list[int]], np.ndarray]:
        """Alive conjunctions per class of candidates that agree on every new atom."""
        atoms: dict[Atom, int] = {}
        for d in alive:
            for lit in staged[d].get(stage, ()):
                atoms.setdefault(lit.atom, len(atoms))
        if not atoms:
            return [alive], np.zeros(n, dtype=np.int64)
        table = np.stack([atom_vector(a, v) for a in atoms])
        signatures, inverse = np.unique(table.T, axis=0, return_inverse=True)
        classes = []
        for sig in signatures:
            classes.append([
                d for d in alive
                if all(sig[atoms[lit.atom]] == lit.positive for lit in staged[d].get(stage, ()))
            ])
        return classes, inverse.reshape(-1)

    def rec(i: int, alive: list[int]) -> bool:
        if not alive:
            return False
        if i == len(prefix):
            return True
        q, v = prefix[i]
        classes, inverse = surviving(alive, i + 1, v)
        want = q == EXISTS
        nonempty = np.array([bool(c) for c in classes])
        live = nonempty[inverse]
        if i == len(prefix) - 1:
            return bool(live.any()) if want else bool(live.all())
        if not want and not live.all():
            return False
        candidates = np.flatnonzero(live)
        if orbits is not None:
            fixed = list(values.values()) + list(env.values())
            candidates = orbits.orbit_reps(fixed, candidates)
        for e in candidates:
            env[v] = int(e)
            got = rec(i + 1, classes[inverse[e]])
            if got == want:
                del env[v]
                return want
        env.pop(v, None)
        return not want

    alive0 = [
        d for d in range(len(dnf))
        if all(bool(atom_vector(lit.atom, None)) == lit.positive for lit in staged[d].get(0, ()))
    ]
    return rec(0, alive0)


def evaluate(
    S: Structure,
    phi: Formula,
    assignment: Mapping[str, int] | None = None,
    prune: bool = True,
    orbits=None,
) -> bool:
    """Tarskian truth of ``phi`` in ``S``.

    Matrices given as disjunctions of literal conjunctions are evaluated with
    early pruning; other matrices run the two innermost quantifiers vectorized.
    """
    assignment = dict(assignment or {})
    if set(assignment) != set(phi.free_vars):
        raise StructuralError(
            f"assignment covers {sorted(assignment)} but free variables are {list(phi.free_vars)}"
        )
    phi.check(S.schema)
    for v, e in assignment.items():
        if not 0 <= int(e) < S.n:
            raise StructuralError(f"{v}={e} outside universe")
    env = {v: int(e) for v, e in assignment.items()}
    dnf = _as_dnf(phi.matrix) if prune else None
    if dnf is not None:
        return _evaluate_dnf(S, phi, env, dnf, orbits)
    prefix = phi.prefix
    split = max(0, len(prefix) - 2)
    outer, inner = prefix[:split], prefix[split:]
    f = _compile(phi.matrix, S, [v for _, v in inner])

    def leaf():
        arr = f(env)
        for axis in range(len(inner) - 1, -1, -1):
            arr = arr.any(axis=axis) if inner[axis][0] == EXISTS else arr.all(axis=axis)
        return bool(arr)

    def rec(i):
        if i == len(outer):
            return leaf()
        q, v = outer[i]
        want = q == EXISTS
        for e in range(S.n):
            env[v] = e
            if rec(i + 1) == want:
                del env[v]
                return want
        env.pop(v, None)
        return not want

    return rec(0)


def _pebble_colors(members: Sequence[PebbledStructure]) -> set[str] | None:
    colors = None
    for P in members:
        cs = set(P.colors)
        if colors is None:
            colors = cs
        elif cs != colors:
            raise StructuralError("pebbled structures carry different color sets")
    return colors


def separates(
    phi: Formula,
    left: Sequence[PebbledStructure],
    right: Sequence[PebbledStructure],
    generators: Mapping[Structure, Iterable[Sequence[int]]] | None = None,
    use_twins: bool = True,
) -> bool:
    """True iff ``phi`` holds on every left member and fails on every right member.

    Interchangeable elements (twins, and orbits of any supplied automorphism
    generators) are expanded once; ``use_twins=False`` without generators
    evaluates every branch.
    """
    from .symmetry import OrbitCache

    colors = _pebble_colors(list(left) + list(right))
    if colors is not None and colors != set(phi.free_vars):
        raise StructuralError(f"free variables {list(phi.free_vars)} differ from pebble colors {sorted(colors)}")
    caches: dict[Structure, OrbitCache | None] = {}

    def orbits_for(S: Structure):
        if S not in caches:
            gens = list((generators or {}).get(S, ()))
            caches[S] = OrbitCache(S, gens, add_twins=use_twins) if gens or use_twins else None
        return caches[S]

    for P in left:
        if not evaluate(P.structure, phi, dict(P.pebbles), orbits=orbits_for(P.structure)):
            return False
    for Q in right:
        if evaluate(Q.structure, phi, dict(Q.pebbles), orbits=orbits_for(Q.structure)):
            return False
    return True


# ---------------------------------------------------------------- types and bounds


@dataclass(frozen=True)
class TypeConjunction:
    """One polarity for every atom over a term pool.

    The pool holds constant symbols and variable names; equality atoms cover
    each unordered pair of distinct pool positions once.
    """

    terms: tuple[str, ...]
    literals: tuple[tuple[Atom, bool], ...] = field(compare=True)

    @staticmethod
    def atoms_over(schema, terms: Sequence[str]) -> list[Atom]:
        terms = tuple(terms)
        atoms = [Atom("=", (terms[i], terms[j])) for i in range(len(terms)) for j in range(i + 1, len(terms))]
        for name, arity in schema.relations:
            for idx in itertools.product(range(len(terms)), repeat=arity):
                atoms.append(Atom(name, tuple(terms[i] for i in idx)))
        return atoms

    @classmethod
    def realized(cls, S: Structure, terms: Sequence[str], elements: Sequence[int]) -> "TypeConjunction":
        terms, elements = tuple(terms), tuple(int(e) for e in elements)
        if len(terms) != len(elements):
            raise StructuralError("terms and elements differ in length")
        value = dict(zip(terms, elements))
        lits = []
        for atom in cls.atoms_over(S.schema, terms):
            tup = tuple(value[a] for a in atom.args)
            if atom.relation == "=":
                lits.append((atom, tup[0] == tup[1]))
            else:
                lits.append((atom, tup in S.relations[atom.relation]))
        return cls(terms, tuple(lits))

    def to_matrix(self) -> Matrix:
        return conj(*(Literal(a, pol) for a, pol in self.literals))


def _check_bound_args(t, s, r, m):
    for name, val in (("t", t), ("s", s), ("m", m)):
        if val < 0:
            raise ValueError(f"{name} must be nonnegative, got {val}")
    if r < 2:
        raise ValueError(f"maximum arity r must be at least 2, got {r}")


def atom_bound(t: int, s: int, r: int, m: int) -> int:
    """Upper bound on the number of atomic formulas over m variables and s constants."""
    _check_bound_args(t, s, r, m)
    inner = (t + 1) * (m + s) ** r
    return inner * 2**inner


def count_bound(t: int, s: int, r: int, m: int) -> int:
    """Upper bound on pairwise inequivalent prenex sentences with m quantifiers."""
    _check_bound_args(t, s, r, m)
    inner = (t + 1) * (m + s) ** r
    return 2 ** (m + 2**inner)
