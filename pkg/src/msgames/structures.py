"""Finite relational structures, pebbled structures and matching pairs."""

from __future__ import annotations

import hashlib
import itertools
import json
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np


class StructuralError(ValueError):
    """Inputs violate a structural precondition (schema mismatch, bad element, ...)."""


class ParseError(ValueError):
    """A structure file could not be read."""


_COLOR_RE = re.compile(r"^x(\d+)$")


def color_sort_key(color: str):
    # natural order on the palette: x2 before x10
    m = _COLOR_RE.match(color)
    if m:
        return (0, int(m.group(1)), color)
    return (1, 0, color)


def palette_color(index: int) -> str:
    return f"x{index}"


def fresh_color(used: Iterable[str]) -> str:
    used = set(used)
    i = 1
    while palette_color(i) in used:
        i += 1
    return palette_color(i)


@dataclass(frozen=True)
class Schema:
    relations: tuple[tuple[str, int], ...] = ()
    constants: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "relations", tuple((str(n), int(a)) for n, a in self.relations))
        object.__setattr__(self, "constants", tuple(str(c) for c in self.constants))
        names = [n for n, _ in self.relations] + list(self.constants)
        if len(set(names)) != len(names):
            raise StructuralError(f"duplicate symbol names in schema: {names}")
        for name, arity in self.relations:
            if arity < 1:
                raise StructuralError(f"relation {name!r} has non-positive arity {arity}")

    @property
    def max_arity(self) -> int:
        return max((a for _, a in self.relations), default=0)

    def arity(self, name: str) -> int:
        for n, a in self.relations:
            if n == name:
                return a
        raise StructuralError(f"unknown relation {name!r}")

    def has_relation(self, name: str) -> bool:
        return any(n == name for n, _ in self.relations)

    def to_json(self) -> dict:
        return {
            "relations": [{"name": n, "arity": a} for n, a in self.relations],
            "constants": list(self.constants),
        }


DIGRAPH = Schema(relations=(("E", 2),))


class Structure:
    """A finite structure over ``schema`` with universe ``range(universe_size)``.

    Immutable by convention; all derived tables are cached on first use.
    """

    __slots__ = ("schema", "universe_size", "relations", "constants", "labels", "_cache")

    def __init__(
        self,
        schema: Schema,
        universe_size: int,
        relations: Mapping[str, Iterable[Sequence[int]]] | None = None,
        constants: Mapping[str, int] | None = None,
        labels: Mapping[int, str] | None = None,
    ):
        if universe_size < 0:
            raise StructuralError("universe size must be nonnegative")
        relations = dict(relations or {})
        constants = dict(constants or {})
        rel_names = [n for n, _ in schema.relations]
        if set(relations) - set(rel_names):
            raise StructuralError(f"relations not in schema: {sorted(set(relations) - set(rel_names))}")
        frozen = {}
        for name, arity in schema.relations:
            tuples = set()
            for t in relations.get(name, ()):
                t = tuple(int(x) for x in t)
                if len(t) != arity:
                    raise StructuralError(f"tuple {t} has wrong arity for {name!r}/{arity}")
                for x in t:
                    if not 0 <= x < universe_size:
                        raise StructuralError(f"element {x} of {name!r} outside universe of size {universe_size}")
                tuples.add(t)
            frozen[name] = frozenset(tuples)
        if set(constants) != set(schema.constants):
            raise StructuralError(
                f"constant interpretation keys {sorted(constants)} do not match schema {list(schema.constants)}"
            )
        for c, v in constants.items():
            if not 0 <= int(v) < universe_size:
                raise StructuralError(f"constant {c!r}={v} outside universe")
        labels = {int(k): str(v) for k, v in (labels or {}).items()}
        for k in labels:
            if not 0 <= k < universe_size:
                raise StructuralError(f"label for element {k} outside universe")
        self.schema = schema
        self.universe_size = int(universe_size)
        self.relations = frozen
        self.constants = {c: int(constants[c]) for c in schema.constants}
        self.labels = labels
        self._cache = {}

    # equality is structural so that a save/load round trip compares equal
    def _canon(self):
        c = self._cache.get("canon")
        if c is None:
            c = (
                self.schema,
                self.universe_size,
                tuple((n, tuple(sorted(self.relations[n]))) for n, _ in self.schema.relations),
                tuple(self.constants[c] for c in self.schema.constants),
                tuple(sorted(self.labels.items())),
            )
            self._cache["canon"] = c
        return c

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Structure):
            return NotImplemented
        return self._canon() == other._canon()

    def __hash__(self):
        h = self._cache.get("hash")
        if h is None:
            h = hash(self._canon())
            self._cache["hash"] = h
        return h

    def __repr__(self):
        sizes = ", ".join(f"{n}:{len(self.relations[n])}" for n, _ in self.schema.relations)
        return f"Structure(n={self.universe_size}, {sizes})"

    @property
    def n(self) -> int:
        return self.universe_size

    def constant_pool(self) -> tuple[int, ...]:
        return tuple(self.constants[c] for c in self.schema.constants)

    def holds(self, name: str, tup: Sequence[int]) -> bool:
        return tuple(tup) in self.relations[name]

    def label(self, e: int) -> str:
        return self.labels.get(e, str(e))

    def element(self, label: str) -> int:
        index = self._cache.get("by_label")
        if index is None:
            index = {v: k for k, v in self.labels.items()}
            self._cache["by_label"] = index
        try:
            return index[label]
        except KeyError:
            raise StructuralError(f"no element labelled {label!r}") from None

    def adjacency(self, name: str) -> np.ndarray:
        """Dense boolean matrix of a binary relation (cached)."""
        key = ("adj", name)
        m = self._cache.get(key)
        if m is None:
            if self.schema.arity(name) != 2:
                raise StructuralError(f"{name!r} is not binary")
            m = np.zeros((self.n, self.n), dtype=bool)
            if self.relations[name]:
                idx = np.array(sorted(self.relations[name]), dtype=np.int64)
                m[idx[:, 0], idx[:, 1]] = True
            m.setflags(write=False)
            self._cache[key] = m
        return m

    def unary(self, name: str) -> np.ndarray:
        key = ("un", name)
        v = self._cache.get(key)
        if v is None:
            v = np.zeros(self.n, dtype=bool)
            for (x,) in self.relations[name]:
                v[x] = True
            v.setflags(write=False)
            self._cache[key] = v
        return v

    def out_neighbors(self, e: int, name: str = "E") -> list[int]:
        return [int(x) for x in np.flatnonzero(self.adjacency(name)[e])]

    def in_neighbors(self, e: int, name: str = "E") -> list[int]:
        return [int(x) for x in np.flatnonzero(self.adjacency(name)[:, e])]

    def digest(self) -> str:
        d = self._cache.get("digest")
        if d is None:
            d = hashlib.sha256(save_structure(self)).hexdigest()
            self._cache["digest"] = d
        return d


@dataclass(frozen=True)
class PebbledStructure:
    structure: Structure
    pebbles: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        peb = tuple((str(c), int(e)) for c, e in self.pebbles)
        object.__setattr__(self, "pebbles", peb)
        colors = [c for c, _ in peb]
        if len(set(colors)) != len(colors):
            raise StructuralError(f"repeated pebble color in {colors}")
        for c, e in peb:
            if not 0 <= e < self.structure.universe_size:
                raise StructuralError(f"pebble {c} on {e} outside universe of size {self.structure.universe_size}")

    @property
    def colors(self) -> tuple[str, ...]:
        return tuple(c for c, _ in self.pebbles)

    @property
    def elements(self) -> tuple[int, ...]:
        return tuple(e for _, e in self.pebbles)

    def extend(self, color: str, element: int) -> "PebbledStructure":
        if color in self.colors:
            raise StructuralError(f"color {color} already used")
        return PebbledStructure(self.structure, self.pebbles + ((color, element),))

    def normalized(self) -> "PebbledStructure":
        peb = tuple(sorted(self.pebbles, key=lambda ce: color_sort_key(ce[0])))
        return PebbledStructure(self.structure, peb)

    def pool(self) -> tuple[int, ...]:
        """Constants then pebbled elements (in normalized color order)."""
        peb = sorted(self.pebbles, key=lambda ce: color_sort_key(ce[0]))
        return self.structure.constant_pool() + tuple(e for _, e in peb)

    def describe(self) -> str:
        s = self.structure
        inner = ", ".join(f"{c}={s.label(e)}" for c, e in self.pebbles)
        return f"<{inner}>"


def _check_same_schema(P: PebbledStructure, Q: PebbledStructure):
    if P.structure.schema != Q.structure.schema:
        raise StructuralError("pebbled structures over different schemas")


def matching_pair(P: PebbledStructure, Q: PebbledStructure) -> bool:
    """Whether the positional map on pebbles and constants is a partial isomorphism."""
    _check_same_schema(P, Q)
    Pn, Qn = P.normalized(), Q.normalized()
    if Pn.colors != Qn.colors:
        return False
    a, b = Pn.pool(), Qn.pool()
    A, B = P.structure, Q.structure
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


def pool_type_bits(structure: Structure, pool: Sequence[int]) -> bytes:
    """Equality pattern plus membership bits of every atom over ``pool``."""
    pool = np.asarray(pool, dtype=np.int64)
    k = len(pool)
    parts = [(pool[:, None] == pool[None, :]).astype(np.uint8).tobytes()]
    for name, arity in structure.schema.relations:
        if k == 0:
            parts.append(b"")
            continue
        if arity == 2:
            parts.append(structure.adjacency(name)[np.ix_(pool, pool)].astype(np.uint8).tobytes())
        elif arity == 1:
            parts.append(structure.unary(name)[pool].astype(np.uint8).tobytes())
        else:
            rel = structure.relations[name]
            bits = bytes(
                1 if tuple(int(pool[i]) for i in idx) in rel else 0
                for idx in itertools.product(range(k), repeat=arity)
            )
            parts.append(bits)
    return b"|".join(parts)


def atomic_type_key(P: PebbledStructure) -> bytes:
    """Canonical bytes; equal keys iff the two pebbled structures match."""
    Pn = P.normalized()
    head = ",".join(Pn.colors).encode()
    schema = json.dumps(P.structure.schema.to_json(), sort_keys=True).encode()
    digest = hashlib.blake2b(schema, digest_size=8).digest()
    return digest + b"#" + head + b"#" + pool_type_bits(P.structure, Pn.pool())


# ---------------------------------------------------------------- file format


def _structure_json(S: Structure) -> dict:
    return {
        "schema": S.schema.to_json(),
        "universe_size": S.universe_size,
        "relations": {n: [list(t) for t in sorted(S.relations[n])] for n, _ in S.schema.relations},
        "constants": dict(S.constants),
        "labels": {str(k): v for k, v in sorted(S.labels.items())},
    }


def save_structure(S: Structure, pebbles: Sequence[tuple[str, int]] | None = None) -> bytes:
    obj = _structure_json(S)
    if pebbles:
        obj["pebbles"] = [[c, int(e)] for c, e in pebbles]
    return (json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def save_pebbled(P: PebbledStructure) -> bytes:
    return save_structure(P.structure, P.pebbles)


def _field(obj, key, kind, where):
    if key not in obj:
        raise ParseError(f"{where}: missing field {key!r}")
    val = obj[key]
    if not isinstance(val, kind):
        raise ParseError(f"{where}.{key}: expected {getattr(kind, '__name__', kind)}, got {type(val).__name__}")
    return val


def structure_from_json(obj, where: str = "structure") -> tuple[Structure, tuple[tuple[str, int], ...]]:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    sch = _field(obj, "schema", dict, where)
    rels = []
    for i, r in enumerate(_field(sch, "relations", list, f"{where}.schema")):
        w = f"{where}.schema.relations[{i}]"
        if not isinstance(r, dict):
            raise ParseError(f"{w}: expected an object")
        rels.append((_field(r, "name", str, w), _field(r, "arity", int, w)))
    consts = sch.get("constants", [])
    if not isinstance(consts, list) or not all(isinstance(c, str) for c in consts):
        raise ParseError(f"{where}.schema.constants: expected a list of names")
    try:
        schema = Schema(tuple(rels), tuple(consts))
        n = _field(obj, "universe_size", int, where)
        rdata = obj.get("relations", {})
        if not isinstance(rdata, dict):
            raise ParseError(f"{where}.relations: expected an object")
        for name, tuples in rdata.items():
            if not isinstance(tuples, list) or not all(
                isinstance(t, list) and all(isinstance(x, int) for x in t) for t in tuples
            ):
                raise ParseError(f"{where}.relations.{name}: expected a list of integer lists")
        cdata = obj.get("constants", {})
        if not isinstance(cdata, dict):
            raise ParseError(f"{where}.constants: expected an object")
        labels = obj.get("labels", {})
        if not isinstance(labels, dict):
            raise ParseError(f"{where}.labels: expected an object")
        S = Structure(schema, n, rdata, cdata, {int(k): v for k, v in labels.items()})
        pebbles = obj.get("pebbles", [])
        if not isinstance(pebbles, list):
            raise ParseError(f"{where}.pebbles: expected a list")
        peb = []
        for i, p in enumerate(pebbles):
            if not (isinstance(p, list) and len(p) == 2 and isinstance(p[0], str) and isinstance(p[1], int)):
                raise ParseError(f"{where}.pebbles[{i}]: expected [color, element]")
            peb.append((p[0], p[1]))
        PebbledStructure(S, tuple(peb))  # validates pebbles
    except StructuralError as exc:
        raise ParseError(f"{where}: {exc}") from None
    except ValueError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"{where}: {exc}") from None
    return S, tuple(peb)


def _loads(data: bytes | str):
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        return json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def load_structure(data: bytes | str) -> Structure:
    return structure_from_json(_loads(data))[0]


def load_pebbled(data: bytes | str) -> PebbledStructure:
    S, peb = structure_from_json(_loads(data))
    return PebbledStructure(S, peb)


def digraph(n: int, edges: Iterable[tuple[int, int]], labels: Mapping[int, str] | None = None) -> Structure:
    return Structure(DIGRAPH, n, {"E": edges}, labels=labels)
