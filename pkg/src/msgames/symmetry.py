"""Automorphism checks and orbit computations used to prune game search."""

from __future__ import annotations

from collections import defaultdict
from typing import Iterable, Sequence

import numpy as np

from .structures import Structure


def is_automorphism(S: Structure, perm: Sequence[int]) -> bool:
    perm = [int(x) for x in perm]
    n = S.n
    if sorted(perm) != list(range(n)):
        return False
    for c, v in S.constants.items():
        if perm[v] != v:
            return False
    for name, _ in S.schema.relations:
        rel = S.relations[name]
        for t in rel:
            if tuple(perm[x] for x in t) not in rel:
                return False
    return True


def transposition(n: int, a: int, b: int) -> np.ndarray:
    p = np.arange(n)
    p[a], p[b] = b, a
    return p


def twin_generators(S: Structure) -> list[np.ndarray]:
    """Transpositions of structurally interchangeable elements (arity <= 2 only).

    Non-adjacent twins share open neighbourhood rows, mutually adjacent twins
    share closed ones; every candidate is validated before it is returned.
    """
    if any(a > 2 for _, a in S.schema.relations):
        return []
    n = S.n
    if n < 2:
        return []
    consts = set(S.constants.values())
    unary = [S.unary(name) for name, a in S.schema.relations if a == 1]
    binary = [S.adjacency(name) for name, a in S.schema.relations if a == 2]
    gens = []
    for closed in (False, True):
        buckets = defaultdict(list)
        for e in range(n):
            if e in consts:
                continue
            parts = [bytes(int(u[e]) for u in unary)]
            for adj in binary:
                out, inn = adj[e].copy(), adj[:, e].copy()
                parts.append(bytes([int(adj[e, e])]))
                out[e] = inn[e] = closed
                parts.append(out.tobytes())
                parts.append(inn.tobytes())
            buckets[b"/".join(parts)].append(e)
        for members in buckets.values():
            for a, b in zip(members, members[1:]):
                t = transposition(n, a, b)
                if is_automorphism(S, t):
                    gens.append(t)
    return gens


class OrbitCache:
    """Orbits of the group generated by the supplied generators that fix a set pointwise.

    The subgroup used is generated by those generators that individually fix
    every element of the set; it is contained in the true pointwise stabilizer,
    so elements in one computed orbit really are interchangeable.
    """

    def __init__(self, S: Structure, generators: Iterable[Sequence[int]] = (), add_twins: bool = True):
        n = S.n
        gens = [np.asarray(g, dtype=np.int64) for g in generators]
        if add_twins:
            gens.extend(twin_generators(S))
        uniq = {}
        for g in gens:
            if len(g) != n:
                raise ValueError("generator length differs from universe size")
            if np.array_equal(g, np.arange(n)):
                continue
            uniq[g.tobytes()] = g
        self.n = n
        self.generators = list(uniq.values())
        moved = [np.flatnonzero(g != np.arange(n)) for g in self.generators]
        # one row per generator: which elements it moves
        self._moves = np.zeros((len(moved), n), dtype=bool)
        for i, mv in enumerate(moved):
            self._moves[i, mv] = True
        self._edge_gen = np.concatenate([np.full(len(mv), i) for i, mv in enumerate(moved)] or [np.zeros(0, int)])
        self._edge_src = np.concatenate(moved or [np.zeros(0, int)]).astype(np.int64)
        self._edge_dst = np.concatenate([g[mv] for g, mv in zip(self.generators, moved)] or [np.zeros(0, int)])
        self._cache: dict = {}

    def representatives(self, fixed: Iterable[int]) -> np.ndarray:
        """``rep[e]`` = smallest element in the orbit of ``e``."""
        key = frozenset(int(x) for x in fixed)
        rep = self._cache.get(key)
        if rep is not None:
            return rep
        n = self.n
        usable = ~self._moves[:, sorted(key)].any(axis=1) if key else np.ones(len(self.generators), dtype=bool)
        keep = usable[self._edge_gen] if len(self._edge_gen) else np.zeros(0, dtype=bool)
        if keep.any():
            r, c = self._edge_src[keep], self._edge_dst[keep]
            # min-label propagation; orbits of few generators settle in a few sweeps
            rep = np.arange(n)
            while True:
                low = np.minimum(rep[r], rep[c])
                before = rep.copy()
                np.minimum.at(rep, r, low)
                np.minimum.at(rep, c, low)
                rep = rep[rep]
                if np.array_equal(rep, before):
                    break
        else:
            rep = np.arange(n)
        rep.setflags(write=False)
        if len(self._cache) > 20_000:
            self._cache.clear()
        self._cache[key] = rep
        return rep

    def orbit_reps(self, fixed: Iterable[int], candidates: np.ndarray | None = None) -> np.ndarray:
        rep = self.representatives(fixed)
        if candidates is None:
            return np.flatnonzero(rep == np.arange(self.n))
        candidates = np.asarray(candidates, dtype=np.int64)
        return np.unique(rep[candidates])
