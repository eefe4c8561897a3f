"""Integer codes for the atomic type an element forms with a pebble pool.

Two pebbled structures that already match stay matching after adding ``u`` on
one side and ``v`` on the other exactly when the codes of ``u`` and ``v``
(relative to the respective pools) are equal.  Codes are comparable across
structures of one schema as long as they come from the same ``ElementCoder``.
"""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from .structures import Schema, Structure, StructuralError

_PACK_LIMIT_BITS = 62


class ElementCoder:
    def __init__(self, schema: Schema):
        self.schema = schema
        self.fast = all(a <= 2 for _, a in schema.relations)
        self.unary_names = [n for n, a in schema.relations if a == 1]
        self.binary_names = [n for n, a in schema.relations if a == 2]
        self.unary_bits = len(self.unary_names) + len(self.binary_names)
        self.pair_bits = 2 * len(self.binary_names) + 1
        self.base = 1 << self.pair_bits
        self._intern: dict = {}
        self._tables: dict[int, tuple] = {}

    # -- tables

    def _table(self, S: Structure):
        t = self._tables.get(id(S))
        if t is None or t[0] is not S:
            if S.schema != self.schema:
                raise StructuralError("structure schema differs from coder schema")
            n = S.n
            unary = np.zeros(n, dtype=np.int64)
            for name in self.unary_names:
                unary = unary * 2 + S.unary(name).astype(np.int64)
            pair = np.zeros((n, n), dtype=np.int64)
            for name in self.binary_names:
                adj = S.adjacency(name)
                unary = unary * 2 + np.diag(adj).astype(np.int64)
                pair = pair * 4 + adj.astype(np.int64) * 2 + adj.T.astype(np.int64)
            pair = pair * 2 + np.eye(n, dtype=np.int64)
            t = (S, unary, pair)
            self._tables[id(S)] = t
        return t

    def _packed(self, pool_len: int) -> bool:
        return self.unary_bits + pool_len * self.pair_bits <= _PACK_LIMIT_BITS

    def _intern_array(self, raw: np.ndarray, tag) -> np.ndarray:
        uniq, inv = np.unique(raw, return_inverse=True)
        ids = np.empty(len(uniq), dtype=np.int64)
        table = self._intern
        for i, val in enumerate(uniq.tolist()):
            key = (tag, val)
            got = table.get(key)
            if got is None:
                got = len(table)
                table[key] = got
            ids[i] = got
        return ids[inv]

    # -- codes

    def codes(self, S: Structure, pool: Sequence[int]) -> np.ndarray:
        """Code of every element of ``S`` relative to ``pool`` (constants included by caller)."""
        if not self.fast:
            return self._generic_codes(S, pool)
        _, unary, _ = self._table(S)
        c = unary.copy()
        for i, x in enumerate(pool):
            c = self._step(S, c, i, x)
        return c

    def extend(self, S: Structure, codes: np.ndarray, pool: Sequence[int], u: int) -> np.ndarray:
        """Codes relative to ``pool + (u,)`` given ``codes`` relative to ``pool``."""
        if not self.fast:
            return self._generic_codes(S, tuple(pool) + (u,))
        return self._step(S, codes, len(pool), u)

    def _step(self, S, c, i, x):
        _, _, pair = self._table(S)
        col = pair[:, x]
        if self._packed(i + 1):
            return c * self.base + col
        if self._packed(i):
            # first step past the packing limit: re-key the packed values densely
            c = self._intern_array(c, ("pk", i))
        return self._intern_array(c * self.base + col, ("ix", i))

    def _generic_codes(self, S: Structure, pool: Sequence[int]) -> np.ndarray:
        pool = tuple(int(x) for x in pool)
        k = len(pool)
        out = np.empty(S.n, dtype=np.int64)
        for w in range(S.n):
            ext = pool + (w,)
            bits = [ext[i] == w for i in range(k)]
            for name, arity in self.schema.relations:
                rel = S.relations[name]
                for idx in itertools.product(range(k + 1), repeat=arity):
                    if k in idx:
                        bits.append(tuple(ext[i] for i in idx) in rel)
            key = ("g", k, tuple(bits))
            got = self._intern.get(key)
            if got is None:
                got = len(self._intern)
                self._intern[key] = got
            out[w] = got
        return out

    def child_type(self, parent_type: int, code: int) -> int:
        key = ("t", parent_type, int(code))
        got = self._intern.get(key)
        if got is None:
            got = len(self._intern)
            self._intern[key] = got
        return got

    def root_type(self, key: bytes) -> int:
        k = ("r", key)
        got = self._intern.get(k)
        if got is None:
            got = len(self._intern)
            self._intern[k] = got
        return got
