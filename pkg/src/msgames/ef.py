"""Exact solver for the m-round Ehrenfeucht-Fraisse game and the forcing predicate."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .profiles import ElementCoder
from .search import Budget, BudgetExceeded, SearchLimits, SearchStats, Winner
from .structures import PebbledStructure, Structure, StructuralError, matching_pair
from .symmetry import OrbitCache


@dataclass(frozen=True)
class EfPosition:
    left: PebbledStructure
    right: PebbledStructure
    rounds_remaining: int

    def __post_init__(self):
        if self.left.structure.schema != self.right.structure.schema:
            raise StructuralError("EF sides use different schemas")
        if set(self.left.colors) != set(self.right.colors):
            raise StructuralError("EF sides carry different pebble colors")
        if self.rounds_remaining < 0:
            raise StructuralError("rounds_remaining must be nonnegative")


class _Side:
    """Per-structure data: codes relative to a pool and orbit representatives."""

    def __init__(self, S: Structure, coder: ElementCoder, orbits: OrbitCache | None):
        self.S = S
        self.coder = coder
        self.orbits = orbits

    def reps(self, pool: Sequence[int], candidates: np.ndarray) -> np.ndarray:
        if self.orbits is None or len(candidates) <= 1:
            return candidates
        return self.orbits.orbit_reps(pool, candidates)


class EfSolver:
    """Memoized EF search on a fixed pair of structures.

    A state is the list of pebble pairs; Spoiler only ever moves on unpebbled,
    non-constant elements (any other move is answered by the partner and
    merely burns a round).  Optional automorphism generators let the solver
    consider one element per orbit of the pointwise stabilizer of the pool.
    """

    def __init__(
        self,
        left: Structure,
        right: Structure,
        limits: SearchLimits | None = None,
        left_generators: Iterable[Sequence[int]] | None = None,
        right_generators: Iterable[Sequence[int]] | None = None,
        use_twins: bool = True,
        stats: SearchStats | None = None,
    ):
        if left.schema != right.schema:
            raise StructuralError("EF sides use different schemas")
        self.coder = ElementCoder(left.schema)
        self.stats = stats or SearchStats()
        self.budget = Budget(limits, self.stats)
        lo = OrbitCache(left, left_generators or (), add_twins=use_twins)
        if right is left and right_generators is None:
            ro = lo
        else:
            ro = OrbitCache(right, right_generators or (), add_twins=use_twins)
        self.L = _Side(left, self.coder, lo if lo.generators else None)
        self.R = _Side(right, self.coder, ro if ro.generators else None)
        self.memo: dict = {}
        self.targets: tuple[tuple[int, int], ...] = ()

    # -- state helpers

    def initial(self, P: PebbledStructure, Q: PebbledStructure):
        pl, pr = P.pool(), Q.pool()
        return pl, pr, self.coder.codes(self.L.S, pl), self.coder.codes(self.R.S, pr)

    def _forced_now(self, pl, pr, cl, cr) -> bool:
        for u, v in self.targets:
            if np.count_nonzero(cr == cl[u]) - (cr[v] == cl[u]) == 0 and (
                np.count_nonzero(cl == cr[v]) - (cl[u] == cr[v]) == 0
            ):
                return True
        return False

    def _key(self, pl, pr, m):
        return (frozenset(zip(pl, pr)), m)

    # -- search

    def spoiler_wins(self, pl, pr, cl, cr, m) -> bool:
        """Whether Spoiler wins from a matching state with ``m`` rounds left."""
        self.budget.tick()
        if self.targets and self._forced_now(pl, pr, cl, cr):
            return True
        if m == 0:
            return False
        sl, sr = set(np.unique(cl).tolist()), set(np.unique(cr).tolist())
        if sl != sr:
            return True
        if m == 1 and not self.targets:
            return False
        key = self._key(pl, pr, m)
        got = self.memo.get(key)
        if got is not None:
            self.stats.memo_hits += 1
            return got
        result = self._search(pl, pr, cl, cr, m)
        if len(self.memo) > 2_000_000:
            self.memo.clear()
        self.memo[key] = result
        return result

    def _moves(self, mover: _Side, other: _Side, pm, po, cm, co):
        """Spoiler candidates on ``mover`` grouped by the code they create."""
        n = mover.S.n
        free = np.ones(n, dtype=bool)
        free[list(pm)] = False
        cand = np.flatnonzero(free)
        cand = mover.reps(pm, cand)
        groups: dict[int, list[int]] = {}
        for u in cand.tolist():
            groups.setdefault(int(cm[u]), []).append(u)
        out = []
        for code, us in groups.items():
            responses = np.flatnonzero(co == code)
            out.append((len(responses), code, us, responses))
        out.sort(key=lambda t: (t[0], t[1]))
        return out

    def _search(self, pl, pr, cl, cr, m) -> bool:
        # Spoiler on the left, then on the right; smallest response sets first
        for side in (0, 1):
            if side == 0:
                mover, other, pm, po, cm, co = self.L, self.R, pl, pr, cl, cr
            else:
                mover, other, pm, po, cm, co = self.R, self.L, pr, pl, cr, cl
            for _, code, us, responses in self._moves(mover, other, pm, po, cm, co):
                if len(responses) == 0:
                    return True
                ws = other.reps(po, responses)
                for u in us:
                    ncm = mover.coder.extend(mover.S, cm, pm, u)
                    if self._all_responses_lose(side, pm + (u,), po, ncm, co, ws, m):
                        return True
        return False

    def _all_responses_lose(self, side, npm, po, ncm, co, ws, m) -> bool:
        other = self.R if side == 0 else self.L
        for w in ws.tolist():
            nco = other.coder.extend(other.S, co, po, w)
            npo = po + (w,)
            if side == 0:
                won = self.spoiler_wins(npm, npo, ncm, nco, m - 1)
            else:
                won = self.spoiler_wins(npo, npm, nco, ncm, m - 1)
            if not won:
                return False
        return True


def _run(solver: EfSolver, pos: EfPosition) -> Winner:
    stats = solver.stats
    try:
        if not matching_pair(pos.left, pos.right):
            return Winner.SPOILER
        pl, pr, cl, cr = solver.initial(pos.left, pos.right)
        won = solver.spoiler_wins(pl, pr, cl, cr, pos.rounds_remaining)
        return Winner.SPOILER if won else Winner.DUPLICATOR
    except BudgetExceeded:
        return Winner.UNKNOWN
    finally:
        stats.finished = time.monotonic()


def ef_winner(
    pos: EfPosition,
    limits: SearchLimits | None = None,
    left_generators=None,
    right_generators=None,
    stats: SearchStats | None = None,
) -> Winner:
    """Winner of the EF game from ``pos``; UNKNOWN only if the budget runs out."""
    solver = EfSolver(
        pos.left.structure, pos.right.structure, limits, left_generators, right_generators, stats=stats
    )
    return _run(solver, pos)


def ef_forcing_winner(
    pos: EfPosition,
    targets: Sequence[tuple[int, int]],
    limits: SearchLimits | None = None,
    left_generators=None,
    right_generators=None,
    stats: SearchStats | None = None,
) -> Winner:
    """Spoiler wins iff within the rounds he either breaks the matching pair or
    reaches a state where some target pair is forced with no further rounds."""
    solver = EfSolver(
        pos.left.structure, pos.right.structure, limits, left_generators, right_generators, stats=stats
    )
    solver.targets = tuple((int(u), int(v)) for u, v in targets)
    return _run(solver, pos)


def ef_forced(
    pos: EfPosition,
    u: int,
    v: int,
    extra_rounds: int,
    limits: SearchLimits | None = None,
    left_generators=None,
    right_generators=None,
) -> bool:
    """Literal forcing test: every answer other than ``v`` to a left move on ``u``
    (and other than ``u`` to a right move on ``v``) loses within ``extra_rounds``."""
    A, B = pos.left.structure, pos.right.structure
    if not (0 <= u < A.n and 0 <= v < B.n):
        raise StructuralError("forced pair outside the universes")
    if not matching_pair(pos.left, pos.right):
        return True
    solver = EfSolver(A, B, limits, left_generators, right_generators)
    pl, pr, cl, cr = solver.initial(pos.left, pos.right)
    ncl = solver.coder.extend(A, cl, pl, u)
    for w in np.flatnonzero(cr == cl[u]).tolist():
        if w == v:
            continue
        ncr = solver.coder.extend(B, cr, pr, w)
        if not solver.spoiler_wins(pl + (u,), pr + (w,), ncl, ncr, extra_rounds):
            return False
    ncr = solver.coder.extend(B, cr, pr, v)
    for w in np.flatnonzero(cl == cr[v]).tolist():
        if w == u:
            continue
        ncl = solver.coder.extend(A, cl, pl, w)
        if not solver.spoiler_wins(pl + (w,), pr + (v,), ncl, ncr, extra_rounds):
            return False
    return True
