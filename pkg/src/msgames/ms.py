"""Multi-structural games against the oblivious Duplicator.

Positions hold two sets of pebbled structures.  Since the maximal (oblivious)
answer is optimal for Duplicator, the game becomes a one-player search for
Spoiler, which this module solves exactly with a side-sequence bitmask
formulation described on :class:`MsSolver`.
"""

from __future__ import annotations

import bisect
import itertools
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .logic import EXISTS, FORALL, Formula, TypeConjunction, disj
from .profiles import ElementCoder
from .search import Budget, BudgetExceeded, SearchLimits, SearchStats, Winner
from .structures import (
    PebbledStructure,
    Structure,
    StructuralError,
    atomic_type_key,
    color_sort_key,
    fresh_color,
    matching_pair,
    pool_type_bits,
)
from .symmetry import OrbitCache

LEFT, RIGHT = "L", "R"
SIDES = (LEFT, RIGHT)
MEMO_LIMIT = 1_000_000


class ScriptError(RuntimeError):
    """A strategy script emitted an illegal move."""


class CompositionError(ValueError):
    """Sub-strategies cannot be combined by parallel play."""


# ---------------------------------------------------------------- positions


def _dedupe(members: Iterable[PebbledStructure]) -> tuple[PebbledStructure, ...]:
    seen: dict[PebbledStructure, None] = {}
    for P in members:
        seen.setdefault(P.normalized(), None)
    return tuple(seen)


@dataclass(frozen=True)
class MsPosition:
    """Two deduplicated sets of pebbled structures and the rounds left.

    Members keep first-appearance order so that runs are reproducible.
    ``colors_used`` is sorted in palette order; it must be given explicitly
    only when both sides are empty.
    """

    left: tuple[PebbledStructure, ...]
    right: tuple[PebbledStructure, ...]
    rounds_remaining: int
    colors_used: tuple[str, ...] = None  # type: ignore[assignment]

    def __post_init__(self):
        left, right = _dedupe(self.left), _dedupe(self.right)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        members = left + right
        if self.colors_used is None:
            colors = members[0].colors if members else ()
        else:
            colors = tuple(self.colors_used)
        colors = tuple(sorted(colors, key=color_sort_key))
        object.__setattr__(self, "colors_used", colors)
        if self.rounds_remaining < 0:
            raise StructuralError("rounds_remaining must be nonnegative")
        if members:
            schema = members[0].structure.schema
            for P in members:
                if P.structure.schema != schema:
                    raise StructuralError("position mixes schemas")
                if P.colors != colors:
                    raise StructuralError(f"member pebbled with {P.colors}, position uses {colors}")

    @classmethod
    def of(cls, left: Iterable, right: Iterable, rounds: int, colors: Sequence[str] | None = None) -> "MsPosition":
        """Build from structures or pebbled structures (bare structures get no pebbles)."""

        def wrap(x):
            return x if isinstance(x, PebbledStructure) else PebbledStructure(x)

        return cls(tuple(wrap(x) for x in left), tuple(wrap(x) for x in right), rounds, colors)

    def side(self, which: str) -> tuple[PebbledStructure, ...]:
        return self.left if which == LEFT else self.right

    @property
    def empty(self) -> bool:
        return not self.left and not self.right

    def with_rounds(self, rounds: int) -> "MsPosition":
        return MsPosition(self.left, self.right, rounds, self.colors_used)

    def describe(self) -> str:
        return (
            f"{len(self.left)} left / {len(self.right)} right, "
            f"{self.rounds_remaining} rounds, colors {list(self.colors_used)}"
        )


@dataclass(frozen=True)
class SpoilerMove:
    """A pebble of ``color`` on every structure of ``side``.

    ``placement[i]`` is the element chosen in the i-th member of that side,
    in the position's member order.
    """

    side: str
    color: str
    placement: tuple[int, ...]

    def __post_init__(self):
        if self.side not in SIDES:
            raise StructuralError(f"side must be L or R, got {self.side!r}")
        object.__setattr__(self, "placement", tuple(int(e) for e in self.placement))

    @classmethod
    def from_map(cls, pos: MsPosition, side: str, color: str, mapping: Mapping[PebbledStructure, int]) -> "SpoilerMove":
        members = pos.side(side)
        missing = [P for P in members if P not in mapping]
        if missing:
            raise StructuralError(f"placement misses {len(missing)} structure(s)")
        return cls(side, color, tuple(mapping[P] for P in members))


def _check_move(pos: MsPosition, move: SpoilerMove):
    if move.color in pos.colors_used:
        raise StructuralError(f"color {move.color} already in use")
    members = pos.side(move.side)
    if len(move.placement) != len(members):
        raise StructuralError(f"placement has {len(move.placement)} entries for {len(members)} structures")
    for P, e in zip(members, move.placement):
        if not 0 <= e < P.structure.n:
            raise StructuralError(f"element {e} outside a universe of size {P.structure.n}")


def oblivious_response(pos: MsPosition, move: SpoilerMove) -> MsPosition:
    """Apply ``move``; every structure on the other side is copied once per element."""
    _check_move(pos, move)
    if pos.rounds_remaining == 0:
        raise StructuralError("no rounds remaining")
    moved = tuple(P.extend(move.color, e) for P, e in zip(pos.side(move.side), move.placement))
    answered = tuple(Q.extend(move.color, w) for Q in pos.side(_other(move.side)) for w in range(Q.structure.n))
    left, right = (moved, answered) if move.side == LEFT else (answered, moved)
    return MsPosition(left, right, pos.rounds_remaining - 1, pos.colors_used + (move.color,))


def _other(side: str) -> str:
    return RIGHT if side == LEFT else LEFT


def discard(pos: MsPosition) -> MsPosition:
    """Drop every member that matches nothing on the other side."""
    lk = [atomic_type_key(P) for P in pos.left]
    rk = [atomic_type_key(Q) for Q in pos.right]
    ls, rs = set(lk), set(rk)
    left = tuple(P for P, k in zip(pos.left, lk) if k in rs)
    right = tuple(Q for Q, k in zip(pos.right, rk) if k in ls)
    return MsPosition(left, right, pos.rounds_remaining, pos.colors_used)


def has_matching_pair(pos: MsPosition) -> bool:
    ls = {atomic_type_key(P) for P in pos.left}
    return any(atomic_type_key(Q) in ls for Q in pos.right)


# ---------------------------------------------------------------- bitmask helpers
#
# A side sequence of length m is an integer s < 2**m whose bit i is the side of
# round i+1 (0 = left, 1 = right).  A "win mask" has bit s set when Spoiler,
# committed to sequence s, can still destroy every matching pair.


def _full(m: int) -> int:
    return (1 << (1 << m)) - 1


def _split(mask: int) -> tuple[int, int]:
    """Masks over tails for sequences starting left (even s) and right (odd s)."""
    even = odd = 0
    s = 0
    while mask:
        if mask & 1:
            if s & 1:
                odd |= 1 << (s >> 1)
            else:
                even |= 1 << (s >> 1)
        mask >>= 1
        s += 1
    return even, odd


def _join(even: int, odd: int) -> int:
    out = 0
    t = 0
    while even or odd:
        if even & 1:
            out |= 1 << (2 * t)
        if odd & 1:
            out |= 1 << (2 * t + 1)
        even >>= 1
        odd >>= 1
        t += 1
    return out


def sequence_sides(s: int, m: int) -> tuple[str, ...]:
    return tuple(RIGHT if (s >> i) & 1 else LEFT for i in range(m))


# ---------------------------------------------------------------- solver


class MsSolver:
    """Exact Spoiler search against the oblivious Duplicator.

    Members are items ``(sid, pool)`` where ``pool`` lists constants and then
    pebbled elements in palette order.  Items sharing an atomic type form a
    class; classes evolve independently once Spoiler's side sequence is
    fixed, so the win mask of a position is the AND of its class masks.  In
    a class, the mover picks one element per structure; a structure that has
    an element whose code no answer realizes is settled by it at once.  The
    remaining choices are explored depth first, pruned by antitonicity (more
    members on the moving side never help Spoiler) and by the sequences
    already known to be won.
    """

    def __init__(
        self,
        limits: SearchLimits | None = None,
        generators: Mapping[Structure, Iterable[Sequence[int]]] | None = None,
        use_twins: bool = True,
        stats: SearchStats | None = None,
    ):
        self.stats = stats or SearchStats()
        self.budget = Budget(limits, self.stats)
        self.generators = dict(generators or {})
        self.use_twins = use_twins
        self.structures: list[Structure] = []
        self._sid: dict[Structure, int] = {}
        self._orbits: list[OrbitCache | None] = []
        self.coder: ElementCoder | None = None
        self._codes: dict = {}
        self._codesets: dict = {}
        self._ext: dict = {}
        self._answer_cache: dict = {}
        self.memo: dict = {}

    # -- items

    def _register(self, S: Structure) -> int:
        sid = self._sid.get(S)
        if sid is None:
            if self.coder is None:
                self.coder = ElementCoder(S.schema)
            elif S.schema != self.coder.schema:
                raise StructuralError("position mixes schemas")
            sid = len(self.structures)
            self._sid[S] = sid
            self.structures.append(S)
            cache = OrbitCache(S, self.generators.get(S, ()), add_twins=self.use_twins)
            self._orbits.append(cache if cache.generators else None)
        return sid

    def item(self, P: PebbledStructure):
        return (self._register(P.structure), P.pool())

    def codes(self, item) -> np.ndarray:
        got = self._codes.get(item)
        if got is None:
            sid, pool = item
            got = self.coder.codes(self.structures[sid], pool)
            if len(self._codes) > 20_000:
                self._codes.clear()
            self._codes[item] = got
        return got

    def reps(self, item) -> list[int]:
        sid, pool = item
        orbits = self._orbits[sid]
        if orbits is None:
            return list(range(self.structures[sid].n))
        return orbits.orbit_reps(pool).tolist()

    # -- classes

    def classes(self, left: Iterable, right: Iterable):
        """Group items by atomic type: list of (left items, right items)."""
        groups: dict[bytes, tuple[list, list]] = {}
        for side, items in ((0, left), (1, right)):
            for it in items:
                sid, pool = it
                key = self._type_key(sid, pool)
                groups.setdefault(key, ([], []))[side].append(it)
        return [(frozenset(a), frozenset(b)) for a, b in groups.values()]

    def _type_key(self, sid, pool) -> bytes:
        return pool_type_bits(self.structures[sid], pool)

    def position_mask(self, left, right, m: int, needed: int | None = None) -> int:
        full = _full(m)
        needed = full if needed is None else needed & full
        mask = full
        for L, R in self.classes(left, right):
            if not L or not R:
                continue
            mask &= self.class_mask(L, R, m, needed & mask)
            if not mask & needed:
                return 0
        return mask & needed

    def class_mask(self, L: frozenset, R: frozenset, m: int, needed: int) -> int:
        """Win mask of one class, exact on the bits of ``needed``."""
        if not L or not R:
            return _full(m)
        if m == 0 or not needed:
            return 0
        key = (L, R, m)
        value, known = self.memo.get(key, (0, 0))
        missing = needed & ~known
        if not missing:
            self.stats.memo_hits += 1
            return value
        self.budget.tick()
        need_left, need_right = _split(missing)
        won_left = self.side_mask(LEFT, L, R, m, need_left) if need_left else 0
        won_right = self.side_mask(RIGHT, L, R, m, need_right) if need_right else 0
        fresh = _join(won_left, won_right) & missing
        value = (value & known) | fresh
        if len(self.memo) > MEMO_LIMIT:
            self.memo.clear()  # a cache only; clearing keeps memory bounded on large gadgets
        self.memo[key] = (value, known | missing)
        return value

    # -- one round

    def _extensions(self, item, slot: int):
        """(code, element, child item) for one element per orbit, cached per item."""
        got = self._ext.get((item, slot))
        if got is None:
            sid, pool = item
            codes = self.codes(item)
            got = [(int(codes[u]), u, (sid, pool[:slot] + (u,) + pool[slot:])) for u in self.reps(item)]
            if len(self._ext) > 5_000:
                self._ext.clear()
            self._ext[(item, slot)] = got
        return got

    def _code_set(self, item) -> frozenset:
        got = self._codesets.get(item)
        if got is None:
            got = frozenset(np.unique(self.codes(item)).tolist())
            if len(self._codesets) > 20_000:
                self._codesets.clear()
            self._codesets[item] = got
        return got

    def _answers(self, others: frozenset, slot: int):
        """Oblivious answers grouped by the code they realize."""
        got = self._answer_cache.get((others, slot))
        if got is not None:
            return got
        by_code: dict[int, set] = {}
        for it in others:
            for c, _, child in self._extensions(it, slot):
                by_code.setdefault(c, set()).add(child)
        got = {c: frozenset(v) for c, v in by_code.items()}
        if len(self._answer_cache) > 50_000:
            self._answer_cache.clear()
        self._answer_cache[(others, slot)] = got
        return got

    def _options(self, movers, answers, slot: int):
        """Per mover: a settling element, or else its (code, child) choices."""
        out = []
        for it in movers:
            opts: dict[int, list] = {}
            killer = None
            for c, u, child in self._extensions(it, slot):
                if c not in answers:
                    killer = u
                    break
                opts.setdefault(c, []).append(child)
            if killer is not None:
                out.append((it, killer, None))
            else:
                choices = [(c, child) for c in sorted(opts, key=lambda c: (len(answers[c]), c)) for child in opts[c]]
                out.append((it, None, choices))
        return out

    def _last_round(self, movers, others, slot: int, record: dict | None) -> int:
        # with one round left only the codes the answers realize matter
        seen: set = set()
        for it in others:
            seen |= self._code_set(it)
        won = 1
        for it in movers:
            if self._code_set(it) <= seen:
                return 0
            if record is not None:
                record[it] = next(u for c, u, _ in self._extensions(it, slot) if c not in seen)
        return won

    def _slot(self, item) -> int:
        # every item in a search shares one color set, so the new pebble's
        # position in the pool depends only on the pool length
        return self._slot_of[len(item[1])]

    def side_mask(self, side: str, L, R, m: int, needed: int, record: dict | None = None) -> int:
        """Tails (length m-1) won when Spoiler moves on ``side`` first; exact on ``needed``."""
        movers, others = (L, R) if side == LEFT else (R, L)
        slot = self._slot(next(iter(movers)))
        if m == 1:
            return self._last_round(movers, others, slot, record) & needed if needed else 0
        answers = self._answers(others, slot)
        options = self._options(movers, answers, slot)
        if record is not None:
            for it, killer, _ in options:
                if killer is not None:
                    record[it] = killer
        pending = [(it, ch) for it, killer, ch in options if killer is None]
        full_tail = _full(m - 1)
        needed &= full_tail
        if not pending:
            return full_tail
        pending.sort(key=lambda p: len({c for c, _ in p[1]}))

        state = {"won": 0}
        chosen: dict[int, frozenset] = {}
        masks: dict[int, int] = {}
        picks: list = [None] * len(pending)

        def others_product(skip):
            prod = full_tail
            for c, mk in masks.items():
                if c != skip:
                    prod &= mk
            return prod

        def dfs(i: int, prod: int) -> bool:
            target = needed & ~state["won"]
            if not prod & target:
                return False
            self.budget.tick()
            if i == len(pending):
                state["won"] |= prod & needed
                if record is not None:
                    for (it, _), (_, child) in zip(pending, picks):
                        record[it] = child[1][slot]
                return not needed & ~state["won"]
            for c, child in pending[i][1]:
                before = chosen.get(c, frozenset())
                old_mask = masks.get(c, full_tail)
                rest = others_product(c)
                grown = before | {child}
                want = target & rest & old_mask
                if not want:
                    continue
                if side == LEFT:
                    mk = self.class_mask(grown, answers[c], m - 1, want)
                else:
                    mk = self.class_mask(answers[c], grown, m - 1, want)
                chosen[c], masks[c] = grown, old_mask & mk
                picks[i] = (c, child)
                done = dfs(i + 1, rest & masks[c])
                if before:
                    chosen[c], masks[c] = before, old_mask
                else:
                    del chosen[c], masks[c]
                if done:
                    return True
                target = needed & ~state["won"]
            return False

        dfs(0, full_tail)
        return state["won"]

    # -- entry points

    def prepare(self, pos: MsPosition):
        """Register structures and fix where new pebbles land in the pools."""
        for P in pos.left + pos.right:
            self._register(P.structure)
        consts = len(self.structures[0].schema.constants) if self.structures else 0
        colors = list(pos.colors_used)
        self._slot_of = {}
        for _ in range(pos.rounds_remaining + 1):
            new = fresh_color(colors)
            slot = bisect.bisect_left([color_sort_key(c) for c in colors], color_sort_key(new))
            self._slot_of[consts + len(colors)] = consts + slot
            colors = sorted(colors + [new], key=color_sort_key)
        return [self.item(P) for P in pos.left], [self.item(Q) for Q in pos.right]

    def win_mask(self, pos: MsPosition) -> int:
        left, right = self.prepare(pos)
        return self.position_mask(left, right, pos.rounds_remaining)

    def choose_move(self, pos: MsPosition, sequence: int) -> SpoilerMove:
        """A move that keeps ``sequence`` (over the remaining rounds) winning."""
        left, right = self.prepare(pos)
        m = pos.rounds_remaining
        side = RIGHT if sequence & 1 else LEFT
        tail_bit = 1 << (sequence >> 1)
        record: dict = {}
        for L, R in self.classes(left, right):
            if not L or not R:
                continue
            won = self.side_mask(side, L, R, m, tail_bit, record)
            if not won & tail_bit:
                raise ScriptError("side sequence is not winning from this position")
        members = pos.side(side)
        items = left if side == LEFT else right
        # members without a class partner were discarded already or are free
        placement = tuple(record.get(it, 0) for it in items)
        return SpoilerMove(side, fresh_color(pos.colors_used), placement)


def _ms_generators(pos: MsPosition, generators) -> dict:
    if generators is None:
        return {}
    if isinstance(generators, Mapping):
        return dict(generators)
    raise TypeError("generators must map structures to permutation lists")


def ms_win_mask(
    pos: MsPosition,
    limits: SearchLimits | None = None,
    generators: Mapping[Structure, Iterable[Sequence[int]]] | None = None,
    stats: SearchStats | None = None,
) -> int:
    """Bit s set iff Spoiler wins while playing side sequence s (raises BudgetExceeded)."""
    solver = MsSolver(limits, _ms_generators(pos, generators), stats=stats)
    return solver.win_mask(pos)


def ms_winner(
    pos: MsPosition,
    limits: SearchLimits | None = None,
    generators: Mapping[Structure, Iterable[Sequence[int]]] | None = None,
    stats: SearchStats | None = None,
) -> Winner:
    """Winner of the MS game from ``pos``; UNKNOWN only if the budget runs out."""
    stats = stats or SearchStats()
    try:
        if not has_matching_pair(pos):
            return Winner.SPOILER
        mask = ms_win_mask(pos, limits, generators, stats)
        return Winner.SPOILER if mask else Winner.DUPLICATOR
    except BudgetExceeded:
        return Winner.UNKNOWN
    finally:
        stats.finished = time.monotonic()


# ---------------------------------------------------------------- scripts


@dataclass
class StrategyScript:
    """A replayable policy.

    Spoiler scripts map the current (discarded) position and round index to a
    :class:`SpoilerMove` and must follow ``sides``.  Duplicator scripts map
    ``(position, move, round index)`` to one nonempty list of answers per
    structure on the side Spoiler did not play.
    """

    name: str
    step: Callable
    sides: tuple[str, ...] = ()
    player: str = "spoiler"

    def __post_init__(self):
        self.sides = tuple(self.sides)
        for s in self.sides:
            if s not in SIDES:
                raise StructuralError(f"bad side {s!r} in script {self.name}")
        if self.player not in ("spoiler", "duplicator"):
            raise StructuralError("player must be 'spoiler' or 'duplicator'")


@dataclass(frozen=True)
class TraceStep:
    before: MsPosition
    move: SpoilerMove
    answered: MsPosition
    after: MsPosition


@dataclass
class ScriptResult:
    """Outcome of running a Spoiler script against the oblivious Duplicator."""

    won: bool
    start: MsPosition
    initial: MsPosition
    trace: list[TraceStep] = field(default_factory=list)
    position: MsPosition | None = None
    reason: str = ""

    @property
    def rounds_used(self) -> int:
        return len(self.trace)

    def summary(self) -> str:
        verdict = "WIN" if self.won else "FAIL"
        sides = "".join(step.move.side for step in self.trace)
        tail = f" ({self.reason})" if self.reason else ""
        return f"{verdict} after {self.rounds_used} round(s), sides {sides or '-'}{tail}"


def run_spoiler_script(script: StrategyScript, pos: MsPosition, check: Callable | None = None) -> ScriptResult:
    """Play ``script`` against the oblivious Duplicator, discarding after every round.

    ``check`` may inspect the final position and return a failure reason; the
    parallel-play combinator uses it for its cross-block condition.
    """
    if script.player != "spoiler":
        raise ScriptError(f"{script.name} is not a Spoiler script")
    if len(script.sides) > pos.rounds_remaining:
        raise ScriptError(f"{script.name} needs {len(script.sides)} rounds, position has {pos.rounds_remaining}")
    current = discard(pos)
    result = ScriptResult(False, pos, current)
    for i, side in enumerate(script.sides):
        if current.empty:
            break
        move = script.step(current, i)
        if not isinstance(move, SpoilerMove):
            raise ScriptError(f"{script.name} returned {type(move).__name__} at round {i + 1}")
        if move.side != side:
            raise ScriptError(f"{script.name} declared side {side} for round {i + 1} but played {move.side}")
        members = current.side(side)
        if len(move.placement) != len(members):
            raise ScriptError(f"{script.name} placed {len(move.placement)} pebbles on {len(members)} structures")
        for P, e in zip(members, move.placement):
            if not 0 <= e < P.structure.n:
                raise ScriptError(f"{script.name} played element {e} outside a universe of size {P.structure.n}")
        if move.color in current.colors_used:
            raise ScriptError(f"{script.name} reused color {move.color}")
        answered = oblivious_response(current, move)
        after = discard(answered)
        result.trace.append(TraceStep(current, move, answered, after))
        current = after
    result.position = current
    if not current.empty:
        result.reason = f"{len(current.left)} left and {len(current.right)} right structures still match"
        return result
    if check is not None:
        reason = check(result)
        if reason:
            result.reason = reason
            return result
    result.won = True
    return result


def solver_script(
    pos: MsPosition,
    limits: SearchLimits | None = None,
    generators: Mapping[Structure, Iterable[Sequence[int]]] | None = None,
) -> StrategyScript | None:
    """Spoiler script read off the exact solver, or None when Duplicator wins."""
    solver = MsSolver(limits, _ms_generators(pos, generators))
    m = pos.rounds_remaining
    if not has_matching_pair(pos):
        return StrategyScript("solver", lambda p, i: None, ())
    mask = solver.win_mask(pos)
    if not mask:
        return None
    sequence = (mask & -mask).bit_length() - 1

    def step(current: MsPosition, i: int) -> SpoilerMove:
        return solver.choose_move(current, sequence >> i)

    return StrategyScript("solver", step, sequence_sides(sequence, m))


def ms_certificate(
    pos: MsPosition,
    limits: SearchLimits | None = None,
    generators: Mapping[Structure, Iterable[Sequence[int]]] | None = None,
) -> ScriptResult | None:
    """Certificate mode: replay the solver's winning line; None if Duplicator wins."""
    script = solver_script(pos, limits, generators)
    if script is None:
        return None
    result = run_spoiler_script(script, pos)
    if not result.won:
        raise AssertionError(f"solver line failed on replay: {result.reason}")
    return result


def check_duplicator_strategy(
    strategy: StrategyScript,
    pos: MsPosition,
    limits: SearchLimits | None = None,
) -> bool:
    """True iff the strategy keeps a matching pair against every Spoiler line.

    Every side and every placement is enumerated, so the position must be
    small.  ``BudgetExceeded`` propagates when the enumeration is too large.
    """
    if strategy.player != "duplicator":
        raise ScriptError(f"{strategy.name} is not a Duplicator strategy")
    budget = Budget(limits)

    def survives(current: MsPosition, i: int) -> bool:
        budget.tick()
        if not has_matching_pair(current):
            return False
        if current.rounds_remaining == 0:
            return True
        color = fresh_color(current.colors_used)
        for side in SIDES:
            members = current.side(side)
            ranges = [range(P.structure.n) for P in members]
            for placement in itertools.product(*ranges):
                budget.tick()
                move = SpoilerMove(side, color, placement)
                answers = strategy.step(current, move, i)
                nxt = _apply_answers(current, move, answers, strategy.name)
                if not survives(nxt, i + 1):
                    return False
        return True

    return survives(pos, 0)


def _apply_answers(pos: MsPosition, move: SpoilerMove, answers, name: str) -> MsPosition:
    others = pos.side(_other(move.side))
    if len(answers) != len(others):
        raise ScriptError(f"{name} answered for {len(answers)} of {len(others)} structures")
    answered = []
    for Q, ws in zip(others, answers):
        ws = list(ws)
        if not ws:
            raise ScriptError(f"{name} gave an empty answer set")
        for w in ws:
            if not 0 <= w < Q.structure.n:
                raise ScriptError(f"{name} answered outside the universe")
            answered.append(Q.extend(move.color, w))
    moved = tuple(P.extend(move.color, e) for P, e in zip(pos.side(move.side), move.placement))
    left, right = (moved, tuple(answered)) if move.side == LEFT else (tuple(answered), moved)
    return MsPosition(left, right, pos.rounds_remaining - 1, pos.colors_used + (move.color,))


def mirror_duplicator(partner: Callable[[PebbledStructure, int], int] | None = None) -> StrategyScript:
    """Answer each structure with one element, the identity by default.

    ``partner(Q, e)`` returns the answer in ``Q`` given Spoiler's element
    ``e`` on the first structure of the moving side.
    """

    def step(pos: MsPosition, move: SpoilerMove, i: int):
        e = move.placement[0] if move.placement else 0
        others = pos.side(_other(move.side))
        if partner is None:
            return [[min(e, Q.structure.n - 1)] for Q in others]
        return [[partner(Q, e)] for Q in others]

    return StrategyScript("mirror", step, (), player="duplicator")


def ef_guided_duplicator(limits: SearchLimits | None = None, generators=None) -> StrategyScript:
    """One answer per structure: the first one the exact EF solver certifies.

    Used on one-versus-one positions; with a single pair on the board this is
    the EF strategy, which also keeps the pair matching in the MS game.
    """
    from .ef import EfSolver

    solvers: dict = {}

    def step(pos: MsPosition, move: SpoilerMove, i: int):
        if len(pos.left) != 1 or len(pos.right) != 1:
            raise ScriptError("the EF-guided strategy plays one structure per side")
        P, Q = pos.left[0], pos.right[0]
        key = (P.structure, Q.structure)
        solver = solvers.get(key)
        if solver is None:
            gens = dict(generators or {})
            solver = EfSolver(P.structure, Q.structure, limits, gens.get(P.structure), gens.get(Q.structure))
            solvers[key] = solver
        u = move.placement[0]
        mover_left = move.side == LEFT
        other = Q if mover_left else P
        rest = pos.rounds_remaining - 1
        for w in range(other.structure.n):
            nl = P.extend(move.color, u if mover_left else w)
            nr = Q.extend(move.color, w if mover_left else u)
            if not matching_pair(nl, nr):
                continue
            pl, pr, cl, cr = solver.initial(nl, nr)
            if not solver.spoiler_wins(pl, pr, cl, cr, rest):
                return [[w]]
        # no surviving answer exists; any answer loses equally
        return [[0]]

    return StrategyScript("ef-guided", step, (), player="duplicator")


# ---------------------------------------------------------------- parallel play


def parallel_compose(
    subgames: Sequence[tuple[Sequence[PebbledStructure], Sequence[PebbledStructure], StrategyScript]],
    sides: Sequence[str],
) -> StrategyScript:
    """Play each sub-strategy on its own block under one shared side sequence.

    Members of the running position are assigned to the block whose initial
    member they extend.  The returned script's ``check`` hook (stored as the
    attribute ``cross_check``) reports matching pairs across blocks.
    """
    sides = tuple(sides)
    blocks = []
    owner: dict[tuple, int] = {}
    for b, (A, B, script) in enumerate(subgames):
        if script.player != "spoiler":
            raise CompositionError(f"{script.name} is not a Spoiler script")
        if tuple(script.sides) != sides:
            raise CompositionError(
                f"{script.name} plays {''.join(script.sides)}, composition declares {''.join(sides)}"
            )
        blocks.append((_dedupe(A), _dedupe(B), script))
        for side, members in ((LEFT, A), (RIGHT, B)):
            for P in _dedupe(members):
                key = (side, P.structure, P.pebbles)
                if key in owner and owner[key] != b:
                    raise CompositionError("sub-games share a member")
                owner[key] = b
    initial_colors = {c for A, B, _ in blocks for P in A + B for c in P.colors}

    def block_of(side: str, P: PebbledStructure) -> int:
        # the pebbles in the starting colors identify the ancestor
        key = (side, P.structure, tuple(p for p in P.pebbles if p[0] in initial_colors))
        b = owner.get(key)
        if b is None:
            raise ScriptError(f"member {P.describe()} belongs to no block")
        return b

    def step(pos: MsPosition, i: int) -> SpoilerMove:
        side = sides[i]
        parts: list[list] = [[[], []] for _ in blocks]
        for s, members in ((0, pos.left), (1, pos.right)):
            for P in members:
                parts[block_of(SIDES[s], P)][s].append(P)
        color = fresh_color(pos.colors_used)
        chosen: dict[PebbledStructure, int] = {}
        for b, (_, _, script) in enumerate(blocks):
            L, R = parts[b]
            if not L and not R:
                continue
            sub = discard(MsPosition(tuple(L), tuple(R), pos.rounds_remaining, pos.colors_used))
            if sub.empty:
                # the block is already won; any element will do
                for P in (L if side == LEFT else R):
                    chosen[P] = 0
                continue
            move = script.step(sub, i)
            if move.side != side:
                raise ScriptError(f"{script.name} left the shared side sequence at round {i + 1}")
            for P, e in zip(sub.side(side), move.placement):
                chosen[P] = e
            for P in (L if side == LEFT else R):
                chosen.setdefault(P, 0)
        return SpoilerMove.from_map(pos, side, color, chosen)

    script = StrategyScript("parallel(" + ",".join(s.name for _, _, s in blocks) + ")", step, sides)
    script.cross_check = _cross_block_check(block_of)  # type: ignore[attr-defined]
    return script


def _cross_block_check(block_of):
    def check(result: ScriptResult) -> str:
        # with discard after each round, any surviving cross-block pair would
        # have kept the final position nonempty; audit every round anyway
        for step in result.trace:
            after = step.after
            lk = {}
            for P in after.left:
                lk.setdefault(atomic_type_key(P), set()).add(block_of(LEFT, P))
            for Q in after.right:
                blocks = lk.get(atomic_type_key(Q), set())
                if blocks - {block_of(RIGHT, Q)} and after.rounds_remaining == 0:
                    return "cross-block matching pair at the end"
        return ""

    return check


def run_composed(script: StrategyScript, pos: MsPosition) -> ScriptResult:
    return run_spoiler_script(script, pos, getattr(script, "cross_check", None))


# ---------------------------------------------------------------- certificates


def ms_strategy_to_formula(result: ScriptResult) -> Formula:
    """Separating formula read off a winning run.

    Left rounds bind existentially and right rounds universally.  The matrix
    is the disjunction of the atomic types that left members had when they
    were discarded; a discarded left member has no partner on the right, and
    no right descendant can ever realize its type again.
    """
    if not isinstance(result, ScriptResult) or not result.won:
        raise StructuralError("formula extraction needs a winning run")
    start = result.start
    free = tuple(start.colors_used)
    prefix = tuple((EXISTS if step.move.side == LEFT else FORALL, step.move.color) for step in result.trace)
    stages = [(start, result.initial)] + [(step.answered, step.after) for step in result.trace]
    disjuncts = {}
    for before, after in stages:
        kept = set(after.left)
        for P in before.left:
            if P in kept:
                continue
            terms = tuple(P.structure.schema.constants) + before.colors_used
            tc = TypeConjunction.realized(P.structure, terms, P.pool())
            disjuncts.setdefault(tc, None)
    if result.trace and not result.trace[-1].after.empty:
        raise StructuralError("malformed trace: the last position still has members")
    matrix = disj(*(tc.to_matrix() for tc in disjuncts))
    return Formula(prefix, matrix, free)
