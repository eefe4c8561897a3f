"""Budgets, verdicts and statistics shared by the exact solvers."""

from __future__ import annotations

import enum
import os
import time
from dataclasses import dataclass, field


class Winner(enum.Enum):
    SPOILER = "SPOILER"
    DUPLICATOR = "DUPLICATOR"
    UNKNOWN = "UNKNOWN"

    def __str__(self):
        return self.value


class BudgetExceeded(Exception):
    pass


DEFAULT_MAX_NODES = 10_000_000
DEFAULT_MAX_SECONDS = 60.0


@dataclass(frozen=True)
class SearchLimits:
    max_nodes: int | None = DEFAULT_MAX_NODES
    max_seconds: float | None = DEFAULT_MAX_SECONDS

    @classmethod
    def unlimited(cls) -> "SearchLimits":
        return cls(None, None)

    @classmethod
    def from_env(cls, max_nodes=None, max_seconds=None) -> "SearchLimits":
        """Explicit values win, then MSGAMES_MAX_NODES / MSGAMES_MAX_SECONDS, then defaults."""
        if max_nodes is None:
            env = os.environ.get("MSGAMES_MAX_NODES")
            max_nodes = int(float(env)) if env else DEFAULT_MAX_NODES
        if max_seconds is None:
            env = os.environ.get("MSGAMES_MAX_SECONDS")
            max_seconds = float(env) if env else DEFAULT_MAX_SECONDS
        return cls(max_nodes, max_seconds)

    def describe(self) -> str:
        return f"max_nodes={self.max_nodes} max_seconds={self.max_seconds}"


@dataclass
class SearchStats:
    nodes: int = 0
    memo_hits: int = 0
    started: float = field(default_factory=time.monotonic)
    finished: float | None = None

    @property
    def seconds(self) -> float:
        end = self.finished if self.finished is not None else time.monotonic()
        return end - self.started

    def as_dict(self) -> dict:
        return {"nodes": self.nodes, "memo_hits": self.memo_hits, "seconds": round(self.seconds, 3)}


class Budget:
    """Node/time accounting; ``tick`` raises BudgetExceeded when exhausted."""

    def __init__(self, limits: SearchLimits | None, stats: SearchStats | None = None):
        self.limits = limits or SearchLimits()
        self.stats = stats or SearchStats()
        self._deadline = (
            self.stats.started + self.limits.max_seconds if self.limits.max_seconds is not None else None
        )

    def tick(self, n: int = 1):
        st = self.stats
        st.nodes += n
        if self.limits.max_nodes is not None and st.nodes > self.limits.max_nodes:
            raise BudgetExceeded("node budget exhausted")
        if self._deadline is not None and (st.nodes & 255) == 0 and time.monotonic() > self._deadline:
            raise BudgetExceeded("time budget exhausted")

    def check_time(self):
        if self._deadline is not None and time.monotonic() > self._deadline:
            raise BudgetExceeded("time budget exhausted")
