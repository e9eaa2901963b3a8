#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
dynamics.py — The synchronous majority rule and its limit cycles.

Every vertex looks at its open neighborhood N(v) and adopts the strictly
more frequent color; on a tie (an empty neighborhood included) it keeps
its own. The process is deterministic and always falls into a cycle of
length one or two, which run_to_cycle detects.
"""

import hashlib
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np

from graph_core import Graph, VertexSet
from systems import (CycleCapExceededError, InvalidParameterError, SpecParseError,
                     bernoulli_mask, get_logger)

logger = get_logger(__name__)

BLUE_CHAR = "b"
RED_CHAR = "r"


class Outcome(str, Enum):
    RED = "red-monochromatic"
    BLUE = "blue-monochromatic"
    COEXISTENCE_FIXED = "coexistence-fixed"
    COEXISTENCE_PERIOD_2 = "coexistence-period-2"

    @property
    def is_coexistence(self) -> bool:
        return self in (Outcome.COEXISTENCE_FIXED, Outcome.COEXISTENCE_PERIOD_2)


# ─────────────────────────────────────────
# Coloring
# ─────────────────────────────────────────

class Coloring:
    """One generation g: V -> {b, r}, stored as a boolean 'is blue' array."""

    __slots__ = ("blue",)

    def __init__(self, blue: Iterable[bool]):
        self.blue = np.array(blue, dtype=bool)
        self.blue.flags.writeable = False

    @classmethod
    def all_red(cls, n: int) -> "Coloring":
        return cls(np.zeros(n, dtype=bool))

    @classmethod
    def all_blue(cls, n: int) -> "Coloring":
        return cls(np.ones(n, dtype=bool))

    @classmethod
    def from_blue_set(cls, n: int, members: Iterable[int]) -> "Coloring":
        if isinstance(members, VertexSet):
            return cls(members.mask)
        return cls(VertexSet(n, members).mask)

    @classmethod
    def from_string(cls, text: str, path: Optional[str] = None) -> "Coloring":
        body = text.rstrip("\n")
        bad = [i for i, ch in enumerate(body) if ch not in (BLUE_CHAR, RED_CHAR)]
        if bad:
            raise SpecParseError(f"unexpected character {body[bad[0]]!r} at column {bad[0] + 1}",
                                 path, 1)
        return cls(np.frombuffer(body.encode("ascii"), dtype=np.uint8) == ord(BLUE_CHAR))

    def to_string(self) -> str:
        chars = np.where(self.blue, ord(BLUE_CHAR), ord(RED_CHAR)).astype(np.uint8)
        return chars.tobytes().decode("ascii") + "\n"

    @property
    def n(self) -> int:
        return int(self.blue.size)

    def __len__(self) -> int:
        return self.n

    def blue_count(self) -> int:
        return int(np.count_nonzero(self.blue))

    def is_monochromatic(self) -> bool:
        count = self.blue_count()
        return count == 0 or count == self.n

    def flip(self) -> "Coloring":
        return Coloring(~self.blue)

    def blue_set(self) -> VertexSet:
        return VertexSet.from_mask(self.blue)

    def digest(self) -> str:
        h = hashlib.blake2b(np.packbits(self.blue).tobytes(), digest_size=16)
        h.update(self.n.to_bytes(8, "little"))
        return h.hexdigest()

    def __eq__(self, other) -> bool:
        if not isinstance(other, Coloring):
            return NotImplemented
        return np.array_equal(self.blue, other.blue)

    def __hash__(self):
        return hash(self.digest())

    def __repr__(self) -> str:
        if self.n <= 32:
            return f"Coloring({self.to_string().strip()!r})"
        return f"Coloring(n={self.n}, blue={self.blue_count()})"


def random_coloring(n: int, p_b: float, rng: np.random.Generator) -> Coloring:
    """Each vertex blue independently with probability p_b."""
    if n < 0:
        raise InvalidParameterError(f"vertex count must be non-negative, got {n}")
    return Coloring(bernoulli_mask(rng, n, p_b))


def blue_count(c: Coloring) -> int:
    return c.blue_count()


def coloring_to_string(c: Coloring) -> str:
    return c.to_string()


def coloring_from_string(text: str, path: Optional[str] = None) -> Coloring:
    return Coloring.from_string(text, path)


def write_coloring(c: Coloring, path: str):
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write(coloring_to_string(c))


def read_coloring(path: str) -> Coloring:
    with open(path, encoding="ascii", errors="replace") as f:
        return coloring_from_string(f.read(), path)


# ─────────────────────────────────────────
# Majority step
# ─────────────────────────────────────────

def _resolve(blue_neighbors: np.ndarray, degrees: np.ndarray, current: np.ndarray) -> np.ndarray:
    twice = 2 * blue_neighbors
    return np.where(twice > degrees, True, np.where(twice < degrees, False, current))


def majority_step(g: Graph, c: Coloring) -> Coloring:
    """One synchronous round. Reads only c, so no vertex sees a partial update."""
    if c.n != g.n:
        raise InvalidParameterError(f"coloring has {c.n} entries, graph has {g.n} vertices")
    blue_neighbors = g.to_sparse() @ c.blue.astype(np.int32)
    return Coloring(_resolve(blue_neighbors, g.degrees, c.blue))


def majority_step_batch(g: Graph, colors: np.ndarray) -> np.ndarray:
    """Row-wise majority step over a (B, n) boolean array of colorings."""
    colors = np.asarray(colors, dtype=bool)
    if colors.ndim != 2 or colors.shape[1] != g.n:
        raise InvalidParameterError(f"expected shape (B, {g.n}), got {colors.shape}")
    blue_neighbors = (g.to_sparse() @ colors.T.astype(np.int32)).T
    return _resolve(np.asarray(blue_neighbors), g.degrees[np.newaxis, :], colors)


# ─────────────────────────────────────────
# Trajectories
# ─────────────────────────────────────────

@dataclass
class ConsensusReport:
    consensus_time: int
    period: int
    outcome: Outcome
    final_blue_count: int
    trajectory_blue_counts: List[int] = field(default_factory=list)
    colorings: Optional[List[str]] = None  # only with keep_colorings=True

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["outcome"] = self.outcome.value
        if self.colorings is None:
            del d["colorings"]
        return d

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "ConsensusReport":
        return cls(
            consensus_time=int(d["consensus_time"]),
            period=int(d["period"]),
            outcome=Outcome(d["outcome"]),
            final_blue_count=int(d["final_blue_count"]),
            trajectory_blue_counts=[int(x) for x in d.get("trajectory_blue_counts", [])],
            colorings=d.get("colorings"),
        )


def classify(period: int, final_blue: int, n: int) -> Outcome:
    if period == 2:
        return Outcome.COEXISTENCE_PERIOD_2
    if final_blue == 0:
        return Outcome.RED
    if final_blue == n:
        return Outcome.BLUE
    return Outcome.COEXISTENCE_FIXED


def default_cap(n: int) -> int:
    return n * n + 2


def run_to_cycle(g: Graph, c0: Coloring, cap: Optional[int] = None,
                 keep_colorings: bool = False) -> ConsensusReport:
    """
    Iterate majority_step from c0 until the trajectory repeats.

    Stops at the first round t with g_t = g_{t-1} (period 1) or
    g_t = g_{t-2} (period 2); consensus_time is t - period, the first round
    whose coloring recurs. Raises CycleCapExceededError after cap rounds.
    """
    if cap is None:
        cap = default_cap(g.n)
    if cap < 1:
        raise InvalidParameterError(f"round cap must be at least 1, got {cap}")

    counts = [c0.blue_count()]
    kept = [c0.to_string()] if keep_colorings else None
    older: Optional[Coloring] = None
    prev = c0
    for t in range(1, cap + 1):
        cur = majority_step(g, prev)
        counts.append(cur.blue_count())
        if kept is not None:
            kept.append(cur.to_string())
        if cur == prev:
            period = 1
        elif older is not None and cur == older:
            period = 2
        else:
            older, prev = prev, cur
            continue
        final = counts[-1]
        report = ConsensusReport(t - period, period, classify(period, final, g.n), final,
                                 counts, kept)
        logger.debug("cycle found: t=%d period=%d outcome=%s", t, period, report.outcome.value)
        return report
    raise CycleCapExceededError(
        f"no cycle of length 1 or 2 within {cap} rounds on n={g.n}", cap)


def run_rounds(g: Graph, c0: Coloring, rounds: int) -> Tuple[List[int], Coloring]:
    """Exactly `rounds` majority steps; blue counts of g_0..g_rounds and the last coloring."""
    if rounds < 0:
        raise InvalidParameterError(f"rounds must be non-negative, got {rounds}")
    counts = [c0.blue_count()]
    cur = c0
    for _ in range(rounds):
        nxt = majority_step(g, cur)
        counts.append(nxt.blue_count())
        if nxt == cur:
            # fixed point: the rest of the horizon is constant
            counts.extend([counts[-1]] * (rounds - len(counts) + 1))
            return counts, nxt
        cur = nxt
    return counts, cur
