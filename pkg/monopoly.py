#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
monopoly.py — Control, one-round takeover, immunity audits and dynamic monopolies.

A set S controls S' when a monochromatic S forces S' to S's color one round
later whatever the other vertices hold. A dynamo is a set whose common color
conquers the whole graph whatever the other vertices hold. Both quantify over
all completions; the code below is explicit about which completions it tries.
"""

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from dynamics import Coloring, Outcome, majority_step, majority_step_batch, run_to_cycle
from graph_core import Graph, VertexSet, ball
from systems import (CycleCapExceededError, InvalidParameterError, default, get_logger)

logger = get_logger(__name__)

CANONICAL_CAVEAT = ("dynamo checks against the all-red complement only; "
                    "every complement is tried only on small graphs")
BATCH_ROWS = 4096


class ControlMode(str, Enum):
    NECESSARY = "necessary"
    SUFFICIENT = "sufficient"


class Adversary(str, Enum):
    CANONICAL = "canonical"    # all-red complement
    EXHAUSTIVE = "exhaustive"  # every complement coloring
    AUTO = "auto"              # exhaustive up to exhaustive_adversary_max_n

    def resolve(self, n: int) -> "Adversary":
        if self is Adversary.AUTO:
            small = n <= default("exhaustive_adversary_max_n")
            return Adversary.EXHAUSTIVE if small else Adversary.CANONICAL
        return self


class AuditStrategy(str, Enum):
    UNIFORM = "uniform"
    GREEDY = "greedy"


def _set_json(s: Optional[VertexSet]) -> Optional[List[int]]:
    return None if s is None else s.to_list()


# ─────────────────────────────────────────
# Control and takeover
# ─────────────────────────────────────────

@dataclass
class ControlReport:
    source: VertexSet
    controlled: VertexSet
    mode: ControlMode

    def to_dict(self) -> Dict[str, Any]:
        return {"source": self.source.to_list(), "controlled": self.controlled.to_list(),
                "mode": self.mode.value}


def _hits(g: Graph, s: VertexSet) -> np.ndarray:
    """|N(v) ∩ S| for every v."""
    return g.to_sparse() @ s.mask.astype(np.int32)


def _taken(hits: np.ndarray, degrees: np.ndarray, member: np.ndarray) -> np.ndarray:
    # blue next round when S is blue and everything else red
    twice = 2 * hits
    return (twice > degrees) | ((twice == degrees) & member)


def controlled_set(g: Graph, s: VertexSet, mode: ControlMode = ControlMode.NECESSARY) -> VertexSet:
    """
    necessary:  |N(v) ∩ S| >= ceil(d/2); defined on regular graphs only.
    sufficient: v outside S with |N(v) ∩ S| > deg(v)/2, or v in S with
                |N(v) ∩ S| >= deg(v)/2 (the tie keeps S's color).
    """
    if s.n != g.n:
        raise InvalidParameterError(f"vertex set over {s.n} vertices, graph has {g.n}")
    if s.size == 0:
        raise InvalidParameterError("controlling set must be nonempty")
    mode = ControlMode(mode)
    hits = _hits(g, s)
    if mode is ControlMode.NECESSARY:
        if g.regular_degree is None:
            raise InvalidParameterError("necessary-mode control needs a regular graph")
        return VertexSet.from_mask(hits >= math.ceil(g.regular_degree / 2))
    return VertexSet.from_mask(_taken(hits, g.degrees, s.mask))


def control_report(g: Graph, s: VertexSet, mode: ControlMode = ControlMode.NECESSARY) -> ControlReport:
    mode = ControlMode(mode)
    return ControlReport(s, controlled_set(g, s, mode), mode)


def takeover_step(g: Graph, s: VertexSet) -> VertexSet:
    """Blue set after one round from blue-on-S, red elsewhere."""
    return majority_step(g, Coloring(s.mask)).blue_set()


def lemma4_required(size: int, d: int, ratio: Optional[float] = None) -> int:
    """ceil(ratio * |S| / d); a set controlling this many vertices is a finding."""
    if ratio is None:
        ratio = default("lemma4_ratio")
    return math.ceil(ratio * size / d - 1e-12)


# ─────────────────────────────────────────
# Immunity audit
# ─────────────────────────────────────────

@dataclass
class ImmunityReport:
    alpha_observed: float
    beta: float
    violating_set: Optional[VertexSet]
    sets_tested: int
    strategy: AuditStrategy
    restarts: int = 0
    control_checked: int = 0
    control_findings: int = 0
    lemma4_ratio: float = 10.0
    finding_sets: List[VertexSet] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alpha_observed": self.alpha_observed,
            "beta": self.beta,
            "violating_set": _set_json(self.violating_set),
            "sets_tested": self.sets_tested,
            "strategy": self.strategy.value,
            "restarts": self.restarts,
            "control_checked": self.control_checked,
            "control_findings": self.control_findings,
            "lemma4_ratio": self.lemma4_ratio,
            "finding_sets": [s.to_list() for s in self.finding_sets],
        }


class _AuditState:
    """
    Incremental bookkeeping for one candidate S: hits, takeover size,
    necessary-mode controlled count and a pressure score that rewards
    concentrating S around vertices that are not taken yet.
    """

    def __init__(self, g: Graph, members: Sequence[int]):
        self.g = g
        self.mask = np.zeros(g.n, dtype=bool)
        self.mask[list(members)] = True
        self.hits = _hits(g, VertexSet.from_mask(self.mask)).astype(np.int64)
        self.threshold = math.ceil(g.regular_degree / 2) if g.regular_degree is not None else None
        taken = _taken(self.hits, g.degrees, self.mask)
        self.taken = int(np.count_nonzero(taken))
        self.pressure = int(np.sum(self.hits[~taken] ** 2))
        self.necessary = (int(np.count_nonzero(self.hits >= self.threshold))
                          if self.threshold is not None else 0)

    @property
    def size(self) -> int:
        return int(np.count_nonzero(self.mask))

    def score(self, taken: int, pressure: int, size: int) -> Tuple[float, float]:
        return taken / size, pressure / size

    def delta(self, u: int, add: bool) -> Tuple[int, int, int]:
        """(taken, pressure, necessary) change from adding or removing u."""
        nb = self.g.neighbors_of(u)
        aff = np.append(nb, u)
        old_hits = self.hits[aff]
        new_hits = old_hits.copy()
        new_hits[:-1] += 1 if add else -1
        old_mask = self.mask[aff]
        new_mask = old_mask.copy()
        new_mask[-1] = add
        deg = self.g.degrees[aff]
        old_t = _taken(old_hits, deg, old_mask)
        new_t = _taken(new_hits, deg, new_mask)
        d_taken = int(np.count_nonzero(new_t)) - int(np.count_nonzero(old_t))
        d_pressure = int(np.sum(new_hits[~new_t] ** 2)) - int(np.sum(old_hits[~old_t] ** 2))
        d_nec = 0
        if self.threshold is not None:
            d_nec = (int(np.count_nonzero(new_hits >= self.threshold))
                     - int(np.count_nonzero(old_hits >= self.threshold)))
        return d_taken, d_pressure, d_nec

    def apply(self, u: int, add: bool, change: Tuple[int, int, int]):
        self.hits[self.g.neighbors_of(u)] += 1 if add else -1
        self.mask[u] = add
        self.taken += change[0]
        self.pressure += change[1]
        self.necessary += change[2]


class _AuditLedger:
    def __init__(self, g: Graph, trials: int, ratio: float):
        self.g = g
        self.trials = trials
        self.ratio = ratio
        self.tested = 0
        self.best_ratio = -1.0
        self.best_set: Optional[VertexSet] = None
        self.control_checked = 0
        self.findings: List[VertexSet] = []

    @property
    def exhausted(self) -> bool:
        return self.tested >= self.trials

    def record(self, mask: np.ndarray, taken: int, necessary: int, size: int):
        self.tested += 1
        ratio = taken / size
        if ratio > self.best_ratio:
            self.best_ratio = ratio
            self.best_set = VertexSet.from_mask(mask)
        if self.g.regular_degree:
            self.control_checked += 1
            if necessary >= lemma4_required(size, self.g.regular_degree, self.ratio):
                witness = VertexSet.from_mask(mask)
                self.findings.append(witness)
                logger.warning("control finding: |S|=%d controls %d vertices (needs < %d)",
                               size, necessary,
                               lemma4_required(size, self.g.regular_degree, self.ratio))


def _uniform_audit(g: Graph, m_max: int, ledger: _AuditLedger, rng: np.random.Generator) -> int:
    while not ledger.exhausted:
        m = int(rng.integers(1, m_max + 1))
        members = rng.choice(g.n, size=m, replace=False)
        st = _AuditState(g, members)
        ledger.record(st.mask, st.taken, st.necessary, m)
    return 0


def _greedy_seed(g: Graph, m_max: int, rng: np.random.Generator) -> List[int]:
    v = int(rng.integers(g.n))
    nb = g.neighbors_of(v)
    want = min(m_max, max(1, math.ceil(nb.size / 2)))
    if nb.size == 0:
        return [v]
    return rng.choice(nb, size=min(want, nb.size), replace=False).tolist()


def _greedy_candidates(g: Graph, st: _AuditState, m_max: int, k: int,
                       rng: np.random.Generator) -> List[Tuple[int, bool]]:
    moves: List[Tuple[int, bool]] = []
    if st.size < m_max:
        # vertices one S-neighbor short of being taken, and their free neighbors
        short = np.flatnonzero((2 * (st.hits + 1) > g.degrees) & ~st.mask
                               & ~_taken(st.hits, g.degrees, st.mask))
        if short.size > k:
            short = rng.choice(short, size=k, replace=False)
        pool = np.unique(np.concatenate([g.neighbors_of(w) for w in short]
                                        or [np.empty(0, dtype=np.int64)]))
        pool = pool[~st.mask[pool]]
        if pool.size == 0:
            members = np.flatnonzero(st.mask)
            near = np.unique(np.concatenate([g.neighbors_of(w) for w in members]
                                            or [np.empty(0, dtype=np.int64)]))
            pool = near[~st.mask[near]] if near.size else np.flatnonzero(~st.mask)
        if pool.size:
            pick = rng.choice(pool, size=min(k, pool.size), replace=False)
            moves.extend((int(u), True) for u in pick)
    if st.size > 1:
        members = np.flatnonzero(st.mask)
        pick = rng.choice(members, size=min(max(1, k // 4), members.size), replace=False)
        moves.extend((int(u), False) for u in pick)
    return moves


def _greedy_audit(g: Graph, m_max: int, ledger: _AuditLedger, rng: np.random.Generator) -> int:
    k = default("greedy_candidates_per_move")
    restarts = 0
    while not ledger.exhausted:
        restarts += 1
        st = _AuditState(g, _greedy_seed(g, m_max, rng))
        ledger.record(st.mask, st.taken, st.necessary, st.size)
        current = st.score(st.taken, st.pressure, st.size)
        while not ledger.exhausted:
            best_move = None
            best_score = current
            for u, add in _greedy_candidates(g, st, m_max, k, rng):
                if ledger.exhausted:
                    break
                change = st.delta(u, add)
                size = st.size + (1 if add else -1)
                taken = st.taken + change[0]
                mask = st.mask.copy()
                mask[u] = add
                ledger.record(mask, taken, st.necessary + change[2], size)
                score = st.score(taken, st.pressure + change[1], size)
                if score > best_score:
                    best_move, best_score = (u, add, change), score
            if best_move is None:
                break
            st.apply(*best_move)
            current = best_score
    return restarts


def immunity_audit(g: Graph, beta: float, trials: int,
                   strategy: AuditStrategy = AuditStrategy.GREEDY,
                   rng: Optional[np.random.Generator] = None,
                   lemma4_ratio: Optional[float] = None) -> ImmunityReport:
    """
    Search sets S with 1 <= |S| <= floor(beta * n) for a large one-round
    takeover ratio |takeover_step(S)| / |S|. Every evaluated set counts as
    one trial. On regular graphs each set is also checked for
    |controlled_set(S, necessary)| >= ceil(lemma4_ratio * |S| / d).
    The result is an empirical certificate, not a proof.
    """
    if not (0.0 < beta <= 1.0):
        raise InvalidParameterError(f"beta must lie in (0, 1], got {beta}")
    if trials < 1:
        raise InvalidParameterError(f"trials must be at least 1, got {trials}")
    strategy = AuditStrategy(strategy)
    rng = rng if rng is not None else np.random.default_rng()
    ratio = default("lemma4_ratio") if lemma4_ratio is None else lemma4_ratio
    m_max = int(math.floor(beta * g.n))
    ledger = _AuditLedger(g, trials, ratio)
    restarts = 0
    if m_max >= 1:
        if strategy is AuditStrategy.UNIFORM:
            restarts = _uniform_audit(g, m_max, ledger, rng)
        else:
            restarts = _greedy_audit(g, m_max, ledger, rng)
    else:
        logger.info("beta*n = %.3f < 1: no set size to test", beta * g.n)
    logger.debug("immunity audit: %d sets, alpha=%.4f, %d findings",
                 ledger.tested, max(ledger.best_ratio, 0.0), len(ledger.findings))
    return ImmunityReport(
        alpha_observed=max(ledger.best_ratio, 0.0),
        beta=beta,
        violating_set=ledger.best_set,
        sets_tested=ledger.tested,
        strategy=strategy,
        restarts=restarts,
        control_checked=ledger.control_checked,
        control_findings=len(ledger.findings),
        lemma4_ratio=ratio,
        finding_sets=ledger.findings[:10],
    )


# ─────────────────────────────────────────
# Dynamos
# ─────────────────────────────────────────

@dataclass
class DynamoVerdict:
    is_dynamo: bool
    rounds: Optional[int]
    adversary: Adversary
    cap_hit: bool = False
    complements_checked: int = 1

    def __bool__(self) -> bool:
        return self.is_dynamo

    def to_dict(self) -> Dict[str, Any]:
        return {"is_dynamo": self.is_dynamo, "rounds_to_takeover": self.rounds,
                "adversary": self.adversary.value, "cap_hit": self.cap_hit,
                "complements_checked": self.complements_checked}


@dataclass
class DynamoSearchResult:
    best_size: Optional[int]
    best_set: Optional[VertexSet]
    exhaustive: bool
    rounds_to_takeover: Optional[int]
    evaluations: int = 0
    adversary: Adversary = Adversary.AUTO
    caveat: str = CANONICAL_CAVEAT

    def to_dict(self) -> Dict[str, Any]:
        return {"best_size": self.best_size, "best_set": _set_json(self.best_set),
                "exhaustive": self.exhaustive, "rounds_to_takeover": self.rounds_to_takeover,
                "evaluations": self.evaluations, "adversary": self.adversary.value,
                "caveat": self.caveat}


def _reaches_all_blue(g: Graph, states: np.ndarray, cap: int,
                      fail_fast: bool = False) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Batched trajectories until every row is all blue or repeats.

    Returns (ok, rounds, cap_hit) per row; rounds is -1 where ok is False.
    With fail_fast, stops as soon as one row repeats without being all blue.
    """
    rows = states.shape[0]
    ok = np.zeros(rows, dtype=bool)
    rounds = np.full(rows, -1, dtype=np.int64)
    cap_hit = np.zeros(rows, dtype=bool)
    start = states.all(axis=1)
    ok[start] = True
    rounds[start] = 0
    idx = np.flatnonzero(~start)
    cur = states[~start]
    older: Optional[np.ndarray] = None
    for t in range(1, cap + 1):
        if idx.size == 0:
            return ok, rounds, cap_hit
        nxt = majority_step_batch(g, cur)
        blue = nxt.all(axis=1)
        repeat = (nxt == cur).all(axis=1)
        if older is not None:
            repeat |= (nxt == older).all(axis=1)
        ok[idx[blue]] = True
        rounds[idx[blue]] = t
        if fail_fast and np.any(repeat & ~blue):
            return ok, rounds, cap_hit
        keep = ~(blue | repeat)
        idx, older, cur = idx[keep], cur[keep], nxt[keep]
    cap_hit[idx] = True
    return ok, rounds, cap_hit


def _exhaustive_dynamo(g: Graph, d_set: VertexSet, cap: int) -> DynamoVerdict:
    limit = default("exhaustive_dynamo_max_n")
    if g.n > limit:
        raise InvalidParameterError(f"exhaustive adversary needs n <= {limit}, got n={g.n}")
    outside = np.flatnonzero(~d_set.mask)
    r = outside.size
    total = 1 << r
    worst = 0
    checked = 0
    shifts = np.arange(r, dtype=np.int64)
    for lo in range(0, total, BATCH_ROWS):
        codes = np.arange(lo, min(total, lo + BATCH_ROWS), dtype=np.int64)
        states = np.zeros((codes.size, g.n), dtype=bool)
        states[:, d_set.mask] = True
        states[:, outside] = ((codes[:, None] >> shifts) & 1).astype(bool)
        ok, rounds, cap_hit = _reaches_all_blue(g, states, cap, fail_fast=True)
        checked += codes.size
        if not ok.all():
            return DynamoVerdict(False, None, Adversary.EXHAUSTIVE, bool(cap_hit.any()), checked)
        worst = max(worst, int(rounds.max()))
    return DynamoVerdict(True, worst, Adversary.EXHAUSTIVE, False, checked)


def is_dynamo(g: Graph, d_set: VertexSet, cap: Optional[int] = None,
              adversary: Adversary = Adversary.CANONICAL) -> DynamoVerdict:
    """
    Blue on D must reach the all-blue generation.

    canonical: a single run from blue-on-D, red elsewhere; a cap hit is
    reported as not-a-dynamo with cap_hit set. exhaustive: every complement
    coloring (n <= 20), rounds is the worst case over complements.
    """
    if d_set.n != g.n:
        raise InvalidParameterError(f"vertex set over {d_set.n} vertices, graph has {g.n}")
    if cap is None:
        cap = g.n * g.n + 2
    if cap < 1:
        raise InvalidParameterError(f"round cap must be at least 1, got {cap}")
    adversary = Adversary(adversary).resolve(g.n)
    if adversary is Adversary.EXHAUSTIVE:
        return _exhaustive_dynamo(g, d_set, cap)
    try:
        report = run_to_cycle(g, Coloring(d_set.mask), cap=cap)
    except CycleCapExceededError:
        return DynamoVerdict(False, None, Adversary.CANONICAL, cap_hit=True)
    if report.outcome is Outcome.BLUE:
        return DynamoVerdict(True, report.consensus_time, Adversary.CANONICAL)
    return DynamoVerdict(False, None, Adversary.CANONICAL)


def non_monotone_extensions(g: Graph, d_set: VertexSet,
                            adversary: Adversary = Adversary.CANONICAL) -> List[int]:
    """Vertices v outside a dynamo D for which D ∪ {v} is not a dynamo."""
    if not is_dynamo(g, d_set, adversary=adversary):
        return []
    broken = []
    for v in np.flatnonzero(~d_set.mask).tolist():
        mask = d_set.mask.copy()
        mask[v] = True
        if not is_dynamo(g, VertexSet.from_mask(mask), adversary=adversary):
            broken.append(v)
    if broken:
        logger.info("dynamo of size %d loses the property on %d one-vertex extensions",
                    d_set.size, len(broken))
    return broken


class _DynamoSearch:
    def __init__(self, g: Graph, budget: int, adversary: Adversary, rng: np.random.Generator):
        self.g = g
        self.budget = budget
        self.adversary = adversary
        self.rng = rng
        self.evaluations = 0
        self.best: Optional[Tuple[VertexSet, int]] = None

    @property
    def spent(self) -> bool:
        return self.evaluations >= self.budget

    def check(self, mask: np.ndarray) -> DynamoVerdict:
        self.evaluations += 1
        verdict = is_dynamo(self.g, VertexSet.from_mask(mask), adversary=self.adversary)
        if verdict:
            size = int(np.count_nonzero(mask))
            if self.best is None or size < self.best[0].size:
                self.best = (VertexSet.from_mask(mask), verdict.rounds)
        return verdict

    def shrink(self, mask: np.ndarray):
        for v in self.rng.permutation(np.flatnonzero(mask)).tolist():
            if self.spent:
                return
            trial = mask.copy()
            trial[v] = False
            if not trial.any():
                continue
            if self.check(trial):
                mask = trial

    def grow(self, mask: np.ndarray) -> Optional[np.ndarray]:
        a = self.g.to_sparse()
        while not self.spent:
            if self.check(mask):
                return mask
            if mask.all():
                return None
            hits = (a @ mask.astype(np.int32)).astype(float)
            hits[mask] = -1.0
            top = np.flatnonzero(hits == hits.max())
            mask = mask.copy()
            mask[int(self.rng.choice(top))] = True
        return None


def greedy_dynamo_search(g: Graph, budget: int, rng: Optional[np.random.Generator] = None,
                         adversary: Adversary = Adversary.AUTO,
                         seeds: Sequence[VertexSet] = ()) -> DynamoSearchResult:
    """
    Heuristic search for small dynamos within `budget` is_dynamo evaluations.

    The first pass shrinks V; later passes grow a seed (given seeds first,
    then 1-balls around random vertices) by the vertex with the most
    neighbors in the set until it is a dynamo, then shrink it greedily.
    """
    if budget < 1:
        raise InvalidParameterError(f"budget must be at least 1, got {budget}")
    rng = rng if rng is not None else np.random.default_rng()
    resolved = Adversary(adversary).resolve(g.n)
    if resolved is Adversary.CANONICAL:
        logger.warning(CANONICAL_CAVEAT)
    search = _DynamoSearch(g, budget, resolved, rng)
    if g.n == 0:
        return DynamoSearchResult(0, VertexSet(0), False, 0, 0, resolved)

    full = np.ones(g.n, dtype=bool)
    if search.check(full):
        search.shrink(full)
    pending = [s.mask.copy() for s in seeds if s.size]
    while not search.spent:
        if pending:
            start = pending.pop(0)
        else:
            start = ball(g, int(rng.integers(g.n)), 1).mask
        found = search.grow(start)
        if found is not None:
            search.shrink(found)

    if search.best is None:
        return DynamoSearchResult(None, None, False, None, search.evaluations, resolved)
    best, rounds = search.best
    logger.debug("greedy dynamo search: size %d after %d evaluations", best.size, search.evaluations)
    return DynamoSearchResult(best.size, best, False, rounds, search.evaluations, resolved)


def _combination_batches(n: int, k: int) -> Any:
    it = itertools.combinations(range(n), k)
    while True:
        chunk = list(itertools.islice(it, BATCH_ROWS))
        if not chunk:
            return
        yield chunk


def exact_min_dynamo_search(g: Graph, cap: Optional[int] = None) -> DynamoSearchResult:
    """
    Smallest dynamo by increasing subset size. Every complement is tried
    up to exhaustive_adversary_max_n vertices, the all-red complement above
    that. The all-red run is a cheap batched prefilter in both cases.
    """
    limit = default("exhaustive_dynamo_max_n")
    if g.n > limit:
        raise InvalidParameterError(f"exact dynamo search needs n <= {limit}, got n={g.n}")
    if cap is None:
        cap = g.n * g.n + 2
    adversary = Adversary.AUTO.resolve(g.n)
    if g.n == 0:
        return DynamoSearchResult(0, VertexSet(0), True, 0, 0, adversary)
    evaluations = 0
    for k in range(1, g.n + 1):
        for chunk in _combination_batches(g.n, k):
            states = np.zeros((len(chunk), g.n), dtype=bool)
            rows = np.repeat(np.arange(len(chunk)), k)
            states[rows, np.asarray(chunk, dtype=np.int64).ravel()] = True
            ok, _, _ = _reaches_all_blue(g, states, cap)
            evaluations += len(chunk)
            for row in np.flatnonzero(ok).tolist():
                candidate = VertexSet.from_mask(states[row])
                verdict = is_dynamo(g, candidate, cap=cap, adversary=adversary)
                if verdict:
                    return DynamoSearchResult(k, candidate, True, verdict.rounds,
                                              evaluations, adversary)
    # V itself always qualifies, so this is unreachable for n >= 1
    return DynamoSearchResult(None, None, True, None, evaluations, adversary)


def exhaustive_min_dynamo(g: Graph) -> int:
    return exact_min_dynamo_search(g).best_size
