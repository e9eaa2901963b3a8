#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
experiments.py — Seeded Monte Carlo harness.

Every trial owns two random streams derived from (master_seed, grid point,
trial index): stream 0 builds the graph, stream 1 colors it. Trials are
independent and run on a process pool; results are folded back in trial
order, so the thread count never changes the output.

  ExperimentSpec                  — what to run (parsed from spec files by the CLI)
  run_density_experiment          — p_b < 1/2 on G(n,d): red consensus and round counts
  run_low_degree_threshold        — thresholds for degrees 0, 1 and 2
  run_tree_audit                  — non-tree neighborhoods vs. 4 d^(2k) and log2^(2c'+1) n
  run_propagation_validation      — explicit tree Monte Carlo vs. the recurrence
  run_immunity_experiment         — takeover ratios and small dynamos on G(n,d)
  run_gnp_experiment              — one-round behaviour on G(n,p)
  run_small_set_extinction        — sets below n/c'' die out
  run_tightness_probe             — disjoint all-blue balls keep blue alive for k' rounds
  run_torus_threshold             — p_b around n^(-1/4) on the torus
  run_lemma4_audit                — adversarial control-set audit with |S| <= n/c''
  summarize                       — frequencies, confidence half-widths, round stats
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from functools import lru_cache
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from dynamics import (Coloring, Outcome, majority_step, random_coloring, run_rounds,
                      run_to_cycle)
from graph_core import (FAMILIES, SAMPLING_METHODS, Graph, build_family_graph,
                        count_non_tree_neighborhoods, generate_complete, lemma1_regime,
                        select_disjoint_balls, ball)
from monopoly import (AuditStrategy, control_report, exhaustive_min_dynamo, greedy_dynamo_search,
                      immunity_audit)
from systems import (AttemptsExhaustedError, CycleCapExceededError, InvalidParameterError,
                     TreeBudgetError, check_probability, default, derive_seed, get_logger,
                     make_rng)
from theory import (binomial_sigma, corollary3_bound, extinction_round_bound, lemma1_bound,
                    predicted_round_bound, propagation_recurrence)

logger = get_logger(__name__)

KINDS = ("density", "low-degree", "gnp", "extinction", "tightness", "torus",
         "tree-audit", "immunity", "lemma4")
SWEEP_CSV_HEADER = ("pb", "n", "d", "trials", "red_freq", "red_ci", "blue_freq",
                    "mean_rounds", "max_rounds")
Z_95 = 1.96

GRAPH_STREAM = 0
COLORING_STREAM = 1


# ─────────────────────────────────────────
# Spec
# ─────────────────────────────────────────

@dataclass
class ExperimentSpec:
    kind: str = "density"
    family: str = "regular"
    n: int = 0
    d: int = 0
    p: float = 0.0
    lengths: List[int] = field(default_factory=list)
    side: int = 0
    p_b: float = 0.25
    pb_grid: List[float] = field(default_factory=list)
    c_grid: List[float] = field(default_factory=list)
    trials: int = 100
    master_seed: int = 0
    c_prime: float = 1.0
    c_prime_grid: List[float] = field(default_factory=list)
    c_double_prime: float = field(default_factory=lambda: float(default("c_double_prime")))
    k: int = 1
    k_grid: List[int] = field(default_factory=list)
    beta: float = field(default_factory=lambda: float(default("immunity_beta")))
    round_cap: Optional[int] = None
    max_attempts: Optional[int] = None
    method: str = "auto"
    fixed_graph: bool = False
    threads: int = 1
    audit_trials: int = 1000
    dynamo_budget: int = 200
    strategy: str = "greedy"
    keep_records: bool = False

    def validate(self) -> "ExperimentSpec":
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        if self.family not in FAMILIES:
            raise InvalidParameterError(f"unknown graph family {self.family!r}; expected one of {FAMILIES}")
        if self.method not in SAMPLING_METHODS:
            raise InvalidParameterError(f"unknown sampling method {self.method!r}")
        if self.trials < 1:
            raise InvalidParameterError(f"trials must be at least 1, got {self.trials}")
        if self.threads < 1:
            raise InvalidParameterError(f"threads must be at least 1, got {self.threads}")
        if self.master_seed < 0:
            raise InvalidParameterError(f"master seed must be non-negative, got {self.master_seed}")
        check_probability("p", self.p)
        check_probability("p_b", self.p_b)
        for pb in self.pb_grid:
            check_probability("p_b grid value", pb)
        if self.round_cap is not None and self.round_cap < 1:
            raise InvalidParameterError(f"round cap must be at least 1, got {self.round_cap}")
        if self.c_double_prime <= 0:
            raise InvalidParameterError(f"c'' must be positive, got {self.c_double_prime}")
        AuditStrategy(self.strategy)
        return self

    def order(self) -> int:
        """Vertex count of the family this spec describes."""
        if self.family == "cycle-union":
            return sum(self.lengths)
        if self.family == "torus":
            return self.side * self.side
        return self.n

    def degree(self) -> int:
        if self.family in ("cycle-union",):
            return 2
        if self.family == "matching":
            return 1
        if self.family == "empty":
            return 0
        if self.family == "torus":
            return 4
        return self.d

    def grid(self) -> List[float]:
        return list(self.pb_grid) if self.pb_grid else [self.p_b]

    def prime_grid(self) -> List[float]:
        return list(self.c_prime_grid) if self.c_prime_grid else list(default("c_prime_grid"))

    def to_dict(self) -> Dict[str, Any]:
        """Every field except threads, which never changes what a run produces."""
        d = asdict(self)
        d.pop("threads")
        return d

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "ExperimentSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InvalidParameterError(f"unknown spec keys: {sorted(unknown)}")
        return cls(**d)


# ─────────────────────────────────────────
# Records and summaries
# ─────────────────────────────────────────

@dataclass
class TrialRecord:
    trial_index: int
    graph_seed: int
    coloring_seed: int
    outcome: Optional[str]
    consensus_time: Optional[int]
    period: Optional[int]
    final_blue_count: Optional[int]
    rounds_cap_hit: bool = False
    point_index: int = 0
    p_b: float = 0.0
    initial_blue_count: Optional[int] = None
    round1_blue_count: Optional[int] = None
    failure: Optional[str] = None  # "cap_exceeded" | "attempts_exhausted"

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: Dict[str, Any]) -> "TrialRecord":
        return cls(**d)


@dataclass
class SummaryStats:
    trials: int
    completed: int
    red_freq: float
    red_ci: float
    blue_freq: float            # blue survives: outcome is not red-monochromatic
    blue_ci: float
    blue_mono_freq: float
    coexistence_freq: float
    coexistence_ci: float
    min_rounds: Optional[int]
    mean_rounds: Optional[float]
    max_rounds: Optional[int]
    failures: Dict[str, int] = field(default_factory=dict)
    ci_reliable: bool = True

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def half_width(freq: float, trials: int) -> float:
    if trials < 1:
        return 0.0
    return Z_95 * math.sqrt(max(freq * (1.0 - freq), 0.0) / trials)


def summarize(records: Sequence[TrialRecord]) -> SummaryStats:
    """Frequencies over completed trials with normal-approximation 95% half-widths."""
    if not records:
        raise InvalidParameterError("cannot summarize an empty record list")
    failures: Dict[str, int] = {"cap_exceeded": 0, "attempts_exhausted": 0}
    done = []
    for r in records:
        if r.failure is None:
            done.append(r)
        else:
            failures[r.failure] = failures.get(r.failure, 0) + 1
    total = len(done)

    def freq(pred: Callable[[TrialRecord], bool]) -> float:
        return sum(1 for r in done if pred(r)) / total if total else 0.0

    red = freq(lambda r: r.outcome == Outcome.RED.value)
    blue_mono = freq(lambda r: r.outcome == Outcome.BLUE.value)
    coexist = freq(lambda r: r.outcome is not None and Outcome(r.outcome).is_coexistence)
    rounds = [r.consensus_time for r in done]
    return SummaryStats(
        trials=len(records),
        completed=total,
        red_freq=red,
        red_ci=half_width(red, total),
        blue_freq=1.0 - red if total else 0.0,
        blue_ci=half_width(1.0 - red, total) if total else 0.0,
        blue_mono_freq=blue_mono,
        coexistence_freq=coexist,
        coexistence_ci=half_width(coexist, total),
        min_rounds=min(rounds) if rounds else None,
        mean_rounds=sum(rounds) / len(rounds) if rounds else None,
        max_rounds=max(rounds) if rounds else None,
        failures=failures,
        ci_reliable=total >= default("ci_floor_trials"),
    )


@dataclass
class SweepPoint:
    pb: float
    n: int
    d: int
    summary: SummaryStats
    extras: Dict[str, Any] = field(default_factory=dict)

    def csv_row(self) -> List[str]:
        s = self.summary
        mean = "" if s.mean_rounds is None else f"{s.mean_rounds:.4f}"
        top = "" if s.max_rounds is None else str(s.max_rounds)
        return [f"{self.pb:.10g}", str(self.n), str(self.d), str(s.trials),
                f"{s.red_freq:.6f}", f"{s.red_ci:.6f}", f"{s.blue_freq:.6f}", mean, top]

    def to_dict(self) -> Dict[str, Any]:
        return {"pb": self.pb, "n": self.n, "d": self.d, "summary": self.summary.to_dict(),
                "extras": self.extras}


@dataclass
class SweepResult:
    kind: str
    spec: ExperimentSpec
    points: List[SweepPoint] = field(default_factory=list)
    records: List[TrialRecord] = field(default_factory=list)
    monotone_warnings: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def csv_header(self) -> Tuple[str, ...]:
        return SWEEP_CSV_HEADER

    def csv_rows(self) -> List[List[str]]:
        return [p.csv_row() for p in self.points]

    def to_dict(self, include_records: Optional[bool] = None) -> Dict[str, Any]:
        if include_records is None:
            include_records = self.spec.keep_records
        d = {"kind": self.kind, "spec": self.spec.to_dict(),
             "points": [p.to_dict() for p in self.points],
             "monotone_warnings": [list(w) for w in self.monotone_warnings]}
        if include_records:
            d["records"] = [r.to_dict() for r in self.records]
        return d


@dataclass
class AuditTable:
    """Row-per-item result for the audit style experiments."""
    kind: str
    columns: Tuple[str, ...]
    rows: List[Dict[str, Any]] = field(default_factory=list)
    summary: Dict[str, Any] = field(default_factory=dict)

    @property
    def csv_header(self) -> Tuple[str, ...]:
        return self.columns

    def csv_rows(self) -> List[List[str]]:
        out = []
        for row in self.rows:
            cells = []
            for col in self.columns:
                v = row.get(col)
                if v is None:
                    cells.append("")
                elif isinstance(v, float):
                    cells.append(f"{v:.6g}")
                else:
                    cells.append(str(v))
            out.append(cells)
        return out

    def to_dict(self, include_records: bool = False) -> Dict[str, Any]:
        return {"kind": self.kind, "columns": list(self.columns), "rows": self.rows,
                "summary": self.summary}


# ─────────────────────────────────────────
# Trial plumbing
# ─────────────────────────────────────────

def trial_seeds(master_seed: int, point: int, trial: int) -> Tuple[int, int]:
    return (derive_seed(master_seed, point, trial, GRAPH_STREAM),
            derive_seed(master_seed, point, trial, COLORING_STREAM))


@lru_cache(maxsize=8)
def _cached_graph(family: str, n: int, d: int, p: float, lengths: Tuple[int, ...], side: int,
                  max_attempts: Optional[int], method: str, seed: int) -> Graph:
    return build_family_graph(family, make_rng(seed), n=n, d=d, p=p, lengths=lengths,
                              side=side, max_attempts=max_attempts, method=method)


def trial_graph(spec: ExperimentSpec, point: int, trial: int) -> Tuple[Graph, int]:
    """The graph for one trial and the seed it came from; fixed_graph reuses (0, 0)."""
    if spec.fixed_graph or spec.family in ("cycle-union", "matching", "empty", "torus"):
        seed = derive_seed(spec.master_seed, 0, 0, GRAPH_STREAM)
    else:
        seed = derive_seed(spec.master_seed, point, trial, GRAPH_STREAM)
    g = _cached_graph(spec.family, spec.n, spec.d, spec.p, tuple(spec.lengths), spec.side,
                      spec.max_attempts, spec.method, seed)
    return g, seed


def _map_trials(fn: Callable, tasks: List[Any], threads: int) -> List[Any]:
    """Order-preserving map; threads=1 stays in this process."""
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    chunk = max(1, len(tasks) // (threads * 4))
    with ProcessPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(fn, tasks, chunksize=chunk))


def _consensus_trial(task: Tuple[ExperimentSpec, int, int, float]) -> TrialRecord:
    spec, point, trial, p_b = task
    _, coloring_seed = trial_seeds(spec.master_seed, point, trial)
    try:
        g, graph_seed = trial_graph(spec, point, trial)
    except AttemptsExhaustedError:
        return TrialRecord(trial, derive_seed(spec.master_seed, point, trial, GRAPH_STREAM),
                           coloring_seed, None, None, None, None, point_index=point, p_b=p_b,
                           failure="attempts_exhausted")
    rng = make_rng(coloring_seed)
    if spec.kind == "extinction":
        size = int(g.n // spec.c_double_prime)
        c0 = Coloring.from_blue_set(g.n, rng.choice(g.n, size=size, replace=False).tolist())
    else:
        c0 = random_coloring(g.n, p_b, rng)
    round1 = majority_step(g, c0).blue_count() if spec.kind == "gnp" else None
    try:
        report = run_to_cycle(g, c0, cap=spec.round_cap)
    except CycleCapExceededError:
        logger.warning("trial %d at p_b=%g hit the round cap", trial, p_b)
        return TrialRecord(trial, graph_seed, coloring_seed, None, None, None, None,
                           rounds_cap_hit=True, point_index=point, p_b=p_b,
                           initial_blue_count=c0.blue_count(), round1_blue_count=round1,
                           failure="cap_exceeded")
    return TrialRecord(trial, graph_seed, coloring_seed, report.outcome.value,
                       report.consensus_time, report.period, report.final_blue_count,
                       point_index=point, p_b=p_b, initial_blue_count=c0.blue_count(),
                       round1_blue_count=round1)


def _monotone_warnings(points: List[SweepPoint]) -> List[Tuple[float, float]]:
    """Adjacent grid points (ascending p_b) where red frequency rises beyond both half-widths."""
    ordered = sorted(points, key=lambda p: p.pb)
    flagged = []
    for a, b in zip(ordered, ordered[1:]):
        if b.summary.red_freq - a.summary.red_freq > a.summary.red_ci + b.summary.red_ci:
            flagged.append((a.pb, b.pb))
    for lo, hi in flagged:
        logger.info("red frequency rises between p_b=%g and p_b=%g", lo, hi)
    return flagged


def _sweep(spec: ExperimentSpec, grid: List[float],
           extras: Callable[[float, SummaryStats, List[TrialRecord]], Dict[str, Any]]) -> SweepResult:
    tasks = [(spec, i, t, pb) for i, pb in enumerate(grid) for t in range(spec.trials)]
    records = _map_trials(_consensus_trial, tasks, spec.threads)
    result = SweepResult(spec.kind, spec)
    n, d = spec.order(), spec.degree()
    for i, pb in enumerate(grid):
        chunk = records[i * spec.trials:(i + 1) * spec.trials]
        stats = summarize(chunk)
        if stats.failures.get("cap_exceeded"):
            logger.warning("%d trials at p_b=%g hit the round cap", stats.failures["cap_exceeded"], pb)
        result.points.append(SweepPoint(pb, n, d, stats, extras(pb, stats, chunk)))
    result.records = records
    result.monotone_warnings = _monotone_warnings(result.points)
    return result


def _require_family(spec: ExperimentSpec, allowed: Sequence[str], what: str):
    if spec.family not in allowed:
        raise InvalidParameterError(f"{what} needs family in {tuple(allowed)}, got {spec.family!r}")


# ─────────────────────────────────────────
# Density classification
# ─────────────────────────────────────────

def run_density_experiment(spec: ExperimentSpec) -> SweepResult:
    """
    Fresh G(n,d) and fresh coloring per trial, run to the limit cycle.
    p_b = 1/2 is accepted as an out-of-hypothesis control point.
    """
    spec.validate()
    _require_family(spec, ("regular",), "density experiment")
    grid = spec.grid()
    for pb in grid:
        if pb > 0.5:
            raise InvalidParameterError(f"density experiment needs p_b <= 1/2, got {pb}")
    bounds = {}
    if spec.n >= 4 and spec.d >= 2:
        bounds = {str(c): predicted_round_bound(spec.d, spec.n, c) for c in spec.prime_grid()}

    def extras(pb: float, stats: SummaryStats, _records) -> Dict[str, Any]:
        return {"in_hypothesis": pb < 0.5, "eps": 0.5 - pb, "predicted_round_bound": bounds}

    return _sweep(spec, grid, extras)


# ─────────────────────────────────────────
# Degrees 0, 1, 2
# ─────────────────────────────────────────

def low_degree_scale(spec: ExperimentSpec) -> Tuple[str, float]:
    n = spec.order()
    if n < 1:
        raise InvalidParameterError("low-degree sweep needs at least one vertex")
    if spec.degree() == 2:
        return "1/sqrt(n)", 1.0 / math.sqrt(n)
    return "1/n", 1.0 / n


def run_low_degree_threshold(spec: ExperimentSpec) -> SweepResult:
    """Blue survival across p_b = c/n (degrees 0, 1) or c/sqrt(n) (degree 2)."""
    spec.validate()
    _require_family(spec, ("empty", "matching", "cycle-union", "regular"), "low-degree sweep")
    if spec.family == "regular" and spec.d != 2:
        raise InvalidParameterError(f"low-degree sweep on regular graphs needs d=2, got d={spec.d}")
    label, scale = low_degree_scale(spec)
    if spec.pb_grid:
        grid = list(spec.pb_grid)
        cs = [pb / scale for pb in grid]
    else:
        cs = list(spec.c_grid) if spec.c_grid else list(default("low_degree_c_grid"))
        kept = [c for c in cs if c * scale <= 1.0]
        if len(kept) < len(cs):
            logger.info("low-degree sweep: dropping c %s, p_b = c*%s exceeds 1 at n=%d",
                        [c for c in cs if c not in kept], label, spec.order())
        if not kept:
            raise InvalidParameterError(f"every c in the grid gives p_b > 1 at n={spec.order()}")
        cs = kept
        grid = [c * scale for c in cs]
    for pb in grid:
        check_probability("p_b grid value", pb)
    by_pb = dict(zip(grid, cs))

    def extras(pb: float, stats: SummaryStats, _records) -> Dict[str, Any]:
        return {"c": by_pb[pb], "scale": label}

    return _sweep(spec, grid, extras)


# ─────────────────────────────────────────
# Tree audits
# ─────────────────────────────────────────

def _tree_audit_trial(task: Tuple[ExperimentSpec, int, Tuple[int, ...]]) -> Dict[int, int]:
    spec, trial, ks = task
    g, _ = trial_graph(spec, 0, trial)
    return {k: count_non_tree_neighborhoods(g, k) for k in ks}


def run_tree_audit(spec: ExperimentSpec) -> AuditTable:
    """
    Per sampled G(n,d): non-tree k-neighborhood counts for every k in k_grid
    (against 4 d^(2k)) and at k = predicted_round_bound(d, n, c') for every
    c' (against log2^(2c'+1) n).
    """
    spec.validate()
    _require_family(spec, ("regular",), "tree audit")
    if spec.d < 3:
        raise InvalidParameterError(f"tree audit needs d >= 3, got d={spec.d}")
    primes = spec.prime_grid()
    prime_ks = {c: predicted_round_bound(spec.d, spec.n, c) for c in primes}
    ks = tuple(sorted(set(spec.k_grid) | set(prime_ks.values())))
    counts = _map_trials(_tree_audit_trial, [(spec, t, ks) for t in range(spec.trials)], spec.threads)

    def row(k: int, c_prime: Optional[float]) -> Dict[str, Any]:
        values = [c[k] for c in counts]
        mean = sum(values) / len(values)
        bound = lemma1_bound(spec.d, k)
        r = {"k": k, "c_prime": c_prime, "n": spec.n, "d": spec.d, "graphs": len(values),
             "mean_count": mean, "max_count": max(values), "lemma1_bound": bound,
             "mean_within_lemma1": mean <= bound,
             "lemma1_regime": lemma1_regime(spec.n, spec.d, k),
             "corollary3_bound": None, "exceed_frac": None, "counts": values}
        if c_prime is not None:
            cap = corollary3_bound(spec.n, c_prime)
            r["corollary3_bound"] = cap
            r["exceed_frac"] = sum(1 for v in values if v > cap) / len(values)
        return r

    rows = [row(k, None) for k in sorted(set(spec.k_grid))]
    rows.extend(row(prime_ks[c], c) for c in primes)
    columns = ("k", "c_prime", "n", "d", "graphs", "mean_count", "max_count",
               "lemma1_bound", "corollary3_bound", "exceed_frac")
    return AuditTable("tree-audit", columns, rows,
                      {"all_means_within_lemma1": all(r["mean_within_lemma1"] for r in rows)})


# ─────────────────────────────────────────
# Propagation process
# ─────────────────────────────────────────

@dataclass
class PropagationComparison:
    d: int
    p_b: float
    k: int
    trials: int
    empirical: float
    predicted: float
    sigma: float
    z_score: Optional[float]
    within_3_sigma: bool
    curve: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def simulate_propagation_roots(d: int, p_b: float, k: int, trials: int,
                               rng: np.random.Generator, budget: Optional[int] = None) -> int:
    """
    Number of trials whose root ends blue. Each trial colors the (d-1)^k
    leaves of a depth-k tree, then every internal vertex is blue iff at
    least floor((d-1)/2) of its d-1 children are.
    """
    if d < 3 or d % 2 == 0:
        raise InvalidParameterError(f"propagation needs an odd degree >= 3, got d={d}")
    check_probability("p_b", p_b)
    if k < 0:
        raise InvalidParameterError(f"depth must be non-negative, got k={k}")
    if trials < 1:
        raise InvalidParameterError(f"trials must be at least 1, got {trials}")
    budget = default("propagation_tree_budget") if budget is None else budget
    children = d - 1
    leaves = children ** k
    if leaves > budget:
        raise TreeBudgetError(f"tree with {leaves} leaves exceeds the budget of {budget}")
    need = children // 2
    per_chunk = max(1, (1 << 22) // leaves)
    blue_roots = 0
    done = 0
    while done < trials:
        rows = min(per_chunk, trials - done)
        level = rng.random((rows, leaves)) < p_b
        for _ in range(k):
            level = level.reshape(rows, -1, children).sum(axis=2, dtype=np.int32) >= need
        blue_roots += int(np.count_nonzero(level[:, 0]))
        done += rows
    return blue_roots


def run_propagation_validation(d: int, p_b: float, k: int, trials: int,
                               rng: np.random.Generator,
                               budget: Optional[int] = None) -> PropagationComparison:
    blue = simulate_propagation_roots(d, p_b, k, trials, rng, budget)
    curve = propagation_recurrence(d, p_b, k)
    predicted = curve.values[-1]
    empirical = blue / trials
    sigma = binomial_sigma(predicted, trials)
    gap = abs(empirical - predicted)
    if sigma > 0:
        z, within = (empirical - predicted) / sigma, gap <= 3 * sigma
    else:
        z, within = (0.0 if gap == 0 else None), gap == 0
    return PropagationComparison(d, p_b, k, trials, empirical, predicted, sigma, z, within,
                                 curve.values)


# ─────────────────────────────────────────
# Immunity and control
# ─────────────────────────────────────────

def _immunity_trial(task: Tuple[ExperimentSpec, int, bool]) -> Dict[str, Any]:
    spec, trial, with_dynamo = task
    g, graph_seed = trial_graph(spec, 0, trial)
    rng = make_rng(derive_seed(spec.master_seed, 0, trial, COLORING_STREAM))
    audit = immunity_audit(g, spec.beta, spec.audit_trials, spec.strategy, rng)
    row = {"graph": trial, "graph_seed": graph_seed, "sets_tested": audit.sets_tested,
           "alpha_observed": audit.alpha_observed, "control_checked": audit.control_checked,
           "control_findings": audit.control_findings,
           "witness": audit.violating_set.to_list() if audit.violating_set else None,
           "finding_reports": [control_report(g, s).to_dict() for s in audit.finding_sets],
           "min_dynamo_found": None, "dynamo_evaluations": None}
    if with_dynamo:
        seeds = [audit.violating_set] if audit.violating_set is not None else []
        found = greedy_dynamo_search(g, spec.dynamo_budget, rng, seeds=seeds)
        row["min_dynamo_found"] = found.best_size
        row["dynamo_evaluations"] = found.evaluations
    return row


def run_immunity_experiment(spec: ExperimentSpec) -> AuditTable:
    """Per sampled G(n,d): adversarial takeover ratio, control findings, smallest dynamo found."""
    spec.validate()
    _require_family(spec, ("regular",), "immunity experiment")
    if spec.d < 10:
        raise InvalidParameterError(f"immunity experiment needs d >= 10, got d={spec.d}")
    rows = _map_trials(_immunity_trial, [(spec, t, True) for t in range(spec.trials)], spec.threads)
    benchmark = default("lemma4_ratio") / spec.d
    alpha_max = max(r["alpha_observed"] for r in rows)
    sizes = [r["min_dynamo_found"] for r in rows if r["min_dynamo_found"] is not None]
    control = exhaustive_min_dynamo(generate_complete(4))
    summary = {
        "alpha_max": alpha_max,
        "benchmark_ratio": benchmark,
        "alpha_below_benchmark": alpha_max < benchmark,
        "control_findings": sum(r["control_findings"] for r in rows),
        "min_dynamo_found": min(sizes) if sizes else None,
        "k4_min_dynamo": control,
    }
    columns = ("graph", "sets_tested", "alpha_observed", "control_findings", "min_dynamo_found")
    return AuditTable("immunity", columns, rows, summary)


def run_lemma4_audit(spec: ExperimentSpec) -> AuditTable:
    """Greedy adversarial search over |S| <= n/c'' counting control findings per graph."""
    spec.validate()
    _require_family(spec, ("regular",), "control audit")
    audit_spec = replace(spec, beta=1.0 / spec.c_double_prime)
    rows = _map_trials(_immunity_trial, [(audit_spec, t, False) for t in range(spec.trials)],
                       spec.threads)
    findings = sum(r["control_findings"] for r in rows)
    if findings:
        logger.warning("control audit found %d sets beating the ceil(%g|S|/d) bound",
                       findings, default("lemma4_ratio"))
    columns = ("graph", "sets_tested", "control_checked", "control_findings", "alpha_observed")
    return AuditTable("lemma4", columns, rows,
                      {"findings": findings, "max_set_size": int(spec.order() // spec.c_double_prime)})


# ─────────────────────────────────────────
# G(n,p)
# ─────────────────────────────────────────

def gnp_regime(n: int, p: float) -> str:
    if n < 2:
        return "sparse"
    return "dense" if p >= math.log(n) / n else "sparse"


def run_gnp_experiment(spec: ExperimentSpec) -> SweepResult:
    """
    One round and the full dynamics on G(n,p). Both monochromatic outcomes
    after round one are reported separately.
    """
    spec.validate()
    _require_family(spec, ("gnp",), "G(n,p) experiment")
    regime = gnp_regime(spec.n, spec.p)

    def extras(pb: float, stats: SummaryStats, records: List[TrialRecord]) -> Dict[str, Any]:
        done = [r for r in records if r.round1_blue_count is not None]
        total = len(done) or 1
        red1 = sum(1 for r in done if r.round1_blue_count == 0) / total
        blue1 = sum(1 for r in done if r.round1_blue_count == spec.n) / total
        return {"p": spec.p, "regime": regime, "one_round_red_freq": red1,
                "one_round_blue_freq": blue1, "coexistence_freq": stats.coexistence_freq}

    return _sweep(spec, spec.grid(), extras)


# ─────────────────────────────────────────
# Supplementary probes
# ─────────────────────────────────────────

def run_small_set_extinction(spec: ExperimentSpec) -> SweepResult:
    """A uniformly random blue set of size floor(n/c'') on G(n,d); rounds vs. ceil(log_d n)."""
    spec.validate()
    _require_family(spec, ("regular",), "extinction probe")
    n = spec.order()
    size = int(n // spec.c_double_prime)
    horizon = extinction_round_bound(spec.d, n) if spec.d >= 2 and n >= 2 else None

    def extras(pb: float, stats: SummaryStats, _records) -> Dict[str, Any]:
        within = None
        if horizon is not None and stats.max_rounds is not None:
            within = stats.max_rounds <= horizon
        return {"blue_set_size": size, "log_d_n": horizon, "max_rounds_within_log_d_n": within}

    return _sweep(spec, [size / n if n else 0.0], extras)


def tightness_depth(d: int, n: int) -> int:
    """k' = floor(log_d(log2 n) / 2), at least 1."""
    if d < 2 or n < 4:
        raise InvalidParameterError(f"need d >= 2 and n >= 4, got d={d}, n={n}")
    return max(1, int(math.floor(math.log(math.log2(n)) / math.log(d) / 2 + 1e-9)))


def _tightness_trial(task: Tuple[ExperimentSpec, int, int]) -> Dict[str, Any]:
    spec, trial, k_prime = task
    g, _ = trial_graph(spec, 0, trial)
    rng = make_rng(derive_seed(spec.master_seed, 0, trial, COLORING_STREAM))
    c0 = random_coloring(g.n, spec.p_b, rng)
    centers = select_disjoint_balls(g, k_prime)
    full = sum(1 for v in centers if np.all(c0.blue[ball(g, v, k_prime).mask]))
    counts, _ = run_rounds(g, c0, k_prime)
    return {"trial": trial, "disjoint_balls": len(centers), "all_blue_balls": full,
            "blue_after": counts[-1], "blue_alive": counts[-1] > 0}


def run_tightness_probe(spec: ExperimentSpec) -> AuditTable:
    """Whether blue survives k' rounds, and how many disjoint k'-balls start all blue."""
    spec.validate()
    _require_family(spec, ("regular",), "tightness probe")
    k_prime = tightness_depth(spec.d, spec.n)
    rows = _map_trials(_tightness_trial, [(spec, t, k_prime) for t in range(spec.trials)],
                       spec.threads)
    alive = sum(1 for r in rows if r["blue_alive"]) / len(rows)
    summary = {
        "k_prime": k_prime, "p_b": spec.p_b,
        "blue_alive_freq": alive, "blue_alive_ci": half_width(alive, len(rows)),
        "mean_disjoint_balls": sum(r["disjoint_balls"] for r in rows) / len(rows),
        "mean_all_blue_balls": sum(r["all_blue_balls"] for r in rows) / len(rows),
    }
    columns = ("trial", "disjoint_balls", "all_blue_balls", "blue_after", "blue_alive")
    return AuditTable("tightness", columns, rows, summary)


def run_torus_threshold(spec: ExperimentSpec) -> SweepResult:
    """p_b = c * n^(-1/4) on the side x side torus."""
    spec.validate()
    _require_family(spec, ("torus",), "torus sweep")
    n = spec.order()
    scale = n ** -0.25
    if spec.pb_grid:
        grid = list(spec.pb_grid)
    else:
        cs = list(spec.c_grid) if spec.c_grid else list(default("low_degree_c_grid"))
        grid = [min(1.0, c * scale) for c in cs]

    def extras(pb: float, stats: SummaryStats, _records) -> Dict[str, Any]:
        return {"c": pb / scale, "scale": "n^(-1/4)"}

    return _sweep(spec, grid, extras)


RUNNERS: Dict[str, Callable[[ExperimentSpec], Any]] = {
    "density": run_density_experiment,
    "low-degree": run_low_degree_threshold,
    "gnp": run_gnp_experiment,
    "extinction": run_small_set_extinction,
    "tightness": run_tightness_probe,
    "torus": run_torus_threshold,
    "tree-audit": run_tree_audit,
    "immunity": run_immunity_experiment,
    "lemma4": run_lemma4_audit,
}


def run_experiment(spec: ExperimentSpec):
    spec.validate()
    logger.info("running %s: family=%s trials=%d seed=%d threads=%d",
                spec.kind, spec.family, spec.trials, spec.master_seed, spec.threads)
    return RUNNERS[spec.kind](spec)
