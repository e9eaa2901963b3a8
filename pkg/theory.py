#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
theory.py — Closed-form oracles the simulations are measured against.

  propagation_recurrence(d, p_b, k) — per-level blue probability in the propagation process
  p1_exponential_bound(d, eps)      — Hoeffding-style bound on the first level
  lemma1_bound(d, k)                — expected number of non-tree k-neighborhoods
  predicted_round_bound(d, n, c')   — the tree depth k = ceil(c' log_d log2 n)
  corollary3_bound(n, c')           — w.h.p. cap on non-tree neighborhoods at that depth
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List

import numpy as np
from scipy.stats import binom

from systems import InvalidParameterError, check_probability

# P_i <= P_{i-1}^{(d-1)/4} once P_{i-1} drops to this level
CONTRACTION_THRESHOLD = 1.0 / 16.0


@dataclass
class PropagationCurve:
    d: int
    p_b: float
    values: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _check_odd_degree(d: int):
    if d < 3 or d % 2 == 0:
        raise InvalidParameterError(f"recurrence needs an odd degree >= 3, got d={d}")


def child_threshold(d: int) -> int:
    """A tree vertex turns blue when at least this many of its d-1 children are blue."""
    return (d - 1) // 2


def propagation_step(d: int, p: float) -> float:
    """P(Binomial(d-1, p) >= floor((d-1)/2)), computed as a survival function."""
    _check_odd_degree(d)
    check_probability("p", p)
    value = float(binom.sf(child_threshold(d) - 1, d - 1, p))
    return min(1.0, max(0.0, value))


def propagation_recurrence(d: int, p_b: float, k: int) -> PropagationCurve:
    """
    P_0 = p_b and P_i = sum_{j >= floor((d-1)/2)} C(d-1, j) P_{i-1}^j (1 - P_{i-1})^{d-1-j}.

    The root level uses the same d-1 children as every other level.
    """
    _check_odd_degree(d)
    check_probability("p_b", p_b)
    if k < 0:
        raise InvalidParameterError(f"depth must be non-negative, got k={k}")
    values = [float(p_b)]
    for _ in range(k):
        values.append(propagation_step(d, values[-1]))
    return PropagationCurve(d, float(p_b), values)


def p1_exponential_bound(d: int, eps: float) -> float:
    if d < 3:
        raise InvalidParameterError(f"bound needs d >= 3, got d={d}")
    if not (0.0 < eps <= 0.5):
        raise InvalidParameterError(f"eps must lie in (0, 1/2], got {eps}")
    return math.exp(-2.0 * (d - 1) * eps * eps)


def lemma1_bound(d: int, k: int) -> int:
    """4 * d^(2k), exact integer arithmetic."""
    if d < 1:
        raise InvalidParameterError(f"degree must be at least 1, got d={d}")
    if k < 0:
        raise InvalidParameterError(f"radius must be non-negative, got k={k}")
    return 4 * d ** (2 * k)


def predicted_round_bound(d: int, n: int, c_prime: float = 1.0) -> int:
    if d < 2:
        raise InvalidParameterError(f"round bound needs d >= 2, got d={d}")
    if n < 4:
        raise InvalidParameterError(f"round bound needs n >= 4, got n={n}")
    if c_prime <= 0:
        raise InvalidParameterError(f"c' must be positive, got {c_prime}")
    raw = c_prime * math.log(math.log2(n)) / math.log(d)
    # absorb float noise at exact powers, e.g. log_4 256
    return max(1, math.ceil(raw - 1e-9))


def corollary3_bound(n: int, c_prime: float = 1.0) -> float:
    if n < 2:
        raise InvalidParameterError(f"bound needs n >= 2, got n={n}")
    return math.log2(n) ** (2 * c_prime + 1)


def extinction_round_bound(d: int, n: int) -> int:
    """ceil(log_d n), the horizon within which sets below n/c'' die out."""
    if d < 2 or n < 2:
        raise InvalidParameterError(f"need d >= 2 and n >= 2, got d={d}, n={n}")
    return max(1, math.ceil(math.log(n) / math.log(d) - 1e-9))


def binomial_sigma(p: float, trials: int) -> float:
    """Standard deviation of an empirical frequency over `trials` Bernoulli(p) draws."""
    if trials < 1:
        raise InvalidParameterError(f"trials must be at least 1, got {trials}")
    return math.sqrt(max(p * (1.0 - p), 0.0) / trials)


def recurrence_map_grid(d: int, grid: np.ndarray) -> np.ndarray:
    """The one-step map p -> P_1 evaluated over an array of probabilities."""
    _check_odd_degree(d)
    grid = np.asarray(grid, dtype=float)
    if np.any((grid < 0) | (grid > 1)):
        raise InvalidParameterError("grid values must lie in [0, 1]")
    return np.clip(binom.sf(child_threshold(d) - 1, d - 1, grid), 0.0, 1.0)
