#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
systems.py — Errors, tunables, seeds and logging shared by every simulation module.

  MajorityError and subclasses          — the error hierarchy every module raises
  load_defaults()                       — tunable constants from data/defaults.json
  derive_seed(master, *path) / make_rng — reproducible per-task random sources
  bernoulli_mask(rng, n, p)             — independent per-vertex coin flips
  get_logger(name) / configure_logging  — stdlib logging wiring
"""

import json
import logging
import os
from typing import Any, Dict, Optional

import numpy as np

ROOT_DIR = os.path.dirname(os.path.abspath(__file__))
DATA_DIR = os.path.join(ROOT_DIR, "data")
DEFAULTS_PATH = os.path.join(DATA_DIR, "defaults.json")

LOG_FORMAT = "%(asctime)s |%(levelname)s: %(name)s: %(message)s"


# ─────────────────────────────────────────
# Errors
# ─────────────────────────────────────────

class MajorityError(Exception):
    """Root of every error this package raises on purpose."""


class InvalidParameterError(MajorityError, ValueError):
    """A precondition on an argument does not hold."""


class AttemptsExhaustedError(MajorityError):
    """Rejection sampling ran out of its attempt budget."""

    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


class CycleCapExceededError(MajorityError):
    """The dynamics did not reach a limit cycle within the round cap."""

    def __init__(self, message: str, cap: int):
        super().__init__(message)
        self.cap = cap


class TreeBudgetError(InvalidParameterError):
    """An explicit propagation tree would exceed its size budget."""


class SpecParseError(MajorityError):
    """A text artifact (spec file, edge list, coloring) could not be parsed."""

    def __init__(self, message: str, path: Optional[str] = None, line: Optional[int] = None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)
        self.path = path
        self.line = line


# ─────────────────────────────────────────
# Defaults
# ─────────────────────────────────────────

# Fallback when data/defaults.json is missing; the file overrides key by key.
BUILTIN_DEFAULTS: Dict[str, Any] = {
    "max_attempts": 1000,
    "c_prime_grid": [1, 2, 3],
    "c_double_prime": 100,
    "lemma4_ratio": 10,
    "ci_floor_trials": 30,
    "low_degree_c_grid": [0.1, 0.3, 1, 3, 10],
    "dense_rejection_max_degree": 5,
    "immunity_beta": 0.02,
    "exhaustive_adversary_max_n": 14,
    "exhaustive_dynamo_max_n": 20,
    "propagation_tree_budget": 10_000_000,
    "greedy_candidates_per_move": 32,
}

_defaults_cache: Optional[Dict[str, Any]] = None


def load_defaults() -> Dict[str, Any]:
    global _defaults_cache
    if _defaults_cache is None:
        merged = dict(BUILTIN_DEFAULTS)
        try:
            with open(DEFAULTS_PATH, encoding="utf-8") as f:
                merged.update(json.load(f))
        except FileNotFoundError:
            pass  # built-in constants only
        _defaults_cache = merged
    return _defaults_cache


def default(key: str) -> Any:
    return load_defaults()[key]


# ─────────────────────────────────────────
# Seeds and random sources
# ─────────────────────────────────────────

def derive_seed(master_seed: int, *path: int) -> int:
    """
    64-bit seed that is a pure function of (master_seed, path).

    path is a tuple of non-negative ints, e.g. (grid_point, trial, stream).
    Distinct paths give independent streams under one master seed.
    """
    if master_seed < 0:
        raise InvalidParameterError(f"master seed must be non-negative, got {master_seed}")
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=tuple(int(p) for p in path))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def fresh_seed() -> int:
    """A seed drawn from OS entropy, small enough to echo and pass back via --seed."""
    return int(np.random.SeedSequence().entropy) & ((1 << 63) - 1)


def make_rng(seed: Optional[int]) -> np.random.Generator:
    return np.random.default_rng(seed)


def check_probability(name: str, p: float) -> float:
    if not (0.0 <= p <= 1.0):
        raise InvalidParameterError(f"{name} must lie in [0, 1], got {p}")
    return float(p)


def bernoulli_mask(rng: np.random.Generator, size, p: float) -> np.ndarray:
    """
    Unified probability resolver: boolean array, each entry True w.p. p.

    p=0 and p=1 are exact (no draw can flip them).
    """
    check_probability("probability", p)
    return rng.random(size) < p


# ─────────────────────────────────────────
# Logging
# ─────────────────────────────────────────

def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)


def configure_logging(level: int = logging.WARNING) -> None:
    # stderr only; stdout carries artifacts
    logging.basicConfig(format=LOG_FORMAT, level=level)
    logging.getLogger().setLevel(level)
