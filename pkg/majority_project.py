#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Majority Project — command-line entry point.

  generate     graph family -> edge-list file
  simulate     one graph + one coloring -> ConsensusReport as JSON
  sweep        experiment spec (file or flags) -> CSV (default) or JSON
  tree-audit   non-tree neighborhood counts on sampled G(n,d)
  immunity     takeover ratios, control findings and small dynamos
  dynamo       check a set, or search for a small dynamo, on one graph
  propagation  recurrence table, optionally against the tree Monte Carlo

Artifacts go to stdout or --out; diagnostics and the echoed seed go to stderr.
"""

import argparse
import csv
import io
import json
import logging
import os
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence

# ─────────────────────────────────────────
# Module imports (same directory)
# ─────────────────────────────────────────
from dynamics import random_coloring, read_coloring, run_to_cycle, write_coloring
from experiments import ExperimentSpec, run_experiment, run_propagation_validation, trial_seeds
from graph_core import (FAMILIES, SAMPLING_METHODS, Graph, VertexSet, build_family_graph,
                        format_edge_list, graph_summary, read_edge_list)
from monopoly import (Adversary, AuditStrategy, exact_min_dynamo_search, greedy_dynamo_search,
                      immunity_audit, is_dynamo)
from systems import (DATA_DIR, AttemptsExhaustedError, CycleCapExceededError,
                     InvalidParameterError, SpecParseError, configure_logging, default,
                     fresh_seed, get_logger, make_rng)
from theory import propagation_recurrence

logger = get_logger("majority_project")

LANG_PATH = os.path.join(DATA_DIR, "lang_en.json")
OUTPUT_DIR_ENV = "MAJORITY_OUTPUT_DIR"
TEST_MODE_ENV = "MAJORITY_TEST_MODE"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_GENERATION = 3
EXIT_INVARIANT = 4
EXIT_IO = 5

# ── Message table ─────────────────────────────────────────────────────
LOCALE: Dict[str, str] = {}


def load_locale(path: str = LANG_PATH):
    global LOCALE
    try:
        with open(path, "r", encoding="utf-8") as f:
            LOCALE = json.load(f)
    except FileNotFoundError:
        LOCALE = {}


def t(key: str, **kwargs) -> str:
    text = LOCALE.get(key, f"[{key}]")
    return text.format(**kwargs) if kwargs else text


# ─────────────────────────────────────────
# Spec files
# ─────────────────────────────────────────

def _parse_bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _optional_int(raw: str) -> Optional[int]:
    return None if raw.strip().lower() in ("", "none") else int(raw)


def _list_of(kind: Callable[[str], Any]) -> Callable[[str], List[Any]]:
    def parse(raw: str) -> List[Any]:
        return [kind(part) for part in raw.split(",") if part.strip()]
    return parse


SPEC_KEY_TYPES: Dict[str, Callable[[str], Any]] = {
    "kind": str.strip, "family": str.strip, "method": str.strip, "strategy": str.strip,
    "n": int, "d": int, "side": int, "trials": int, "master_seed": int, "k": int,
    "threads": int, "audit_trials": int, "dynamo_budget": int,
    "p": float, "p_b": float, "c_prime": float, "c_double_prime": float, "beta": float,
    "lengths": _list_of(int), "k_grid": _list_of(int),
    "pb_grid": _list_of(float), "c_grid": _list_of(float), "c_prime_grid": _list_of(float),
    "round_cap": _optional_int, "max_attempts": _optional_int,
    "fixed_graph": _parse_bool, "keep_records": _parse_bool,
}
REQUIRED_SPEC_KEYS = ("kind", "trials", "master_seed")


def parse_spec(text: str, path: Optional[str] = None) -> ExperimentSpec:
    """Flat `key=value` lines; `#` starts a comment; lists are comma-separated."""
    values: Dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecParseError(f"expected key=value, got {line!r}", path, lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SPEC_KEY_TYPES:
            raise SpecParseError(f"unknown key {key!r}", path, lineno)
        if key in values:
            raise SpecParseError(f"duplicate key {key!r}", path, lineno)
        try:
            values[key] = SPEC_KEY_TYPES[key](value)
        except ValueError as e:
            raise SpecParseError(f"bad value for {key}: {e}", path, lineno) from None
    missing = [k for k in REQUIRED_SPEC_KEYS if k not in values]
    if missing:
        raise SpecParseError(f"missing required keys: {', '.join(missing)}", path)
    try:
        return ExperimentSpec(**values).validate()
    except InvalidParameterError as e:
        raise SpecParseError(str(e), path) from None


def load_spec(path: str) -> ExperimentSpec:
    with open(path, encoding="utf-8") as f:
        return parse_spec(f.read(), path)


# ─────────────────────────────────────────
# Emission
# ─────────────────────────────────────────

def resolve_output(path: Optional[str]) -> Optional[str]:
    if path is None or path == "-":
        return None
    base = os.environ.get(OUTPUT_DIR_ENV)
    if base and not os.path.isabs(path):
        return os.path.join(base, path)
    return path


def _write(text: str, path: Optional[str]):
    target = resolve_output(path)
    if target is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(target, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    logger.info("wrote %s", target)


def render_csv(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def render_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, allow_nan=False) + "\n"


def emit_csv(result: Any, path: Optional[str] = None):
    _write(render_csv(result.csv_header, result.csv_rows()), path)


def emit_json(result: Any, path: Optional[str] = None):
    payload = result.to_dict() if hasattr(result, "to_dict") else result
    _write(render_json(payload), path)


# ─────────────────────────────────────────
# Argument parsing
# ─────────────────────────────────────────

class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so every error shares one exit path."""

    def error(self, message: str):
        raise InvalidParameterError(message)


def _int_list(raw: str) -> List[int]:
    try:
        return _list_of(int)(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {raw!r}")


def _float_list(raw: str) -> List[float]:
    try:
        return _list_of(float)(raw)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {raw!r}")


def _add_common(p: argparse.ArgumentParser, seed: bool = True, out: bool = True):
    if seed:
        p.add_argument("--seed", type=int, default=None, help=t("help_seed"))
    if out:
        p.add_argument("--out", default=None, help=t("help_out"))
    p.add_argument("--verbose", action="store_true", help=t("help_verbose"))
    p.add_argument("--debug", action="store_true", help=t("help_debug"))


def _add_family(p: argparse.ArgumentParser, default_family: Optional[str] = "regular"):
    p.add_argument("--family", choices=FAMILIES, default=default_family, help=t("help_family"))
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--d", type=int, default=0)
    p.add_argument("--p", type=float, default=0.0)
    p.add_argument("--lengths", type=_int_list, default=[])
    p.add_argument("--side", type=int, default=0)
    p.add_argument("--method", choices=SAMPLING_METHODS, default="auto")
    p.add_argument("--max-attempts", type=int, default=None)


def _add_sweep_flags(p: argparse.ArgumentParser):
    p.add_argument("--threads", type=int, default=1, help=t("help_threads"))
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--json", action="store_true", help=t("help_json"))
    p.add_argument("--records", action="store_true", help=t("help_records"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="majority_project.py", description=t("prog_description"))
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help=t("cmd_generate"))
    _add_family(p)
    _add_common(p)

    p = sub.add_parser("simulate", help=t("cmd_simulate"))
    _add_family(p)
    p.add_argument("--graph", default=None, help=t("help_graph"))
    p.add_argument("--pb", type=float, default=None)
    p.add_argument("--coloring", default=None, help=t("help_coloring"))
    p.add_argument("--cap", type=int, default=None)
    p.add_argument("--keep-colorings", action="store_true")
    p.add_argument("--out-coloring", default=None, help=t("help_out_coloring"))
    _add_common(p)

    p = sub.add_parser("sweep", help=t("cmd_sweep"))
    p.add_argument("--spec", default=None, help=t("help_spec"))
    p.add_argument("--kind", default="density")
    _add_family(p)
    p.add_argument("--pb", type=float, default=None)
    p.add_argument("--pb-grid", type=_float_list, default=None)
    p.add_argument("--c-grid", type=_float_list, default=None)
    p.add_argument("--c-double-prime", type=float, default=None)
    p.add_argument("--round-cap", type=int, default=None)
    p.add_argument("--fixed-graph", action="store_true")
    _add_sweep_flags(p)
    _add_common(p)

    p = sub.add_parser("tree-audit", help=t("cmd_tree_audit"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--k-grid", type=_int_list, default=[])
    p.add_argument("--c-prime-grid", type=_float_list, default=None)
    p.add_argument("--method", choices=SAMPLING_METHODS, default="auto")
    _add_sweep_flags(p)
    _add_common(p)

    p = sub.add_parser("immunity", help=t("cmd_immunity"))
    p.add_argument("--graph", default=None, help=t("help_graph"))
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--d", type=int, default=0)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--audit-trials", type=int, default=1000)
    p.add_argument("--dynamo-budget", type=int, default=200)
    p.add_argument("--strategy", choices=[s.value for s in AuditStrategy], default="greedy")
    p.add_argument("--lemma4", action="store_true", help=t("help_lemma4"))
    p.add_argument("--c-double-prime", type=float, default=None)
    p.add_argument("--method", choices=SAMPLING_METHODS, default="auto")
    _add_sweep_flags(p)
    _add_common(p)

    p = sub.add_parser("dynamo", help=t("cmd_dynamo"))
    _add_family(p)
    p.add_argument("--graph", default=None, help=t("help_graph"))
    p.add_argument("--set", type=_int_list, default=None, help=t("help_set"))
    p.add_argument("--adversary", choices=[a.value for a in Adversary], default="auto")
    p.add_argument("--exact", action="store_true", help=t("help_exact"))
    p.add_argument("--budget", type=int, default=200)
    _add_common(p)

    p = sub.add_parser("propagation", help=t("cmd_propagation"))
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--pb", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--validate", action="store_true", help=t("help_validate"))
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--json", action="store_true", help=t("help_json"))
    _add_common(p)
    return parser


# ─────────────────────────────────────────
# Seeds and graphs
# ─────────────────────────────────────────

def resolve_seed(seed: Optional[int]) -> int:
    if seed is None:
        if os.environ.get(TEST_MODE_ENV) == "1":
            raise InvalidParameterError(t("seed_required"))
        seed = fresh_seed()
    if seed < 0:
        raise InvalidParameterError(f"seed must be non-negative, got {seed}")
    sys.stderr.write(t("seed_echo", seed=seed) + "\n")
    return seed


def _graph_from_args(args: argparse.Namespace, graph_seed: int) -> Graph:
    if getattr(args, "graph", None):
        return read_edge_list(args.graph)
    if args.family is None:
        raise InvalidParameterError(t("need_graph"))
    return build_family_graph(args.family, make_rng(graph_seed), n=args.n, d=args.d, p=args.p,
                              lengths=args.lengths, side=args.side,
                              max_attempts=args.max_attempts, method=args.method)


# ─────────────────────────────────────────
# Commands
# ─────────────────────────────────────────

def cmd_generate(args: argparse.Namespace) -> int:
    seed = resolve_seed(args.seed)
    graph_seed, _ = trial_seeds(seed, 0, 0)
    g = _graph_from_args(args, graph_seed)
    _write(format_edge_list(g), args.out)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    seed = resolve_seed(args.seed)
    graph_seed, coloring_seed = trial_seeds(seed, 0, 0)
    g = _graph_from_args(args, graph_seed)
    if args.coloring:
        c0 = read_coloring(args.coloring)
        if c0.n != g.n:
            raise InvalidParameterError(f"coloring has {c0.n} entries, graph has {g.n} vertices")
    else:
        if args.pb is None:
            raise InvalidParameterError(t("need_pb"))
        c0 = random_coloring(g.n, args.pb, make_rng(coloring_seed))
    start_path = resolve_output(args.out_coloring)
    if start_path is not None:
        write_coloring(c0, start_path)
    report = run_to_cycle(g, c0, cap=args.cap, keep_colorings=args.keep_colorings)
    payload = {"seed": seed, "graph": graph_summary(g), "p_b": args.pb,
               "initial_blue_count": c0.blue_count(), "report": report.to_dict()}
    _write(render_json(payload), args.out)
    return EXIT_OK


def _spec_from_flags(args: argparse.Namespace, seed: int, kind: str) -> ExperimentSpec:
    values: Dict[str, Any] = {"kind": kind, "master_seed": seed, "threads": args.threads,
                              "keep_records": args.records}
    if args.trials is not None:
        values["trials"] = args.trials
    for attr in ("family", "n", "d", "p", "lengths", "side", "method", "max_attempts",
                 "round_cap", "fixed_graph", "beta", "audit_trials", "dynamo_budget",
                 "strategy", "k_grid", "c_double_prime"):
        if getattr(args, attr, None) is not None:
            values[attr] = getattr(args, attr)
    if getattr(args, "pb", None) is not None:
        values["p_b"] = args.pb
    for attr, key in (("pb_grid", "pb_grid"), ("c_grid", "c_grid"), ("c_prime_grid", "c_prime_grid")):
        if getattr(args, attr, None) is not None:
            values[key] = getattr(args, attr)
    return ExperimentSpec(**values).validate()


def _emit_result(result: Any, args: argparse.Namespace):
    if args.json:
        payload = result.to_dict(include_records=True) if args.records else result.to_dict()
        _write(render_json(payload), args.out)
    else:
        emit_csv(result, args.out)


def cmd_sweep(args: argparse.Namespace) -> int:
    if args.spec:
        spec = load_spec(args.spec)
        # command-line threads and records never change the numbers
        spec.threads = args.threads
        spec.keep_records = spec.keep_records or args.records
        if args.seed is not None:
            spec.master_seed = args.seed
        sys.stderr.write(t("seed_echo", seed=spec.master_seed) + "\n")
    else:
        spec = _spec_from_flags(args, resolve_seed(args.seed), args.kind)
    _emit_result(run_experiment(spec), args)
    return EXIT_OK


def cmd_tree_audit(args: argparse.Namespace) -> int:
    seed = resolve_seed(args.seed)
    values = {"kind": "tree-audit", "family": "regular", "n": args.n, "d": args.d,
              "master_seed": seed, "threads": args.threads, "k_grid": args.k_grid,
              "method": args.method}
    if args.trials is not None:
        values["trials"] = args.trials
    if args.c_prime_grid is not None:
        values["c_prime_grid"] = args.c_prime_grid
    _emit_result(run_experiment(ExperimentSpec(**values)), args)
    return EXIT_OK


def cmd_immunity(args: argparse.Namespace) -> int:
    seed = resolve_seed(args.seed)
    beta = args.beta if args.beta is not None else default("immunity_beta")
    if args.graph:
        g = read_edge_list(args.graph)
        _, search_seed = trial_seeds(seed, 0, 0)
        rng = make_rng(search_seed)
        audit = immunity_audit(g, beta, args.audit_trials, args.strategy, rng)
        seeds = [audit.violating_set] if audit.violating_set is not None else []
        found = greedy_dynamo_search(g, args.dynamo_budget, rng, seeds=seeds)
        _write(render_json({"seed": seed, "graph": graph_summary(g), "audit": audit.to_dict(),
                            "dynamo": found.to_dict()}), args.out)
        return EXIT_OK
    values = {"kind": "lemma4" if args.lemma4 else "immunity", "family": "regular",
              "n": args.n, "d": args.d, "beta": beta, "master_seed": seed,
              "threads": args.threads, "audit_trials": args.audit_trials,
              "dynamo_budget": args.dynamo_budget, "strategy": args.strategy,
              "method": args.method}
    if args.trials is not None:
        values["trials"] = args.trials
    if args.c_double_prime is not None:
        values["c_double_prime"] = args.c_double_prime
    _emit_result(run_experiment(ExperimentSpec(**values)), args)
    return EXIT_OK


def cmd_dynamo(args: argparse.Namespace) -> int:
    seed = resolve_seed(args.seed)
    graph_seed, search_seed = trial_seeds(seed, 0, 0)
    g = _graph_from_args(args, graph_seed)
    payload: Dict[str, Any] = {"seed": seed, "graph": graph_summary(g)}
    if args.set is not None:
        verdict = is_dynamo(g, VertexSet(g.n, args.set), adversary=Adversary(args.adversary))
        payload["set"] = sorted(set(args.set))
        payload["verdict"] = verdict.to_dict()
    elif args.exact:
        payload["search"] = exact_min_dynamo_search(g).to_dict()
    else:
        payload["search"] = greedy_dynamo_search(g, args.budget, make_rng(search_seed),
                                                 adversary=Adversary(args.adversary)).to_dict()
    _write(render_json(payload), args.out)
    return EXIT_OK


def cmd_propagation(args: argparse.Namespace) -> int:
    curve = propagation_recurrence(args.d, args.pb, args.k)
    comparison = None
    if args.validate:
        seed = resolve_seed(args.seed)
        _, sim_seed = trial_seeds(seed, 0, 0)
        comparison = run_propagation_validation(args.d, args.pb, args.k, args.trials,
                                                make_rng(sim_seed))
    if args.json:
        payload = {"curve": curve.to_dict()}
        if comparison is not None:
            payload["validation"] = comparison.to_dict()
        _write(render_json(payload), args.out)
        return EXIT_OK
    rows = [[str(i), f"{v:.12g}"] for i, v in enumerate(curve.values)]
    text = render_csv(("level", "probability"), rows)
    if comparison is not None:
        text += render_csv(("k", "trials", "empirical", "predicted", "sigma", "within_3_sigma"),
                           [[str(comparison.k), str(comparison.trials),
                             f"{comparison.empirical:.6f}", f"{comparison.predicted:.6f}",
                             f"{comparison.sigma:.6f}", str(comparison.within_3_sigma).lower()]])
    _write(text, args.out)
    return EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace], int]] = {
    "generate": cmd_generate,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "tree-audit": cmd_tree_audit,
    "immunity": cmd_immunity,
    "dynamo": cmd_dynamo,
    "propagation": cmd_propagation,
}


# ─────────────────────────────────────────
# Entry Point
# ─────────────────────────────────────────

def _fail(prefix_key: str, message: str, code: int) -> int:
    sys.stderr.write(f"{t(prefix_key)} {message}\n")
    return code


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    if not LOCALE:
        load_locale()
    try:
        args = build_parser().parse_args(argv)
        level = logging.DEBUG if args.debug else logging.INFO if args.verbose else logging.WARNING
        configure_logging(level)
        return COMMANDS[args.command](args)
    except SpecParseError as e:
        return _fail("prefix_spec", str(e), EXIT_USAGE)
    except InvalidParameterError as e:
        return _fail("prefix_usage", str(e), EXIT_USAGE)
    except AttemptsExhaustedError as e:
        return _fail("prefix_generation", str(e), EXIT_GENERATION)
    except CycleCapExceededError as e:
        return _fail("prefix_invariant", str(e), EXIT_INVARIANT)
    except OSError as e:
        return _fail("prefix_io", str(e), EXIT_IO)


def main():
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
