#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Acceptance Check — the nine numbered acceptance criteria.

  python _acceptance_check.py            reduced sizes, a few minutes
  python _acceptance_check.py --full     desk-scale sizes (n up to 10^5)
  python _acceptance_check.py --only 4   a single criterion
"""

import argparse, contextlib, io, json, math, os, sys, tempfile, time, traceback

ROOT = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, ROOT)

PASS = []
FAIL = []

def ok(item, msg=""):
    tag = f"  [PASS] #{item}"
    tag += f" — {msg}" if msg else ""
    PASS.append(tag)
    print(tag)

def fail(item, msg=""):
    tag = f"  [FAIL] #{item}"
    tag += f" — {msg}" if msg else ""
    FAIL.append(tag)
    print(tag)

def expect(item, cond, msg, detail=""):
    if cond:
        ok(item, msg)
    else:
        fail(item, f"{msg} :: {detail}" if detail else msg)

try:
    import numpy as np
    import graph_core as gc
    import dynamics as dy
    import theory as th
    import monopoly as mp
    import experiments as ex
    import majority_project as cli
    from systems import CycleCapExceededError
except Exception as e:
    print(f"\n  [FATAL] Could not import the package modules: {e}")
    traceback.print_exc()
    sys.exit(1)

FIXTURES = os.path.join(ROOT, "data", "fixtures")


def run_cli(argv):
    out = io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(io.StringIO()):
        code = cli.dispatch(argv)
    return code, out.getvalue()


# ─────────────────────────────────────────
# Criteria
# ─────────────────────────────────────────

def criterion_1(full):
    """Every start on small graphs reaches a cycle of length 1 or 2."""
    rng = np.random.default_rng(101)
    count = 20 if full else 5
    top = 12 if full else 10
    graphs = [(f"G(10,3) #{i}", gc.generate_random_regular(10, 3, rng)) for i in range(count)]
    graphs += [(f"C{k}", gc.generate_cycle_union([k])) for k in range(3, top + 1)]
    graphs += [("K4", gc.generate_complete(4))]
    graphs += [(f"M{k}", gc.generate_matching(k)) for k in (2, 4, 6, 8, 10)]
    runs = 0
    for name, g in graphs:
        for code in range(1 << g.n):
            c = dy.Coloring([(code >> i) & 1 for i in range(g.n)])
            try:
                rep = dy.run_to_cycle(g, c)
            except CycleCapExceededError as e:
                fail(1, f"{name}: start {c.to_string().strip()} exceeded {e.cap} rounds")
                return
            if rep.period not in (1, 2):
                fail(1, f"{name}: period {rep.period}")
                return
            runs += 1
    ok(1, f"{runs} runs over {len(graphs)} graphs, all periods in {{1, 2}}")


def criterion_2(full):
    """Random 2-regular graphs: red below 1/sqrt(n), coexistence above."""
    n = 10_000 if full else 2_500
    trials = 200 if full else 60
    root = math.sqrt(n)
    spec = ex.ExperimentSpec(kind="low-degree", family="regular", n=n, d=2,
                             pb_grid=[0.1 / root, 10 / root], trials=trials, master_seed=202)
    low, high = ex.run_low_degree_threshold(spec).points
    expect(2, low.summary.red_freq >= 0.95, f"p_b = 0.1/sqrt(n): red {low.summary.red_freq:.3f} >= 0.95")
    expect(2, high.summary.coexistence_freq >= 0.95,
           f"p_b = 10/sqrt(n): coexistence {high.summary.coexistence_freq:.3f} >= 0.95")


def criterion_3(full):
    """G(n, 51) at p_b = 0.4 turns red within a few multiples of log_d log n rounds."""
    n = 100_000 if full else 10_000
    trials = 100 if full else 30
    spec = ex.ExperimentSpec(kind="density", family="regular", n=n, d=51, p_b=0.4,
                             trials=trials, master_seed=303)
    point = ex.run_density_experiment(spec).points[0]
    s = point.summary
    limit = 3 * th.predicted_round_bound(51, n, 1) + 5
    expect(3, s.red_freq >= 0.98, f"red frequency {s.red_freq:.3f} >= 0.98 over {s.completed} trials")
    expect(3, s.max_rounds is not None and s.max_rounds <= limit,
           f"max consensus time {s.max_rounds} <= {limit}",
           f"bounds {point.extras['predicted_round_bound']}")


def criterion_4(full):
    """Tree Monte Carlo agrees with the recurrence within three standard deviations."""
    trials = 100_000 if full else 20_000
    rng = np.random.default_rng(404)
    expect(4, abs(th.propagation_recurrence(3, 0.5, 1).values[1] - 0.75) < 1e-12, "P1(3, 0.5) = 0.75")
    for d, pb, k in ((3, 0.5, 1), (3, 0.5, 3), (5, 0.3, 4), (7, 0.45, 3)):
        cmp = ex.run_propagation_validation(d, pb, k, trials, rng)
        expect(4, cmp.within_3_sigma,
               f"(d={d}, p_b={pb}, k={k}): empirical {cmp.empirical:.5f} vs {cmp.predicted:.5f}",
               f"z={cmp.z_score}")


def criterion_5(full):
    """P1 never exceeds exp(-2(d-1)eps^2)."""
    worst = None
    for d in range(3, 202, 2):
        for eps in (0.05, 0.1, 0.2, 0.3):
            p1 = th.propagation_recurrence(d, 0.5 - eps, 1).values[1]
            bound = th.p1_exponential_bound(d, eps)
            if p1 > bound:
                fail(5, f"d={d}, eps={eps}: {p1} > {bound}")
                return
            gap = bound - p1
            worst = gap if worst is None else min(worst, gap)
    ok(5, f"400 (d, eps) pairs, smallest slack {worst:.3e}")


def criterion_6(full):
    """Non-tree neighborhood counts against 4 d^(2k) and log2^(2c'+1) n."""
    n = 100_000 if full else 10_000
    graphs = 100 if full else 10
    for d in (3, 4):
        spec = ex.ExperimentSpec(kind="tree-audit", family="regular", n=n, d=d, k_grid=[1, 2],
                                 c_prime_grid=[1], trials=graphs, master_seed=606 + d)
        table = ex.run_tree_audit(spec)
        for row in table.rows:
            if row["c_prime"] is None:
                expect(6, row["mean_within_lemma1"],
                       f"d={d}, k={row['k']}: mean {row['mean_count']:.2f} <= {row['lemma1_bound']}")
            else:
                expect(6, row["exceed_frac"] <= 0.05,
                       f"d={d}, c'=1 (k={row['k']}): {row['exceed_frac']:.2%} of graphs above "
                       f"{row['corollary3_bound']:.0f}")


def criterion_7(full):
    """No small set controls ceil(10|S|/d) vertices on G(2000, 50)."""
    samples = 10 if full else 3
    sets = 10_000 if full else 2_000
    spec = ex.ExperimentSpec(kind="lemma4", family="regular", n=2000, d=50, c_double_prime=100,
                             audit_trials=sets, trials=samples, master_seed=707)
    table = ex.run_lemma4_audit(spec)
    tested = sum(r["sets_tested"] for r in table.rows)
    expect(7, table.summary["findings"] == 0,
           f"{tested} sets with |S| <= {table.summary['max_set_size']} on {samples} graphs, "
           f"{table.summary['findings']} findings")


def criterion_8(full):
    """Pinned minimum dynamos, and the greedy search never beats the exact one."""
    with open(os.path.join(FIXTURES, "fixtures.json"), encoding="utf-8") as f:
        pinned = json.load(f)["graphs"]
    for name, meta in pinned.items():
        g = gc.read_edge_list(os.path.join(FIXTURES, meta["file"]))
        got = mp.exhaustive_min_dynamo(g)
        expect(8, got == meta["min_dynamo"], f"{name}: minimum dynamo {got}", f"pinned {meta['min_dynamo']}")
    rng = np.random.default_rng(808)
    sizes = (8, 10, 12, 14) if full else (8, 10, 12)
    per_size = 5 if full else 2
    for n in sizes:
        for _ in range(per_size):
            g = gc.generate_random_regular(n, 3, rng)
            exact = mp.exhaustive_min_dynamo(g)
            found = mp.greedy_dynamo_search(g, 150, rng)
            if found.best_size is None or found.best_size < exact or exact < 2:
                fail(8, f"n={n}: greedy {found.best_size} vs exact {exact}")
                return
    ok(8, f"greedy >= exact on {len(sizes) * per_size} random 3-regular graphs")


def criterion_9(full):
    """Fixed seeds give byte-identical simulate and sweep output across runs and worker counts."""
    workers = 8 if full else 2
    argv = ["simulate", "--family", "regular", "--n", "2000", "--d", "7", "--pb", "0.35", "--seed", "9"]
    a, b = run_cli(argv), run_cli(argv)
    expect(9, a[0] == 0 and a == b, "simulate twice")
    with tempfile.TemporaryDirectory() as tmp:
        if full:
            spec = os.path.join(ROOT, "data", "sweeps", "two_regular_threshold.spec")
        else:
            spec = os.path.join(tmp, "determinism.spec")
            with open(spec, "w", encoding="utf-8") as f:
                f.write("kind=density\nn=2000\nd=7\npb_grid=0.3,0.45\ntrials=8\nmaster_seed=19\n")
        base = ["sweep", "--spec", spec, "--json", "--records"]
        one = run_cli(base + ["--threads", "1"])
        again = run_cli(base + ["--threads", "1"])
        many = run_cli(base + ["--threads", str(workers)])
    expect(9, one[0] == 0 and one[1] == again[1] == many[1],
           f"sweep with 1, 1 and {workers} workers")


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9}


# ─────────────────────────────────────────
# Entry Point
# ─────────────────────────────────────────

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description="Acceptance criteria")
    ap.add_argument("--full", action="store_true")
    ap.add_argument("--only", type=int, choices=sorted(CRITERIA), default=None)
    opts = ap.parse_args()

    for number, check in CRITERIA.items():
        if opts.only is not None and number != opts.only:
            continue
        print(f"\n── CRITERION {number}: {check.__doc__.strip()} ──")
        started = time.perf_counter()
        try:
            check(opts.full)
        except Exception as e:
            fail(number, str(e)); traceback.print_exc()
        print(f"  ({time.perf_counter() - started:.1f}s)")

    print("\n" + "═" * 60)
    print(f"  RESULTS: {len(PASS)} passed, {len(FAIL)} failed"
          f"  ({'full' if opts.full else 'reduced'} sizes)")
    print("═" * 60)
    if FAIL:
        print("\n  FAILURES:")
        for f_item in FAIL:
            print(f_item)
        print()
        sys.exit(1)
    print("\n  All acceptance criteria passed.\n")
    sys.exit(0)
