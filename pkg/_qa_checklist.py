#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
QA Checklist — behaviour of every module without the slow statistical runs.
Hand-computed examples, invariants on random instances, networkx as an
independent oracle. Exits 1 on any failure.
"""

import contextlib, io, json, math, os, sys, tempfile, traceback

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
    import networkx as nx
    import systems
    import graph_core as gc
    import dynamics as dy
    import theory as th
    import monopoly as mp
    import experiments as ex
    import majority_project as cli
except Exception as e:
    print(f"\n  [FATAL] Could not import the package modules: {e}")
    traceback.print_exc()
    sys.exit(1)

FIXTURES = os.path.join(ROOT, "data", "fixtures")

# ─── Helpers ──────────────────────────────────────────────────────────────────

def rng(seed):
    return np.random.default_rng(seed)

def raises(exc, fn, *a, **kw):
    try:
        fn(*a, **kw)
    except exc:
        return True
    return False

def col(s):
    return dy.Coloring.from_string(s)

def fixture(name):
    return gc.read_edge_list(os.path.join(FIXTURES, f"{name}.txt"))

def run_cli(argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = cli.dispatch(argv)
    return code, out.getvalue(), err.getvalue()

def two_buffer_step(g, c):
    nxt = []
    for v in range(g.n):
        nb = g.neighbor_list(v)
        blue = sum(1 for u in nb if c.blue[u])
        red = len(nb) - blue
        nxt.append(True if blue > red else False if red > blue else bool(c.blue[v]))
    return dy.Coloring(nxt)

C4 = gc.generate_cycle_union([4])
C3 = gc.generate_cycle_union([3])
K4 = gc.generate_complete(4)
EDGE = gc.generate_matching(2)

# ─── ITEM 1: Configuration model ──────────────────────────────────────────────
print("\n── ITEM 1: configuration model ──")
try:
    cfg = gc.generate_configuration(2, 1, rng(0))
    mg = gc.project_configuration(cfg)
    expect(1, cfg.pairing.tolist() == [1, 0] and mg.edges.tolist() == [[0, 1]],
           "n=2, d=1 gives the unique pairing and a single edge")
    cfg = gc.generate_configuration(1, 2, rng(0))
    mg = gc.project_configuration(cfg)
    expect(1, mg.loop_count() == 1 and mg.degrees().tolist() == [2],
           "n=1, d=2 projects to one loop; loop counted twice in the degree")
    expect(1, raises(systems.InvalidParameterError, gc.generate_configuration, 3, 1, rng(0)),
           "odd n*d rejected")
    r = rng(1)
    good = True
    for _ in range(50):
        cfg = gc.generate_configuration(6, 3, r)
        x = np.arange(18)
        good &= bool(np.all(cfg.pairing[cfg.pairing] == x) and np.all(cfg.pairing != x))
        good &= gc.project_configuration(cfg).degrees().tolist() == [3] * 6
        good &= cfg.partner(cfg.partner(gc.HalfEdge(2, 1))) == gc.HalfEdge(2, 1)
        good &= cfg.pair_count == 9 == len(cfg.pairs())
    expect(1, good, "pairings are fixed-point-free involutions; projected degrees equal d; 9 pairs")

    agree = True
    for seed in range(60):
        mg = gc.project_configuration(gc.generate_configuration(6, 3, rng(seed)))
        edges = gc._sample_simple_pairing(6, 3, rng(seed))
        if mg.is_simple():
            lo = np.minimum(mg.edges[:, 0], mg.edges[:, 1])
            hi = np.maximum(mg.edges[:, 0], mg.edges[:, 1])
            agree &= edges is not None and sorted(map(tuple, edges.tolist())) == sorted(zip(lo.tolist(), hi.tolist()))
        else:
            agree &= edges is None
    expect(1, agree, "rejection sampler accepts exactly the seeds whose configuration is simple, same edges")

    all_cfgs = list(gc.enumerate_configurations(3, 2))
    simple = sum(1 for c in all_cfgs if gc.project_configuration(c).is_simple())
    expect(1, len(all_cfgs) == 15 and simple == 8, "n=3, d=2: 15 pairings, 8 project to the triangle",
           f"{len(all_cfgs)} pairings, {simple} simple")
    r = rng(2)
    trials = 3000
    hits = sum(1 for _ in range(trials)
               if gc.project_configuration(gc.generate_configuration(3, 2, r)).is_simple())
    sigma = math.sqrt(8 / 15 * 7 / 15 / trials)
    expect(1, abs(hits / trials - 8 / 15) <= 4 * sigma,
           "sampler triangle frequency matches enumeration", f"{hits / trials:.4f} vs {8 / 15:.4f}")
    expect(1, math.isclose(gc.rejection_acceptance_rate(3, 2), 8 / 15),
           "acceptance rate from enumeration")
except Exception as e:
    fail(1, str(e)); traceback.print_exc()

# ─── ITEM 2: Random regular graphs ────────────────────────────────────────────
print("\n── ITEM 2: generate_random_regular ──")
try:
    g = gc.generate_random_regular(4, 3, rng(0))
    expect(2, g == K4, "n=4, d=3 is K4")
    g = gc.generate_random_regular(3, 2, rng(0))
    expect(2, g == C3, "n=3, d=2 is the triangle")
    good = True
    r = rng(3)
    for method in ("rejection", "pairing"):
        for _ in range(20):
            g = gc.generate_random_regular(8, 3, r, method=method)
            good &= g.is_simple() and g.is_symmetric() and g.regular_degree == 3
    g = gc.generate_random_regular(300, 11, r)
    good &= g.is_simple() and g.is_symmetric() and g.regular_degree == 11
    expect(2, good, "every sample is simple, symmetric and d-regular (both samplers)")
    expect(2, raises(systems.InvalidParameterError, gc.generate_random_regular, 4, 4, rng(0)),
           "d >= n rejected")
    errors = []
    for s in range(10):
        try:
            gc.generate_random_regular(5, 4, rng(s), max_attempts=1, method="rejection")
        except systems.AttemptsExhaustedError as e:
            errors.append(e.attempts)
    expect(2, errors and all(a == 1 for a in errors), "attempt budget reported when exhausted",
           f"{errors}")

    counts = {}
    r = rng(4)
    for _ in range(7000):
        g = gc.generate_random_regular(6, 2, r, method="rejection")
        key = tuple(map(tuple, g.edges().tolist()))
        counts[key] = counts.get(key, 0) + 1
    expect(2, len(counts) == 70 and all(50 <= c <= 150 for c in counts.values()),
           "n=6, d=2: all 70 labeled graphs appear with near-uniform frequency",
           f"{len(counts)} graphs, range {min(counts.values())}..{max(counts.values())}")
except Exception as e:
    fail(2, str(e)); traceback.print_exc()

# ─── ITEM 3: Special generators ───────────────────────────────────────────────
print("\n── ITEM 3: cycle unions, matchings, empty, G(n,p), torus ──")
try:
    g = gc.generate_cycle_union([5])
    expect(3, g.n == 5 and g.m == 5 and nx.is_isomorphic(g.to_networkx(), nx.cycle_graph(5)),
           "[5] is C5")
    g = gc.generate_cycle_union([3, 4])
    expect(3, g.n == 7 and g.regular_degree == 2
           and nx.number_connected_components(g.to_networkx()) == 2, "[3,4]: 7 vertices, 2 components")
    g = gc.generate_cycle_union([3, 3, 3])
    expect(3, g.n == 9 and g.m == 9, "[3,3,3]: 9 vertices, 9 edges")
    expect(3, raises(systems.InvalidParameterError, gc.generate_cycle_union, [3, 2]), "length 2 rejected")
    expect(3, gc.generate_matching(4).edges().tolist() == [[0, 1], [2, 3]]
           and gc.generate_matching(2).m == 1, "matchings")
    expect(3, raises(systems.InvalidParameterError, gc.generate_matching, 3), "odd matching rejected")
    g = gc.generate_empty(3)
    expect(3, g.n == 3 and g.m == 0, "empty graph")
    expect(3, gc.generate_gnp(50, 0.0, rng(0)).m == 0 and gc.generate_gnp(6, 1.0, rng(0)).m == 15,
           "G(n,p) at p=0 and p=1")
    r = rng(5)
    samples = 1000
    mean = sum(gc.generate_gnp(100, 0.1, r).m for _ in range(samples)) / samples
    sigma = math.sqrt(4950 * 0.1 * 0.9 / samples)
    expect(3, abs(mean - 495) <= 4 * sigma, "G(100, 0.1) mean edge count near 495", f"{mean:.2f}")
    t4 = gc.generate_torus(4)
    expect(3, t4.n == 16 and t4.m == 32 and t4.regular_degree == 4
           and nx.is_isomorphic(t4.to_networkx(), nx.grid_2d_graph(4, 4, periodic=True)),
           "4x4 torus matches networkx periodic grid")
    g = gc.build_family_graph("cycle-union", lengths=[3, 4])
    expect(3, g.n == 7, "family descriptor dispatch")
except Exception as e:
    fail(3, str(e)); traceback.print_exc()

# ─── ITEM 4: Graph, VertexSet, edge-list text ─────────────────────────────────
print("\n── ITEM 4: Graph / VertexSet / edge list ──")
try:
    expect(4, raises(systems.InvalidParameterError, gc.Graph.from_edges, 3, [(0, 0)])
           and raises(systems.InvalidParameterError, gc.Graph.from_edges, 3, [(0, 1), (1, 0)]),
           "loops and repeated edges rejected")
    pg = gc.Graph.from_networkx(nx.petersen_graph())
    expect(4, pg.n == 10 and pg.m == 15 and pg.regular_degree == 3
           and nx.is_isomorphic(pg.to_networkx(), nx.petersen_graph()), "networkx round trip")
    text = gc.format_edge_list(gc.generate_cycle_union([3, 4]))
    expect(4, text.splitlines()[0] == "7 7"
           and gc.format_edge_list(gc.parse_edge_list(text)) == text, "edge list round trip, header 7 7")
    try:
        gc.parse_edge_list("2 1\n0 x\n", "g.txt")
        fail(4, "bad edge line accepted")
    except systems.SpecParseError as e:
        expect(4, e.line == 2 and "g.txt:2:" in str(e), "parse error carries the line number")
    expect(4, raises(systems.SpecParseError, gc.parse_edge_list, "3 2\n0 1\n"),
           "edge count mismatch rejected")
    vs = gc.VertexSet(6, [1, 4])
    expect(4, vs.size == 2 and 4 in vs and 3 not in vs and list(vs) == [1, 4]
           and vs.intersection_count([0, 1, 4, 5]) == 2, "VertexSet size, membership, iteration")
    for name, meta in json.load(open(os.path.join(FIXTURES, "fixtures.json"), encoding="utf-8"))["graphs"].items():
        g = fixture(name)
        if (g.n, g.m, g.regular_degree) != (meta["n"], meta["m"], meta["regular_degree"]):
            fail(4, f"fixture {name}: {(g.n, g.m, g.regular_degree)}")
            break
    else:
        ok(4, "fixtures load with recomputed degree metadata")
except Exception as e:
    fail(4, str(e)); traceback.print_exc()

# ─── ITEM 5: Balls and tree neighborhoods ─────────────────────────────────────
print("\n── ITEM 5: balls, tree neighborhoods, disjoint balls ──")
try:
    C7 = gc.generate_cycle_union([7])
    expect(5, gc.ball(C7, 0, 0).to_list() == [0] and gc.ball(C7, 0, 2).to_list() == [0, 1, 2, 5, 6]
           and gc.ball(K4, 2, 1).size == 4, "ball examples")
    expect(5, not gc.is_tree_neighborhood(C4, 0, 2) and gc.is_tree_neighborhood(C7, 0, 2)
           and gc.is_tree_neighborhood(C4, 0, 0), "is_tree_neighborhood examples")
    expect(5, gc.count_non_tree_neighborhoods(C4, 2) == 4, "C4, k=2: 4 non-tree neighborhoods")
    path = gc.Graph.from_networkx(nx.path_graph(12))
    expect(5, all(gc.count_non_tree_neighborhoods(path, k) == 0 for k in range(5)), "a tree has none")
    g = gc.generate_random_regular(200, 3, rng(6))
    ng = g.to_networkx()
    agree = True
    for k in (1, 2, 3):
        brute = sum(1 for v in range(g.n) if not gc.is_tree_neighborhood(g, v, k))
        oracle = sum(1 for v in range(g.n) if not nx.is_tree(nx.ego_graph(ng, v, radius=k)))
        agree &= brute == oracle == gc.count_non_tree_neighborhoods(g, k, chunk=37)
    expect(5, agree, "sparse count == per-vertex check == networkx ego-graph oracle")
    mono = True
    for v in range(0, g.n, 17):
        for k in range(4):
            mono &= gc.ball(g, v, k).issubset(gc.ball(g, v, k + 1))
            if gc.is_tree_neighborhood(g, v, k + 1):
                mono &= gc.is_tree_neighborhood(g, v, k)
    expect(5, mono, "ball and tree-property monotonicity in k")
    expect(5, gc.select_disjoint_balls(gc.generate_empty(5), 1) == [0, 1, 2, 3, 4]
           and gc.select_disjoint_balls(gc.generate_cycle_union([6]), 1) == [0, 3],
           "disjoint balls: empty graph and C6")
    centers = gc.select_disjoint_balls(g, 2)
    balls = [gc.ball(g, v, 2) for v in centers]
    expect(5, all(a.isdisjoint(b) for i, a in enumerate(balls) for b in balls[i + 1:]),
           f"{len(centers)} selected 2-balls are pairwise disjoint")
except Exception as e:
    fail(5, str(e)); traceback.print_exc()

# ─── ITEM 6: Majority step ────────────────────────────────────────────────────
print("\n── ITEM 6: majority_step ──")
try:
    g = gc.generate_random_regular(40, 5, rng(7))
    expect(6, dy.majority_step(g, dy.Coloring.all_red(40)) == dy.Coloring.all_red(40),
           "all-red is a fixed point")
    expect(6, dy.majority_step(C4, col("brbr")) == col("rbrb"), "C4 (b,r,b,r) -> (r,b,r,b)")
    expect(6, dy.majority_step(EDGE, col("bb")) == col("bb")
           and dy.majority_step(EDGE, col("br")) == col("rb"), "single edge copies the neighbor")
    expect(6, dy.majority_step(gc.generate_empty(3), col("brb")) == col("brb"), "empty neighborhoods keep")
    expect(6, dy.majority_step(C4, col("bbrr")) == col("bbrr"), "even-degree ties keep the current color")
    r = rng(8)
    graphs = [g, gc.generate_gnp(60, 0.1, r), gc.generate_random_regular(30, 4, r)]
    sym = ref = batch = True
    for h in graphs:
        cs = [dy.random_coloring(h.n, p, r) for p in (0.2, 0.5, 0.7) for _ in range(5)]
        for c in cs:
            nxt = dy.majority_step(h, c)
            sym &= dy.majority_step(h, c.flip()) == nxt.flip()
            ref &= nxt == two_buffer_step(h, c)
        stacked = dy.majority_step_batch(h, np.stack([c.blue for c in cs]))
        batch &= all(np.array_equal(row, dy.majority_step(h, c).blue) for row, c in zip(stacked, cs))
    expect(6, sym, "color symmetry including ties")
    expect(6, ref, "matches a two-buffer per-vertex reference")
    expect(6, batch, "batched step equals the single step row by row")
    expect(6, dy.random_coloring(20, 0.0, r).blue_count() == 0
           and dy.random_coloring(20, 1.0, r).blue_count() == 20, "p_b = 0 and 1 are exact")
    count = dy.random_coloring(100_000, 0.3, rng(9)).blue_count()
    expect(6, abs(count - 30_000) <= 4 * math.sqrt(100_000 * 0.21), "blue count near binomial mean",
           str(count))
    expect(6, dy.blue_count(dy.Coloring.all_red(4)) == 0 and dy.blue_count(dy.Coloring.all_blue(7)) == 7
           and dy.blue_count(col("brb")) == 2, "blue_count examples")
    expect(6, col("bbrrr\n").to_string() == "bbrrr\n" and raises(systems.SpecParseError, col, "brx"),
           "coloring text format")
except Exception as e:
    fail(6, str(e)); traceback.print_exc()

# ─── ITEM 7: run_to_cycle ─────────────────────────────────────────────────────
print("\n── ITEM 7: run_to_cycle ──")
try:
    rep = dy.run_to_cycle(C4, dy.Coloring.all_red(4))
    expect(7, (rep.consensus_time, rep.period, rep.outcome) == (0, 1, dy.Outcome.RED), "all-red start")
    rep = dy.run_to_cycle(C4, col("brbr"))
    expect(7, (rep.consensus_time, rep.period, rep.outcome) == (0, 2, dy.Outcome.COEXISTENCE_PERIOD_2),
           "C4 alternating enters period 2")
    C5 = gc.generate_cycle_union([5])
    rep = dy.run_to_cycle(C5, col("bbrrr"))
    expect(7, (rep.consensus_time, rep.period, rep.outcome) == (0, 1, dy.Outcome.COEXISTENCE_FIXED),
           "C5 (b,b,r,r,r) is already fixed: every vertex ties or sees two reds")
    rep = dy.run_to_cycle(C3, col("bbr"), keep_colorings=True)
    expect(7, rep.consensus_time == 1 and rep.outcome == dy.Outcome.BLUE
           and rep.trajectory_blue_counts == [2, 3, 3] and rep.colorings[1] == "bbb\n",
           "triangle (b,b,r) turns blue in one round")
    expect(7, dy.ConsensusReport.from_dict(json.loads(json.dumps(rep.to_dict()))) == rep,
           "report survives a JSON round trip")
    expect(7, raises(systems.CycleCapExceededError, dy.run_to_cycle, C4, col("brbr"), 1),
           "cap hit raises")
    counts, last = dy.run_rounds(C3, col("bbr"), 3)
    expect(7, counts == [2, 3, 3, 3] and last == dy.Coloring.all_blue(3), "fixed-horizon rounds")

    r = rng(10)
    small = [gc.generate_cycle_union([k]) for k in range(3, 9)]
    small += [K4, gc.generate_matching(6)] + [gc.generate_random_regular(10, 3, r) for _ in range(3)]
    periods = set()
    worst = 0
    for h in small:
        for code in range(1 << h.n):
            c = dy.Coloring([(code >> i) & 1 for i in range(h.n)])
            rep = dy.run_to_cycle(h, c)
            periods.add(rep.period)
            worst = max(worst, rep.consensus_time)
    expect(7, periods <= {1, 2}, f"every start on {len(small)} small graphs ends in period 1 or 2 "
                                 f"(longest transient {worst})")
except Exception as e:
    fail(7, str(e)); traceback.print_exc()

# ─── ITEM 8: Theory ───────────────────────────────────────────────────────────
print("\n── ITEM 8: recurrence and bounds ──")
try:
    expect(8, th.propagation_recurrence(5, 0.0, 4).values == [0.0] * 5
           and th.propagation_recurrence(5, 1.0, 1).values[1] == 1.0, "p_b = 0 and 1")
    expect(8, abs(th.propagation_recurrence(3, 0.5, 1).values[1] - 0.75) < 1e-12, "d=3, p_b=0.5: P1 = 0.75")
    expect(8, raises(systems.InvalidParameterError, th.propagation_recurrence, 4, 0.3, 2)
           and raises(systems.InvalidParameterError, th.propagation_recurrence, 1, 0.3, 2),
           "even or small degree rejected")
    expect(8, abs(th.p1_exponential_bound(51, 0.2) - 0.018316) < 1e-6
           and th.p1_exponential_bound(3, 1e-6) > 0.999999, "P1 bound values")
    below = all(th.propagation_recurrence(d, 0.5 - eps, 1).values[1] <= th.p1_exponential_bound(d, eps)
                for d in range(3, 202, 2) for eps in (0.05, 0.1, 0.2, 0.3))
    expect(8, below, "recurrence P1 never exceeds exp(-2(d-1)eps^2)")
    expect(8, th.lemma1_bound(4, 2) == 1024 and th.lemma1_bound(2, 0) == 4
           and th.lemma1_bound(10, 3) == 4_000_000, "lemma1_bound values")
    expect(8, th.predicted_round_bound(16, 2 ** 16, 1) == 1 and th.predicted_round_bound(4, 2 ** 256, 1) == 4
           and th.predicted_round_bound(4, 2 ** 256, 2) == 8, "round bound values")
    grid = np.linspace(0, 1, 201)
    monotone = all(np.all(np.diff(th.recurrence_map_grid(d, grid)) >= -1e-15) for d in (3, 5, 7, 51, 201))
    expect(8, monotone, "one-step map is nondecreasing")
    contraction = all(th.propagation_step(d, p) <= p ** ((d - 1) / 4) * (1 + 1e-9)
                      for d in range(3, 102, 2) for p in (1 / 16, 1 / 32, 0.01, 0.001))
    expect(8, contraction, "P_i <= P_{i-1}^{(d-1)/4} below 1/16")
    stable = all(0.0 <= v <= 1.0 and math.isfinite(v)
                 for d in (101, 501, 1001) for v in th.propagation_recurrence(d, 0.49, 5).values)
    expect(8, stable, "values finite and in [0,1] up to d = 1001")
except Exception as e:
    fail(8, str(e)); traceback.print_exc()

# ─── ITEM 9: Control, takeover, immunity ──────────────────────────────────────
print("\n── ITEM 9: control relation and immunity audit ──")
try:
    S = gc.VertexSet(4, [0, 2])
    expect(9, mp.controlled_set(C4, S, mp.ControlMode.NECESSARY).to_list() == [1, 3], "C4 necessary mode")
    expect(9, mp.control_report(K4, gc.VertexSet(4, [0, 1])).to_dict()
           == {"source": [0, 1], "controlled": [2, 3], "mode": "necessary"}, "K4 control report")
    K5 = gc.generate_complete(5)
    expect(9, mp.controlled_set(K5, gc.VertexSet(5, [0, 1]), mp.ControlMode.SUFFICIENT).size == 0,
           "K5 sufficient mode: ties are not forced")
    g = gc.generate_random_regular(40, 5, rng(11))
    everyone = gc.VertexSet(40, range(40))
    expect(9, mp.controlled_set(g, everyone, "sufficient") == everyone, "S = V controls V")
    expect(9, raises(systems.InvalidParameterError, mp.controlled_set, gc.generate_gnp(10, 0.5, rng(1)),
                     gc.VertexSet(10, [0]), "necessary")
           and raises(systems.InvalidParameterError, mp.controlled_set, g, gc.VertexSet(40), "sufficient"),
           "non-regular necessary mode and empty S rejected")
    r = rng(12)
    subset = sound = True
    for _ in range(40):
        s = gc.VertexSet(40, r.choice(40, size=int(r.integers(1, 25)), replace=False).tolist())
        suff = mp.controlled_set(g, s, "sufficient")
        subset &= suff.issubset(mp.controlled_set(g, s, "necessary"))
        for _ in range(5):
            c = dy.Coloring(np.where(s.mask, True, r.random(40) < 0.5))
            nxt = dy.majority_step(g, c)
            sound &= bool(np.all(nxt.blue[suff.mask]))
            nxt_red = dy.majority_step(g, c.flip())
            sound &= not np.any(nxt_red.blue[suff.mask])
    expect(9, subset, "sufficient-mode output within necessary-mode output")
    expect(9, sound, "sufficient-mode vertices take S's color under random completions")
    expect(9, mp.takeover_step(C4, gc.VertexSet(4)).size == 0
           and mp.takeover_step(C4, gc.VertexSet(4, range(4))).size == 4
           and mp.takeover_step(C4, S).to_list() == [1, 3], "takeover examples")
    rep = mp.immunity_audit(C4, 0.25, 5, "uniform", rng(13))
    expect(9, rep.sets_tested == 5 and rep.alpha_observed == 0 and rep.violating_set is not None,
           "C4 singletons take nothing over")
    expect(9, mp.takeover_step(K4, gc.VertexSet(4, [0, 1, 2])).size == 4, "K4: three vertices take everything")
    rep = mp.immunity_audit(K4, 0.75, 200, "uniform", rng(14))
    expect(9, math.isclose(rep.alpha_observed, 4 / 3), "K4 audit finds ratio 4/3", str(rep.alpha_observed))
    rep = mp.immunity_audit(C4, 0.1, 10, "greedy", rng(15))
    expect(9, rep.sets_tested == 0 and rep.violating_set is None, "beta*n < 1 tests nothing")
    h = gc.generate_random_regular(300, 6, rng(16))
    rep = mp.immunity_audit(h, 0.05, 500, "greedy", rng(17))
    w = rep.violating_set
    expect(9, rep.sets_tested == 500 and w is not None and 1 <= w.size <= 15
           and math.isclose(mp.takeover_step(h, w).size / w.size, rep.alpha_observed),
           "greedy audit witness reproduces the reported ratio", f"alpha={rep.alpha_observed}")
except Exception as e:
    fail(9, str(e)); traceback.print_exc()

# ─── ITEM 10: Dynamos ─────────────────────────────────────────────────────────
print("\n── ITEM 10: is_dynamo, exact and greedy searches ──")
try:
    v = mp.is_dynamo(C4, gc.VertexSet(4, range(4)))
    expect(10, v.is_dynamo and v.rounds == 0, "D = V in 0 rounds")
    v = mp.is_dynamo(C3, gc.VertexSet(3, [0, 1]))
    expect(10, v.is_dynamo and v.rounds == 1, "triangle, two vertices, one round")
    expect(10, not mp.is_dynamo(C4, S), "C4 {0,2} falls into the alternating cycle")
    expect(10, mp.exhaustive_min_dynamo(C3) == 2 and mp.exhaustive_min_dynamo(K4) == 3
           and mp.exhaustive_min_dynamo(EDGE) == 2
           and mp.exhaustive_min_dynamo(gc.generate_cycle_union([3, 3])) == 4, "exact minimum dynamos")
    r = rng(18)
    g8 = gc.generate_random_regular(8, 3, r)
    implied = True
    for _ in range(60):
        d = gc.VertexSet(8, r.choice(8, size=int(r.integers(1, 9)), replace=False).tolist())
        if mp.is_dynamo(g8, d, adversary="exhaustive"):
            implied &= bool(mp.is_dynamo(g8, d, adversary="canonical"))
    expect(10, implied, "every exhaustive dynamo is a canonical dynamo")
    never_beats = True
    for n in (8, 10, 12):
        h = gc.generate_random_regular(n, 3, r)
        exact = mp.exhaustive_min_dynamo(h)
        found = mp.greedy_dynamo_search(h, 80, r)
        never_beats &= found.best_size is not None and found.best_size >= exact >= 2
        never_beats &= bool(mp.is_dynamo(h, found.best_set, adversary="auto"))
    expect(10, never_beats, "greedy never beats the exact minimum on n <= 12")
    expect(10, mp.greedy_dynamo_search(K4, 50, rng(19)).best_size == 3
           and mp.greedy_dynamo_search(C3, 50, rng(19)).best_size == 2, "greedy on K4 and the triangle")
    base = mp.exact_min_dynamo_search(g8).best_set
    broken = mp.non_monotone_extensions(g8, base)
    expect(10, all(not mp.is_dynamo(g8, gc.VertexSet(8, base.to_list() + [x])) for x in broken),
           f"non-monotone extensions reported honestly ({len(broken)})")
    big = gc.generate_cycle_union([21])
    expect(10, raises(systems.InvalidParameterError, mp.exhaustive_min_dynamo, big)
           and raises(systems.InvalidParameterError, mp.is_dynamo, big, gc.VertexSet(21, [0]), None,
                      "exhaustive"), "exact work refused above n = 20")
except Exception as e:
    fail(10, str(e)); traceback.print_exc()

# ─── ITEM 11: Experiments ─────────────────────────────────────────────────────
print("\n── ITEM 11: experiment harness ──")
try:
    def rec(outcome, t=0):
        return ex.TrialRecord(0, 0, 0, outcome, t, 1, 0 if outcome == "red-monochromatic" else 3)
    s = ex.summarize([rec("red-monochromatic")] * 100)
    expect(11, s.red_freq == 1.0 and s.red_ci == 0.0, "all red: frequency 1, half-width 0")
    s = ex.summarize([rec("red-monochromatic")] * 50 + [rec("coexistence-fixed", 7)] * 50)
    expect(11, s.red_freq == 0.5 and abs(s.red_ci - 0.098) < 1e-3 and s.max_rounds == 7
           and s.coexistence_freq == 0.5 and dy.Outcome.COEXISTENCE_PERIOD_2.is_coexistence
           and not dy.Outcome.RED.is_coexistence,
           "50/100: half-width ~0.098, coexistence share, max rounds from records")
    expect(11, raises(systems.InvalidParameterError, ex.summarize, []), "empty summary rejected")
    seeds = {ex.trial_seeds(7, 0, t) for t in range(1000)}
    expect(11, len(seeds) == 1000 and ex.trial_seeds(7, 0, 5) == ex.trial_seeds(7, 0, 5),
           "per-trial seeds distinct and reproducible")
    spec = ex.ExperimentSpec(kind="density", n=200, d=5, p_b=0.0, trials=10, master_seed=3)
    res = ex.run_density_experiment(spec)
    expect(11, res.points[0].summary.red_freq == 1.0 and res.points[0].summary.max_rounds == 0,
           "p_b = 0: red in 0 rounds")
    spec = ex.ExperimentSpec(kind="density", n=300, d=7, pb_grid=[0.3, 0.5], trials=6, master_seed=4)
    a = cli.render_json(ex.run_density_experiment(spec).to_dict(True))
    spec.threads = 2
    b = cli.render_json(ex.run_density_experiment(spec).to_dict(True))
    expect(11, a == b and "threads" not in json.loads(a)["spec"],
           "identical JSON for 1 and 2 worker processes")
    consistent = all(r.final_blue_count == 0 for r in ex.run_density_experiment(spec).records
                     if r.outcome == "red-monochromatic")
    expect(11, consistent, "red outcomes carry zero final blue count")
    expect(11, raises(systems.InvalidParameterError, ex.run_density_experiment,
                      ex.ExperimentSpec(kind="density", n=100, d=3, p_b=0.6)), "p_b > 1/2 rejected")
    spec = ex.ExperimentSpec(kind="low-degree", family="empty", n=1000, c_grid=[0.1, 10],
                             trials=60, master_seed=5)
    res = ex.run_low_degree_threshold(spec)
    expect(11, res.points[0].summary.blue_freq <= 0.3 and res.points[1].summary.blue_freq >= 0.9,
           "empty graph: blue survival low at 0.1/n, high at 10/n")
    small_cycles = ex.run_low_degree_threshold(ex.ExperimentSpec(kind="low-degree", family="regular",
                                                                 n=50, d=2, trials=3, master_seed=6))
    small_matching = ex.run_low_degree_threshold(ex.ExperimentSpec(kind="low-degree", family="matching",
                                                                   n=6, trials=3, master_seed=6))
    expect(11, [p.extras["c"] for p in small_cycles.points] == [0.1, 0.3, 1, 3]
           and [p.extras["c"] for p in small_matching.points] == [0.1, 0.3, 1, 3]
           and all(0.0 <= p.pb <= 1.0 for p in small_cycles.points + small_matching.points),
           "small n: c values with p_b > 1 are dropped from the default grid")
    expect(11, raises(systems.InvalidParameterError, ex.run_low_degree_threshold,
                      ex.ExperimentSpec(kind="low-degree", family="matching", n=2, c_grid=[5, 10])),
           "low-degree grid with every p_b above 1 rejected")
    cmp0 = ex.run_propagation_validation(5, 0.0, 3, 1000, rng(20))
    cmp1 = ex.run_propagation_validation(3, 0.5, 1, 20000, rng(21))
    expect(11, cmp0.empirical == 0.0 and abs(cmp1.empirical - 0.75) <= 4 * cmp1.sigma,
           "tree Monte Carlo matches the recurrence", f"{cmp1.empirical:.4f}")
    expect(11, raises(systems.TreeBudgetError, ex.run_propagation_validation, 101, 0.4, 5, 10, rng(0)),
           "tree budget enforced")
    table = ex.run_tree_audit(ex.ExperimentSpec(kind="tree-audit", n=500, d=3, k_grid=[1],
                                                c_prime_grid=[1], trials=5, master_seed=6))
    expect(11, len(table.rows) == 2 and all(r["mean_within_lemma1"] for r in table.rows),
           "tree audit rows within lemma1_bound")
    res = ex.run_gnp_experiment(ex.ExperimentSpec(kind="gnp", family="gnp", n=101, p=1.0,
                                                  p_b=0.4, trials=30, master_seed=7, keep_records=True))
    expect(11, all(r.round1_blue_count == 0 for r in res.records if r.initial_blue_count <= 50),
           "complete graph: red majority wins in one round")
    res = ex.run_gnp_experiment(ex.ExperimentSpec(kind="gnp", family="gnp", n=30, p=0.0,
                                                  p_b=0.4, trials=20, master_seed=8))
    expect(11, all((r.outcome == "coexistence-fixed") == (0 < r.initial_blue_count < 30)
                   for r in res.records), "p = 0: coexistence exactly when both colors start")
    expect(11, raises(systems.InvalidParameterError, ex.run_immunity_experiment,
                      ex.ExperimentSpec(kind="immunity", n=100, d=5)), "immunity needs d >= 10")
    spec = ex.ExperimentSpec(kind="immunity", n=400, d=10, trials=2, audit_trials=200,
                             master_seed=13)
    table = ex.run_immunity_experiment(spec)
    summ = table.summary
    expect(11, summ["k4_min_dynamo"] == 3 and summ["min_dynamo_found"] is not None
           and summ["min_dynamo_found"] >= 2, "immunity summary: K4 control and smallest dynamo found",
           str(summ))
    expect(11, summ["alpha_below_benchmark"] == (summ["alpha_max"] < summ["benchmark_ratio"])
           and math.isclose(summ["benchmark_ratio"], 1.0), "immunity benchmark 10/d")
    reproduced = len(table.rows) == 2
    for row in table.rows:
        g, _ = ex.trial_graph(spec, 0, row["graph"])
        witness = gc.VertexSet(g.n, row["witness"])
        taken = mp.control_report(g, witness, mp.ControlMode.SUFFICIENT).controlled.size
        reproduced &= (row["sets_tested"] == 200 and 1 <= witness.size <= 8
                       and math.isclose(taken / witness.size, row["alpha_observed"])
                       and len(row["finding_reports"]) == min(row["control_findings"], 10))
    expect(11, reproduced, "immunity rows: 200 sets each, witnesses reproduce alpha_observed")
    spec = ex.ExperimentSpec(kind="extinction", n=2000, d=11, c_double_prime=100, trials=5, master_seed=9)
    expect(11, ex.run_small_set_extinction(spec).points[0].summary.red_freq == 1.0,
           "sets of size n/100 die out")
    table = ex.run_tightness_probe(ex.ExperimentSpec(kind="tightness", n=2000, d=3, trials=5, master_seed=10))
    expect(11, table.summary["k_prime"] == 1 and len(table.rows) == 5, "tightness probe depth and rows")
    res = ex.run_torus_threshold(ex.ExperimentSpec(kind="torus", family="torus", side=10, trials=5,
                                                   master_seed=11))
    expect(11, len(res.points) == 5 and res.points[0].n == 100 and res.points[0].d == 4, "torus sweep grid")
    table = ex.run_lemma4_audit(ex.ExperimentSpec(kind="lemma4", n=400, d=20, c_double_prime=40,
                                                  audit_trials=300, trials=2, master_seed=12))
    expect(11, table.summary["findings"] == 0 and all(r["sets_tested"] == 300 for r in table.rows),
           "control audit: no findings on G(400, 20)")
    spec = ex.ExperimentSpec(kind="gnp", family="gnp", n=10, p=0.5, pb_grid=[0.1, 0.2])
    expect(11, ex.ExperimentSpec.from_dict(json.loads(json.dumps(spec.to_dict()))) == spec,
           "spec JSON round trip")
except Exception as e:
    fail(11, str(e)); traceback.print_exc()

# ─── ITEM 12: Command line ────────────────────────────────────────────────────
print("\n── ITEM 12: majority_project.py ──")
try:
    code, out, _ = run_cli(["propagation", "--d", "3", "--pb", "0.5", "--k", "1"])
    expect(12, code == 0 and "1,0.75" in out.splitlines(), "propagation table has P1 = 0.75")
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "g.txt")
        code, _, err = run_cli(["generate", "--family", "cycle-union", "--lengths", "3,4",
                                "--out", path, "--seed", "1"])
        with open(path, encoding="utf-8") as f:
            head = f.readline().strip()
        expect(12, code == 0 and head == "7 7" and "seed: 1" in err, "generate writes header 7 7")

        argv = ["simulate", "--family", "regular", "--n", "1000", "--d", "11", "--pb", "0.3", "--seed", "7"]
        first, second = run_cli(argv), run_cli(argv)
        expect(12, first[0] == 0 and first[1] == second[1] and json.loads(first[1])["seed"] == 7,
               "simulate is byte-identical under a fixed seed")
        start_path = os.path.join(tmp, "start.txt")
        graph_path = os.path.join(tmp, "g11.txt")
        run_cli(["generate", "--family", "regular", "--n", "1000", "--d", "11", "--seed", "7",
                 "--out", graph_path])
        code, out, _ = run_cli(argv + ["--out-coloring", start_path])
        start = dy.read_coloring(start_path)
        replay = run_cli(["simulate", "--graph", graph_path, "--coloring", start_path, "--seed", "7"])
        expect(12, code == 0 and start.n == 1000
               and start.blue_count() == json.loads(out)["initial_blue_count"]
               and json.loads(replay[1])["report"] == json.loads(out)["report"],
               "--out-coloring writes a fixture that replays the same run")

        spec_path = os.path.join(tmp, "s.spec")
        with open(spec_path, "w", encoding="utf-8") as f:
            f.write("kind=density\nn=200\nd=5\npb_grid=0.2,0.4\ntrials=4\nmaster_seed=2\n")
        one = run_cli(["sweep", "--spec", spec_path, "--threads", "1"])
        two = run_cli(["sweep", "--spec", spec_path, "--threads", "2"])
        expect(12, one[0] == 0 and one[1] == two[1]
               and one[1].splitlines()[0] == "pb,n,d,trials,red_freq,red_ci,blue_freq,mean_rounds,max_rounds",
               "sweep CSV header fixed, identical across thread counts")
        one = run_cli(["sweep", "--spec", spec_path, "--json", "--records", "--threads", "1"])
        two = run_cli(["sweep", "--spec", spec_path, "--json", "--records", "--threads", "2"])
        expect(12, one[0] == 0 and one[1] == two[1] and "threads" not in json.loads(one[1])["spec"],
               "sweep JSON byte-identical across thread counts")

        res = ex.run_experiment(cli.load_spec(spec_path))
        json_path = os.path.join(tmp, "r.json")
        cli.emit_json(res, json_path)
        with open(json_path, encoding="utf-8") as f:
            expect(12, json.load(f) == json.loads(json.dumps(res.to_dict())), "emit_json reloads equal")

        for body, what in (("kind=density\ntrials=0\nmaster_seed=1\n", "trials=0"),
                           ("kind=density\nbogus=1\ntrials=2\nmaster_seed=1\n", "unknown key"),
                           ("kind=density\ntrials=2\n", "missing master_seed")):
            with open(spec_path, "w", encoding="utf-8") as f:
                f.write(body)
            if not raises(systems.SpecParseError, cli.load_spec, spec_path):
                fail(12, f"spec with {what} accepted")
                break
        else:
            ok(12, "bad spec files rejected")
        try:
            cli.parse_spec("kind=density\n\nbogus\n", "x.spec")
            fail(12, "line without '=' accepted")
        except systems.SpecParseError as e:
            expect(12, e.line == 3, "spec errors carry line numbers")

        code, _, err = run_cli(["simulate", "--nonsense"])
        expect(12, code == 2 and err.startswith("usage error:"), "unknown flag: exit 2, usage prefix")
        code, _, err = run_cli(["sweep", "--spec", os.path.join(tmp, "missing.spec")])
        expect(12, code == 5 and err.startswith("io error:"), "missing file: exit 5, io prefix")
        codes = [run_cli(["generate", "--family", "regular", "--n", "5", "--d", "4", "--method",
                          "rejection", "--max-attempts", "1", "--seed", str(s)])[0] for s in range(10)]
        expect(12, 3 in codes, "attempts exhausted: exit 3")
        code, out, _ = run_cli(["dynamo", "--graph", os.path.join(FIXTURES, "triangle.txt"),
                                "--exact", "--seed", "0"])
        expect(12, code == 0 and json.loads(out)["search"]["best_size"] == 2, "dynamo --exact on a fixture")
        os.environ[cli.TEST_MODE_ENV] = "1"
        try:
            code, _, err = run_cli(["generate", "--family", "empty", "--n", "3"])
        finally:
            del os.environ[cli.TEST_MODE_ENV]
        expect(12, code == 2, "test mode makes --seed mandatory")
except Exception as e:
    fail(12, str(e)); traceback.print_exc()

# ─── ITEM 13: Shared systems ──────────────────────────────────────────────────
print("\n── ITEM 13: systems.py ──")
try:
    expect(13, systems.derive_seed(1, 2, 3) == systems.derive_seed(1, 2, 3)
           and systems.derive_seed(1, 2, 3) != systems.derive_seed(1, 3, 2)
           and raises(systems.InvalidParameterError, systems.derive_seed, -1), "seed derivation")
    expect(13, set(systems.BUILTIN_DEFAULTS) <= set(systems.load_defaults()), "defaults complete")
    m = systems.bernoulli_mask(rng(0), 1000, 0.0)
    expect(13, not m.any() and systems.bernoulli_mask(rng(0), 1000, 1.0).all()
           and raises(systems.InvalidParameterError, systems.bernoulli_mask, rng(0), 3, 1.5),
           "Bernoulli resolver edge cases")
except Exception as e:
    fail(13, str(e)); traceback.print_exc()

# ─── Summary ──────────────────────────────────────────────────────────────────
print("\n" + "═" * 60)
print(f"  RESULTS: {len(PASS)} passed, {len(FAIL)} failed")
print("═" * 60)
if FAIL:
    print("\n  FAILURES:")
    for f_item in FAIL:
        print(f_item)
    print()
    sys.exit(1)
else:
    print("\n  All QA items passed.\n")
    sys.exit(0)
