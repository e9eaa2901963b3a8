"""Cross-file integrity check for the data/ resources of the majority project."""
import glob
import json
import os
import re
import sys

ROOT = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, ROOT)

import dynamics
import graph_core
import majority_project
import monopoly
import systems
from systems import MajorityError

failures = []
warnings = []

def fail(msg):   failures.append(msg)
def warn(msg):   warnings.append(msg)
def ok(msg):     print(f"  [OK]  {msg}")

def data(*parts):
    return os.path.join(ROOT, "data", *parts)

# ── Load all files ────────────────────────────────────────────────────
with open(data("defaults.json"),             encoding="utf-8") as f: defaults = json.load(f)
with open(data("lang_en.json"),              encoding="utf-8") as f: lang = json.load(f)
with open(data("fixtures", "fixtures.json"), encoding="utf-8") as f: fixtures = json.load(f)
with open(os.path.join(ROOT, "majority_project.py"), encoding="utf-8") as f: cli_source = f.read()

# ═══════════════════════════════════════════════════════════════════
print("=== defaults.json ===")

for key in systems.BUILTIN_DEFAULTS:
    if key not in defaults:
        fail(f"defaults.json missing key: {key}")
for key in defaults:
    if key not in systems.BUILTIN_DEFAULTS:
        fail(f"defaults.json key '{key}' has no built-in fallback in systems.py")
ok(f"{len(defaults)} keys, all with built-in fallbacks")

for key, value in defaults.items():
    builtin = systems.BUILTIN_DEFAULTS.get(key)
    if builtin is not None and value != builtin:
        warn(f"defaults.json overrides {key}: {builtin!r} -> {value!r}")

if defaults.get("exhaustive_adversary_max_n", 0) > defaults.get("exhaustive_dynamo_max_n", 0):
    fail("exhaustive_adversary_max_n exceeds exhaustive_dynamo_max_n")
if defaults.get("ci_floor_trials", 0) < 1:
    fail("ci_floor_trials must be positive")
for c in defaults.get("c_prime_grid", []):
    if c <= 0:
        fail(f"c_prime_grid value {c} is not positive")
ok("defaults values are in range")

# ═══════════════════════════════════════════════════════════════════
print("=== lang_en.json ===")

used = set(re.findall(r"""\bt\(\s*["']([a-z0-9_]+)["']""", cli_source))
# prefixes reach t() through _fail(prefix_key, ...)
used |= set(re.findall(r"""["'](prefix_[a-z]+)["']""", cli_source))
for key in sorted(used):
    if key not in lang:
        fail(f"majority_project.py uses message '{key}' missing from lang_en.json")
ok(f"{len(used)} message keys referenced by the CLI, all present")

for prefix in ("prefix_usage", "prefix_spec", "prefix_generation", "prefix_invariant", "prefix_io"):
    text = lang.get(prefix, "")
    if not text.endswith(":"):
        fail(f"diagnostic prefix '{prefix}' should end with ':' (got {text!r})")
ok("diagnostic prefixes well-formed")

for key in sorted(set(lang) - used):
    warn(f"lang_en.json key '{key}' is never referenced")
if "{seed}" not in lang.get("seed_echo", ""):
    fail("seed_echo must contain the {seed} placeholder")

# ═══════════════════════════════════════════════════════════════════
print("=== sweeps/*.spec ===")

spec_files = sorted(glob.glob(data("sweeps", "*.spec")))
kinds = set()
for path in spec_files:
    try:
        spec = majority_project.load_spec(path)
    except MajorityError as e:
        fail(f"{os.path.basename(path)}: {e}")
        continue
    kinds.add(spec.kind)
ok(f"{len(spec_files)} spec files parse and validate")
for kind in ("density", "low-degree", "gnp", "tree-audit", "immunity", "lemma4"):
    if kind not in kinds:
        warn(f"no ready-made spec file for experiment kind '{kind}'")

# ═══════════════════════════════════════════════════════════════════
print("=== fixtures/ ===")

graphs = {}
for name, meta in fixtures.get("graphs", {}).items():
    for key in ("file", "n", "m", "regular_degree", "min_dynamo"):
        if key not in meta:
            fail(f"fixture graph '{name}' missing key: {key}")
    try:
        g = graph_core.read_edge_list(data("fixtures", meta["file"]))
    except (MajorityError, OSError) as e:
        fail(f"fixture graph '{name}': {e}")
        continue
    graphs[name] = g
    if (g.n, g.m, g.regular_degree) != (meta.get("n"), meta.get("m"), meta.get("regular_degree")):
        fail(f"fixture graph '{name}' metadata does not match its edge list: "
             f"{(g.n, g.m, g.regular_degree)}")
    with open(data("fixtures", meta["file"]), encoding="utf-8") as f:
        raw = f.read()
    if graph_core.format_edge_list(g) != raw:
        warn(f"fixture graph '{name}' is not in canonical edge-list form")
ok(f"{len(graphs)} fixture graphs parse, metadata consistent")

for name, meta in fixtures.get("graphs", {}).items():
    if name in graphs and graphs[name].n <= 20:
        found = monopoly.exhaustive_min_dynamo(graphs[name])
        if found != meta.get("min_dynamo"):
            fail(f"fixture graph '{name}': minimum dynamo {found}, pinned {meta.get('min_dynamo')}")
ok("pinned minimum dynamos reproduce")

for entry in fixtures.get("colorings", []):
    name = entry.get("graph")
    if name not in graphs:
        fail(f"fixture coloring '{entry.get('file')}' refers to unknown graph '{name}'")
        continue
    c0 = dynamics.read_coloring(data("fixtures", entry["file"]))
    if c0.n != graphs[name].n:
        fail(f"fixture coloring '{entry['file']}' has {c0.n} entries, graph '{name}' has {graphs[name].n}")
        continue
    rep = dynamics.run_to_cycle(graphs[name], c0)
    got = {"consensus_time": rep.consensus_time, "period": rep.period,
           "outcome": rep.outcome.value, "final_blue_count": rep.final_blue_count}
    for key, value in got.items():
        if entry.get(key) != value:
            fail(f"fixture coloring '{entry['file']}': {key} is {value!r}, pinned {entry.get(key)!r}")
ok(f"{len(fixtures.get('colorings', []))} fixture colorings reproduce their pinned reports")

# ═══════════════════════════════════════════════════════════════════
print()
if warnings:
    print(f"=== WARNINGS ({len(warnings)}) ===")
    for w in warnings:
        print(f"  [WARN] {w}")
    print()

if failures:
    print(f"=== FAILURES: {len(failures)} ===")
    for fi in failures:
        print(f"  [FAIL] {fi}")
    sys.exit(1)
else:
    print(f"=== ALL CHECKS PASSED  ({len(warnings)} warnings) ===")
    sys.exit(0)
