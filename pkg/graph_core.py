#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
graph_core.py — Graphs the majority process runs on.

  Configuration / Multigraph        — the configuration model and its projection
  Graph / VertexSet                 — immutable simple graph (CSR adjacency), vertex masks
  generate_*                        — random regular, cycle unions, matchings, G(n,p), torus
  ball / is_tree_neighborhood       — distance queries and local tree checks
  count_non_tree_neighborhoods      — chunked sparse count used by the tree audits
  select_disjoint_balls             — greedy marking of pairwise-disjoint k-balls
  write_edge_list / read_edge_list  — plain `n m` + `u v` text format
"""

import itertools
import math
from typing import Dict, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Set, Tuple

import networkx as nx
import numpy as np
from scipy import sparse

from systems import (AttemptsExhaustedError, InvalidParameterError, SpecParseError,
                     check_probability, default, get_logger)

logger = get_logger(__name__)

FAMILIES = ("regular", "cycle-union", "matching", "empty", "gnp", "torus")
SAMPLING_METHODS = ("auto", "rejection", "pairing")


# ─────────────────────────────────────────
# Configuration model
# ─────────────────────────────────────────

class HalfEdge(NamedTuple):
    vertex: int
    slot: int


class Configuration:
    """
    A perfect pairing of W = [n] x [d].

    Half-edge (v, i) has flat index v*d + i; pairing[x] is the partner of x.
    """

    def __init__(self, n: int, d: int, pairing: np.ndarray):
        total = n * d
        pairing = np.asarray(pairing, dtype=np.int64)
        if pairing.shape != (total,):
            raise InvalidParameterError(f"pairing must have {total} entries, got {pairing.shape}")
        idx = np.arange(total)
        if total and (np.any(pairing[pairing] != idx) or np.any(pairing == idx)):
            raise InvalidParameterError("pairing is not a fixed-point-free involution")
        pairing.flags.writeable = False
        self.n = n
        self.d = d
        self.pairing = pairing

    @property
    def pair_count(self) -> int:
        return self.n * self.d // 2

    def half_edge(self, index: int) -> HalfEdge:
        v, i = divmod(int(index), self.d)
        return HalfEdge(v, i)

    def partner(self, he: HalfEdge) -> HalfEdge:
        return self.half_edge(self.pairing[he.vertex * self.d + he.slot])

    def pairs(self) -> np.ndarray:
        """(n*d/2, 2) array of flat half-edge indices, smaller index first, ascending."""
        idx = np.arange(self.n * self.d)
        first = idx[idx < self.pairing]
        return np.stack([first, self.pairing[first]], axis=1)


class Multigraph:
    """Projection of a configuration; loops and parallel edges are kept."""

    def __init__(self, n: int, edges: np.ndarray):
        self.n = n
        self.edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)

    def degrees(self) -> np.ndarray:
        # a loop (v, v) contributes 2 to v
        return np.bincount(self.edges.ravel(), minlength=self.n)

    def loop_count(self) -> int:
        return int(np.count_nonzero(self.edges[:, 0] == self.edges[:, 1]))

    def multi_edge_count(self) -> int:
        lo = np.minimum(self.edges[:, 0], self.edges[:, 1])
        hi = np.maximum(self.edges[:, 0], self.edges[:, 1])
        keys = lo * self.n + hi
        return int(keys.size - np.unique(keys).size)

    def is_simple(self) -> bool:
        return self.loop_count() == 0 and self.multi_edge_count() == 0


def _check_configuration_size(n: int, d: int):
    if n < 1:
        raise InvalidParameterError(f"need at least one vertex, got n={n}")
    if d < 0:
        raise InvalidParameterError(f"degree must be non-negative, got d={d}")
    if (n * d) % 2:
        raise InvalidParameterError(f"n*d must be even for a configuration, got n={n}, d={d}")


def _sequential_matches(total: int, rng: np.random.Generator) -> Iterator[Tuple[int, int]]:
    """
    The sequential construction over half-edges 0..total-1: take the first
    unmatched half-edge in index order and match it with a uniformly random
    unmatched one. Yields the (x, y) pairs in the order they are formed.
    """
    # pool holds the unmatched half-edges; where[x] is x's position in pool
    pool = list(range(total))
    where = list(range(total))
    matched = bytearray(total)
    # after removing x at step j the pool has total - 2j - 1 entries
    draws = rng.integers(0, total - 2 * np.arange(total // 2) - 1).tolist() if total else []

    def take(x: int):
        pos = where[x]
        last = pool.pop()
        if last != x:
            pool[pos] = last
            where[last] = pos

    step = 0
    for x in range(total):
        if matched[x]:
            continue
        take(x)
        y = pool[draws[step]]
        step += 1
        take(y)
        matched[x] = matched[y] = 1
        yield x, y


def generate_configuration(n: int, d: int, rng: np.random.Generator) -> Configuration:
    """Uniform random configuration, half-edges ordered by (vertex, slot)."""
    _check_configuration_size(n, d)
    total = n * d
    partner = [0] * total
    for x, y in _sequential_matches(total, rng):
        partner[x] = y
        partner[y] = x
    return Configuration(n, d, np.array(partner, dtype=np.int64))


def enumerate_configurations(n: int, d: int) -> Iterator[Configuration]:
    """Every configuration of [n] x [d]; exhaustive oracle for tiny sizes only."""
    _check_configuration_size(n, d)
    total = n * d
    if total > 14:
        raise InvalidParameterError(f"refusing to enumerate pairings of {total} half-edges")

    def pairings(items: List[int]) -> Iterator[List[Tuple[int, int]]]:
        if not items:
            yield []
            return
        head, rest = items[0], items[1:]
        for i, mate in enumerate(rest):
            for tail in pairings(rest[:i] + rest[i + 1:]):
                yield [(head, mate)] + tail

    for pairs in pairings(list(range(total))):
        partner = np.empty(total, dtype=np.int64)
        for a, b in pairs:
            partner[a] = b
            partner[b] = a
        yield Configuration(n, d, partner)


def project_configuration(cfg: Configuration) -> Multigraph:
    pairs = cfg.pairs()
    return Multigraph(cfg.n, pairs // cfg.d if cfg.d else pairs)


def rejection_acceptance_rate(n: int, d: int) -> float:
    """Exact share of configurations that project to a simple graph."""
    total = simple = 0
    for cfg in enumerate_configurations(n, d):
        total += 1
        simple += project_configuration(cfg).is_simple()
    return simple / total


# ─────────────────────────────────────────
# Graph and VertexSet
# ─────────────────────────────────────────

class Graph:
    """
    Immutable simple undirected graph on vertices 0..n-1.

    Adjacency is flat CSR storage: the neighbors of v are
    neighbors[offsets[v]:offsets[v + 1]], sorted ascending.
    regular_degree is d when every vertex has degree d, else None.
    """

    def __init__(self, n: int, offsets: np.ndarray, neighbors: np.ndarray):
        self.n = int(n)
        self.offsets = offsets
        self.neighbors = neighbors
        self.offsets.flags.writeable = False
        self.neighbors.flags.writeable = False
        self.degrees = np.diff(offsets)
        self.degrees.flags.writeable = False
        self.m = int(neighbors.size // 2)
        if self.n and np.all(self.degrees == self.degrees[0]):
            self.regular_degree: Optional[int] = int(self.degrees[0])
        else:
            self.regular_degree = None
        self._sparse: Optional[sparse.csr_matrix] = None

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> "Graph":
        arr = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges,
                         dtype=np.int64).reshape(-1, 2)
        if n < 0:
            raise InvalidParameterError(f"vertex count must be non-negative, got {n}")
        if arr.size and (arr.min() < 0 or arr.max() >= n):
            raise InvalidParameterError(f"edge endpoint outside [0, {n})")
        if np.any(arr[:, 0] == arr[:, 1]):
            raise InvalidParameterError("graph must be simple: loop found")
        lo = np.minimum(arr[:, 0], arr[:, 1])
        hi = np.maximum(arr[:, 0], arr[:, 1])
        keys = lo * max(n, 1) + hi
        if np.unique(keys).size != keys.size:
            raise InvalidParameterError("graph must be simple: repeated edge found")
        src = np.concatenate([lo, hi])
        dst = np.concatenate([hi, lo])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        offsets = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=offsets[1:])
        return cls(n, offsets, dst.astype(np.int64))

    @classmethod
    def from_networkx(cls, nx_graph: nx.Graph) -> "Graph":
        nodes = sorted(nx_graph.nodes())
        index = {v: i for i, v in enumerate(nodes)}
        return cls.from_edges(len(nodes), [(index[u], index[v]) for u, v in nx_graph.edges()])

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        g.add_edges_from(self.edges().tolist())
        return g

    def neighbors_of(self, v: int) -> np.ndarray:
        return self.neighbors[self.offsets[v]:self.offsets[v + 1]]

    def neighbor_list(self, v: int) -> List[int]:
        return self.neighbors[self.offsets[v]:self.offsets[v + 1]].tolist()

    def edges(self) -> np.ndarray:
        """(m, 2) array of edges u < v in lexicographic order."""
        src = np.repeat(np.arange(self.n), self.degrees)
        keep = src < self.neighbors
        return np.stack([src[keep], self.neighbors[keep]], axis=1)

    def to_sparse(self) -> sparse.csr_matrix:
        """Symmetric 0/1 adjacency matrix (int32), cached."""
        if self._sparse is None:
            data = np.ones(self.neighbors.size, dtype=np.int32)
            self._sparse = sparse.csr_matrix((data, self.neighbors, self.offsets),
                                             shape=(self.n, self.n))
        return self._sparse

    def is_simple(self) -> bool:
        for v in range(self.n):
            nb = self.neighbors_of(v)
            if np.any(nb == v) or np.any(np.diff(nb) <= 0):
                return False
        return True

    def is_symmetric(self) -> bool:
        a = self.to_sparse()
        return (a != a.T).nnz == 0

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.n == other.n and np.array_equal(self.offsets, other.offsets)
                and np.array_equal(self.neighbors, other.neighbors))

    def __hash__(self):
        return hash((self.n, self.neighbors.tobytes()))

    def __repr__(self) -> str:
        reg = f", d={self.regular_degree}" if self.regular_degree is not None else ""
        return f"Graph(n={self.n}, m={self.m}{reg})"


class VertexSet:
    """Membership mask over [0, n)."""

    def __init__(self, n: int, members: Iterable[int] = ()):
        self.mask = np.zeros(n, dtype=bool)
        members = list(members)
        if members:
            self.mask[np.asarray(members, dtype=np.int64)] = True

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "VertexSet":
        vs = cls(0)
        vs.mask = np.asarray(mask, dtype=bool).copy()
        return vs

    @property
    def n(self) -> int:
        return int(self.mask.size)

    @property
    def size(self) -> int:
        return int(np.count_nonzero(self.mask))

    def __len__(self) -> int:
        return self.size

    def __iter__(self) -> Iterator[int]:
        return iter(np.flatnonzero(self.mask).tolist())

    def __contains__(self, v) -> bool:
        return 0 <= v < self.mask.size and bool(self.mask[v])

    def __eq__(self, other) -> bool:
        if not isinstance(other, VertexSet):
            return NotImplemented
        return np.array_equal(self.mask, other.mask)

    def __repr__(self) -> str:
        return f"VertexSet({self.to_list()})"

    def to_list(self) -> List[int]:
        return np.flatnonzero(self.mask).tolist()

    def intersection_count(self, neighbor_list) -> int:
        return int(np.count_nonzero(self.mask[np.asarray(neighbor_list, dtype=np.int64)]))

    def issubset(self, other: "VertexSet") -> bool:
        return not np.any(self.mask & ~other.mask)

    def isdisjoint(self, other: "VertexSet") -> bool:
        return not np.any(self.mask & other.mask)

    def union(self, other: "VertexSet") -> "VertexSet":
        return VertexSet.from_mask(self.mask | other.mask)

    def complement(self) -> "VertexSet":
        return VertexSet.from_mask(~self.mask)


# ─────────────────────────────────────────
# Generators
# ─────────────────────────────────────────

def _sample_simple_pairing(n: int, d: int, rng: np.random.Generator) -> Optional[np.ndarray]:
    """
    One run of the sequential construction, abandoned at the first loop or
    repeated edge. A run that completes is exactly a configuration whose
    projection is simple, so accepted graphs keep the rejection distribution.
    """
    seen: Set[int] = set()
    edges: List[Tuple[int, int]] = []
    for x, y in _sequential_matches(n * d, rng):
        u, v = x // d, y // d
        if u == v:
            return None
        if u > v:
            u, v = v, u
        key = u * n + v
        if key in seen:
            return None
        seen.add(key)
        edges.append((u, v))
    return np.array(edges, dtype=np.int64).reshape(-1, 2)


def _pairing_has_room(keys: np.ndarray, stubs: np.ndarray, n: int) -> bool:
    # some pair of distinct leftover vertices must still be non-adjacent
    candidates = np.unique(stubs)
    if candidates.size < 2:
        return False
    existing = set(keys.tolist())
    for s1, s2 in itertools.combinations(candidates.tolist(), 2):
        if s1 * n + s2 not in existing:
            return True
    return False


def _sample_pairing_repair(n: int, d: int, rng: np.random.Generator) -> Optional[np.ndarray]:
    """
    Stub pairing with repair: pair shuffled stubs, keep the pairs that are
    neither loops nor repeats, re-pair only the leftover stubs. Returns None
    when the leftovers cannot be completed.
    """
    keys = np.empty(0, dtype=np.int64)
    stubs = np.repeat(np.arange(n, dtype=np.int64), d)
    while stubs.size:
        rng.shuffle(stubs)
        a, b = stubs[0::2], stubs[1::2]
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        batch = lo * n + hi
        good = lo != hi
        _, first = np.unique(batch, return_index=True)
        is_first = np.zeros(batch.size, dtype=bool)
        is_first[first] = True
        good &= is_first
        good &= ~np.isin(batch, keys)
        keys = np.concatenate([keys, batch[good]])
        stubs = np.concatenate([a[~good], b[~good]])
        if stubs.size and not np.any(good) and not _pairing_has_room(keys, stubs, n):
            return None
    return np.stack([keys // n, keys % n], axis=1)


def generate_random_regular(n: int, d: int, rng: np.random.Generator,
                            max_attempts: Optional[int] = None,
                            method: str = "auto") -> Graph:
    """
    Random simple d-regular graph on n vertices.

    method="rejection" samples configurations until the projection is simple
    (uniform over d-regular graphs). Its acceptance rate decays like
    exp(-(d^2-1)/4), so method="auto" switches to stub pairing with repair
    above the dense_rejection_max_degree default.
    """
    _check_configuration_size(n, d)
    if d >= n:
        raise InvalidParameterError(f"need d < n for a simple graph, got n={n}, d={d}")
    if method not in SAMPLING_METHODS:
        raise InvalidParameterError(f"unknown sampling method {method!r}")
    if max_attempts is None:
        max_attempts = default("max_attempts")
    if d == 0:
        return generate_empty(n)
    if method == "auto":
        method = "rejection" if d <= default("dense_rejection_max_degree") else "pairing"
    sampler = _sample_simple_pairing if method == "rejection" else _sample_pairing_repair

    for attempt in range(1, max_attempts + 1):
        edges = sampler(n, d, rng)
        if edges is not None:
            logger.debug("regular(n=%d, d=%d) via %s accepted on attempt %d", n, d, method, attempt)
            return Graph.from_edges(n, edges)
    raise AttemptsExhaustedError(
        f"no simple {d}-regular graph on {n} vertices after {max_attempts} attempts ({method})",
        max_attempts)


def generate_cycle_union(lengths: Sequence[int]) -> Graph:
    edges = []
    start = 0
    for length in lengths:
        if length < 3:
            raise InvalidParameterError(f"cycle length must be at least 3, got {length}")
        for i in range(length):
            edges.append((start + i, start + (i + 1) % length))
        start += length
    return Graph.from_edges(start, edges)


def generate_matching(n: int) -> Graph:
    if n < 0 or n % 2:
        raise InvalidParameterError(f"a perfect matching needs an even vertex count, got {n}")
    return Graph.from_edges(n, [(i, i + 1) for i in range(0, n, 2)])


def generate_empty(n: int) -> Graph:
    if n < 0:
        raise InvalidParameterError(f"vertex count must be non-negative, got {n}")
    return Graph.from_edges(n, np.empty((0, 2), dtype=np.int64))


def generate_complete(n: int) -> Graph:
    return Graph.from_edges(n, list(itertools.combinations(range(n), 2)))


def generate_gnp(n: int, p: float, rng: np.random.Generator) -> Graph:
    """Binomial random graph: each of the n(n-1)/2 pairs present independently w.p. p."""
    check_probability("p", p)
    if n < 0:
        raise InvalidParameterError(f"vertex count must be non-negative, got {n}")
    # row i owns the pairs (i, j) for j > i
    counts = rng.binomial(n - 1 - np.arange(n), p) if n else np.empty(0, dtype=np.int64)
    chunks = []
    for i, c in enumerate(counts.tolist()):
        if c:
            cols = rng.choice(n - 1 - i, size=c, replace=False) + i + 1
            chunks.append(np.stack([np.full(c, i, dtype=np.int64), cols], axis=1))
    edges = np.concatenate(chunks) if chunks else np.empty((0, 2), dtype=np.int64)
    return Graph.from_edges(n, edges)


def generate_torus(side: int) -> Graph:
    """side x side grid with wrap-around; vertex (r, c) is r*side + c."""
    if side < 3:
        raise InvalidParameterError(f"torus side must be at least 3, got {side}")
    edges = []
    for r in range(side):
        for c in range(side):
            v = r * side + c
            edges.append((v, r * side + (c + 1) % side))
            edges.append((v, ((r + 1) % side) * side + c))
    return Graph.from_edges(side * side, edges)


def build_family_graph(family: str, rng: Optional[np.random.Generator] = None, *,
                       n: int = 0, d: int = 0, p: float = 0.0,
                       lengths: Sequence[int] = (), side: int = 0,
                       max_attempts: Optional[int] = None, method: str = "auto") -> Graph:
    """Single entry point from a family descriptor to a Graph."""
    if family == "regular":
        return generate_random_regular(n, d, rng, max_attempts=max_attempts, method=method)
    if family == "cycle-union":
        return generate_cycle_union(lengths)
    if family == "matching":
        return generate_matching(n)
    if family == "empty":
        return generate_empty(n)
    if family == "gnp":
        return generate_gnp(n, p, rng)
    if family == "torus":
        return generate_torus(side)
    raise InvalidParameterError(f"unknown graph family {family!r}; expected one of {FAMILIES}")


# ─────────────────────────────────────────
# Balls and tree neighborhoods
# ─────────────────────────────────────────

def _ball_members(g: Graph, v: int, k: int) -> Set[int]:
    seen = {v}
    frontier = [v]
    for _ in range(k):
        if not frontier:
            break
        nxt = []
        for u in frontier:
            for w in g.neighbor_list(u):
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    return seen


def _check_vertex(g: Graph, v: int, k: int):
    if not 0 <= v < g.n:
        raise InvalidParameterError(f"vertex {v} outside [0, {g.n})")
    if k < 0:
        raise InvalidParameterError(f"radius must be non-negative, got {k}")


def ball(g: Graph, v: int, k: int) -> VertexSet:
    """N_k(v): every vertex at BFS distance at most k from v, v included."""
    _check_vertex(g, v, k)
    return VertexSet(g.n, _ball_members(g, v, k))


def is_tree_neighborhood(g: Graph, v: int, k: int) -> bool:
    """The subgraph induced by N_k(v) is a tree (it is connected by construction)."""
    _check_vertex(g, v, k)
    members = _ball_members(g, v, k)
    twice_edges = 0
    for u in members:
        for w in g.neighbor_list(u):
            if w in members:
                twice_edges += 1
    return twice_edges // 2 == len(members) - 1


def count_non_tree_neighborhoods(g: Graph, k: int, chunk: int = 4096) -> int:
    """
    Number of vertices whose k-neighborhood is not a tree.

    Rows of a chunk are grown k times through (I + A); then for each row the
    ball size is its nnz and twice the induced edge count is sum(R * (R @ A)).
    """
    if k < 0:
        raise InvalidParameterError(f"radius must be non-negative, got {k}")
    if g.n == 0:
        return 0
    a = g.to_sparse()
    step = (a + sparse.identity(g.n, dtype=np.int32, format="csr")).tocsr()
    bad = 0
    for start in range(0, g.n, chunk):
        stop = min(g.n, start + chunk)
        rows = stop - start
        reach = sparse.csr_matrix((np.ones(rows, dtype=np.int32),
                                   (np.arange(rows), np.arange(start, stop))),
                                  shape=(rows, g.n))
        for _ in range(k):
            reach = reach @ step
            reach.data[:] = 1
        size = np.diff(reach.indptr)
        twice_edges = np.asarray(reach.multiply(reach @ a).sum(axis=1)).ravel()
        bad += int(np.count_nonzero(twice_edges != 2 * (size - 1)))
    return bad


def select_disjoint_balls(g: Graph, k: int) -> List[int]:
    """
    Greedy marking: take the lowest-index unmarked vertex u, keep it and mark
    N_2k(u). Kept vertices have pairwise-disjoint k-balls.
    """
    if k < 0:
        raise InvalidParameterError(f"radius must be non-negative, got {k}")
    marked = np.zeros(g.n, dtype=bool)
    centers = []
    for u in range(g.n):
        if marked[u]:
            continue
        centers.append(u)
        marked[list(_ball_members(g, u, 2 * k))] = True
    return centers


# ─────────────────────────────────────────
# Edge-list text format
# ─────────────────────────────────────────

def format_edge_list(g: Graph) -> str:
    lines = [f"{g.n} {g.m}"]
    lines.extend(f"{u} {v}" for u, v in g.edges().tolist())
    return "\n".join(lines) + "\n"


def write_edge_list(g: Graph, path: str):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(format_edge_list(g))


def parse_edge_list(text: str, path: Optional[str] = None) -> Graph:
    """Header `n m`, then m lines `u v`; degree metadata is recomputed, never read."""
    lines = text.splitlines()
    if not lines:
        raise SpecParseError("empty edge list", path, 1)

    def ints(lineno: int, raw: str) -> Tuple[int, int]:
        parts = raw.split()
        if len(parts) != 2:
            raise SpecParseError(f"expected two integers, got {raw!r}", path, lineno)
        try:
            return int(parts[0]), int(parts[1])
        except ValueError:
            raise SpecParseError(f"expected two integers, got {raw!r}", path, lineno) from None

    n, m = ints(1, lines[0])
    body = [(i + 2, raw) for i, raw in enumerate(lines[1:]) if raw.strip()]
    if len(body) != m:
        raise SpecParseError(f"header announces {m} edges, found {len(body)}", path, 1)
    edges = [ints(lineno, raw) for lineno, raw in body]
    try:
        return Graph.from_edges(n, edges)
    except InvalidParameterError as e:
        raise SpecParseError(str(e), path) from None


def read_edge_list(path: str) -> Graph:
    with open(path, encoding="utf-8") as f:
        return parse_edge_list(f.read(), path)


def graph_summary(g: Graph) -> Dict[str, Optional[int]]:
    return {"n": g.n, "m": g.m, "regular_degree": g.regular_degree}


def lemma1_regime(n: int, d: int, k: int) -> bool:
    """k < log_d(n/2), the range where lemma1_bound is not trivially true."""
    if d < 2:
        return True
    return k < math.log(n / 2, d)
