"""Weighted multigraphs, oriented-edge algebra and cycle-rooted spanning forests.

Oriented edges are plain integers: edge ``e`` stored as ``(a, b)`` gives the
oriented edge ``2*e`` running a -> b and ``2*e + 1`` running b -> a, so
reversal is ``oe ^ 1``.  A CRSF is stored the way cycle popping produces it:
every non-root vertex owns exactly one outgoing oriented edge.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

__all__ = [
    "GraphError",
    "OrientedEdge",
    "WeightedGraph",
    "OrientedCrsf",
    "build_graph",
    "rev",
    "validate_crsf",
    "crsf_from_edges",
    "crsf_edge_weight",
    "is_crsf_subgraph",
    "cycle_vertices",
    "cycle_key",
    "canonical_cycle",
    "simple_cycles",
    "read_graph",
    "write_graph",
    "format_graph",
    "parse_graph",
]


class GraphError(ValueError):
    pass


def rev(oe: int) -> int:
    return oe ^ 1


class OrientedEdge(NamedTuple):
    edge_id: int
    reverse: bool = False

    @property
    def index(self) -> int:
        return 2 * self.edge_id + int(self.reverse)

    @classmethod
    def from_index(cls, oe: int) -> "OrientedEdge":
        return cls(oe >> 1, bool(oe & 1))

    def reversed(self) -> "OrientedEdge":
        return OrientedEdge(self.edge_id, not self.reverse)


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Undirected multigraph with positive conductances.

    ``adj_ptr``/``adj_oe`` is a CSR list of the oriented edges leaving each
    vertex, in increasing oriented-edge id.
    """

    vertex_count: int
    ends: np.ndarray  # (E, 2) int64
    conductance: np.ndarray  # (E,) float64
    adj_ptr: np.ndarray = field(repr=False)
    adj_oe: np.ndarray = field(repr=False)

    @property
    def edge_count(self) -> int:
        return len(self.conductance)

    @cached_property
    def tail(self) -> np.ndarray:
        t = np.empty(2 * self.edge_count, dtype=np.int64)
        t[0::2] = self.ends[:, 0]
        t[1::2] = self.ends[:, 1]
        return t

    @cached_property
    def head(self) -> np.ndarray:
        h = np.empty(2 * self.edge_count, dtype=np.int64)
        h[0::2] = self.ends[:, 1]
        h[1::2] = self.ends[:, 0]
        return h

    @cached_property
    def oe_conductance(self) -> np.ndarray:
        return np.repeat(self.conductance, 2)

    @cached_property
    def degree(self) -> np.ndarray:
        """Conductance-weighted degree."""
        d = np.zeros(self.vertex_count)
        np.add.at(d, self.ends[:, 0], self.conductance)
        np.add.at(d, self.ends[:, 1], self.conductance)
        return d

    def out_edges(self, v: int) -> np.ndarray:
        return self.adj_oe[self.adj_ptr[v]:self.adj_ptr[v + 1]]

    def edge_list(self) -> list[tuple[int, int, float]]:
        return [(int(a), int(b), float(c)) for (a, b), c in zip(self.ends, self.conductance)]

    def laplacian(self) -> np.ndarray:
        """Ordinary weighted graph Laplacian (dense)."""
        n = self.vertex_count
        L = np.zeros((n, n))
        a, b = self.ends[:, 0], self.ends[:, 1]
        np.add.at(L, (a, b), -self.conductance)
        np.add.at(L, (b, a), -self.conductance)
        L[np.diag_indices(n)] += self.degree
        return L

    def components(self) -> np.ndarray:
        """Connected-component label per vertex."""
        parent = list(range(self.vertex_count))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in self.ends:
            ra, rb = find(int(a)), find(int(b))
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        return np.array([find(v) for v in range(self.vertex_count)], dtype=np.int64)

    def is_connected(self) -> bool:
        return self.vertex_count <= 1 or len(set(self.components().tolist())) == 1

    def subgraph(self, vertices: Iterable[int]) -> tuple["WeightedGraph", np.ndarray, np.ndarray]:
        """Induced subgraph; returns (graph, vertex map old->new or -1, kept edge ids)."""
        keep = np.zeros(self.vertex_count, dtype=bool)
        keep[list(vertices)] = True
        vmap = -np.ones(self.vertex_count, dtype=np.int64)
        vmap[keep] = np.arange(keep.sum())
        eids = np.flatnonzero(keep[self.ends[:, 0]] & keep[self.ends[:, 1]])
        sub = build_graph(
            [(int(vmap[a]), int(vmap[b]), float(c))
             for (a, b), c in zip(self.ends[eids], self.conductance[eids])],
            vertex_count=int(keep.sum()),
        )
        return sub, vmap, eids


def build_graph(edge_list: Iterable[Sequence], vertex_count: int | None = None) -> WeightedGraph:
    """Build a graph from ``(a, b, conductance)`` triples (conductance defaults to 1)."""
    rows = []
    for item in edge_list:
        a, b = int(item[0]), int(item[1])
        c = float(item[2]) if len(item) > 2 else 1.0
        rows.append((a, b, c))
    if vertex_count is None:
        vertex_count = 1 + max((max(a, b) for a, b, _ in rows), default=-1)
    n = int(vertex_count)
    if n < 0:
        raise GraphError("negative vertex count")
    for i, (a, b, c) in enumerate(rows):
        if not (0 <= a < n and 0 <= b < n):
            raise GraphError(f"edge {i}: vertex id out of range [0, {n})")
        if a == b:
            raise GraphError(f"edge {i}: self-loop at vertex {a}")
        if not c > 0 or not np.isfinite(c):
            raise GraphError(f"edge {i}: conductance must be positive, got {c}")
    ends = np.array([(a, b) for a, b, _ in rows], dtype=np.int64).reshape(-1, 2)
    cond = np.array([c for _, _, c in rows], dtype=np.float64)
    tails = np.empty(2 * len(rows), dtype=np.int64)
    tails[0::2] = ends[:, 0]
    tails[1::2] = ends[:, 1]
    order = np.argsort(tails, kind="stable")
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(ptr, tails + 1, 1)
    ptr = np.cumsum(ptr)
    return WeightedGraph(n, ends, cond, ptr, order.astype(np.int64))


# ---------------------------------------------------------------------------
# CRSFs


@dataclass(frozen=True, eq=False)
class OrientedCrsf:
    """Functional-graph CRSF: ``parent[v]`` is the oriented edge leaving v, -1 at roots."""

    parent: np.ndarray
    roots: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "parent", np.asarray(self.parent, dtype=np.int64))

    def key(self) -> bytes:
        return self.parent.tobytes()

    def edges(self) -> np.ndarray:
        return self.parent[self.parent >= 0] >> 1

    def cycles_in(self, g: WeightedGraph) -> list[tuple[int, ...]]:
        return _functional_cycles(self.parent, g.head)

    def component_ids(self, g: WeightedGraph) -> np.ndarray:
        """Label of the cycle (or root) each vertex flows into."""
        n = len(self.parent)
        comp = -np.ones(n, dtype=np.int64)
        for i, cyc in enumerate(self.cycles_in(g)):
            for oe in cyc:
                comp[g.tail[oe]] = i
        ncyc = int(comp.max()) + 1 if n else 0
        for r in sorted(self.roots):
            comp[r] = ncyc
            ncyc += 1
        for v in range(n):
            path = []
            u = v
            while comp[u] < 0:
                path.append(u)
                u = int(g.head[self.parent[u]])
            for w in path:
                comp[w] = comp[u]
        return comp


def _functional_cycles(parent: np.ndarray, head: np.ndarray) -> list[tuple[int, ...]]:
    n = len(parent)
    state = np.zeros(n, dtype=np.int8)  # 0 unseen, 1 on stack, 2 done
    cycles = []
    for s in range(n):
        if state[s]:
            continue
        path = []
        u = s
        while u >= 0 and state[u] == 0:
            state[u] = 1
            path.append(u)
            oe = parent[u]
            u = int(head[oe]) if oe >= 0 else -1
        if u >= 0 and state[u] == 1:
            i = path.index(u)
            cycles.append(tuple(int(parent[w]) for w in path[i:]))
        for w in path:
            state[w] = 2
    return cycles


def validate_crsf(g: WeightedGraph, s, roots: Iterable[int] = ()) -> bool:
    """Check the CRSF invariants.

    ``s`` is an :class:`OrientedCrsf` or a collection of edge ids (an
    unoriented subgraph).  With ``roots`` given the essential (Dirichlet)
    variant is checked: trees rooted at the roots plus unicycles avoiding them.
    """
    if not isinstance(s, OrientedCrsf):
        return is_crsf_subgraph(g, s, roots)
    roots = frozenset(roots) | s.roots
    p = s.parent
    n = g.vertex_count
    if len(p) != n:
        return False
    if np.any(p >= 2 * g.edge_count):
        raise IndexError("dangling oriented edge id")
    for v in range(n):
        if v in roots:
            if p[v] != -1:
                return False
        elif p[v] < 0 or g.tail[p[v]] != v:
            return False
    cycles = _functional_cycles(p, g.head)
    on_cycle = set()
    for cyc in cycles:
        if len(cyc) == 2 and cyc[0] >> 1 == cyc[1] >> 1:
            return False  # backtrack along one edge: not a cycle of the subgraph
        verts = [int(g.tail[oe]) for oe in cyc]
        if len(set(verts)) != len(verts) or on_cycle.intersection(verts):
            return False
        on_cycle.update(verts)
    # every vertex reaches its cycle or a root within n steps
    for v in range(n):
        u, k = v, 0
        while u not in on_cycle and u not in roots:
            u = int(g.head[p[u]])
            k += 1
            if k > n:
                return False
    return True


def is_crsf_subgraph(g: WeightedGraph, edge_ids: Iterable[int], roots: Iterable[int] = ()) -> bool:
    """Edge-subset test: each component has as many edges as vertices.

    Components touching ``roots`` must instead be trees containing exactly one
    root (essential CRSF); root vertices themselves are not counted as needing an edge.
    """
    roots = set(int(r) for r in roots)
    eids = list(edge_ids)
    if len(set(eids)) != len(eids):
        return False
    parent = list(range(g.vertex_count))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in eids:
        a, b = (int(x) for x in g.ends[e])
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    nv: dict[int, int] = {}
    ne: dict[int, int] = {}
    nr: dict[int, int] = {}
    for v in range(g.vertex_count):
        r = find(v)
        nv[r] = nv.get(r, 0) + 1
        nr[r] = nr.get(r, 0) + (v in roots)
    for e in eids:
        r = find(int(g.ends[e, 0]))
        ne[r] = ne.get(r, 0) + 1
    for r in nv:
        if nr[r] > 1:
            return False
        if nr[r] == 1:
            if ne.get(r, 0) != nv[r] - 1:
                return False
        elif ne.get(r, 0) != nv[r]:
            return False
    return True


def crsf_from_edges(g: WeightedGraph, edge_ids: Iterable[int], roots: Iterable[int] = ()) -> OrientedCrsf | None:
    """Orient an unoriented CRSF subgraph toward its cycles/roots by leaf stripping.

    Cycles are given their canonical orientation.  Returns None if the subgraph
    is not a (essential) CRSF.
    """
    roots = frozenset(int(r) for r in roots)
    eids = list(edge_ids)
    n = g.vertex_count
    incident: list[set[int]] = [set() for _ in range(n)]
    for e in eids:
        a, b = (int(x) for x in g.ends[e])
        incident[a].add(2 * e)
        incident[b].add(2 * e + 1)
    parent = -np.ones(n, dtype=np.int64)
    deg = [len(s) for s in incident]
    alive = set(range(n))
    stack = [v for v in range(n) if deg[v] == 1 and v not in roots]
    while stack:
        v = stack.pop()
        if v not in alive or deg[v] != 1:
            continue
        (oe,) = incident[v]
        parent[v] = oe
        alive.discard(v)
        w = int(g.head[oe])
        incident[w].discard(oe ^ 1)
        incident[v].clear()
        deg[v] = 0
        deg[w] -= 1
        if deg[w] == 1 and w not in roots and w in alive:
            stack.append(w)
    for v in list(alive):
        if v in roots:
            if deg[v] != 0:
                return None
            alive.discard(v)
        elif deg[v] != 2:
            return None
    # what survives is a union of vertex-disjoint cycles
    while alive:
        s = min(alive)
        first = min(incident[s])
        # canonical direction: the smallest edge id of the cycle runs forward
        walk = [first]
        u = int(g.head[first])
        while u != s:
            nxt = [oe for oe in incident[u] if oe != (walk[-1] ^ 1)]
            walk.append(nxt[0])
            u = int(g.head[nxt[0]])
        emin = min(oe >> 1 for oe in walk)
        oes = walk
        if not any(oe == 2 * emin for oe in walk):
            oes = [oe ^ 1 for oe in reversed(walk)]
        for oe in oes:
            parent[int(g.tail[oe])] = oe
            alive.discard(int(g.tail[oe]))
    s = OrientedCrsf(parent, roots)
    return s if validate_crsf(g, s) else None


def crsf_edge_weight(g: WeightedGraph, s: OrientedCrsf) -> float:
    """Product of conductances over the edges of ``s``."""
    return float(np.prod(g.conductance[s.edges()]))


# ---------------------------------------------------------------------------
# cycles


def cycle_vertices(g: WeightedGraph, cycle: Sequence[int]) -> list[int]:
    return [int(g.tail[oe]) for oe in cycle]


def cycle_key(cycle: Sequence[int]) -> frozenset:
    """Unoriented identity of a simple cycle: its edge-id set."""
    return frozenset(oe >> 1 for oe in cycle)


def canonical_cycle(cycle: Sequence[int]) -> tuple[int, ...]:
    """Rotate an oriented cycle to start at its smallest oriented edge."""
    i = int(np.argmin(cycle))
    return tuple(cycle[i:]) + tuple(cycle[:i])


def check_closed(g: WeightedGraph, cycle: Sequence[int]) -> None:
    if not len(cycle):
        raise GraphError("empty walk")
    for a, b in zip(cycle, list(cycle[1:]) + [cycle[0]]):
        if g.head[a] != g.tail[b]:
            raise GraphError("walk is not closed")


def simple_cycles(g: WeightedGraph, avoid: Iterable[int] = (), max_length: int | None = None) -> list[tuple[int, ...]]:
    """All simple cycles (each once, in canonical orientation) avoiding ``avoid``.

    Parallel edges give genuine 2-cycles; a single edge walked back and forth
    does not count.
    """
    avoid = set(int(v) for v in avoid)
    n = g.vertex_count
    limit = max_length or n
    seen: set[frozenset] = set()
    out = []
    on_path = np.zeros(n, dtype=bool)
    for s in range(n):
        if s in avoid:
            continue
        path: list[int] = []
        on_path[s] = True

        def dfs(u):
            for oe in g.out_edges(u):
                oe = int(oe)
                w = int(g.head[oe])
                if w == s and path:
                    if len(path) == 1 and (path[0] >> 1) == (oe >> 1):
                        continue
                    cyc = path + [oe]
                    k = cycle_key(cyc)
                    if k not in seen:
                        seen.add(k)
                        emin = min(k)
                        if not any(x == 2 * emin for x in cyc):
                            cyc = [x ^ 1 for x in reversed(cyc)]
                        out.append(canonical_cycle(cyc))
                    continue
                if w <= s or w in avoid or on_path[w] or len(path) + 1 >= limit:
                    continue
                on_path[w] = True
                path.append(oe)
                dfs(w)
                path.pop()
                on_path[w] = False

        dfs(s)
        on_path[s] = False
    return out


# ---------------------------------------------------------------------------
# text format


def format_graph(g: WeightedGraph) -> str:
    lines = [f"graph {g.vertex_count}"]
    lines += [f"e {a} {b} {c!r}" for a, b, c in g.edge_list()]
    return "\n".join(lines) + "\n"


def parse_graph(text: str) -> WeightedGraph:
    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        if tok[0] == "graph" and len(tok) == 2:
            n = int(tok[1])
        elif tok[0] == "e" and len(tok) == 4:
            edges.append((int(tok[1]), int(tok[2]), float(tok[3])))
        else:
            raise GraphError(f"line {lineno}: cannot parse {raw!r}")
    if n is None:
        raise GraphError("missing 'graph <vertex_count>' header")
    return build_graph(edges, vertex_count=n)


def write_graph(path, g: WeightedGraph, header: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header)
        fh.write(format_graph(g))


def read_graph(path) -> WeightedGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_graph(fh.read())
