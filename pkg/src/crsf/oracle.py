"""Brute-force ground truth on small graphs.

Two independent enumerators are provided.  ``enumerate_crsfs`` walks all
functional graphs (one outgoing edge per non-root vertex).  The cycle-family
oracle sums over sets of disjoint cycles and counts the rooted forests
hanging off them with the matrix-tree theorem, which reaches graphs a little
beyond the functional-graph cap.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .connection import SU2Connection, U1Connection, cycle_monodromy_su2
from .graph import OrientedCrsf, WeightedGraph, simple_cycles
from .laplacian import assemble_laplacian, det_laplacian, spanning_tree_count

__all__ = [
    "OracleError",
    "MAX_VERTICES",
    "MAX_EDGES",
    "EnumerationTable",
    "enumerate_crsfs",
    "exact_measure",
    "lc0_partition",
    "cycle_weight_fn",
    "CycleFamilyTable",
    "cycle_families",
    "count_spanning_trees_brute",
    "Report",
    "check_det_identity",
    "lerw_path_probability",
    "check_lerw_lemma",
    "check_markov",
    "check_restriction",
    "check_domination",
    "check_markov_restriction_domination",
    "chi_square_test",
    "random_fixture_graph",
]

MAX_VERTICES = 8
MAX_EDGES = 14


class OracleError(RuntimeError):
    pass


def _oe_key_unoriented(s: OrientedCrsf) -> tuple:
    return tuple(sorted(int(e) for e in s.edges()))


@dataclass(eq=False)
class EnumerationTable:
    graph: WeightedGraph
    entries: list[OrientedCrsf]
    weights: np.ndarray
    oriented: bool
    roots: frozenset = frozenset()
    _index: dict | None = field(default=None, repr=False)

    @property
    def Z(self) -> float:
        return float(self.weights.sum())

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def probs(self) -> np.ndarray:
        Z = self.Z
        if Z <= 0:
            raise OracleError("Z = 0: the measure has empty support")
        return self.weights / Z

    def key(self, s) -> object:
        if isinstance(s, OrientedCrsf):
            return s.key() if self.oriented else _oe_key_unoriented(s)
        if isinstance(s, np.ndarray):
            return np.asarray(s, dtype=np.int64).tobytes() if self.oriented else \
                tuple(sorted(int(p) >> 1 for p in s if p >= 0))
        return tuple(sorted(int(e) for e in s))

    @property
    def index(self) -> dict:
        if self._index is None:
            self._index = {self.key(s): i for i, s in enumerate(self.entries)}
        return self._index

    def cycles(self, i: int) -> list[tuple[int, ...]]:
        return self.entries[i].cycles_in(self.graph)

    def cycle_sets(self) -> list[frozenset]:
        """Per entry, the set of its cycles as frozensets of edge ids."""
        return [frozenset(frozenset(oe >> 1 for oe in c) for c in self.cycles(i)) for i in range(len(self))]

    def loop_counts(self) -> np.ndarray:
        return np.array([len(self.cycles(i)) for i in range(len(self))], dtype=np.int64)

    def loop_count_distribution(self) -> np.ndarray:
        lc = self.loop_counts()
        return np.bincount(lc, weights=self.probs, minlength=int(lc.max(initial=0)) + 1)

    def cycle_probability(self) -> dict[frozenset, float]:
        """P(gamma is a cycle of the CRSF), keyed by the unoriented edge set."""
        out: dict[frozenset, float] = {}
        for cs, p in zip(self.cycle_sets(), self.probs):
            for c in cs:
                out[c] = out.get(c, 0.0) + p
        return out

    def conditional(self, pred: Callable[[int], bool]) -> "EnumerationTable":
        keep = [i for i in range(len(self)) if pred(i)]
        return EnumerationTable(self.graph, [self.entries[i] for i in keep], self.weights[keep],
                                self.oriented, self.roots)

    def counts_of(self, samples: np.ndarray) -> tuple[np.ndarray, int]:
        """Histogram of sampled parent rows over the table; second value counts misses."""
        counts = np.zeros(len(self), dtype=np.int64)
        miss = 0
        idx = self.index
        if self.oriented:
            rows, mult = np.unique(np.ascontiguousarray(samples, dtype=np.int64), axis=0, return_counts=True)
            for r, m in zip(rows, mult):
                i = idx.get(r.tobytes())
                if i is None:
                    miss += int(m)
                else:
                    counts[i] += m
        else:
            edges = np.where(samples >= 0, samples >> 1, -1)
            edges.sort(axis=1)
            rows, mult = np.unique(edges, axis=0, return_counts=True)
            for r, m in zip(rows, mult):
                i = idx.get(tuple(int(e) for e in r if e >= 0))
                if i is None:
                    miss += int(m)
                else:
                    counts[i] += m
        return counts, miss


def _check_cap(g: WeightedGraph, allow_slow: bool) -> None:
    if (g.vertex_count > MAX_VERTICES or g.edge_count > MAX_EDGES) and not allow_slow:
        raise OracleError(f"enumeration cap exceeded ({g.vertex_count} vertices, {g.edge_count} edges; "
                          f"limits {MAX_VERTICES}/{MAX_EDGES}); pass allow_slow=True to override")


def _is_canonical(cycle: Sequence[int]) -> bool:
    emin = min(oe >> 1 for oe in cycle)
    return (2 * emin) in cycle


def enumerate_crsfs(g: WeightedGraph, oriented: bool = True, cycle_weight: Callable | None = None,
                    roots: Iterable[int] = (), connected: bool = False,
                    allow_slow: bool = False) -> EnumerationTable:
    """All (essential) CRSFs with weight prod c(e) * prod cycle_weight(gamma).

    ``cycle_weight`` receives an oriented cycle (tuple of oriented edge ids)
    and defaults to 1.  Unoriented tables list every CRSF once, with its
    cycles in canonical orientation; zero-weight CRSFs are dropped.  With
    ``connected`` only CRSTs (one cycle, no roots) are kept.
    """
    _check_cap(g, allow_slow)
    roots = frozenset(int(r) for r in roots)
    n = g.vertex_count
    order = [v for v in range(n) if v not in roots]
    outs = [[int(oe) for oe in g.out_edges(v)] for v in range(n)]
    head = g.head.tolist()
    cond = g.oe_conductance.tolist()
    parent = [-1] * n
    entries: list[OrientedCrsf] = []
    weights: list[float] = []
    cw = cycle_weight if cycle_weight is not None else (lambda c: 1.0)

    def rec(idx, w, ncyc):
        if idx == len(order):
            if connected and (ncyc != 1 or roots):
                return
            entries.append(OrientedCrsf(np.array(parent, dtype=np.int64), roots))
            weights.append(w)
            return
        v = order[idx]
        for oe in outs[v]:
            parent[v] = oe
            u = head[oe]
            k = 0
            while u != v and parent[u] >= 0 and k <= n:
                u = head[parent[u]]
                k += 1
            f = 1.0
            closes = u == v
            if closes:
                cyc = [oe]
                x = head[oe]
                while x != v:
                    cyc.append(parent[x])
                    x = head[parent[x]]
                if len(cyc) == 2 and cyc[0] ^ 1 == cyc[1]:
                    continue
                if not oriented and not _is_canonical(cyc):
                    continue
                if connected and ncyc >= 1:
                    continue
                f = float(cw(tuple(cyc)))
                if f == 0.0:
                    continue
            rec(idx + 1, w * cond[oe] * f, ncyc + closes)
        parent[v] = -1

    rec(0, 1.0, 0)
    return EnumerationTable(g, entries, np.array(weights, dtype=np.float64), oriented, roots)


def cycle_weight_fn(g: WeightedGraph, source, variant: str, oriented: bool) -> Callable:
    """Per-cycle weight of the standard measures.

    Unoriented weights: phi -> 2 - 2 cos(theta), su2 -> 2 - Tr(omega),
    inc -> 1 on noncontractible cycles, lc0 -> theta^2.  Oriented versions
    are halved (except lc0, which is orientation-free and unoriented only).
    """
    half = 0.5 if oriented else 1.0
    if variant == "c_alpha":
        if callable(source):
            return source
        raise OracleError("c_alpha needs a cycle-weight function")
    if variant in ("phi", "lc0"):
        if not isinstance(source, U1Connection):
            raise OracleError(f"{variant} needs a U(1) connection")
        ang = source.oe_angle
        if variant == "phi":
            return lambda c: half * (2.0 - 2.0 * np.cos(ang[list(c)].sum()))
        return lambda c: float(ang[list(c)].sum()) ** 2
    if variant == "su2":
        if not isinstance(source, SU2Connection):
            raise OracleError("su2 needs an SU(2) connection")
        return lambda c: half * float(2.0 - np.trace(cycle_monodromy_su2(source, c)).real)
    if variant == "inc":
        cross = getattr(source, "cut_crossings", None)
        if cross is None:
            raise OracleError("inc needs a surface with cut data")
        oec = np.repeat(np.asarray(cross), 2, axis=0)
        oec[1::2] *= -1
        return lambda c: half if np.any(oec[list(c)].sum(axis=0) != 0) else 0.0
    raise OracleError(f"unknown variant {variant!r}")


def exact_measure(g: WeightedGraph, source, variant: str, oriented: bool | None = None,
                  roots: Iterable[int] = (), allow_slow: bool = False) -> EnumerationTable:
    """Exact table of mu_{c,alpha}, mu_Phi, the SU(2) measure, mu_inc or mu_LC0."""
    if oriented is None:
        oriented = variant == "c_alpha"
    if variant == "lc0":
        oriented = False
    w = cycle_weight_fn(g, source, variant, oriented)
    t = enumerate_crsfs(g, oriented, w, roots, connected=(variant == "lc0"), allow_slow=allow_slow)
    if not t.Z > 0:
        raise OracleError(f"Z = 0: the {variant} measure has empty support on this graph")
    return t


def lc0_partition(g: WeightedGraph, conn: U1Connection, allow_slow: bool = False) -> float:
    """Sum over CRSTs of theta^2 prod c(e); 0.0 is a legitimate value here."""
    w = cycle_weight_fn(g, conn, "lc0", False)
    return enumerate_crsfs(g, False, w, connected=True, allow_slow=allow_slow).Z


def count_spanning_trees_brute(g: WeightedGraph) -> float:
    """Weighted spanning-tree count by scanning all (V-1)-edge subsets."""
    n = g.vertex_count
    total = 0.0
    for sub in itertools.combinations(range(g.edge_count), n - 1):
        parent = list(range(n))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        ok = True
        for e in sub:
            a, b = find(int(g.ends[e, 0])), find(int(g.ends[e, 1]))
            if a == b:
                ok = False
                break
            parent[a] = b
        if ok:
            total += float(np.prod(g.conductance[list(sub)]))
    return total


# ---------------------------------------------------------------------------
# cycle-family oracle


@dataclass(eq=False)
class CycleFamilyTable:
    cycles: list[tuple[int, ...]]  # canonical oriented cycles with nonzero weight
    families: list[tuple[int, ...]]  # indices into cycles
    weights: np.ndarray

    @property
    def Z(self) -> float:
        return float(self.weights.sum())

    @property
    def probs(self) -> np.ndarray:
        return self.weights / self.Z

    def loop_count_distribution(self) -> np.ndarray:
        k = np.array([len(f) for f in self.families], dtype=np.int64)
        return np.bincount(k, weights=self.probs, minlength=int(k.max(initial=0)) + 1)

    def cycle_probability(self) -> dict[frozenset, float]:
        out: dict[frozenset, float] = {}
        for f, p in zip(self.families, self.probs):
            for i in f:
                key = frozenset(oe >> 1 for oe in self.cycles[i])
                out[key] = out.get(key, 0.0) + p
        return out


def cycle_families(g: WeightedGraph, unoriented_weight: Callable, roots: Iterable[int] = (),
                   max_cycle_length: int | None = None) -> CycleFamilyTable:
    """Weights of all families of disjoint cycles in essential CRSFs.

    The weight of a family is prod_gamma W(gamma) prod_{e in gamma} c(e)
    times the weighted count of forests rooted on roots and the family's
    vertices, i.e. the determinant of the Laplacian with those rows removed.
    """
    roots = frozenset(int(r) for r in roots)
    cyc_all = simple_cycles(g, avoid=roots, max_length=max_cycle_length)
    cycles, cw, masks = [], [], []
    for c in cyc_all:
        w = float(unoriented_weight(c))
        if w == 0.0:
            continue
        cycles.append(c)
        cw.append(w * float(np.prod(g.oe_conductance[list(c)])))
        m = 0
        for oe in c:
            m |= 1 << int(g.tail[oe])
        masks.append(m)
    L = g.laplacian()
    root_mask = 0
    for r in roots:
        root_mask |= 1 << r
    n = g.vertex_count

    def forest_weight(mask):
        keep = [v for v in range(n) if not (mask >> v) & 1]
        if not keep:
            return 1.0
        if mask == 0:
            return 0.0
        return float(np.linalg.det(L[np.ix_(keep, keep)]))

    families, weights = [], []

    def rec(start, fam, mask, w):
        fw = forest_weight(mask | root_mask)
        if fw != 0.0 and (fam or roots):
            families.append(tuple(fam))
            weights.append(w * fw)
        for i in range(start, len(cycles)):
            if masks[i] & (mask | root_mask):
                continue
            fam.append(i)
            rec(i + 1, fam, mask | masks[i], w * cw[i])
            fam.pop()

    rec(0, [], 0, 1.0)
    return CycleFamilyTable(cycles, families, np.array(weights))


# ---------------------------------------------------------------------------
# checks


@dataclass
class Report:
    name: str
    passed: bool
    max_error: float
    details: list[dict] = field(default_factory=list)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: max error {self.max_error:.3e}"


def check_det_identity(g: WeightedGraph, conn, rtol: float | None = None, allow_slow: bool = False) -> Report:
    """det Delta_Phi against the CRSF sum (U(1)); sqrt(det) against Z(Phi) (SU(2))."""
    if isinstance(conn, U1Connection):
        rtol = 1e-9 if rtol is None else rtol
        lhs = det_laplacian(assemble_laplacian(g, conn)).value
        rhs = enumerate_crsfs(g, False, cycle_weight_fn(g, conn, "phi", False), allow_slow=allow_slow).Z
        name = "det identity (U1)"
        extra = {}
    else:
        rtol = 1e-8 if rtol is None else rtol
        lhs = det_laplacian(assemble_laplacian(g, conn)).z
        w = cycle_weight_fn(g, conn, "su2", False)
        table = enumerate_crsfs(g, False, w, allow_slow=allow_slow)
        rhs = table.Z
        name = "Z(Phi)^2 = det (SU2)"
        # each summand must not depend on the cycle orientation
        orient_err = 0.0
        for c in simple_cycles(g):
            rc = tuple(oe ^ 1 for oe in reversed(c))
            orient_err = max(orient_err, abs(w(c) - w(rc)))
        extra = {"orientation_error": orient_err}
    err = abs(lhs - rhs) / max(abs(rhs), 1e-300)
    passed = err <= rtol and extra.get("orientation_error", 0.0) <= 1e-12
    return Report(name, passed, err, [{"lhs": lhs, "rhs": rhs, **extra}])


def lerw_path_probability(g: WeightedGraph, path: Sequence[int]) -> float:
    """Exact probability that the loop-erased walk from the path's start to its end is ``path``.

    Uses the product of step probabilities and walk Green functions
    G_{A_i}(v_i, v_i) with the walk killed on A_i = {end, v_0, ..., v_{i-1}}.
    """
    P = np.zeros((g.vertex_count, g.vertex_count))
    np.add.at(P, (g.tail, g.head), g.oe_conductance / g.degree[g.tail])
    verts = [int(g.tail[oe]) for oe in path]
    end = int(g.head[path[-1]])
    prob = 1.0
    killed = {end}
    for oe, v in zip(path, verts):
        alive = [u for u in range(g.vertex_count) if u not in killed]
        M = np.eye(len(alive)) - P[np.ix_(alive, alive)]
        i = alive.index(v)
        e_i = np.zeros(len(alive))
        e_i[i] = 1.0
        G_vv = np.linalg.solve(M, e_i)[i]
        prob *= g.conductance[oe >> 1] / g.degree[v] * G_vv
        killed.add(v)
    return float(prob)


def _cycle_lerw_probability(g: WeightedGraph, cycle: Sequence[int]) -> float:
    """P(random oriented edge xy lies on gamma and the LERW from x to y closes gamma)."""
    ctot = g.conductance.sum()
    k = len(cycle)
    total = 0.0
    for i in range(k):
        # edge cycle[i] = a -> b; the walk from b around to a, then the random edge is a -> b
        rest = [cycle[(i + j) % k] for j in range(1, k)]
        oe = cycle[i]
        total += g.conductance[oe >> 1] / (2 * ctot) * lerw_path_probability(g, rest)
        rrest = [c ^ 1 for c in reversed(rest)]
        total += g.conductance[oe >> 1] / (2 * ctot) * lerw_path_probability(g, rrest)
    return total


def check_lerw_lemma(g: WeightedGraph, conn: U1Connection, samples: int = 0, seed: int = 0,
                     atol: float = 1e-10, nsigma: float = 3.0, allow_slow: bool = True) -> Report:
    """P_LC0(gamma) = (C kappa / Z) (theta^2 / |gamma|) P_LERW(gamma), C the total conductance."""
    table = exact_measure(g, conn, "lc0", allow_slow=allow_slow)
    kappa = spanning_tree_count(g)
    ctot = float(g.conductance.sum())
    Z = table.Z
    exact = table.cycle_probability()
    ang = conn.oe_angle
    rows = []
    max_err = 0.0
    for c in simple_cycles(g):
        key = frozenset(oe >> 1 for oe in c)
        th = float(ang[list(c)].sum())
        p_lerw = _cycle_lerw_probability(g, c)
        rhs = ctot * kappa / Z * th * th / len(c) * p_lerw
        lhs = exact.get(key, 0.0)
        err = abs(lhs - rhs)
        max_err = max(max_err, err)
        rows.append({"cycle": sorted(key), "p_lc0": lhs, "rhs": rhs, "p_lerw": p_lerw, "error": err})
    passed = max_err <= atol
    if samples:
        from .sampler import derive_seeds, lerw_many
        rng = np.random.default_rng(seed)
        probs = g.oe_conductance / g.oe_conductance.sum()
        oe = rng.choice(2 * g.edge_count, size=samples, p=probs)
        paths, lens = lerw_many(g, g.tail[oe], g.head[oe], seed + 1)
        counts: dict[frozenset, int] = {}
        for i in range(samples):
            L = int(lens[i])
            if L == 1 and paths[i, 0] == oe[i]:
                continue
            key = frozenset([int(oe[i]) >> 1] + [int(x) >> 1 for x in paths[i, :L]])
            if len(key) != L + 1:
                continue
            counts[key] = counts.get(key, 0) + 1
        worst = 0.0
        for r in rows:
            key = frozenset(r["cycle"])
            p = r["p_lerw"]
            est = counts.get(key, 0) / samples
            sd = np.sqrt(max(p * (1 - p), 1e-300) / samples)
            z = abs(est - p) / sd
            r.update(mc=est, mc_sigma=sd, mc_z=z)
            worst = max(worst, z)
        passed = passed and worst <= nsigma
        return Report("LERW lemma", passed, max_err, rows + [{"mc_max_z": worst}])
    return Report("LERW lemma", passed, max_err, rows)


def _sub_weight(w: Callable, eids: np.ndarray) -> Callable:
    return lambda c: w(tuple(2 * int(eids[oe >> 1]) + (oe & 1) for oe in c))


def check_markov(g: WeightedGraph, cycle_weight: Callable, gamma: Sequence[Sequence[int]],
                 oriented: bool = True, roots: Iterable[int] = (), tol: float = 1e-12,
                 allow_slow: bool = True) -> Report:
    """Conditional law given the cycles ``gamma`` against independent Dirichlet pieces.

    The pieces are the components of the graph minus the cycles' vertices,
    each taken with the cycle vertices as Dirichlet boundary.
    """
    roots = frozenset(int(r) for r in roots)
    table = enumerate_crsfs(g, oriented, cycle_weight, roots, allow_slow=allow_slow)
    gamma = [tuple(c) for c in gamma]
    gverts = {int(g.tail[oe]) for c in gamma for oe in c}
    gparent = {int(g.tail[oe]): int(oe) for c in gamma for oe in c}

    def contains(i):
        p = table.entries[i].parent
        if oriented:
            return all(p[v] == oe for v, oe in gparent.items())
        have = {frozenset(oe >> 1 for oe in c) for c in table.cycles(i)}
        return all(frozenset(oe >> 1 for oe in c) in have for c in gamma)

    cond = table.conditional(contains)
    # components of the complement
    rest = [v for v in range(g.vertex_count) if v not in gverts]
    sub, vmap, eids = g.subgraph(rest)
    comp = sub.components()
    pieces = []
    for lab in sorted(set(comp.tolist())):
        verts = [v for v in rest if comp[vmap[v]] == lab]
        piece_vertices = sorted(set(verts) | gverts)
        pg, pmap, peids = g.subgraph(piece_vertices)
        proots = [int(pmap[v]) for v in gverts | (roots & set(piece_vertices))]
        pt = enumerate_crsfs(pg, oriented, _sub_weight(cycle_weight, peids), proots, allow_slow=allow_slow)
        pieces.append((verts, pmap, peids, pt))
    max_err = 0.0
    n_product = int(np.prod([len(pt) for *_, pt in pieces])) if pieces else 1
    probs = cond.probs
    for i, s in enumerate(cond.entries):
        p = 1.0
        for verts, pmap, peids, pt in pieces:
            local = -np.ones(pt.graph.vertex_count, dtype=np.int64)
            for v in verts:
                oe = int(s.parent[v])
                e_loc = int(np.searchsorted(peids, oe >> 1))
                local[pmap[v]] = 2 * e_loc + (oe & 1)
            j = pt.index.get(pt.key(local))
            p *= 0.0 if j is None else pt.probs[j]
        max_err = max(max_err, abs(p - probs[i]))
    passed = max_err <= tol and n_product == len(cond)
    return Report("Markov factorization", passed, max_err,
                  [{"conditional_support": len(cond), "product_support": n_product}])


def _family_prob(table: EnumerationTable, gamma: Sequence[Sequence[int]]) -> float:
    want = [frozenset(oe >> 1 for oe in c) for c in gamma]
    tot = 0.0
    for cs, p in zip(table.cycle_sets(), table.probs):
        if all(w in cs for w in want):
            tot += p
    return tot


def check_restriction(g: WeightedGraph, conn: U1Connection, sub_vertices: Iterable[int],
                      gamma: Sequence[Sequence[int]], tol: float = 1e-9, allow_slow: bool = True) -> Report:
    """mu^{D1}(gamma) / mu^D(gamma) against the determinant quotients.

    D is the whole graph and D1 the subgraph induced on ``sub_vertices``;
    mu(gamma) is the probability that every cycle of ``gamma`` occurs.  The
    identity checked is
        mu^{D1}/mu^D = (det_{D1, gamma} / det_{D1}) / (det_{D, gamma} / det_D)
    where det_{., gamma} carries Dirichlet conditions on gamma's vertices.
    """
    sub_vertices = sorted(set(int(v) for v in sub_vertices))
    g1, vmap, eids = g.subgraph(sub_vertices)
    conn1 = U1Connection(conn.angle[eids])
    gamma1 = [tuple(2 * int(np.searchsorted(eids, oe >> 1)) + (oe & 1) for oe in c) for c in gamma]
    gverts = sorted({int(g.tail[oe]) for c in gamma for oe in c})
    gverts1 = [int(vmap[v]) for v in gverts]

    mu_D = _family_prob(exact_measure(g, conn, "phi", allow_slow=allow_slow), gamma)
    mu_D1 = _family_prob(exact_measure(g1, conn1, "phi", allow_slow=allow_slow), gamma1)

    def dets(graph, cn, S):
        d = det_laplacian(assemble_laplacian(graph, cn)).value
        dS = det_laplacian(assemble_laplacian(graph, cn, S)).value if len(S) < graph.vertex_count else 1.0
        return d, dS

    d, dg = dets(g, conn, gverts)
    d1, d1g = dets(g1, conn1, gverts1)
    lhs = mu_D1 / mu_D
    rhs = (d1g / d1) / (dg / d)
    err = abs(lhs - rhs) / abs(rhs)
    return Report("restriction identity", err <= tol, err,
                  [{"mu_D1": mu_D1, "mu_D": mu_D, "ratio": lhs, "det_quotient": rhs,
                    "reciprocal_quotient": 1.0 / rhs}])


def check_domination(g: WeightedGraph, unoriented_weight: Callable, S1: Iterable[int], S2: Iterable[int],
                     tol: float = 1e-12) -> Report:
    """P_1(gamma) >= P_2(gamma) for every cycle avoiding S2, with S1 a subset of S2."""
    S1, S2 = frozenset(S1), frozenset(S2)
    if not S1 <= S2:
        raise OracleError("S1 must be a subset of S2")
    p1 = cycle_families(g, unoriented_weight, S1).cycle_probability()
    p2 = cycle_families(g, unoriented_weight, S2).cycle_probability()
    worst = 0.0
    rows = []
    for key, b in p2.items():
        a = p1.get(key, 0.0)
        worst = max(worst, b - a)
        rows.append({"cycle": sorted(key), "P1": a, "P2": b})
    return Report("stochastic domination", worst <= tol, max(worst, 0.0), rows)


def check_markov_restriction_domination(seed: int = 0) -> list[Report]:
    """The standard fixtures: annulus 3x3, nested 2x2 in 3x3 grids, 4x4 grid corner vs boundary."""
    from .surfaces import make_annulus, make_planar_grid
    rng = np.random.default_rng(seed)
    reports = []
    # Markov: annulus of circumference 3 and height 3, conditioned on the middle ring
    g, surf = make_annulus(3, 3)
    g = _random_conductances(g, rng)
    alpha = {}
    for c in simple_cycles(g):
        alpha[frozenset(c)] = rng.uniform(0.05, 1.0)
        alpha[frozenset(oe ^ 1 for oe in c)] = rng.uniform(0.05, 1.0)
    w = lambda c: alpha[frozenset(c)]
    ring = tuple(2 * e for e in range(3, 6))  # horizontal edges of row 1, forward
    reports.append(check_markov(g, w, [ring]))
    # restriction: 2x2 block inside the 3x3 grid, with a connection of random curvature
    g, surf = make_planar_grid(3, 3)
    conn = U1Connection(rng.uniform(-1.0, 1.0, g.edge_count))
    sub = [0, 1, 3, 4]
    sq = surf.faces[0]
    reports.append(check_restriction(g, conn, sub, [sq]))
    # domination: 4x4 grid, S1 one corner, S2 the whole boundary
    g, surf = make_planar_grid(4, 4)
    conn = U1Connection(rng.uniform(-1.0, 1.0, g.edge_count))
    wphi = cycle_weight_fn(g, conn, "phi", False)
    boundary = [v for v in range(16) if v % 4 in (0, 3) or v // 4 in (0, 3)]
    reports.append(check_domination(g, wphi, [0], boundary))
    return reports


def _random_conductances(g: WeightedGraph, rng: np.random.Generator) -> WeightedGraph:
    from .graph import build_graph
    c = rng.uniform(0.5, 2.0, g.edge_count)
    return build_graph([(int(a), int(b), float(x)) for (a, b), x in zip(g.ends, c)], g.vertex_count)


# ---------------------------------------------------------------------------
# statistics


def chi_square_test(observed: np.ndarray, expected_probs: np.ndarray, min_expected: float = 5.0,
                    misses: int = 0) -> tuple[float, float, int]:
    """Pearson chi-square with small cells pooled; returns (statistic, p-value, dof).

    Samples outside the table's support (``misses``) fail the test outright.
    """
    from scipy.stats import chisquare
    observed = np.asarray(observed, dtype=float)
    n = observed.sum() + misses
    if misses:
        return float("inf"), 0.0, 0
    exp = np.asarray(expected_probs, dtype=float) * n
    order = np.argsort(exp)
    obs_s, exp_s = observed[order], exp[order]
    # pool the smallest cells until each pooled cell expects >= min_expected
    obs_c, exp_c = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(obs_s, exp_s):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            obs_c.append(acc_o)
            exp_c.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if obs_c:
            obs_c[-1] += acc_o
            exp_c[-1] += acc_e
        else:
            obs_c.append(acc_o)
            exp_c.append(acc_e)
    if len(obs_c) < 2:
        return 0.0, 1.0, 0
    stat, p = chisquare(obs_c, exp_c)
    return float(stat), float(p), len(obs_c) - 1


# ---------------------------------------------------------------------------
# random fixtures


def random_fixture_graph(rng: np.random.Generator, max_vertices: int = 6, max_edges: int = 9,
                         cmin: float = 0.5, cmax: float = 2.0, parallel: bool = True) -> WeightedGraph:
    """Random connected multigraph with at least one cycle, conductances uniform in [cmin, cmax]."""
    from .graph import build_graph
    while True:
        n = int(rng.integers(3, max_vertices + 1))
        # random spanning tree, then extra edges
        edges = [(int(rng.integers(0, v)), v) for v in range(1, n)]
        extra = int(rng.integers(1, max_edges - (n - 1) + 1))
        for _ in range(extra):
            a, b = rng.choice(n, size=2, replace=False)
            if parallel or (min(a, b), max(a, b)) not in {(min(x, y), max(x, y)) for x, y in edges}:
                edges.append((int(a), int(b)))
        perm = rng.permutation(n)
        edges = [(int(perm[a]), int(perm[b])) for a, b in edges]
        if len(edges) <= max_edges:
            c = rng.uniform(cmin, cmax, len(edges))
            return build_graph([(a, b, float(x)) for (a, b), x in zip(edges, c)], n)
