"""Cycle-popping sampler for cycle-rooted spanning forests.

A walk is run from each vertex not yet in the current forest.  It stops on
hitting the forest (the path joins as a tree branch) or on closing a
cycle, which is kept with probability alpha(cycle); a kept cycle joins the
forest with the whole path leading into it, a rejected one is erased and
the walk goes on from where the cycle closed.
"""
from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import _kernel as K
from .connection import U1Connection
from .graph import OrientedCrsf, WeightedGraph

__all__ = [
    "SamplerError",
    "StepCapExceeded",
    "CurvatureConditionError",
    "CycleWeightFn",
    "SamplerConfig",
    "SampleBatch",
    "alpha_const",
    "alpha_inc",
    "alpha_lc",
    "alpha_lc0",
    "alpha_table",
    "alpha_custom",
    "sample_crsf",
    "sample_many",
    "sample_reference",
    "loop_erased_walk",
    "lerw_many",
    "loop_homology",
    "derive_seeds",
    "worker_count",
]


class SamplerError(RuntimeError):
    pass


class StepCapExceeded(SamplerError):
    pass


class CurvatureConditionError(SamplerError):
    """A cycle weight left [0, 1]: the measure cannot be sampled by cycle popping."""

    def __init__(self, msg: str, theta: float):
        super().__init__(msg)
        self.theta = theta


@dataclass(frozen=True, eq=False)
class CycleWeightFn:
    """Keep-probability of an oriented simple cycle (a tuple of oriented edge ids).

    ``kind`` selects the compiled evaluation; ``fn`` is the same rule in
    plain Python (the only one available for ``custom`` weights).
    """

    tag: str
    fn: Callable[[Sequence[int]], float]
    kind: int = -1
    p: float = 0.0
    oe_cross: np.ndarray | None = None
    oe_angle: np.ndarray | None = None
    eps: float = 0.0
    zob: np.ndarray | None = None
    keys: np.ndarray | None = None
    vals: np.ndarray | None = None
    default: float = 0.0
    truncate: bool = False
    identically_zero: bool = False

    def __call__(self, cycle: Sequence[int]) -> float:
        cycle = tuple(int(oe) for oe in cycle)
        if len(cycle) == 2 and cycle[0] ^ 1 == cycle[1]:
            return 0.0
        return self.fn(cycle)


def _check_prob(p: float, what: str) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{what} must lie in [0, 1], got {p}")
    return p


def alpha_const(p: float) -> CycleWeightFn:
    p = _check_prob(p, "alpha")
    return CycleWeightFn(f"const({p})", lambda c: p, K.CONST, p=p, identically_zero=(p == 0.0))


def alpha_inc(surf, p: float = 0.5) -> CycleWeightFn:
    """p on cycles with nonzero cut-crossing vector, 0 on contractible ones.

    The default 1/2 makes the unoriented incompressible CRSF uniform.
    """
    p = _check_prob(p, "alpha")
    cross = getattr(surf, "cut_crossings", None)
    if cross is None or cross.shape[1] == 0:
        raise SamplerError(f"surface {getattr(surf, 'kind', '?')!r} has no homology: "
                           "the incompressible measure has empty support")
    cross = np.asarray(cross, dtype=np.int64)
    oe_cross = np.repeat(cross, 2, axis=0)
    oe_cross[1::2] *= -1

    def fn(cycle):
        return p if np.any(oe_cross[list(cycle)].sum(axis=0) != 0) else 0.0

    return CycleWeightFn("inc", fn, K.INC, p=p, oe_cross=oe_cross)


def alpha_lc(conn: U1Connection, surf=None, truncate: bool = False) -> CycleWeightFn:
    """1 - cos(theta_gamma).

    Cycles with cos(theta) < 0 would need a weight above 1.  By default the
    sampler aborts on meeting one; ``truncate=True`` gives them weight 0
    instead, which samples the measure restricted to cycles with
    |theta| <= pi/2 (mod 2 pi).
    """
    ang = conn.oe_angle
    if surf is not None and len(surf.face_curvature):
        total = float(np.abs(surf.face_curvature).sum() + abs(getattr(surf, "exterior_curvature", 0.0)))
        bad = np.flatnonzero(np.cos(surf.face_curvature) < 0)
        if len(bad) and not truncate:
            K_bad = float(surf.face_curvature[bad[0]])
            raise CurvatureConditionError(
                f"face {bad[0]} encloses curvature {K_bad:.6g}, beyond pi/2: its boundary "
                "cycle would need weight 1 - cos > 1", K_bad)
        if total >= np.pi / 2:
            warnings.warn(f"total curvature {total:.4g} >= pi/2: some cycles may violate the "
                          "curvature condition", stacklevel=2)

    def fn(cycle):
        th = float(ang[list(cycle)].sum())
        a = 1.0 - np.cos(th)
        if a > 1.0 + 1e-12:
            if truncate:
                return 0.0
            raise CurvatureConditionError(f"cycle with theta = {th:.6g} needs weight {a:.6g} > 1", th)
        return min(a, 1.0)

    return CycleWeightFn("lc", fn, K.LC, oe_angle=ang, truncate=truncate,
                         identically_zero=not np.any(ang))


def alpha_lc0(conn: U1Connection, eps: float) -> CycleWeightFn:
    """eps * theta_gamma^2, meant for use with single-loop conditioning."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    ang = conn.oe_angle

    def fn(cycle):
        th = float(ang[list(cycle)].sum())
        a = eps * th * th
        if a > 1.0 + 1e-12:
            raise CurvatureConditionError(f"eps * theta^2 = {a:.6g} > 1 at theta = {th:.6g}", th)
        return min(a, 1.0)

    return CycleWeightFn(f"lc0({eps})", fn, K.LC0, oe_angle=ang, eps=float(eps),
                         identically_zero=not np.any(ang))


def _zobrist(n_oe: int) -> np.ndarray:
    return np.random.Generator(np.random.PCG64(0x5EED)).integers(
        0, np.iinfo(np.uint64).max, size=n_oe, dtype=np.uint64, endpoint=True)


def alpha_table(g: WeightedGraph, table: Mapping[frozenset | tuple, float], default: float = 0.0) -> CycleWeightFn:
    """Explicit per-cycle weights.

    Keys are oriented cycles (tuples of oriented edge ids, any rotation) or
    frozensets of oriented edge ids; unlisted cycles get ``default``.
    """
    default = _check_prob(default, "default alpha")
    zob = _zobrist(2 * g.edge_count)
    by_key: dict[int, float] = {}
    by_set: dict[frozenset, float] = {}
    for cyc, a in table.items():
        s = frozenset(int(oe) for oe in cyc)
        a = _check_prob(a, f"alpha of cycle {sorted(s)}")
        h = 0
        for oe in s:
            h ^= int(zob[oe])
        by_key[h] = a
        by_set[s] = a
    keys = np.array(sorted(by_key), dtype=np.uint64)
    vals = np.array([by_key[int(k)] for k in keys], dtype=np.float64)
    fn = lambda c: by_set.get(frozenset(c), default)
    return CycleWeightFn("table", fn, K.TABLE, zob=zob, keys=keys, vals=vals, default=default,
                         identically_zero=(default == 0 and not np.any(vals > 0)))


def alpha_custom(fn: Callable[[Sequence[int]], float], tag: str = "custom") -> CycleWeightFn:
    """Arbitrary Python rule; only the reference sampler can run it."""

    def checked(c):
        return _check_prob(fn(c), "alpha")

    return CycleWeightFn(tag, checked)


@dataclass(frozen=True)
class SamplerConfig:
    seed: int = 0
    max_steps: int = 10 ** 9
    dirichlet: frozenset = frozenset()
    target: str = "oriented"  # or "unoriented": output is the edge set only
    condition_single_loop: bool = False
    retry_cap: int = 10 ** 6
    order: tuple | None = None  # vertex sweep order, default ascending
    threads: int | None = None

    def __post_init__(self):
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")
        if self.condition_single_loop and self.retry_cap <= 0:
            raise ValueError("retry_cap must be positive when conditioning")
        if self.target not in ("oriented", "unoriented"):
            raise ValueError("target must be 'oriented' or 'unoriented'")
        object.__setattr__(self, "dirichlet", frozenset(int(v) for v in self.dirichlet))


@dataclass(eq=False)
class SampleBatch:
    parents: np.ndarray  # (N, V) int64
    loops: np.ndarray  # (N,)
    tries: np.ndarray  # (N,) attempts per sample (> 1 only with conditioning)
    steps: np.ndarray  # (N,) walk steps per sample including retries
    roots: frozenset = frozenset()

    def __len__(self) -> int:
        return len(self.parents)

    def crsf(self, i: int) -> OrientedCrsf:
        return OrientedCrsf(self.parents[i].copy(), self.roots)


def derive_seeds(seed: int, n: int, offset: int = 0) -> np.ndarray:
    """Per-sample 64-bit seeds; sample i's seed does not depend on n."""
    return np.random.SeedSequence(int(seed)).generate_state(offset + n, dtype=np.uint64)[offset:]


def worker_count(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get("CRSF_THREADS", "1") or 1)
    return max(1, int(threads))


def _cum_probs(g: WeightedGraph) -> np.ndarray:
    c = g.oe_conductance[g.adj_oe]
    cum = np.empty_like(c)
    for v in range(g.vertex_count):
        lo, hi = g.adj_ptr[v], g.adj_ptr[v + 1]
        if hi > lo:
            cs = np.cumsum(c[lo:hi])
            cum[lo:hi] = cs / cs[-1]
            cum[hi - 1] = 1.0
    return cum


def _kernel_args(g: WeightedGraph, alpha: CycleWeightFn):
    n_oe = 2 * g.edge_count
    e_i = np.zeros((n_oe, 1), dtype=np.int64)
    e_f = np.zeros(n_oe)
    e_u = np.zeros(1, dtype=np.uint64)
    return (alpha.kind, float(alpha.p),
            alpha.oe_cross if alpha.oe_cross is not None else e_i,
            alpha.oe_angle if alpha.oe_angle is not None else e_f,
            float(alpha.eps),
            alpha.zob if alpha.zob is not None else e_u,
            alpha.keys if alpha.keys is not None else e_u[:0],
            alpha.vals if alpha.vals is not None else e_f[:0],
            float(alpha.default), bool(alpha.truncate))


def _precheck(g: WeightedGraph, alpha: CycleWeightFn, cfg: SamplerConfig) -> None:
    if any(v < 0 or v >= g.vertex_count for v in cfg.dirichlet):
        raise ValueError("Dirichlet vertex out of range")
    if g.vertex_count and np.any(np.diff(g.adj_ptr) == 0):
        iso = [v for v in np.flatnonzero(np.diff(g.adj_ptr) == 0) if v not in cfg.dirichlet]
        if iso:
            raise SamplerError(f"isolated vertex {iso[0]} can carry no cycle")
    if alpha.identically_zero and not cfg.dirichlet:
        raise SamplerError("alpha vanishes on every cycle and there is no Dirichlet set: "
                           "the sampler would never terminate")


def sample_many(g: WeightedGraph, alpha: CycleWeightFn, cfg: SamplerConfig, n: int,
                offset: int = 0) -> SampleBatch:
    """Samples offset .. offset+n-1 of the stream defined by ``cfg.seed``."""
    if alpha.kind < 0:
        raise SamplerError(f"alpha {alpha.tag!r} has no compiled form; use sample_reference")
    _precheck(g, alpha, cfg)
    V = g.vertex_count
    root_mask = np.zeros(V, dtype=np.bool_)
    root_mask[list(cfg.dirichlet)] = True
    order = np.arange(V, dtype=np.int64) if cfg.order is None else np.asarray(cfg.order, dtype=np.int64)
    if sorted(order.tolist()) != list(range(V)):
        raise ValueError("order must be a permutation of the vertices")
    seeds = derive_seeds(cfg.seed, n, offset)
    parents = np.empty((n, V), dtype=np.int64)
    loops = np.zeros(n, dtype=np.int64)
    tries = np.zeros(n, dtype=np.int64)
    steps = np.zeros(n, dtype=np.int64)
    fixed = (g.adj_ptr, g.adj_oe, _cum_probs(g), g.head, root_mask, order) + _kernel_args(g, alpha)
    nw = min(worker_count(cfg.threads), max(1, n))
    bounds = np.linspace(0, n, nw + 1).astype(int)

    def run(k):
        a, b = bounds[k], bounds[k + 1]
        return K.sample_batch(*fixed, int(cfg.max_steps), seeds[a:b], bool(cfg.condition_single_loop),
                              int(cfg.retry_cap), parents[a:b], loops[a:b], tries[a:b], steps[a:b]) + (a,)

    if nw == 1:
        results = [run(0)]
    else:
        with ThreadPoolExecutor(nw) as ex:
            results = list(ex.map(run, range(nw)))
    for st, row, bad, a in results:
        if st == K.STEP_CAP:
            raise StepCapExceeded(f"sample {offset + a + row}: walk exceeded max_steps={cfg.max_steps}")
        if st == K.ALPHA_RANGE:
            if alpha.kind == K.LC:
                msg = (f"curvature condition violated: cycle with theta = {bad:.6g} needs "
                       f"1 - cos(theta) = {1 - np.cos(bad):.6g} > 1 (enclosed curvature beyond pi/2)")
            else:
                msg = f"alpha = eps * theta^2 = {alpha.eps * bad * bad:.6g} > 1 at theta = {bad:.6g}"
            raise CurvatureConditionError(msg, bad)
        if st == K.RETRY_CAP:
            raise SamplerError(f"sample {offset + a + row}: no single-loop sample in {int(bad)} attempts")
    return SampleBatch(parents, loops, tries, steps, cfg.dirichlet)


def loop_homology(g: WeightedGraph, surf, batch: SampleBatch, max_loops: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Loop counts (N,) and crossing vectors (N, max_loops, k) of every sample, classes up to sign."""
    cross = np.asarray(surf.cut_crossings, dtype=np.int64)
    oe_cross = np.repeat(cross, 2, axis=0)
    oe_cross[1::2] *= -1
    N = len(batch)
    loops = np.zeros(N, dtype=np.int64)
    hom = np.zeros((N, max_loops, cross.shape[1]), dtype=np.int64)
    K.loop_homology(g.head, np.ascontiguousarray(batch.parents), oe_cross, loops, hom)
    return loops, hom


def _view(s: OrientedCrsf, cfg: SamplerConfig):
    return frozenset(int(e) for e in s.edges()) if cfg.target == "unoriented" else s


def sample_crsf(g: WeightedGraph, alpha: CycleWeightFn, cfg: SamplerConfig = SamplerConfig()):
    """One exact sample (sample 0 of the seed's stream)."""
    if alpha.kind < 0:
        return _view(sample_reference(g, alpha, cfg), cfg)
    return _view(sample_many(g, alpha, cfg, 1).crsf(0), cfg)


# ---------------------------------------------------------------------------
# plain Python version (any alpha)


def sample_reference(g: WeightedGraph, alpha: CycleWeightFn, cfg: SamplerConfig = SamplerConfig(),
                     rng: np.random.Generator | None = None) -> OrientedCrsf:
    """Straightforward implementation of the same procedure, for arbitrary alpha."""
    _precheck(g, alpha, cfg)
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    cum = _cum_probs(g)
    V = g.vertex_count
    order = range(V) if cfg.order is None else cfg.order
    for attempt in range(cfg.retry_cap if cfg.condition_single_loop else 1):
        parent = -np.ones(V, dtype=np.int64)
        in_tree = np.zeros(V, dtype=bool)
        in_tree[list(cfg.dirichlet)] = True
        loops = 0
        steps = 0
        for s in order:
            if in_tree[s]:
                continue
            path_v, path_oe, pos = [s], [], {s: 0}
            u = s
            while True:
                lo, hi = g.adj_ptr[u], g.adj_ptr[u + 1]
                k = lo + int(np.searchsorted(cum[lo:hi], rng.random(), side="right"))
                oe = int(g.adj_oe[min(k, hi - 1)])
                steps += 1
                if steps > cfg.max_steps:
                    raise StepCapExceeded(f"walk exceeded max_steps={cfg.max_steps}")
                w = int(g.head[oe])
                path_oe.append(oe)
                if in_tree[w]:
                    break
                if w in pos:
                    i = pos[w]
                    a = alpha(path_oe[i:])
                    if a > 0 and rng.random() < a:
                        loops += 1
                        break
                    for x in path_v[i + 1:]:
                        del pos[x]
                    del path_v[i + 1:]
                    del path_oe[i:]
                    u = w
                    continue
                pos[w] = len(path_v)
                path_v.append(w)
                u = w
            for v, oe in zip(path_v, path_oe):
                parent[v] = oe
                in_tree[v] = True
        if not cfg.condition_single_loop or loops == 1:
            return OrientedCrsf(parent, cfg.dirichlet)
    raise SamplerError(f"no single-loop sample in {cfg.retry_cap} attempts")


# ---------------------------------------------------------------------------
# loop-erased walks


def loop_erased_walk(g: WeightedGraph, start: int, absorbing: Iterable[int], rng: np.random.Generator,
                     max_steps: int = 10 ** 8) -> list[int]:
    """Vertex sequence of the loop erasure of a walk from ``start`` until it hits ``absorbing``."""
    absorbing = set(int(v) for v in absorbing)
    if not absorbing:
        raise ValueError("absorbing set is empty")
    if start in absorbing:
        return []
    cum = _cum_probs(g)
    path, pos = [int(start)], {int(start): 0}
    u = int(start)
    for _ in range(max_steps):
        lo, hi = g.adj_ptr[u], g.adj_ptr[u + 1]
        if hi == lo:
            raise SamplerError(f"walk stuck at isolated vertex {u}")
        k = lo + int(np.searchsorted(cum[lo:hi], rng.random(), side="right"))
        w = int(g.head[g.adj_oe[min(k, hi - 1)]])
        if w in absorbing:
            path.append(w)
            return path
        if w in pos:
            for x in path[pos[w] + 1:]:
                del pos[x]
            del path[pos[w] + 1:]
        else:
            pos[w] = len(path)
            path.append(w)
        u = w
    raise StepCapExceeded(f"loop-erased walk exceeded {max_steps} steps")


def lerw_many(g: WeightedGraph, starts: np.ndarray, targets: np.ndarray, seed: int,
              max_steps: int = 10 ** 8) -> tuple[np.ndarray, np.ndarray]:
    """Batch of loop-erased walks from starts[i] to targets[i].

    Returns (paths, lengths): walk i is the oriented edge sequence
    ``paths[i, :lengths[i]]``.
    """
    starts = np.asarray(starts, dtype=np.int64)
    targets = np.asarray(targets, dtype=np.int64)
    n = len(starts)
    out = np.empty((n, g.vertex_count + 1), dtype=np.int64)
    ln = np.zeros(n, dtype=np.int64)
    bad = K.lerw_batch(g.adj_ptr, g.adj_oe, _cum_probs(g), g.head, starts, targets,
                       derive_seeds(seed, n), int(max_steps), out, ln)
    if bad >= 0:
        raise StepCapExceeded(f"walk {bad} exceeded {max_steps} steps")
    return out, ln
