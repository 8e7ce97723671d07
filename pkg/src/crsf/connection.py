"""U(1) and SU(2) connections on the line / plane bundle of a graph.

U(1) connections are stored as one real angle per edge in its stored
direction; the reverse direction is the negated angle, so antisymmetry is
exact and cycle angles are real lifts, never reduced mod 2*pi.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import GraphError, WeightedGraph, check_closed

__all__ = [
    "ConnectionError_",
    "U1Connection",
    "SU2Connection",
    "GaugeTransform",
    "cycle_monodromy_angle",
    "cycle_monodromy_su2",
    "connection_from_face_curvature",
    "realize_flat",
    "realize_flat_torus",
    "apply_gauge",
    "random_su2",
    "format_connection",
    "parse_connection",
]


class ConnectionError_(ValueError):
    """Inconsistent connection data (e.g. a Gauss-Bonnet violation)."""


@dataclass(frozen=True, eq=False)
class U1Connection:
    angle: np.ndarray  # (E,) angle of the transport along edge e in its stored direction

    def __post_init__(self):
        object.__setattr__(self, "angle", np.asarray(self.angle, dtype=np.float64))

    @property
    def oe_angle(self) -> np.ndarray:
        t = np.empty(2 * len(self.angle))
        t[0::2] = self.angle
        t[1::2] = -self.angle
        return t

    def phase(self) -> np.ndarray:
        return np.exp(1j * self.oe_angle)

    def scaled(self, t: float) -> "U1Connection":
        return U1Connection(t * self.angle)

    @classmethod
    def trivial(cls, g: WeightedGraph) -> "U1Connection":
        return cls(np.zeros(g.edge_count))


@dataclass(frozen=True, eq=False)
class SU2Connection:
    matrix: np.ndarray  # (E, 2, 2) transport along edge e in its stored direction

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        if m.ndim != 3 or m.shape[1:] != (2, 2):
            raise ConnectionError_("SU(2) connection needs an (E, 2, 2) array")
        if len(m):
            dev = np.abs(m @ np.conj(np.swapaxes(m, 1, 2)) - np.eye(2)).max()
            if dev > 1e-12 or np.abs(np.linalg.det(m) - 1).max() > 1e-12:
                raise ConnectionError_("matrices are not special unitary")
        object.__setattr__(self, "matrix", m)

    def oe_matrix(self, oe: int) -> np.ndarray:
        m = self.matrix[oe >> 1]
        return m if oe % 2 == 0 else m.conj().T

    @classmethod
    def trivial(cls, g: WeightedGraph) -> "SU2Connection":
        return cls(np.tile(np.eye(2, dtype=complex), (g.edge_count, 1, 1)))

    @classmethod
    def from_u1(cls, conn: U1Connection) -> "SU2Connection":
        """Diagonal embedding diag(e^{i theta}, e^{-i theta})."""
        m = np.zeros((len(conn.angle), 2, 2), dtype=complex)
        m[:, 0, 0] = np.exp(1j * conn.angle)
        m[:, 1, 1] = np.exp(-1j * conn.angle)
        return cls(m)


@dataclass(frozen=True, eq=False)
class GaugeTransform:
    """Per-vertex change of basis: an angle array (U(1)) or an (V, 2, 2) array (SU(2))."""

    value: np.ndarray


def random_su2(rng: np.random.Generator, size: int) -> np.ndarray:
    """Haar-random SU(2) matrices from normalised Gaussian quaternions."""
    q = rng.standard_normal((size, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    a = q[:, 0] + 1j * q[:, 1]
    b = q[:, 2] + 1j * q[:, 3]
    m = np.empty((size, 2, 2), dtype=complex)
    m[:, 0, 0] = a
    m[:, 0, 1] = -np.conj(b)
    m[:, 1, 0] = b
    m[:, 1, 1] = np.conj(a)
    return m


def cycle_monodromy_angle(conn: U1Connection, cycle: Sequence[int], g: WeightedGraph | None = None) -> float:
    """Real lift of the holonomy angle: the plain sum of edge angles along the walk."""
    if g is not None:
        check_closed(g, cycle)
    oe = np.asarray(cycle, dtype=np.int64)
    sign = 1.0 - 2.0 * (oe & 1)
    return float(np.sum(sign * conn.angle[oe >> 1]))


def cycle_monodromy_su2(conn: SU2Connection, cycle: Sequence[int], g: WeightedGraph | None = None) -> np.ndarray:
    """Ordered product of transports along the walk, starting at its first vertex."""
    if g is not None:
        check_closed(g, cycle)
    m = np.eye(2, dtype=complex)
    for oe in cycle:
        m = conn.oe_matrix(int(oe)) @ m
    return m


def apply_gauge(conn, gauge: GaugeTransform, g: WeightedGraph):
    """Change basis at every vertex.

    U(1): the angle on u -> v becomes angle + sigma_v - sigma_u.
    SU(2): the transport on u -> v becomes psi_v omega psi_u^{-1}.
    """
    a, b = g.ends[:, 0], g.ends[:, 1]
    if isinstance(conn, U1Connection):
        s = np.asarray(gauge.value, dtype=float)
        if s.shape != (g.vertex_count,):
            raise ConnectionError_("gauge size does not match the graph")
        return U1Connection(conn.angle + s[b] - s[a])
    psi = np.asarray(gauge.value, dtype=complex)
    if psi.shape != (g.vertex_count, 2, 2):
        raise ConnectionError_("gauge size does not match the graph")
    m = psi[b] @ conn.matrix @ np.conj(np.swapaxes(psi[a], 1, 2))
    return SU2Connection(m)


def realize_flat(g: WeightedGraph, crossings: np.ndarray, monodromies: Sequence[float]) -> U1Connection:
    """Flat connection with prescribed lifts along the homology generators.

    ``crossings`` is the (E, k) signed crossing count of each edge (stored
    direction) with the k cuts; the angle is the crossing-weighted sum of the
    monodromies, so every face (zero net crossing) is flat.
    """
    crossings = np.asarray(crossings)
    mono = np.asarray(monodromies, dtype=float)
    if crossings.ndim != 2 or crossings.shape[1] != len(mono):
        raise ConnectionError_("need one monodromy per cut")
    return U1Connection(crossings @ mono if len(mono) else np.zeros(g.edge_count))


def realize_flat_torus(g: WeightedGraph, surf, monodromies: tuple[float, float]) -> U1Connection:
    if surf is None or surf.cut_crossings is None or surf.cut_crossings.shape[1] != 2:
        raise ConnectionError_("graph lacks torus cut metadata")
    return realize_flat(g, surf.cut_crossings, monodromies)


def connection_from_face_curvature(g: WeightedGraph, surf, face_curvature=None,
                                   hole_monodromy=None, monodromies=None,
                                   tol: float = 1e-8) -> U1Connection:
    """Connection whose angle sum around every face equals that face's curvature.

    Angles vanish on a BFS spanning tree of the graph.  The remaining edges
    are solved face by face, leaves first, along a BFS tree of the dual graph
    rooted at the exterior cell (the outer face, or the sphere's polar cap)
    or at face 0.  On closed surfaces the total curvature, cap included,
    must equal 2*pi*chi.  Hole
    cells (punctures) take ``hole_monodromy`` (default 0) as their target.
    Edges left over on closed surfaces carry the homology and receive
    ``monodromies`` through the cut system.
    """
    faces = list(surf.faces)
    holes = list(surf.holes)
    K = np.asarray(surf.face_curvature if face_curvature is None else face_curvature, dtype=float)
    if len(K) != len(faces):
        raise ConnectionError_("one curvature value per face required")
    hm = np.zeros(len(holes)) if hole_monodromy is None else np.asarray(hole_monodromy, dtype=float)
    cells = faces + holes
    target = np.concatenate([K, hm])
    ncell = len(cells)
    E = g.edge_count

    owner = -np.ones(2 * E, dtype=np.int64)
    for ci, cell in enumerate(cells):
        for oe in cell:
            if owner[oe] >= 0:
                raise ConnectionError_(f"oriented edge {oe} bounds two cells")
            owner[oe] = ci
    exterior = ncell  # virtual cell owning every uncovered oriented edge
    has_exterior = bool(np.any(owner < 0))
    owner[owner < 0] = exterior

    # primal BFS tree
    in_tree = np.zeros(E, dtype=bool)
    seen = np.zeros(g.vertex_count, dtype=bool)
    for s in range(g.vertex_count):
        if seen[s]:
            continue
        seen[s] = True
        dq = deque([s])
        while dq:
            u = dq.popleft()
            for oe in g.out_edges(u):
                w = int(g.head[oe])
                if not seen[w]:
                    seen[w] = True
                    in_tree[oe >> 1] = True
                    dq.append(w)

    # dual BFS over non-tree edges
    root = exterior if has_exterior else 0
    if getattr(surf, "closed", not has_exterior):
        chi = surf.euler_char
        total = float(K.sum() + hm.sum() + getattr(surf, "exterior_curvature", 0.0))
        residual = total - 2 * np.pi * chi
        if abs(residual) > tol:
            raise ConnectionError_(
                f"total curvature {total:.12g} != 2*pi*chi = {2 * np.pi * chi:.12g} (residual {residual:.3e})")
    dual_adj: dict[int, list[tuple[int, int]]] = {}
    for e in np.flatnonzero(~in_tree):
        c0, c1 = int(owner[2 * e]), int(owner[2 * e + 1])
        if c0 == c1:
            continue
        dual_adj.setdefault(c0, []).append((c1, int(e)))
        dual_adj.setdefault(c1, []).append((c0, int(e)))
    parent_edge = {root: -1}
    order = [root]
    dq = deque([root])
    while dq:
        c = dq.popleft()
        for d, e in sorted(dual_adj.get(c, [])):
            if d not in parent_edge:
                parent_edge[d] = e
                order.append(d)
                dq.append(d)
    missing = [c for c in range(ncell) if c not in parent_edge]
    if missing:
        raise ConnectionError_(f"cells {missing[:5]} unreachable in the dual graph")

    theta = np.zeros(E)
    for c in reversed(order[1:]):
        pe = parent_edge[c]
        acc = 0.0
        coef = 0.0
        for oe in cells[c]:
            s = 1.0 if oe % 2 == 0 else -1.0
            if oe >> 1 == pe:
                coef += s
            else:
                acc += s * theta[oe >> 1]
        theta[pe] = (target[c] - acc) / coef
    if monodromies is not None:
        theta = theta + realize_flat(g, surf.cut_crossings, monodromies).angle
    return U1Connection(theta)


# ---------------------------------------------------------------------------
# dump format


def format_connection(conn) -> str:
    if isinstance(conn, U1Connection):
        lines = [f"conn u1 {len(conn.angle)}"]
        lines += [f"a {e} {t!r}" for e, t in enumerate(conn.angle.tolist())]
    else:
        lines = [f"conn su2 {len(conn.matrix)}"]
        for e, m in enumerate(conn.matrix):
            vals = " ".join(repr(float(x)) for z in m.ravel() for x in (z.real, z.imag))
            lines.append(f"a {e} {vals}")
    return "\n".join(lines) + "\n"


def parse_connection(text: str):
    kind = None
    count = 0
    rows: dict[int, list[float]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        if tok[0] == "conn":
            kind, count = tok[1], int(tok[2])
        elif tok[0] == "a":
            rows[int(tok[1])] = [float(x) for x in tok[2:]]
        else:
            raise GraphError(f"line {lineno}: cannot parse {raw!r}")
    if kind == "u1":
        ang = np.zeros(count)
        for e, v in rows.items():
            ang[e] = v[0]
        return U1Connection(ang)
    if kind == "su2":
        m = np.tile(np.eye(2, dtype=complex), (count, 1, 1))
        for e, v in rows.items():
            z = np.array(v[0::2]) + 1j * np.array(v[1::2])
            m[e] = z.reshape(2, 2)
        return SU2Connection(m)
    raise GraphError("missing 'conn <u1|su2> <edge_count>' header")
