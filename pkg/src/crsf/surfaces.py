"""Desk-scale surface family: grids with faces, curvature, cuts and charts.

Faces are listed counter-clockwise as tuples of oriented edge ids, so a face
lies on the left of each of its boundary edges.  Holes (punctures, the top
rim of an annulus) are cells without curvature; any oriented edge that no
face or hole covers belongs to a single implicit exterior cell (the outer
face of a planar chart, or the polar cap of the sphere).
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .graph import WeightedGraph, build_graph

__all__ = [
    "SurfaceError",
    "SurfaceModel",
    "make_torus_grid",
    "make_wired_cylinder",
    "make_annulus",
    "make_planar_grid",
    "make_punctured_planar",
    "make_sphere_grid",
    "make_hyperbolic_ball_grid",
    "make_surface",
    "classify_cycle",
    "enclosed_faces",
    "format_surface",
    "parse_surface",
    "SPHERE_CAP_FRACTION",
]

SPHERE_CAP_FRACTION = 1e-3

KINDS = ("torus", "cylinder_wired", "annulus", "planar_punctured", "sphere", "hyperbolic_ball")


class SurfaceError(ValueError):
    pass


@dataclass(eq=False)
class SurfaceModel:
    kind: str
    faces: list[tuple[int, ...]]
    face_curvature: np.ndarray
    cut_crossings: np.ndarray  # (E, k) crossings of each edge, stored direction
    positions: np.ndarray  # (V, 2) chart coordinates
    boundary: frozenset = frozenset()
    holes: list[tuple[int, ...]] = field(default_factory=list)
    euler_char: int = 0
    exterior_curvature: float = 0.0
    params: dict = field(default_factory=dict)

    @property
    def closed(self) -> bool:
        """Closed surface: the exterior cell (if any) is a genuine cap, not a boundary."""
        return self.kind in ("torus", "sphere")

    @property
    def ncuts(self) -> int:
        return self.cut_crossings.shape[1]

    def oe_crossings(self, oe: int) -> np.ndarray:
        c = self.cut_crossings[oe >> 1]
        return c if oe % 2 == 0 else -c

    def total_curvature(self) -> float:
        return float(self.face_curvature.sum() + self.exterior_curvature)

    def cell_owner(self, g: WeightedGraph) -> np.ndarray:
        """Cell index left of each oriented edge: faces, then holes, then -1 (exterior)."""
        owner = -np.ones(2 * g.edge_count, dtype=np.int64)
        for ci, cell in enumerate(list(self.faces) + list(self.holes)):
            owner[list(cell)] = ci
        return owner


def _grid_edges(nx: int, ny: int, wrap_x: bool, wrap_y: bool):
    """Horizontal then vertical edges of an nx-by-ny vertex grid (id = y*nx + x)."""
    vid = lambda x, y: (y % ny) * nx + (x % nx)
    hidx, vidx, edges = {}, {}, []
    for y in range(ny):
        for x in range(nx if wrap_x else nx - 1):
            hidx[x, y] = len(edges)
            edges.append((vid(x, y), vid(x + 1, y), 1.0))
    for y in range(ny if wrap_y else ny - 1):
        for x in range(nx):
            vidx[x, y] = len(edges)
            edges.append((vid(x, y), vid(x, y + 1), 1.0))
    return edges, hidx, vidx


def _square_face(hidx, vidx, x, y, nx, wrap_x):
    xr = (x + 1) % nx if wrap_x else x + 1
    return (2 * hidx[x, y], 2 * vidx[xr, y], 2 * hidx[x, y + 1] + 1, 2 * vidx[x, y] + 1)


def make_torus_grid(n: int, m: int) -> tuple[WeightedGraph, SurfaceModel]:
    """n-by-m square grid with both directions identified (flat torus)."""
    if n < 2 or m < 2:
        raise SurfaceError("torus grid needs n, m >= 2")
    edges, hidx, vidx = _grid_edges(n, m, True, True)
    g = build_graph(edges, vertex_count=n * m)
    faces = []
    for y in range(m):
        for x in range(n):
            yt = (y + 1) % m
            faces.append((2 * hidx[x, y], 2 * vidx[(x + 1) % n, y], 2 * hidx[x, yt] + 1, 2 * vidx[x, y] + 1))
    cross = np.zeros((g.edge_count, 2), dtype=np.int64)
    for y in range(m):
        cross[hidx[n - 1, y], 0] = 1
    for x in range(n):
        cross[vidx[x, m - 1], 1] = 1
    pos = np.array([(x, y) for y in range(m) for x in range(n)], dtype=float)
    surf = SurfaceModel("torus", faces, np.zeros(len(faces)), cross, pos,
                        euler_char=0, params={"n": n, "m": m})
    return g, surf


def make_wired_cylinder(n: int, m: int) -> tuple[WeightedGraph, SurfaceModel]:
    """Circumference-n, height-m cylinder grid with both rims wired to one extra vertex.

    Vertex n*m is the wiring vertex and forms the Dirichlet boundary.  The
    single cut counts horizontal crossings of the seam x = n-1 -> 0.
    """
    if n < 3 or m < 1:
        raise SurfaceError("wired cylinder needs n >= 3, m >= 1")
    edges, hidx, vidx = _grid_edges(n, m, True, False)
    wire = n * m
    for x in range(n):
        edges.append((x, wire, 1.0))
    for x in range(n):
        edges.append(((m - 1) * n + x, wire, 1.0))
    g = build_graph(edges, vertex_count=n * m + 1)
    faces = [_square_face(hidx, vidx, x, y, n, True) for y in range(m - 1) for x in range(n)]
    holes = [tuple(2 * hidx[x, m - 1] for x in range(n))]  # top rim; bottom rim is the exterior
    cross = np.zeros((g.edge_count, 1), dtype=np.int64)
    for y in range(m):
        cross[hidx[n - 1, y], 0] = 1
    ang = 2 * np.pi * np.arange(n) / n
    pos = [((1 + y) * np.cos(a), (1 + y) * np.sin(a)) for y in range(m) for a in ang]
    pos.append((0.0, 0.0))
    surf = SurfaceModel("cylinder_wired", faces, np.zeros(len(faces)), cross, np.array(pos),
                        boundary=frozenset([wire]), holes=holes, euler_char=0,
                        params={"n": n, "m": m})
    return g, surf


def make_annulus(n: int, m: int) -> tuple[WeightedGraph, SurfaceModel]:
    """Circumference-n, height-m cylinder grid with free rims."""
    if n < 3 or m < 1:
        raise SurfaceError("annulus needs n >= 3, m >= 1")
    edges, hidx, vidx = _grid_edges(n, m, True, False)
    g = build_graph(edges, vertex_count=n * m)
    faces = [_square_face(hidx, vidx, x, y, n, True) for y in range(m - 1) for x in range(n)]
    holes = [tuple(2 * hidx[x, m - 1] for x in range(n))]
    cross = np.zeros((g.edge_count, 1), dtype=np.int64)
    for y in range(m):
        cross[hidx[n - 1, y], 0] = 1
    ang = 2 * np.pi * np.arange(n) / n
    pos = np.array([((1 + y) * np.cos(a), (1 + y) * np.sin(a)) for y in range(m) for a in ang])
    surf = SurfaceModel("annulus", faces, np.zeros(len(faces)), cross, pos, holes=holes,
                        euler_char=0, params={"n": n, "m": m})
    return g, surf


def make_planar_grid(nx: int, ny: int) -> tuple[WeightedGraph, SurfaceModel]:
    """Plain nx-by-ny vertex rectangle (flat disk)."""
    return make_punctured_planar((nx - 1, ny - 1), [], 1)


def make_punctured_planar(outer: tuple[int, int], punctures: Sequence[tuple[float, float]] = (),
                          k: int = 1) -> tuple[WeightedGraph, SurfaceModel]:
    """Rectangle [0, W] x [0, H] meshed with spacing 1/k, punctured faces removed.

    Each puncture removes the grid face containing it and gets a winding cut:
    a vertical ray from that face up to the outer boundary.  A loop winding
    once counter-clockwise around the puncture crosses its cut with sign +1.
    """
    W, H = outer
    nx, ny = int(round(W * k)) + 1, int(round(H * k)) + 1
    if nx < 2 or ny < 2:
        raise SurfaceError("rectangle too small")
    edges, hidx, vidx = _grid_edges(nx, ny, False, False)
    g = build_graph(edges, vertex_count=nx * ny)
    removed = {}
    for i, (px, py) in enumerate(punctures):
        sx, sy = px * k, py * k
        if not (0 < sx < nx - 1 and 0 < sy < ny - 1):
            raise SurfaceError(f"puncture {i} outside the rectangle")
        if float(sx).is_integer() or float(sy).is_integer():
            raise SurfaceError(f"puncture {i} lies on a grid line")
        cell = (int(sx), int(sy))
        if cell in removed:
            raise SurfaceError(f"punctures {removed[cell]} and {i} share a face")
        removed[cell] = i
    faces, holes = [], [None] * len(removed)
    for y in range(ny - 1):
        for x in range(nx - 1):
            f = _square_face(hidx, vidx, x, y, nx, False)
            if (x, y) in removed:
                holes[removed[x, y]] = f
            else:
                faces.append(f)
    cross = np.zeros((g.edge_count, len(removed)), dtype=np.int64)
    for (x, y), i in removed.items():
        for yy in range(y + 1, ny):
            cross[hidx[x, yy], i] = -1
    pos = np.array([(x / k, y / k) for y in range(ny) for x in range(nx)])
    surf = SurfaceModel("planar_punctured", faces, np.zeros(len(faces)), cross, pos, holes=holes,
                        euler_char=1 - len(removed),
                        params={"W": W, "H": H, "k": k, "punctures": [tuple(p) for p in punctures]})
    return g, surf


# ---------------------------------------------------------------------------
# curved charts


def _sphere_area_primitive(x, y):
    """F with d2F/dxdy = (1 + x^2 + y^2)^-2 and F(0, .) = F(., 0) = 0."""
    sx, sy = np.sqrt(1 + x * x), np.sqrt(1 + y * y)
    return x / (2 * sx) * np.arctan(y / sx) + y / (2 * sy) * np.arctan(x / sy)


def sphere_rect_area(x0, x1, y0, y1):
    """Exact round-sphere area of the inverse stereographic image of a chart rectangle."""
    F = _sphere_area_primitive
    return 4.0 * (F(x1, y1) - F(x0, y1) - F(x1, y0) + F(x0, y0))


def sphere_chart_halfwidth(cap_fraction: float = SPHERE_CAP_FRACTION) -> float:
    """Smallest L so that the sphere outside the image of [-L, L]^2 has area < cap_fraction * 4 pi."""
    f = lambda L: 4 * np.pi - sphere_rect_area(-L, L, -L, L) - 4 * np.pi * cap_fraction
    return brentq(f, 1e-3, 1e6, xtol=1e-12)


def make_sphere_grid(k: int, cap_fraction: float = SPHERE_CAP_FRACTION) -> tuple[WeightedGraph, SurfaceModel]:
    """k-by-k square grid on [-L, L]^2 pulled back to the unit sphere.

    Face curvature is the exact spherical area of each face's image.  The
    omitted polar cap is the exterior cell and carries the residual
    4 pi minus the face total, so lifts are measured relative to it.
    """
    if k < 4:
        raise SurfaceError("sphere grid needs k >= 4 to resolve the cap bound")
    L = sphere_chart_halfwidth(cap_fraction)
    xs = np.linspace(-L, L, k)
    edges, hidx, vidx = _grid_edges(k, k, False, False)
    g = build_graph(edges, vertex_count=k * k)
    faces, curv = [], []
    for y in range(k - 1):
        for x in range(k - 1):
            faces.append(_square_face(hidx, vidx, x, y, k, False))
            curv.append(sphere_rect_area(xs[x], xs[x + 1], xs[y], xs[y + 1]))
    curv = np.array(curv)
    pos = np.array([(xs[x], xs[y]) for y in range(k) for x in range(k)])
    surf = SurfaceModel("sphere", faces, curv, np.zeros((g.edge_count, 0), dtype=np.int64), pos,
                        euler_char=2, exterior_curvature=4 * np.pi - float(curv.sum()),
                        params={"k": k, "L": L})
    return g, surf


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(3)


def quad_rect(density, x0, x1, y0, y1) -> float:
    """3x3 Gauss-Legendre quadrature of density(x, y) over a rectangle."""
    xm, xr = (x0 + x1) / 2, (x1 - x0) / 2
    ym, yr = (y0 + y1) / 2, (y1 - y0) / 2
    X = xm + xr * _GL_NODES[:, None]
    Y = ym + yr * _GL_NODES[None, :]
    return float(xr * yr * np.sum(_GL_WEIGHTS[:, None] * _GL_WEIGHTS[None, :] * density(X, Y)))


def make_hyperbolic_ball_grid(radius: float, k: int) -> tuple[WeightedGraph, SurfaceModel]:
    """Square grid inside the Poincare-disk image of a hyperbolic ball.

    The ball is centred at the origin of the disk model (any centre is
    isometric to it); its Euclidean radius is tanh(radius / 2).  Face
    curvature is minus the hyperbolic face area.  Vertices of degree < 4
    form the boundary set.
    """
    if not radius > 0:
        raise SurfaceError("radius must be positive")
    if k < 3:
        raise SurfaceError("k must be >= 3")
    R = np.tanh(radius / 2)
    xs = np.linspace(-R, R, k)
    inside = (xs[:, None] ** 2 + xs[None, :] ** 2) < R * R  # [x, y]
    if not inside.any():
        raise SurfaceError("empty intersection")
    # keep the connected component of the centre-most vertex
    start = tuple(np.unravel_index(np.argmin(np.where(inside, xs[:, None] ** 2 + xs[None, :] ** 2, np.inf)),
                                   inside.shape))
    keep = np.zeros_like(inside)
    keep[start] = True
    dq = deque([start])
    while dq:
        x, y = dq.popleft()
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            a, b = x + dx, y + dy
            if 0 <= a < k and 0 <= b < k and inside[a, b] and not keep[a, b]:
                keep[a, b] = True
                dq.append((a, b))
    vid = -np.ones((k, k), dtype=np.int64)
    coords = []
    for y in range(k):
        for x in range(k):
            if keep[x, y]:
                vid[x, y] = len(coords)
                coords.append((xs[x], xs[y]))
    edges, hidx, vidx = [], {}, {}
    for y in range(k):
        for x in range(k - 1):
            if keep[x, y] and keep[x + 1, y]:
                hidx[x, y] = len(edges)
                edges.append((vid[x, y], vid[x + 1, y], 1.0))
    for y in range(k - 1):
        for x in range(k):
            if keep[x, y] and keep[x, y + 1]:
                vidx[x, y] = len(edges)
                edges.append((vid[x, y], vid[x, y + 1], 1.0))
    g = build_graph(edges, vertex_count=len(coords))
    dens = lambda X, Y: -4.0 / (1 - X * X - Y * Y) ** 2
    faces, curv = [], []
    for y in range(k - 1):
        for x in range(k - 1):
            if keep[x, y] and keep[x + 1, y] and keep[x, y + 1] and keep[x + 1, y + 1]:
                faces.append((2 * hidx[x, y], 2 * vidx[x + 1, y], 2 * hidx[x, y + 1] + 1, 2 * vidx[x, y] + 1))
                curv.append(quad_rect(dens, xs[x], xs[x + 1], xs[y], xs[y + 1]))
    if not faces:
        raise SurfaceError("empty intersection")
    deg = np.bincount(g.ends.ravel(), minlength=g.vertex_count)
    boundary = frozenset(int(v) for v in np.flatnonzero(deg < 4))
    surf = SurfaceModel("hyperbolic_ball", faces, np.array(curv),
                        np.zeros((g.edge_count, 0), dtype=np.int64), np.array(coords),
                        boundary=boundary, euler_char=1, params={"radius": radius, "k": k})
    return g, surf


def make_surface(kind: str, **params) -> tuple[WeightedGraph, SurfaceModel]:
    """Dispatch on a surface kind with integer / float parameters."""
    if kind == "torus":
        return make_torus_grid(int(params.get("n", 8)), int(params.get("m", params.get("n", 8))))
    if kind == "cylinder_wired":
        return make_wired_cylinder(int(params.get("n", 8)), int(params.get("m", params.get("n", 8))))
    if kind == "annulus":
        return make_annulus(int(params.get("n", 8)), int(params.get("m", 4)))
    if kind == "planar_punctured":
        punct = params.get("punctures", [])
        if isinstance(punct, str):
            punct = [tuple(float(t) for t in p.split(",")) for p in punct.split(";") if p]
        return make_punctured_planar((int(params.get("W", 8)), int(params.get("H", 8))),
                                     punct, int(params.get("k", 1)))
    if kind == "sphere":
        return make_sphere_grid(int(params.get("k", 32)))
    if kind == "hyperbolic_ball":
        return make_hyperbolic_ball_grid(float(params.get("radius", 2.0)), int(params.get("k", 32)))
    raise SurfaceError(f"unknown surface kind {kind!r}; expected one of {', '.join(KINDS)}")


# ---------------------------------------------------------------------------
# cycles on surfaces


def classify_cycle(surf: SurfaceModel, cycle: Sequence[int]) -> np.ndarray:
    """Signed crossing vector of an oriented cycle with the cut system.

    The zero vector means contractible for the torus, annulus, cylinder and
    punctured-plane families (simple loops there are contractible iff null
    homologous); this fails for genus >= 2.
    """
    oe = np.asarray(cycle, dtype=np.int64)
    sign = 1 - 2 * (oe & 1)
    return (surf.cut_crossings[oe >> 1] * sign[:, None]).sum(axis=0)


def enclosed_faces(g: WeightedGraph, surf: SurfaceModel, cycle: Sequence[int]) -> list[int] | None:
    """Faces of the disk bounded by a cycle (the side free of holes and exterior).

    Returns None when neither side is a disk, e.g. for noncontractible loops.
    """
    owner = surf.cell_owner(g)
    nfaces = len(surf.faces)
    on_cycle = set(int(oe) >> 1 for oe in cycle)
    cells = list(surf.faces) + list(surf.holes)

    def region(seeds):
        seen, dq = set(), deque()
        for c in seeds:
            if c < 0 or c >= nfaces:
                return None
            if c not in seen:
                seen.add(c)
                dq.append(c)
        while dq:
            c = dq.popleft()
            for oe in cells[c]:
                if oe >> 1 in on_cycle:
                    continue
                d = int(owner[oe ^ 1])
                if d < 0 or d >= nfaces:
                    return None
                if d not in seen:
                    seen.add(d)
                    dq.append(d)
        return seen

    left = region([int(owner[oe]) for oe in cycle])
    right_seeds = [int(owner[oe ^ 1]) for oe in cycle]
    if left is not None and not left.intersection(right_seeds):
        return sorted(left)
    right = region(right_seeds)
    if right is not None and not right.intersection(int(owner[oe]) for oe in cycle):
        return sorted(right)
    return None


# ---------------------------------------------------------------------------
# text format


def format_surface(surf: SurfaceModel) -> str:
    kv = " ".join(f"{k}={v}" for k, v in surf.params.items() if k != "punctures")
    lines = [f"surface kind={surf.kind} {kv} chi={surf.euler_char} ncuts={surf.ncuts}".replace("  ", " ")]
    if surf.params.get("punctures"):
        lines.append("punctures " + ";".join(f"{x!r},{y!r}" for x, y in surf.params["punctures"]))
    lines.append(f"exterior {surf.exterior_curvature!r}")
    if surf.boundary:
        lines.append("b " + " ".join(str(v) for v in sorted(surf.boundary)))
    for v, (x, y) in enumerate(surf.positions.tolist()):
        lines.append(f"p {v} {x!r} {y!r}")
    for K, f in zip(surf.face_curvature.tolist(), surf.faces):
        lines.append(f"f {K!r} " + " ".join(map(str, f)))
    for h in surf.holes:
        lines.append("h " + " ".join(map(str, h)))
    for e in np.flatnonzero(np.any(surf.cut_crossings != 0, axis=1)):
        lines.append(f"c {e} " + " ".join(map(str, surf.cut_crossings[e].tolist())))
    return "\n".join(lines) + "\n"


def parse_surface(text: str, edge_count: int) -> SurfaceModel:
    head, pos, faces, curv, holes, cross, boundary = {}, {}, [], [], [], {}, []
    exterior = 0.0
    punctures = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        t = tok[0]
        if t == "surface":
            head = dict(item.split("=", 1) for item in tok[1:])
        elif t == "punctures":
            punctures = [tuple(float(a) for a in p.split(",")) for p in tok[1].split(";")]
        elif t == "exterior":
            exterior = float(tok[1])
        elif t == "b":
            boundary += [int(v) for v in tok[1:]]
        elif t == "p":
            pos[int(tok[1])] = (float(tok[2]), float(tok[3]))
        elif t == "f":
            curv.append(float(tok[1]))
            faces.append(tuple(int(v) for v in tok[2:]))
        elif t == "h":
            holes.append(tuple(int(v) for v in tok[1:]))
        elif t == "c":
            cross[int(tok[1])] = [int(v) for v in tok[2:]]
        else:
            raise SurfaceError(f"line {lineno}: cannot parse {raw!r}")
    if "kind" not in head:
        raise SurfaceError("missing 'surface kind=...' header")
    ncuts = int(head.get("ncuts", 0))
    cc = np.zeros((edge_count, ncuts), dtype=np.int64)
    for e, v in cross.items():
        cc[e] = v
    params = {}
    for k, v in head.items():
        if k in ("kind", "chi", "ncuts"):
            continue
        try:
            params[k] = int(v)
        except ValueError:
            params[k] = float(v)
    if punctures:
        params["punctures"] = punctures
    positions = np.array([pos[v] for v in range(len(pos))]) if pos else np.zeros((0, 2))
    return SurfaceModel(head["kind"], faces, np.array(curv), cc, positions, frozenset(boundary), holes,
                        int(head.get("chi", 0)), exterior, params)
