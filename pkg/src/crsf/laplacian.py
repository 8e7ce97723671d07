"""Bundle Laplacians, determinants, Green functions and transfer impedances."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .connection import SU2Connection, U1Connection
from .graph import WeightedGraph

__all__ = [
    "LaplacianError",
    "BundleLaplacian",
    "DetResult",
    "assemble_laplacian",
    "det_laplacian",
    "spanning_tree_count",
    "log_spanning_tree_count",
    "green_function",
    "transfer_impedance",
    "transfer_impedance_table",
    "z_lc0",
    "z_lc0_limit",
    "z_lc0_kkw",
    "RICHARDSON_T",
]

RICHARDSON_T = (0.2, 0.1, 0.05, 0.025)


class LaplacianError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class BundleLaplacian:
    matrix: np.ndarray
    vertices: np.ndarray  # graph vertex of each block row
    block: int  # 1 for U(1), 2 for SU(2)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class DetResult:
    value: float
    logdet: float  # log|det|, -inf for a singular matrix
    sign: float
    z: float | None = None  # sqrt(det) for SU(2) bundles


def assemble_laplacian(g: WeightedGraph, conn=None, dirichlet: Iterable[int] = ()) -> BundleLaplacian:
    """Dense Delta_Phi, with the rows and columns of ``dirichlet`` deleted.

    ``conn=None`` gives the ordinary Laplacian.  The (w, u) entry for an
    edge u -> w is -c * transport(u -> w).
    """
    S = sorted(set(int(v) for v in dirichlet))
    n = g.vertex_count
    if len(S) >= n:
        raise LaplacianError("Dirichlet set covers every vertex")
    keep = np.setdiff1d(np.arange(n), np.asarray(S, dtype=np.int64))
    a, b, c = g.ends[:, 0], g.ends[:, 1], g.conductance
    if conn is None or isinstance(conn, U1Connection):
        L = np.zeros((n, n), dtype=complex if conn is not None else float)
        if conn is not None:
            if len(conn.angle) != g.edge_count:
                raise LaplacianError("connection does not match the graph")
            ph = np.exp(1j * conn.angle)
            np.add.at(L, (b, a), -c * ph)
            np.add.at(L, (a, b), -c * np.conj(ph))
        else:
            np.add.at(L, (b, a), -c)
            np.add.at(L, (a, b), -c)
        L[np.diag_indices(n)] += g.degree
        return BundleLaplacian(L[np.ix_(keep, keep)], keep, 1)
    if isinstance(conn, SU2Connection):
        if len(conn.matrix) != g.edge_count:
            raise LaplacianError("connection does not match the graph")
        L = np.zeros((n, 2, n, 2), dtype=complex)
        for e in range(g.edge_count):
            w = c[e] * conn.matrix[e]
            L[b[e], :, a[e], :] -= w
            L[a[e], :, b[e], :] -= w.conj().T
        for v in range(n):
            L[v, :, v, :] += g.degree[v] * np.eye(2)
        L = L[keep][:, :, keep].reshape(2 * len(keep), 2 * len(keep))
        return BundleLaplacian(L, keep, 2)
    raise LaplacianError(f"unsupported connection type {type(conn).__name__}")


def det_laplacian(L: BundleLaplacian | np.ndarray) -> DetResult:
    """Determinant through an LU factorisation; real for Hermitian input."""
    M = L.matrix if isinstance(L, BundleLaplacian) else np.asarray(L)
    if M.size == 0:
        raise LaplacianError("matrix of dimension 0")
    sign, logdet = np.linalg.slogdet(M)
    sign = complex(sign).real if np.iscomplexobj(sign) else float(sign)
    sign = float(np.sign(sign)) if sign != 0 else 0.0
    with np.errstate(over="ignore"):
        value = sign * float(np.exp(logdet)) if np.isfinite(logdet) else 0.0
    z = None
    if isinstance(L, BundleLaplacian) and L.block == 2:
        z = float(np.sqrt(max(value, 0.0)))
    return DetResult(value, float(logdet), sign, z)


def spanning_tree_count(g: WeightedGraph) -> float:
    """Conductance-weighted number of spanning trees; exactly 0.0 if disconnected."""
    if not g.is_connected():
        return 0.0
    if g.vertex_count == 1:
        return 1.0
    return det_laplacian(assemble_laplacian(g, None, [0])).value


def log_spanning_tree_count(g: WeightedGraph) -> float:
    if not g.is_connected():
        return -np.inf
    if g.vertex_count == 1:
        return 0.0
    return det_laplacian(assemble_laplacian(g, None, [0])).logdet


def green_function(g: WeightedGraph, dirichlet: Iterable[int]) -> np.ndarray:
    """Inverse Dirichlet Laplacian, padded with zero rows/columns on the Dirichlet set."""
    S = sorted(set(int(v) for v in dirichlet))
    if not S:
        raise LaplacianError("Green function needs a nonempty Dirichlet set")
    L = assemble_laplacian(g, None, S)
    try:
        Ginv = np.linalg.inv(L.matrix)
    except np.linalg.LinAlgError as exc:
        raise LaplacianError("Dirichlet Laplacian is singular (component without a grounded vertex)") from exc
    if not np.all(np.isfinite(Ginv)) or np.linalg.cond(L.matrix) > 1e14:
        raise LaplacianError("Dirichlet Laplacian is singular (component without a grounded vertex)")
    G = np.zeros((g.vertex_count, g.vertex_count))
    G[np.ix_(L.vertices, L.vertices)] = Ginv
    return G


def _oe(e) -> int:
    return int(e.index) if hasattr(e, "index") and not isinstance(e, (int, np.integer)) else int(e)


def transfer_impedance(g: WeightedGraph, e, e2, ground: int = 0, G: np.ndarray | None = None) -> float:
    """G(e+, e'+) - G(e+, e'-) - G(e-, e'+) + G(e-, e'-) for oriented edges e, e'.

    This is the voltage drop across e' when unit current enters at the head
    of e and leaves at its tail.  The current through e' is c(e') times it.
    """
    if G is None:
        G = green_function(g, [ground])
    i, j = _oe(e), _oe(e2)
    hp, hm = g.head[i], g.tail[i]
    kp, km = g.head[j], g.tail[j]
    return float(G[hp, kp] - G[hp, km] - G[hm, kp] + G[hm, km])


def transfer_impedance_table(g: WeightedGraph, ground: int = 0, G: np.ndarray | None = None) -> np.ndarray:
    """T over stored-direction edges: an (E, E) symmetric matrix."""
    if G is None:
        G = green_function(g, [ground])
    B = np.zeros((g.edge_count, g.vertex_count))
    idx = np.arange(g.edge_count)
    B[idx, g.ends[:, 1]] += 1.0
    B[idx, g.ends[:, 0]] -= 1.0
    return B @ G @ B.T


def _extrapolate_to_zero(s: Sequence[float], f: Sequence[float]) -> float:
    """Value at s = 0 of the polynomial through the points (s_i, f_i)."""
    total = 0.0
    for i, (si, fi) in enumerate(zip(s, f)):
        w = 1.0
        for j, sj in enumerate(s):
            if j != i:
                w *= sj / (sj - si)
        total += w * fi
    return total


def _tree_gauge(g: WeightedGraph, conn: U1Connection) -> U1Connection:
    """Gauge-equivalent connection vanishing on a BFS spanning forest.

    The remaining angles are the lifts of the fundamental cycles, so their
    size is the natural scale of the t -> 0 expansion.
    """
    sigma = np.zeros(g.vertex_count)
    seen = np.zeros(g.vertex_count, dtype=bool)
    ang = conn.oe_angle
    for r in range(g.vertex_count):
        if seen[r]:
            continue
        seen[r] = True
        stack = [r]
        while stack:
            u = stack.pop()
            for oe in g.out_edges(u):
                w = int(g.head[oe])
                if not seen[w]:
                    seen[w] = True
                    sigma[w] = sigma[u] - ang[oe]
                    stack.append(w)
    a, b = g.ends[:, 0], g.ends[:, 1]
    return U1Connection(conn.angle + sigma[b] - sigma[a])


def _extrapolate_to_zero(s: Sequence[float], f: Sequence[float]) -> float:
    """Value at s = 0 of the polynomial through the points (s_i, f_i)."""
    total = 0.0
    for i, (si, fi) in enumerate(zip(s, f)):
        w = 1.0
        for j, sj in enumerate(s):
            if j != i:
                w *= sj / (sj - si)
        total += w * fi
    return total


def z_lc0_limit(g: WeightedGraph, conn: U1Connection, ts: Sequence[float] = RICHARDSON_T,
                rtol: float = 1e-4) -> float:
    """lim t^-2 det Delta_{t theta}, by polynomial extrapolation in t^2.

    f(t) = det / t^2 is even in t, so fitting f against t^2 and evaluating
    at 0 cancels the t^2, t^4, ... terms.  ``ts`` are multiples of
    1 / max|theta| taken in a spanning-tree gauge, which keeps t * theta
    small without drowning the determinant in rounding error.  The estimate
    from the last two points must agree with the full one to ``rtol``.
    """
    if len(ts) < 2:
        raise LaplacianError("need at least two t values")
    conn = _tree_gauge(g, conn)
    m = float(np.abs(conn.angle).max(initial=0.0))
    if m == 0.0:
        return 0.0
    ts = [t / m for t in ts]
    s = [t * t for t in ts]
    f = [det_laplacian(assemble_laplacian(g, conn.scaled(t))).value / (t * t) for t in ts]
    full = _extrapolate_to_zero(s, f)
    coarse = _extrapolate_to_zero(s[-2:], f[-2:])
    scale = max(abs(full), abs(coarse))
    if scale > 0 and abs(full - coarse) > rtol * scale:
        raise LaplacianError(f"t -> 0 limit ill-conditioned: estimates {full:.12g} and {coarse:.12g}")
    return full


def z_lc0_kkw(g: WeightedGraph, conn: U1Connection, ground: int = 0) -> float:
    """kappa * (sum_e c_e theta_e^2 - sum_{e,e'} c_e theta_e c_e' theta_e' T(e, e'))."""
    if not g.is_connected():
        raise LaplacianError("graph must be connected")
    kappa = spanning_tree_count(g)
    T = transfer_impedance_table(g, ground)
    j = g.conductance * conn.angle
    return float(kappa * (np.dot(j, conn.angle) - j @ T @ j))


def z_lc0(g: WeightedGraph, conn: U1Connection, route: str = "kkw") -> float:
    """Weighted sum over connected CRSFs of theta_gamma^2 prod c(e).

    ``route`` is "limit" (scaled-connection determinant), "kkw"
    (transfer-impedance quadratic form) or "enumerate" (brute force).
    """
    if route == "limit":
        return z_lc0_limit(g, conn)
    if route == "kkw":
        return z_lc0_kkw(g, conn)
    if route == "enumerate":
        from .oracle import lc0_partition
        return lc0_partition(g, conn)
    raise LaplacianError(f"unknown route {route!r}")

