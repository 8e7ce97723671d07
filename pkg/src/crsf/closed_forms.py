"""Exact cylinder formulas.

Ch_n is the Chebyshev variant with Ch_n(a + 1/a) = a^n + a^-n.  All
products run in log space because Ch_n(x) grows like x^n.
"""
from __future__ import annotations

import math

import numpy as np

from .connection import U1Connection
from .graph import WeightedGraph

__all__ = [
    "cheb",
    "cheb_recurrence",
    "log_cheb",
    "wired_cylinder_Z",
    "wired_cylinder_loop_pgf",
    "p_tau",
    "p_tau_terms",
    "tridiagonal_logdet",
    "curved_cylinder_ratio",
    "curved_cylinder_connection",
    "PTAU_TAIL",
]

PTAU_TAIL = 1e-14


def log_cheb(n: int, x: float) -> tuple[float, float]:
    """(log|Ch_n(x)|, sign)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    x = float(x)
    if abs(x) <= 2.0:
        v = 2.0 * math.cos(n * math.acos(x / 2.0))
        return (math.log(abs(v)) if v != 0 else -math.inf), math.copysign(1.0, v) if v != 0 else 0.0
    b = math.acosh(abs(x) / 2.0)
    # log(2 cosh(n b)) = n b + log(1 + exp(-2 n b))
    lv = n * b + math.log1p(math.exp(-2.0 * n * b))
    sign = -1.0 if (x < 0 and n % 2) else 1.0
    return lv, sign


def cheb(n: int, x: float) -> float:
    lv, s = log_cheb(n, x)
    return s * math.exp(lv) if s != 0 else 0.0


def cheb_recurrence(n: int, x: float) -> float:
    """Ch_0 = 2, Ch_1 = x, Ch_{k+1} = x Ch_k - Ch_{k-1}."""
    a, b = 2.0, float(x)
    if n == 0:
        return a
    for _ in range(n - 1):
        a, b = b, x * b - a
    return b


def _cyl_args(n: int, m: int) -> np.ndarray:
    if n < 3 or m < 1:
        raise ValueError("need n >= 3 and m >= 1")
    j = np.arange(1, m + 1)
    return 4.0 - 2.0 * np.cos(np.pi * j / (m + 1))


def wired_cylinder_Z(n: int, m: int, z: complex = 1.0) -> tuple[float, float]:
    """(log|Z(z)|, sign) of prod_j (Ch_n(4 - 2 cos(pi j/(m+1))) - z - 1/z), |z| = 1."""
    z = complex(z)
    if abs(abs(z) - 1.0) > 1e-12:
        raise ValueError("z must have modulus 1")
    s = 2.0 * z.real
    logz, sign = 0.0, 1.0
    for x in _cyl_args(n, m):
        la, _ = log_cheb(n, x)  # x > 2, so Ch_n(x) > 2
        f = 1.0 - s * math.exp(-la)
        if f == 0:
            return -math.inf, 0.0
        logz += la + math.log(abs(f))
        sign *= math.copysign(1.0, f)
    return logz, sign


def wired_cylinder_loop_pgf(n: int, m: int) -> np.ndarray:
    """Coefficients P(k noncontractible loops), k = 0..m, under the incompressible measure.

    Each factor (a - 2 + X)/(a - 1) is written as u + v X with v = 1/(a - 1),
    so the product is built from numbers in [0, 1].
    """
    coef = np.zeros(m + 1)
    coef[0] = 1.0
    for x in _cyl_args(n, m):
        la, _ = log_cheb(n, x)
        log_am1 = la + math.log1p(-math.exp(-la))
        v = math.exp(-log_am1)
        u = -math.expm1(-log_am1) if v < 0.5 else 1.0 - v
        new = coef * u
        new[1:] += coef[:-1] * v
        coef = new
    return coef


def p_tau_terms(tau: float, X: float, tail: float = PTAU_TAIL) -> tuple[int, float]:
    """Number of factors J and a bound on |prod_{j>J} factor_j - 1|.

    With q = e^{pi tau}, factor_j = 1 - (1 - X)/(q^j + q^-j - 1) and
    q^j + q^-j - 1 >= q^j / 2 once q^j >= 2, so the neglected terms sum to
    at most S = 2|1 - X| q^-(J+1) / (1 - 1/q) and the tail product lies
    within exp(S / (1 - 2|1-X|/q^(J+1))) - 1 of 1.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    lq = math.pi * tau
    d = abs(1.0 - X)
    if d == 0:
        return 1, 0.0
    J = max(1, math.ceil(math.log(2.0) / lq))
    while True:
        S = 2.0 * d * math.exp(-lq * (J + 1)) / (-math.expm1(-lq))
        tmax = 2.0 * d * math.exp(-lq * (J + 1))
        if tmax < 0.5:
            bound = math.expm1(S / (1.0 - tmax))
            if bound < tail:
                return J, bound
        J += 1


def p_tau(tau: float, X: float, terms: int | None = None) -> float:
    """prod_{j>=1} (q^j + q^-j - 2 + X)/(q^j + q^-j - 1), q = e^{pi tau}, truncated with tail < 1e-14."""
    need, _ = p_tau_terms(tau, X)
    if terms is None:
        terms = need
    elif terms < need:
        raise ValueError(f"{terms} terms leave a tail above {PTAU_TAIL}; need {need}")
    lq = math.pi * tau
    logp, sign = 0.0, 1.0
    for j in range(1, terms + 1):
        # q^j + q^-j - 1, computed without overflow
        den = math.exp(lq * j) + math.exp(-lq * j) - 1.0 if lq * j < 700 else math.inf
        f = 1.0 - (1.0 - X) / den
        if f == 0:
            return 0.0
        logp += math.log(abs(f))
        sign *= math.copysign(1.0, f)
    return sign * math.exp(logp)


def tridiagonal_logdet(diag: np.ndarray, off: float = -1.0) -> float:
    """log det of a symmetric tridiagonal matrix with constant off-diagonal, assumed positive definite."""
    r = diag[0]
    s = math.log(r)
    o2 = off * off
    for a in diag[1:]:
        r = a - o2 / r
        s += math.log(r)
    return s


def curved_cylinder_ratio(n: int, c: float, m: int | None = None) -> float:
    """Z_Phi / Z_I on the wired n-by-m cylinder with uniform face curvature c / n^2.

    The determinant splits into n tridiagonal blocks (one per rotation mode
    theta_k = 2 pi k / n) with diagonal 4 - 2 cos(theta_k + (j-1) phi).
    """
    if n < 4:
        raise ValueError("n must be >= 4")
    m = n if m is None else m
    phi = c / n ** 2
    j = np.arange(m)
    total = 0.0
    for k in range(n):
        th = 2 * np.pi * k / n
        total += tridiagonal_logdet(4.0 - 2.0 * np.cos(th + j * phi))
        total -= tridiagonal_logdet(4.0 - 2.0 * np.cos(th + 0 * j))
    return math.exp(total)


def curved_cylinder_connection(g: WeightedGraph, n: int, m: int, c: float) -> U1Connection:
    """Transport q^y = e^{i y c / n^2} on the horizontal edges of row y of a wired cylinder."""
    ang = np.zeros(g.edge_count)
    e = np.arange(n * m)
    ang[e] = (e // n) * (c / n ** 2)
    return U1Connection(ang)
