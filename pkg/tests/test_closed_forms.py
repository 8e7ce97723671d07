import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from crsf.closed_forms import (cheb, cheb_recurrence, curved_cylinder_connection, curved_cylinder_ratio,
                               log_cheb, p_tau, p_tau_terms, tridiagonal_logdet, wired_cylinder_Z,
                               wired_cylinder_loop_pgf)
from crsf.connection import realize_flat
from crsf.laplacian import assemble_laplacian, det_laplacian
from crsf.oracle import exact_measure
from crsf.surfaces import make_wired_cylinder


@given(st.integers(0, 30), st.floats(-4.0, 4.0))
def test_cheb_closed_form_vs_recurrence(n, x):
    assert cheb(n, x) == pytest.approx(cheb_recurrence(n, x), rel=1e-9, abs=1e-9)


@given(st.integers(0, 40), st.floats(1.01, 5.0))
def test_cheb_defining_identity(n, a):
    assert cheb(n, a + 1 / a) == pytest.approx(a ** n + a ** -n, rel=1e-12)


def test_log_cheb_no_overflow():
    lv, s = log_cheb(5000, 3.7)
    assert s == 1.0 and lv == pytest.approx(5000 * math.acosh(3.7 / 2), rel=1e-12)
    assert log_cheb(3, -3.0)[1] == -1.0


@pytest.mark.parametrize("n,m", [(3, 1), (4, 2), (5, 3)])
@pytest.mark.parametrize("theta", [0.0, 0.7, math.pi])
def test_wired_cylinder_Z_is_a_determinant(n, m, theta):
    g, surf = make_wired_cylinder(n, m)
    conn = realize_flat(g, surf.cut_crossings, [theta])
    d = det_laplacian(assemble_laplacian(g, conn, surf.boundary))
    lz, sign = wired_cylinder_Z(n, m, complex(math.cos(theta), math.sin(theta)))
    assert sign == d.sign
    assert lz == pytest.approx(d.logdet, abs=1e-10)


def test_pgf_matches_enumeration_small():
    g, surf = make_wired_cylinder(3, 2)
    t = exact_measure(g, surf, "inc", oriented=False, roots=surf.boundary, allow_slow=True)
    exact = t.loop_count_distribution()
    pgf = wired_cylinder_loop_pgf(3, 2)
    np.testing.assert_allclose(pgf[:len(exact)], exact, atol=1e-12)
    assert pgf[len(exact):].sum() == pytest.approx(0.0, abs=1e-12)


@given(st.integers(3, 40), st.integers(1, 40))
def test_pgf_is_a_distribution(n, m):
    c = wired_cylinder_loop_pgf(n, m)
    assert len(c) == m + 1
    assert (c >= 0).all()
    assert c.sum() == pytest.approx(1.0, abs=1e-12)


def test_pgf_evaluates_Z_ratio():
    # factor j of the pgf is (a_j - 2 + X)/(a_j - 1), of Z(z) it is a_j - z - 1/z,
    # so pgf(4)/pgf(0) = Z(-1)/Z(1)
    n, m = 6, 5
    c = wired_cylinder_loop_pgf(n, m)
    lz1, _ = wired_cylinder_Z(n, m, 1.0)
    lzm, _ = wired_cylinder_Z(n, m, -1.0)
    assert np.polyval(c[::-1], 4.0) == pytest.approx(math.exp(lzm - lz1) * c[0], rel=1e-10)


def test_p_tau_value_and_tail():
    J, bound = p_tau_terms(1.0, 0.0)
    assert bound < 1e-14
    v = p_tau(1.0, 0.0)
    assert v == pytest.approx(p_tau(1.0, 0.0, terms=J + 20), abs=1e-14)
    assert p_tau(1.0, 1.0) == 1.0
    with pytest.raises(ValueError):
        p_tau(1.0, 0.0, terms=J - 1)
    with pytest.raises(ValueError):
        p_tau(0.0, 0.0)


@given(st.floats(0.2, 3.0), st.floats(0.2, 3.0))
def test_p_tau_monotone_in_tau(a, b):
    lo, hi = sorted((a, b))
    assert p_tau(lo, 0.0) <= p_tau(hi, 0.0) + 1e-15


def test_p_tau_is_limit_of_finite_cylinders():
    """With height m = n - 1 the finite-size aspect ratio n/(m+1) is exactly 1."""
    target = p_tau(1.0, 0.0)
    errs = [abs(wired_cylinder_loop_pgf(n, n - 1)[0] - target) for n in (16, 32, 64)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-3


def test_tridiagonal_logdet():
    rng = np.random.default_rng(0)
    d = rng.uniform(2.5, 4.0, 30)
    M = np.diag(d) - np.eye(30, k=1) - np.eye(30, k=-1)
    assert tridiagonal_logdet(d) == pytest.approx(np.linalg.slogdet(M)[1], rel=1e-12)


def test_curved_ratio_block_equals_full_determinant():
    n, c = 8, 0.7
    g, surf = make_wired_cylinder(n, n)
    conn = curved_cylinder_connection(g, n, n, c)
    full = det_laplacian(assemble_laplacian(g, conn, surf.boundary)).logdet
    flat = det_laplacian(assemble_laplacian(g, None, surf.boundary)).logdet
    assert math.log(curved_cylinder_ratio(n, c)) == pytest.approx(full - flat, rel=1e-8, abs=1e-12)


def test_curved_ratio_is_quadratic():
    r = [curved_cylinder_ratio(32, c) - 1 for c in (0.1, 0.2, 0.4)]
    slope = np.polyfit(np.log([0.1, 0.2, 0.4]), np.log(r), 1)[0]
    assert abs(slope - 2) < 0.1
    assert curved_cylinder_ratio(32, 0.0) == 1.0
