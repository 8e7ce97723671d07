import numpy as np
import pytest
from hypothesis import given, strategies as st

from crsf.connection import (ConnectionError_, GaugeTransform, SU2Connection, U1Connection, apply_gauge,
                             connection_from_face_curvature, cycle_monodromy_angle, cycle_monodromy_su2,
                             format_connection, parse_connection, random_su2, realize_flat)
from crsf.graph import simple_cycles
from crsf.laplacian import assemble_laplacian, det_laplacian
from crsf.oracle import random_fixture_graph
from crsf.surfaces import make_planar_grid, make_sphere_grid, make_torus_grid

seeds = st.integers(0, 2 ** 32 - 1)


def test_reverse_edge_has_negated_angle(triangle):
    c = U1Connection(np.array([0.3, -0.1, 0.5]))
    np.testing.assert_allclose(c.oe_angle[0::2], -c.oe_angle[1::2])
    assert cycle_monodromy_angle(c, [0, 2, 4]) == pytest.approx(0.7)
    assert cycle_monodromy_angle(c, [5, 3, 1]) == pytest.approx(-0.7)


def test_random_su2_is_special_unitary(rng):
    m = random_su2(rng, 50)
    eye = np.broadcast_to(np.eye(2), m.shape)
    np.testing.assert_allclose(m @ np.conj(np.swapaxes(m, 1, 2)), eye, atol=1e-12)
    np.testing.assert_allclose(np.linalg.det(m), 1.0, atol=1e-12)


@given(seeds)
def test_u1_gauge_invariance(seed):
    rng = np.random.default_rng(seed)
    g = random_fixture_graph(rng)
    c = U1Connection(rng.uniform(-np.pi, np.pi, g.edge_count))
    c2 = apply_gauge(c, GaugeTransform(rng.uniform(-np.pi, np.pi, g.vertex_count)), g)
    d1 = det_laplacian(assemble_laplacian(g, c)).value
    d2 = det_laplacian(assemble_laplacian(g, c2)).value
    assert d2 == pytest.approx(d1, rel=1e-10, abs=1e-12)
    for cyc in simple_cycles(g):
        a, b = cycle_monodromy_angle(c, cyc), cycle_monodromy_angle(c2, cyc)
        assert a == pytest.approx(b, abs=1e-10)


@given(seeds)
def test_su2_gauge_invariance(seed):
    rng = np.random.default_rng(seed)
    g = random_fixture_graph(rng)
    c = SU2Connection(random_su2(rng, g.edge_count))
    c2 = apply_gauge(c, GaugeTransform(random_su2(rng, g.vertex_count)), g)
    z1 = det_laplacian(assemble_laplacian(g, c)).z
    z2 = det_laplacian(assemble_laplacian(g, c2)).z
    assert z2 == pytest.approx(z1, rel=1e-9)
    for cyc in simple_cycles(g):
        t1 = np.trace(cycle_monodromy_su2(c, cyc))
        t2 = np.trace(cycle_monodromy_su2(c2, cyc))
        assert abs(t1 - t2) < 1e-10


def test_su2_from_u1_doubles_the_determinant(rng):
    g = random_fixture_graph(rng)
    c = U1Connection(rng.uniform(-1, 1, g.edge_count))
    d = det_laplacian(assemble_laplacian(g, c)).value
    dz = det_laplacian(assemble_laplacian(g, SU2Connection.from_u1(c))).value
    assert dz == pytest.approx(d * d, rel=1e-10)


@given(st.integers(2, 6), st.integers(2, 6), seeds)
def test_stokes_on_planar_grid(nx, ny, seed):
    rng = np.random.default_rng(seed)
    g, surf = make_planar_grid(nx, ny)
    K = rng.uniform(-1.0, 1.0, len(surf.faces))
    conn = connection_from_face_curvature(g, surf, K)
    got = [cycle_monodromy_angle(conn, f, g) for f in surf.faces]
    np.testing.assert_allclose(got, K, atol=1e-10)
    # the outer boundary, walked clockwise, encloses minus the total
    covered = {oe for f in surf.faces for oe in f}
    outer = [oe for oe in range(2 * g.edge_count) if oe not in covered]
    assert conn.oe_angle[outer].sum() == pytest.approx(-K.sum(), abs=1e-9)


def test_flat_torus_generators():
    g, surf = make_torus_grid(4, 3)
    conn = realize_flat(g, surf.cut_crossings, [0.4, -0.9])
    for f in surf.faces:
        assert abs(cycle_monodromy_angle(conn, f)) < 1e-12
    row = [2 * e for e in range(4)]  # horizontal edges of row 0, forward
    assert cycle_monodromy_angle(conn, row, g) == pytest.approx(0.4)
    with pytest.raises(ConnectionError_):
        realize_flat(g, surf.cut_crossings, [0.1])


def test_sphere_curvature_is_gauss_bonnet():
    g, surf = make_sphere_grid(8)
    conn = connection_from_face_curvature(g, surf)
    got = np.array([cycle_monodromy_angle(conn, f) for f in surf.faces])
    np.testing.assert_allclose(got, surf.face_curvature, atol=1e-9)
    with pytest.raises(ConnectionError_):
        connection_from_face_curvature(g, surf, 0.5 * surf.face_curvature)


def test_connection_text_roundtrip(rng):
    c = U1Connection(rng.uniform(-1, 1, 7))
    c2 = parse_connection(format_connection(c))
    np.testing.assert_array_equal(c.angle, c2.angle)
    s = SU2Connection(random_su2(rng, 3))
    s2 = parse_connection(format_connection(s))
    np.testing.assert_array_equal(s.matrix, s2.matrix)
