import numpy as np
import pytest
from hypothesis import given, strategies as st

from crsf.connection import GaugeTransform, SU2Connection, U1Connection, apply_gauge, random_su2
from crsf.graph import build_graph
from crsf.laplacian import (LaplacianError, assemble_laplacian, det_laplacian, green_function,
                            log_spanning_tree_count, spanning_tree_count, transfer_impedance,
                            transfer_impedance_table, z_lc0)
from crsf.oracle import count_spanning_trees_brute, random_fixture_graph

seeds = st.integers(0, 2 ** 32 - 1)


def test_cycle_determinant(triangle):
    for th in (0.0, 0.3, 2.0, np.pi):
        conn = U1Connection(np.array([th, 0.0, 0.0]))
        assert det_laplacian(assemble_laplacian(triangle, conn)).value == pytest.approx(
            2 - 2 * np.cos(th), abs=1e-12)


def test_matrix_tree_theorem(square_chord):
    assert spanning_tree_count(square_chord) == pytest.approx(8.0)
    assert count_spanning_trees_brute(square_chord) == 8.0
    assert log_spanning_tree_count(square_chord) == pytest.approx(np.log(8.0))


@given(seeds)
def test_matrix_tree_weighted(seed):
    g = random_fixture_graph(np.random.default_rng(seed))
    assert spanning_tree_count(g) == pytest.approx(count_spanning_trees_brute(g), rel=1e-10)


def test_disconnected_has_no_trees():
    g = build_graph([(0, 1), (2, 3)])
    assert spanning_tree_count(g) == 0.0
    assert log_spanning_tree_count(g) == -np.inf


@given(seeds)
def test_hermitian_and_gauge_covariant(seed):
    rng = np.random.default_rng(seed)
    g = random_fixture_graph(rng)
    conn = U1Connection(rng.uniform(-np.pi, np.pi, g.edge_count))
    L = assemble_laplacian(g, conn).matrix
    np.testing.assert_allclose(L, L.conj().T, atol=1e-14)
    s = rng.uniform(-np.pi, np.pi, g.vertex_count)
    L2 = assemble_laplacian(g, apply_gauge(conn, GaugeTransform(s), g)).matrix
    D = np.diag(np.exp(1j * s))
    np.testing.assert_allclose(L2, D @ L @ D.conj(), atol=1e-12)


@given(seeds)
def test_su2_laplacian_is_hermitian_psd(seed):
    rng = np.random.default_rng(seed)
    g = random_fixture_graph(rng)
    L = assemble_laplacian(g, SU2Connection(random_su2(rng, g.edge_count))).matrix
    np.testing.assert_allclose(L, L.conj().T, atol=1e-14)
    assert np.linalg.eigvalsh(L).min() > -1e-10


def test_dirichlet_rows_removed(square):
    L = assemble_laplacian(square, None, [0])
    assert L.dim == 3 and list(L.vertices) == [1, 2, 3]
    with pytest.raises(LaplacianError):
        green_function(square, [])


def test_transfer_impedance_on_square(square):
    # one edge of C4: parallel of 1 and 3 ohms
    assert transfer_impedance(square, 0, 0) == pytest.approx(0.75)
    T = transfer_impedance_table(square)
    np.testing.assert_allclose(T, T.T, atol=1e-14)
    # current through the other three edges is 1/4 each, directed the other way round
    np.testing.assert_allclose(T[0, 1:], [-0.25, -0.25, -0.25])


@given(seeds)
def test_transfer_impedance_ground_independent(seed):
    g = random_fixture_graph(np.random.default_rng(seed))
    T0 = transfer_impedance_table(g, ground=0)
    T1 = transfer_impedance_table(g, ground=g.vertex_count - 1)
    np.testing.assert_allclose(T0, T1, atol=1e-10)


@given(seeds)
def test_z_lc0_three_routes(seed):
    rng = np.random.default_rng(seed)
    g = random_fixture_graph(rng)
    conn = U1Connection(rng.uniform(-1.0, 1.0, g.edge_count))
    vals = [z_lc0(g, conn, r) for r in ("kkw", "limit", "enumerate")]
    assert vals[1] == pytest.approx(vals[0], rel=1e-6)
    assert vals[2] == pytest.approx(vals[0], rel=1e-9)


def test_z_lc0_flat_is_zero(square):
    # a pure gauge has theta = 0 on every cycle
    conn = U1Connection(np.array([0.5, 0.0, 0.0, -0.5]))
    assert abs(z_lc0(square, conn)) < 1e-12
    with pytest.raises(LaplacianError):
        z_lc0(square, conn, "nope")
