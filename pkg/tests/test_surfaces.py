import numpy as np
import pytest
from hypothesis import given, strategies as st

from crsf.graph import simple_cycles
from crsf.surfaces import (SurfaceError, classify_cycle, enclosed_faces, format_surface, make_annulus,
                           make_hyperbolic_ball_grid, make_planar_grid, make_punctured_planar,
                           make_sphere_grid, make_surface, make_torus_grid, make_wired_cylinder,
                           parse_surface, sphere_rect_area)


def _faces_partition_oriented_edges(g, surf):
    seen = [oe for f in surf.faces for oe in f] + [oe for h in surf.holes for oe in h]
    assert len(seen) == len(set(seen))
    for f in surf.faces:
        for a, b in zip(f, f[1:] + f[:1]):
            assert g.head[a] == g.tail[b]


@given(st.integers(2, 7), st.integers(2, 7))
def test_torus_counts(n, m):
    g, surf = make_torus_grid(n, m)
    assert (g.vertex_count, g.edge_count, len(surf.faces)) == (n * m, 2 * n * m, n * m)
    assert g.vertex_count - g.edge_count + len(surf.faces) == surf.euler_char == 0
    assert surf.closed and surf.ncuts == 2
    _faces_partition_oriented_edges(g, surf)
    # every oriented edge is on exactly one face
    assert sum(len(f) for f in surf.faces) == 2 * g.edge_count


def test_torus_faces_are_contractible():
    g, surf = make_torus_grid(4, 4)
    for f in surf.faces:
        assert not classify_cycle(surf, f).any()
        assert enclosed_faces(g, surf, f) is not None
    row = [2 * e for e in range(4)]
    np.testing.assert_array_equal(classify_cycle(surf, row), [1, 0])
    assert enclosed_faces(g, surf, row) is None


def test_wired_cylinder_smallest():
    g, surf = make_wired_cylinder(3, 1)
    assert g.vertex_count == 4
    assert surf.boundary == frozenset([3])
    with pytest.raises(SurfaceError):
        make_wired_cylinder(2, 1)


def test_wired_cylinder_noncontractible_iff_winding():
    g, surf = make_wired_cylinder(4, 3)
    for c in simple_cycles(g, avoid=surf.boundary):
        w = classify_cycle(surf, c)[0]
        if w:
            assert enclosed_faces(g, surf, c) is None
        else:
            assert enclosed_faces(g, surf, c) is not None


def test_annulus():
    g, surf = make_annulus(5, 3)
    _faces_partition_oriented_edges(g, surf)
    assert len(surf.faces) == 10 and len(surf.holes) == 1


def test_sphere_gauss_bonnet():
    g, surf = make_sphere_grid(16)
    assert surf.total_curvature() == pytest.approx(4 * np.pi, abs=1e-8)
    # the cap is small
    assert 0 < surf.exterior_curvature <= 1e-3 * 4 * np.pi * (1 + 1e-9)
    with pytest.raises(SurfaceError):
        make_sphere_grid(3)


def test_sphere_face_matches_conformal_factor():
    # a large cap keeps the chart small, so faces are small
    g, surf = make_sphere_grid(41, cap_fraction=0.5)
    # face containing the chart origin is near the middle
    c = np.array([surf.positions[g.tail[f[0]]] for f in surf.faces])
    i = int(np.argmin(np.linalg.norm(c, axis=1)))
    x0, y0 = surf.positions[g.tail[surf.faces[i][0]]]
    h = surf.positions[1, 0] - surf.positions[0, 0]
    xc, yc = x0 + h / 2, y0 + h / 2
    approx = h * h * 4 / (1 + xc * xc + yc * yc) ** 2
    assert surf.face_curvature[i] == pytest.approx(approx, rel=1e-2)


def test_sphere_area_primitive_matches_quadrature():
    from scipy.integrate import dblquad
    ref, _ = dblquad(lambda y, x: 4 / (1 + x * x + y * y) ** 2, 0.2, 1.1, -0.5, 0.7)
    assert sphere_rect_area(0.2, 1.1, -0.5, 0.7) == pytest.approx(ref, rel=1e-10)


def test_hyperbolic_ball():
    r = 2.0
    g, surf = make_hyperbolic_ball_grid(r, 48)
    assert (surf.face_curvature < 0).all()
    area = 2 * np.pi * (np.cosh(r) - 1)
    tot = -surf.face_curvature.sum()
    # the grid misses a band along the circle, which carries most of the area
    assert 0.6 * area < tot < area
    assert surf.boundary
    with pytest.raises(SurfaceError):
        make_hyperbolic_ball_grid(-1.0, 8)


def test_hyperbolic_refinement_converges():
    r = 1.0
    area = 2 * np.pi * (np.cosh(r) - 1)
    errs = [area + make_hyperbolic_ball_grid(r, k)[1].face_curvature.sum() for k in (16, 64)]
    assert 0 < errs[1] < errs[0]


def test_puncture_winding():
    g, surf = make_punctured_planar((4, 4), [(1.5, 1.5)], 1)
    assert surf.ncuts == 1 and len(surf.holes) == 1
    hole = surf.holes[0]
    np.testing.assert_array_equal(classify_cycle(surf, hole), [1])
    assert enclosed_faces(g, surf, hole) is None
    rev = tuple(oe ^ 1 for oe in reversed(hole))
    np.testing.assert_array_equal(classify_cycle(surf, rev), [-1])
    with pytest.raises(SurfaceError):
        make_punctured_planar((4, 4), [(1.0, 1.5)], 1)


def region_boundary(g, faces):
    """Oriented boundary cycle of a simply connected union of faces."""
    oes = {oe for f in faces for oe in f}
    bd = [oe for oe in oes if oe ^ 1 not in oes]
    nxt = {int(g.tail[oe]): oe for oe in bd}
    cyc = [bd[0]]
    while len(cyc) < len(bd):
        cyc.append(nxt[int(g.head[cyc[-1]])])
    return cyc


def test_planar_enclosed_area():
    g, surf = make_planar_grid(4, 4)
    block = [0, 1, 3, 4]
    cyc = region_boundary(g, [surf.faces[i] for i in block])
    assert len(cyc) == 8
    assert enclosed_faces(g, surf, cyc) == block
    rev = [oe ^ 1 for oe in reversed(cyc)]
    assert enclosed_faces(g, surf, rev) == block


@pytest.mark.parametrize("kind,params", [
    ("torus", {"n": "3", "m": "4"}),
    ("cylinder_wired", {"n": "4", "m": "2"}),
    ("sphere", {"k": "6"}),
    ("planar_punctured", {"W": "4", "H": "3", "punctures": "1.5,1.5"}),
    ("hyperbolic_ball", {"radius": "1", "k": "9"}),
])
def test_surface_text_roundtrip(kind, params):
    g, surf = make_surface(kind, **params)
    s2 = parse_surface(format_surface(surf), g.edge_count)
    assert s2.kind == surf.kind and s2.faces == surf.faces and s2.holes == surf.holes
    np.testing.assert_array_equal(s2.face_curvature, surf.face_curvature)
    np.testing.assert_array_equal(s2.cut_crossings, surf.cut_crossings)
    assert s2.boundary == surf.boundary and s2.euler_char == surf.euler_char
    assert s2.total_curvature() == surf.total_curvature()


def test_unknown_kind():
    with pytest.raises(SurfaceError):
        make_surface("klein_bottle")
