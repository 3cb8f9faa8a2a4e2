import numpy as np
import pytest

from surfepr.errors import ConfigError
from surfepr.geometry import ConductorNet, LayoutModel, Polygon, generate_cpc, generate_gcpw, rect
from surfepr.mesh import (RefinementConfig, SurfaceMesh, boundary_layer_refine, ear_clip, graded_ticks,
                          homogeneous_refine, refine, region_mesh, triangulate)
from surfepr.stackup import Stackup

L_SHAPE = Polygon([(0, 0), (30, 0), (30, 10), (10, 10), (10, 30), (0, 30)])


def _lshape_layout():
    return LayoutModel(Stackup.two_layer(11.9, 1.0), (ConductorNet("L", (L_SHAPE,)),))


def _total_area(m, k=None):
    return m.areas.sum() if k is None else m.net_area(k)


def test_ear_clip_covers_polygon():
    tris = ear_clip(L_SHAPE.array)
    a = L_SHAPE.array
    cross = lambda u, v: u[0] * v[1] - u[1] * v[0]
    area = sum(0.5 * abs(cross(a[j] - a[i], a[k] - a[i])) for i, j, k in tris)
    assert len(tris) == len(a) - 2
    assert area == pytest.approx(L_SHAPE.area, rel=1e-14)


def test_ear_clip_rejects_clockwise():
    with pytest.raises(ConfigError):
        ear_clip(L_SHAPE.array[::-1])


def test_graded_ticks():
    t = graded_ticks(0.0, 100.0, 2.0)
    assert t[0] == 0 and t[-1] == 100 and np.max(np.diff(t)) <= 2.0 + 1e-12
    g = graded_ticks(-500.0, 500.0, 2.0, focus=(-10.0, 10.0), growth=1.3, h_max=40.0)
    d = np.diff(g)
    inside = (g[:-1] >= -10) & (g[1:] <= 10)
    assert np.all(d[inside] <= 2.0 + 1e-12)
    assert d.max() <= 40.0 * 1.0001 and len(g) < 120
    b = graded_ticks(0.0, 10.0, 3.0, breaks=(4.2,))
    assert np.any(np.isclose(b, 4.2))


@pytest.mark.parametrize("levels, layers", [(0, 0), (1, 0), (0, 5), (2, 4)])
def test_area_conservation(levels, layers):
    lay = generate_cpc(10, 15, 400, 100)
    base = triangulate(lay, 6.0, aspect=3.0, focus=(-15, 15, -50, 50), growth=1.3, max_edge_far=30.0)
    m = refine(base, RefinementConfig(levels, layers, 2.0, 1e-3))
    for k, n in enumerate(lay.nets):
        assert abs(m.net_area(k) - n.area) <= 1e-9 * n.area
    assert np.all(m.areas > 0)


def test_area_conservation_non_rectangle():
    m = refine(triangulate(_lshape_layout(), 4.0), RefinementConfig(2, 6, 2.0, 1e-3))
    assert abs(_total_area(m) - L_SHAPE.area) <= 1e-9 * L_SHAPE.area


def test_outline_flags_cover_perimeter():
    for lay, perim in ((_lshape_layout(), 120.0), (generate_gcpw(5, 30, 25, L=200, L0=50, Wg=60), 1460.0)):
        m = triangulate(lay, 5.0)
        seg = m.boundary_edges()
        assert np.linalg.norm(seg[:, 1] - seg[:, 0], axis=1).sum() == pytest.approx(perim, rel=1e-12)
        m2 = refine(m, RefinementConfig(1, 3, 2.0, 0.01))
        seg = m2.boundary_edges()
        assert np.linalg.norm(seg[:, 1] - seg[:, 0], axis=1).sum() == pytest.approx(perim, rel=1e-12)


def test_window_edges_are_grid_lines():
    lay = generate_cpc(10, 15, 400, 100)
    m = triangulate(lay, 7.0, aspect=4.0)
    c = m.centroids
    y = m.tri[:, :, 1]
    straddle = (y.min(axis=1) < 50 - 1e-9) & (y.max(axis=1) > 50 + 1e-9)
    assert not np.any(straddle)
    assert np.all(np.abs(c[:, 2]) == 0)


def test_homogeneous_refine_levels_and_origin():
    base = triangulate(_lshape_layout(), 5.0)
    m = homogeneous_refine(base, 2)
    assert m.level.max() == 2
    kids = m.level == 2
    assert np.all(m.diameters[kids] <= base.diameters.max() / 4 * (1 + 1e-12))
    for o in np.unique(m.origin):
        assert m.areas[m.origin == o].sum() == pytest.approx(base.areas[o], rel=1e-12)


def test_boundary_layer_heights_follow_growth():
    base = triangulate(LayoutModel(Stackup.two_layer(2, 1), (ConductorNet("s", (rect(0, 0, 10, 10),)),)), 10.0)
    t1, r, n = 1e-3, 2.0, 6
    m = boundary_layer_refine(base, n, r, t1)
    sel = m.stack >= 0
    pos = m.stack_pos[sel]
    assert set(pos.tolist()) == set(range(n + 1))
    # vertices of the first strip sit on the outline or t1 inside it
    v = m.tri[sel & (m.stack_pos == 0), :, :2].reshape(-1, 2)
    d = np.minimum(np.minimum(v[:, 0], 10 - v[:, 0]), np.minimum(v[:, 1], 10 - v[:, 1]))
    assert np.all(np.isclose(d, 0, atol=1e-12) | (d >= t1 * (1 - 1e-9)))
    assert d[d > 1e-12].min() == pytest.approx(t1, rel=1e-9)
    cuts = RefinementConfig(0, n, r, t1).layer_heights()
    assert np.allclose(cuts[1:] / cuts[:-1], r)


def test_boundary_layer_overflow_message():
    base = triangulate(_lshape_layout(), 5.0)
    with pytest.raises(ConfigError, match="overflow"):
        boundary_layer_refine(base, 12, 2.0, 0.01)


def test_refinement_region_limits_work():
    lay = generate_cpc(10, 15, 400, 100)
    base = triangulate(lay, 6.0)
    full = refine(base, RefinementConfig(1, 2, 2.0, 1e-2))
    part = refine(base, RefinementConfig(1, 2, 2.0, 1e-2, region=(-20, 20, -50, 50)))
    assert base.n < part.n < full.n


def test_refinement_config_validation():
    with pytest.raises(ConfigError):
        RefinementConfig(-1, 0)
    with pytest.raises(ConfigError):
        RefinementConfig(0, 3, 1.0)
    assert RefinementConfig.for_thickness(3e-3).first_layer_height == pytest.approx(1e-3)


def test_mesh_text_round_trip(tmp_path):
    lay = generate_cpc(10, 15, 400, 100)
    m = refine(triangulate(lay, 8.0), RefinementConfig(1, 2, 2.0, 1e-2))
    p = tmp_path / "m.txt"
    m.save(p)
    back = SurfaceMesh.load(p, layout=lay)
    np.testing.assert_array_equal(back.tri, m.tri)
    np.testing.assert_array_equal(back.net, m.net)
    np.testing.assert_array_equal(back.bflag, m.bflag)
    assert back.net_names == tuple(lay.net_names)


def test_mesh_text_errors():
    with pytest.raises(ConfigError):
        SurfaceMesh.from_text("2\n0 0 0 1 0 0 0 1 0 0 0\n")
    with pytest.raises(ConfigError):  # clockwise
        SurfaceMesh.from_text("1\n0 0 0 0 1 0 1 0 0 0 0\n")


def test_region_mesh_area():
    regs = (rect(-10, -50, 10, 50),)
    m = region_mesh(regs, 0.0, 5.0, RefinementConfig(1, 3, 2.0, 1e-2))
    assert m.areas.sum() == pytest.approx(2000.0, rel=1e-12)
