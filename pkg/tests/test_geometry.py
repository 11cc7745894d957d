import math

import numpy as np
import pytest

import fraclab as fl
from fraclab.errors import NoInteriorNodes, OutsideUnitBall

from conftest import rng_for


def test_build_grid_unit_ball_box_and_classes():
    dom = fl.ConvexDomain.ball(1.0)
    grid = fl.build_grid(dom, 0.1, pad=4)
    assert grid.L == pytest.approx(1.4)
    pts = grid.node_points()
    inside = (pts ** 2).sum(axis=1) < 1.0
    assert np.array_equal(inside.reshape(grid.shape), grid.is_interior)
    assert grid.num_interior > 0


def test_build_grid_too_coarse_raises():
    dom = fl.ConvexDomain.ball(1.0)
    with pytest.raises(NoInteriorNodes):
        fl.build_grid(dom, 3.0, pad=4)


def test_build_grid_ellipse_count_matches_scan():
    dom = fl.ConvexDomain.ellipse(1.0, 0.5)
    grid = fl.build_grid(dom, 0.05)
    pts = grid.node_points()
    scan = ((pts[:, 0] / 1.0) ** 2 + (pts[:, 1] / 0.5) ** 2 < 1.0).sum()
    assert grid.num_interior == scan


def test_box_margin_invariant():
    for h in (0.07, 0.1, 0.13):
        grid = fl.build_grid(fl.ConvexDomain.ellipse(1.3, 0.6), h)
        assert grid.L >= 1.3 + 4 * h - 1e-12


def test_inner_ball_radius_values():
    assert fl.inner_ball_radius(fl.ConvexDomain.ball(1.0)) == pytest.approx(1.0)
    assert fl.inner_ball_radius(fl.ConvexDomain.ellipse(1.0, 0.5)) == pytest.approx(0.25)
    assert fl.inner_ball_radius(fl.ConvexDomain.ellipse(2.0, 2.0)) == pytest.approx(2.0)


def test_inner_ball_monotone_in_b():
    radii = [fl.inner_ball_radius(fl.ConvexDomain.ellipse(1.0, b))
             for b in (0.9, 0.7, 0.5, 0.3)]
    assert all(r1 > r2 for r1, r2 in zip(radii, radii[1:]))


@pytest.mark.parametrize("dom", [
    fl.ConvexDomain.ball(1.0),
    fl.ConvexDomain.ellipse(1.0, 0.5),
    fl.ConvexDomain.ellipse(1.5, 0.9, rotation=0.4),
])
def test_osculating_balls_stay_inside(dom):
    # every inner ball B_R(z - R nu(z)) keeps all boundary points at
    # distance >= R, i.e. the ball does not poke out of the domain
    R = fl.inner_ball_radius(dom)
    angles = np.linspace(0.0, 2.0 * math.pi, 360, endpoint=False)
    z = dom.boundary_points(angles)
    nu = dom.outward_normal(angles)
    centers = z - R * nu
    d2 = ((z[None, :, :] - centers[:, None, :]) ** 2).sum(axis=2)
    assert np.sqrt(d2.min()) >= R - 1e-12


def test_strict_convexity_segments():
    rng = rng_for("convexity")
    for dom in (fl.ConvexDomain.ball(1.0), fl.ConvexDomain.ellipse(1.2, 0.4, rotation=0.7)):
        a1 = rng.random(1000) * 2 * math.pi
        a2 = a1 + 0.05 + rng.random(1000) * (2 * math.pi - 0.1)
        p, q = dom.boundary_points(a1), dom.boundary_points(a2)
        for t in (0.25, 0.5, 0.75):
            assert dom.contains(t * p + (1 - t) * q).all()


def test_nearest_boundary_ball():
    dom = fl.ConvexDomain.ball(1.0)
    pts = np.array([[0.5, 0.0], [0.0, -0.25]])
    proj, dist = dom.nearest_boundary(pts)
    assert dist == pytest.approx([0.5, 0.75])
    assert proj == pytest.approx(np.array([[1.0, 0.0], [0.0, -1.0]]))


def test_nearest_boundary_ellipse_interior():
    dom = fl.ConvexDomain.ellipse(1.0, 0.5)
    rng = rng_for("nearest")
    t = rng.random(200) * 2 * math.pi
    r = np.sqrt(rng.random(200)) * 0.95
    pts = np.column_stack([r * np.cos(t), 0.5 * r * np.sin(t)])
    proj, dist = dom.nearest_boundary(pts)
    assert np.abs(dom.level(proj)).max() < 1e-9
    # distance is a true minimum against a dense boundary sampling
    bd = dom.boundary_points(np.linspace(0, 2 * math.pi, 4000, endpoint=False))
    dense = np.sqrt(((pts[:, None, :] - bd[None, :, :]) ** 2).sum(axis=2)).min(axis=1)
    assert np.all(dist <= dense + 1e-6)


def test_barrier_geom_center():
    geo = fl.barrier_geom((0.0, 0.0), (0.7, 0.3))
    assert geo.d == pytest.approx(1.0)
    assert geo.t0 == pytest.approx(-1.0)
    assert geo.t1 == pytest.approx(1.0)


def test_barrier_geom_hand_quadratic():
    geo = fl.barrier_geom((0.5, 0.0), (1.0, 0.0))
    assert geo.t0 == pytest.approx(-1.5)
    assert geo.t1 == pytest.approx(0.5)
    assert geo.t0 * geo.t1 == pytest.approx(-geo.d, abs=1e-12)


def test_barrier_geom_orthogonal_symmetry():
    geo = fl.barrier_geom((0.5, 0.0), (0.0, 1.0))
    assert geo.mu == pytest.approx(0.0)
    assert geo.t1 == pytest.approx(math.sqrt(0.75))
    assert geo.t0 == pytest.approx(-geo.t1)


def test_barrier_geom_root_product_random():
    rng = rng_for("roots")
    for _ in range(1000):
        r = math.sqrt(rng.random()) * 0.999
        a = rng.random() * 2 * math.pi
        x = (r * math.cos(a), r * math.sin(a))
        th = rng.random() * 2 * math.pi
        geo = fl.barrier_geom(x, (math.cos(th), math.sin(th)))
        assert abs(geo.t0 * geo.t1 + geo.d) < 1e-10
        p0 = geo.t0 ** 2 + 2 * (x[0] * geo.theta[0] + x[1] * geo.theta[1]) * geo.t0 - geo.d
        p1 = geo.t1 ** 2 + 2 * (x[0] * geo.theta[0] + x[1] * geo.theta[1]) * geo.t1 - geo.d
        assert abs(p0) < 1e-10 and abs(p1) < 1e-10


def test_barrier_geom_rejects_exterior():
    with pytest.raises(OutsideUnitBall):
        fl.barrier_geom((1.0, 0.0), (1.0, 0.0))


def test_domain_serialization_roundtrip():
    dom = fl.ConvexDomain.ellipse(1.2, 0.8, center=(0.1, -0.2), rotation=0.3)
    again = fl.ConvexDomain.from_dict(dom.to_dict())
    assert again == dom
