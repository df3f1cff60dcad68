import math
import random

import pytest

from mergesim.perception import (OrientedRect, PerceptionNoise,
                                 VehicleView, classify_vicinity,
                                 collision_index, index_from_separations,
                                 perceived_bounds, projection_gap,
                                 rects_intersect)
from mergesim.road import LaneGeometry

GEOMETRY = LaneGeometry()


# --- independent oracles -----------------------------------------------------


def corner_projection_gap(rect_a, rect_b, axis_index):
    """Oracle: project all four corners of both rectangles, measure the
    separation of the two intervals."""
    axis = rect_a.axes()[axis_index]
    proj_a = [c[0] * axis[0] + c[1] * axis[1] for c in rect_a.corners()]
    proj_b = [c[0] * axis[0] + c[1] * axis[1] for c in rect_b.corners()]
    lo_a, hi_a = min(proj_a), max(proj_a)
    lo_b, hi_b = min(proj_b), max(proj_b)
    return max(0.0, lo_b - hi_a, lo_a - hi_b)


def _segments(rect):
    c = rect.corners()
    order = [c[0], c[1], c[3], c[2]]  # walk the perimeter
    return list(zip(order, order[1:] + order[:1]))


def _segments_cross(p1, p2, p3, p4):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    d1, d2 = orient(p3, p4, p1), orient(p3, p4, p2)
    d3, d4 = orient(p1, p2, p3), orient(p1, p2, p4)
    return ((d1 > 0) != (d2 > 0) or abs(d1) < 1e-12 or abs(d2) < 1e-12) and \
           ((d3 > 0) != (d4 > 0) or abs(d3) < 1e-12 or abs(d4) < 1e-12)


def _point_inside(point, rect):
    (fx, fy), (lx, ly) = rect.axes()
    dx, dy = point[0] - rect.cx, point[1] - rect.cy
    return (abs(dx * fx + dy * fy) <= rect.half_length + 1e-12
            and abs(dx * lx + dy * ly) <= rect.half_width + 1e-12)


def polygons_intersect(rect_a, rect_b):
    """Oracle: convex quadrilaterals intersect iff an edge pair crosses or
    one contains a corner of the other."""
    for s1 in _segments(rect_a):
        for s2 in _segments(rect_b):
            if _segments_cross(s1[0], s1[1], s2[0], s2[1]):
                return True
    return (_point_inside(rect_a.corners()[0], rect_b)
            or _point_inside(rect_b.corners()[0], rect_a))


def random_rect(rng, span=10.0):
    return OrientedRect(cx=rng.uniform(-span, span), cy=rng.uniform(-span, span),
                        heading=rng.uniform(0, 2 * math.pi),
                        half_width=rng.uniform(0.2, 3.0),
                        half_length=rng.uniform(0.2, 3.0))


# --- perceived bounds --------------------------------------------------------


def test_perceived_bounds_endpoints():
    rect = OrientedRect(1.0, 2.0, 0.3, 0.9, 2.25)
    assert perceived_bounds(rect, 0.0) == rect
    grown = perceived_bounds(rect, 1.0)
    assert grown.half_width == pytest.approx(0.9 * 1.3)
    assert grown.half_length == pytest.approx(2.25 * 1.3)
    assert (grown.cx, grown.cy, grown.heading) == (1.0, 2.0, 0.3)
    mid = perceived_bounds(rect, 0.5)
    assert mid.half_width == pytest.approx(0.9 * 1.15)


def test_perceived_bounds_never_shrinks():
    rng = random.Random(5)
    for _ in range(200):
        rect = random_rect(rng)
        q = rng.random()
        grown = perceived_bounds(rect, q)
        assert grown.half_width >= rect.half_width
        assert grown.half_length >= rect.half_length


def test_perceived_bounds_rejects_bad_q():
    with pytest.raises(ValueError):
        perceived_bounds(OrientedRect(0, 0, 0, 1, 1), 1.5)


# --- projection gaps and the collision index ---------------------------------


def test_unit_squares_gap():
    a = OrientedRect(0.0, 0.0, 0.0, 0.5, 0.5)
    b = OrientedRect(3.0, 0.0, 0.0, 0.5, 0.5)
    # axis 1 is the width axis = across the road = the x direction here
    assert projection_gap(a, b, 1) == pytest.approx(2.0)
    assert projection_gap(a, b, 0) == pytest.approx(0.0)


def test_overlap_gives_zero_on_all_axes():
    a = OrientedRect(0.0, 0.0, 0.4, 1.0, 2.0)
    b = OrientedRect(0.5, 0.5, 1.2, 1.0, 2.0)
    for axis in (0, 1):
        assert projection_gap(a, b, axis) == 0.0
        assert projection_gap(b, a, axis) == 0.0
    assert collision_index(a, b) == 1.0


def test_projection_gap_matches_corner_oracle():
    rng = random.Random(11)
    for _ in range(1000):
        a, b = random_rect(rng), random_rect(rng)
        for axis in (0, 1):
            assert projection_gap(a, b, axis) == pytest.approx(
                corner_projection_gap(a, b, axis), abs=1e-12)


def test_collision_index_spot_values():
    assert index_from_separations(3.0, 4.0) == pytest.approx(
        math.exp(-math.sqrt(12.5)), abs=1e-12)
    assert index_from_separations(3.0, 4.0) == pytest.approx(0.0292, abs=1e-4)
    a = OrientedRect(0.0, 0.0, 0.0, 0.5, 0.5)
    b = OrientedRect(3.0, 0.0, 0.0, 0.5, 0.5)
    # both rectangles see gaps (2, 0): index exp(-2)
    assert collision_index(a, b) == pytest.approx(math.exp(-2.0), abs=1e-12)


def test_collision_index_limits():
    a = OrientedRect(0.0, 0.0, 0.0, 1.0, 2.0)
    far = OrientedRect(500.0, 500.0, 1.0, 1.0, 2.0)
    assert collision_index(a, far) < 1e-6
    assert collision_index(a, a) == 1.0


def test_index_one_iff_geometric_intersection():
    rng = random.Random(99)
    agree = 0
    for _ in range(10_000):
        a, b = random_rect(rng, span=6.0), random_rect(rng, span=6.0)
        touches = collision_index(a, b) == 1.0
        assert touches == rects_intersect(a, b)
        assert touches == polygons_intersect(a, b)
        agree += 1
    assert agree == 10_000


def test_rigid_motion_invariance():
    rng = random.Random(3)
    for _ in range(200):
        a, b = random_rect(rng), random_rect(rng)
        base = collision_index(a, b)
        dx, dy = rng.uniform(-50, 50), rng.uniform(-50, 50)
        phi = rng.uniform(0, 2 * math.pi)
        px, py = rng.uniform(-5, 5), rng.uniform(-5, 5)

        def moved(r):
            # Headings grow clockwise from +y, so a rotation by +phi pairs
            # with the clockwise rotation matrix in (x, y).
            cx, cy = r.cx - px, r.cy - py
            rx = cx * math.cos(phi) + cy * math.sin(phi) + px + dx
            ry = -cx * math.sin(phi) + cy * math.cos(phi) + py + dy
            return OrientedRect(rx, ry, r.heading + phi,
                                r.half_width, r.half_length)

        assert collision_index(moved(a), moved(b)) == pytest.approx(base, abs=1e-9)


def test_monotone_in_separation():
    a = OrientedRect(0.0, 0.0, 0.0, 0.9, 2.25)
    last = 1.0
    for d in [0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0]:
        b = OrientedRect(0.0, 4.5 + d, 0.0, 0.9, 2.25)
        value = collision_index(a, b)
        assert value <= last + 1e-12
        last = value


# --- vicinity classification -------------------------------------------------


def view(vid, x, y, v, heading=0.0, lane=None):
    from mergesim.road import lane_of
    return VehicleView(vid, x, y, v, heading, 4.5, 1.8,
                       lane_of(x, GEOMETRY) if lane is None else lane)


def test_alone_vehicle_has_empty_slots():
    vic = classify_vicinity("ego", [view("ego", 9.9, 10.0, 19.4)], GEOMETRY)
    for lane in vic.lanes():
        assert vic.leader(lane) is None
        assert vic.follower(lane) is None


def test_first_scenario_snapshot_slots():
    views = [
        view("vehicle1", 0.0, 30.0, 22.2),
        view("vehicle2", 3.3, 30.0, 22.2),
        view("vehicle3", 6.6, 30.0, 22.2),
        view("vehicle4", 6.6, 5.0, 22.2),
        view("vehicle5", 6.6, -10.0, 22.2),
        view("ego", 9.9, 10.0, 19.4),
    ]
    vic = classify_vicinity("ego", views, GEOMETRY)
    leader = vic.leader(2)
    follower = vic.follower(2)
    assert leader.vehicle_id == "vehicle3"
    assert leader.gap == pytest.approx(20.0 - 4.5)
    assert follower.vehicle_id == "vehicle4"
    assert follower.gap == pytest.approx(5.0 - 4.5)
    assert follower.rel_speed == pytest.approx(22.2 - 19.4)


def test_nearest_leader_wins():
    views = [view("ego", 6.6, 0.0, 20.0),
             view("near", 6.6, 30.0, 20.0),
             view("far", 6.6, 60.0, 20.0)]
    vic = classify_vicinity("ego", views, GEOMETRY)
    assert vic.leader(2).vehicle_id == "near"


def test_visibility_excludes_distant_vehicles():
    views = [view("ego", 6.6, 0.0, 20.0), view("ghost", 6.6, 200.0, 20.0)]
    vic = classify_vicinity("ego", views, GEOMETRY, visibility=100.0)
    assert vic.leader(2) is None


def test_boundary_recognition_straddles_lanes():
    views = [view("ego", 6.6, 0.0, 20.0), view("edge", 9.3, 20.0, 20.0)]
    plain = classify_vicinity("ego", views, GEOMETRY, observer_scale=1.0)
    assert plain.leader(2) is None          # squarely in the merge lane
    grown = classify_vicinity("ego", views, GEOMETRY, observer_scale=1.3)
    assert grown.leader(2).vehicle_id == "edge"  # magnified bounds straddle
    assert grown.leader(3).vehicle_id == "edge"  # still in its own lane too


def test_noise_is_seeded_and_clamped():
    views = [view("ego", 6.6, 0.0, 20.0), view("lead", 6.6, 10.0, 20.0)]
    noise_a = PerceptionNoise(random.Random(4), 1.0, 0.0)
    noise_b = PerceptionNoise(random.Random(4), 1.0, 0.0)
    ga = classify_vicinity("ego", views, GEOMETRY, noise=noise_a).leader(2).gap
    gb = classify_vicinity("ego", views, GEOMETRY, noise=noise_b).leader(2).gap
    assert ga == gb
    assert ga >= 0.0
    assert PerceptionNoise(random.Random(0), 1.0, 1.0).sigma == pytest.approx(0.5)
