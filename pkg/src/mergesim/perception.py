"""Vicinity recognition and rectangle-based collision possibility.

Vehicles are oriented rectangles in the road plane.  Collision possibility
between two rectangles is scored from the projection gaps along the four
separating-axis candidates: 1 on overlap, decaying exponentially toward 0
with separation.
"""

from dataclasses import dataclass, replace
import math
from typing import Optional


@dataclass(frozen=True)
class OrientedRect:
    cx: float           # center, lateral (m)
    cy: float           # center, longitudinal (m)
    heading: float      # rad, 0 = pointing down the road (+y)
    half_width: float
    half_length: float

    def axes(self):
        """Unit length-axis and width-axis as (x, y) vectors."""
        s, c = math.sin(self.heading), math.cos(self.heading)
        return (s, c), (c, -s)

    def corners(self):
        (fx, fy), (lx, ly) = self.axes()
        hl, hw = self.half_length, self.half_width
        return [
            (self.cx + fx * hl + lx * hw, self.cy + fy * hl + ly * hw),
            (self.cx + fx * hl - lx * hw, self.cy + fy * hl - ly * hw),
            (self.cx - fx * hl + lx * hw, self.cy - fy * hl + ly * hw),
            (self.cx - fx * hl - lx * hw, self.cy - fy * hl - ly * hw),
        ]


def perceived_bounds(rect: OrientedRect, observer_q: float,
                     max_scale: float = 1.3) -> OrientedRect:
    """Rectangle as recognized by an observer of given aggressiveness.

    Both half extents grow linearly with q, from exact bounds at q=0 to
    max_scale at q=1; the center and heading are unchanged.
    """
    if not 0.0 <= observer_q <= 1.0:
        raise ValueError(f"observer aggressiveness must be in [0, 1], got {observer_q!r}")
    scale = 1.0 + (max_scale - 1.0) * observer_q
    return replace(rect, half_width=rect.half_width * scale,
                   half_length=rect.half_length * scale)


def _extent_along(rect: OrientedRect, axis) -> float:
    """Half-extent of the rectangle's projection onto a unit axis."""
    (fx, fy), (lx, ly) = rect.axes()
    ax, ay = axis
    return (rect.half_length * abs(fx * ax + fy * ay)
            + rect.half_width * abs(lx * ax + ly * ay))


def projection_gap(rect_a: OrientedRect, rect_b: OrientedRect,
                   axis_index: int) -> float:
    """Separation of the two projected intervals along one of rect_a's axes.

    Zero when the projections overlap, otherwise the positive distance
    between the intervals.  axis_index 0 selects rect_a's length axis,
    1 its width axis.
    """
    axis = rect_a.axes()[axis_index]
    extent_a = rect_a.half_length if axis_index == 0 else rect_a.half_width
    extent_b = _extent_along(rect_b, axis)
    centers = abs((rect_b.cx - rect_a.cx) * axis[0]
                  + (rect_b.cy - rect_a.cy) * axis[1])
    return max(0.0, centers - extent_a - extent_b)


def rect_gap_norm(rect_a: OrientedRect, rect_b: OrientedRect) -> float:
    """Euclidean norm of the two projection gaps measured on rect_a's axes."""
    return math.hypot(projection_gap(rect_a, rect_b, 0),
                      projection_gap(rect_a, rect_b, 1))


def index_from_separations(gap_a: float, gap_b: float) -> float:
    """Collision possibility from the two per-rectangle aggregate gaps."""
    return math.exp(-math.sqrt((gap_a * gap_a + gap_b * gap_b) / 2.0))


def collision_index(rect_a: OrientedRect, rect_b: OrientedRect) -> float:
    """Collision possibility in [0, 1]: 1 iff the rectangles overlap."""
    return index_from_separations(rect_gap_norm(rect_a, rect_b),
                                  rect_gap_norm(rect_b, rect_a))


def rects_intersect(rect_a: OrientedRect, rect_b: OrientedRect) -> bool:
    """True geometric overlap (separating-axis test on all four axes)."""
    return (projection_gap(rect_a, rect_b, 0) == 0.0
            and projection_gap(rect_a, rect_b, 1) == 0.0
            and projection_gap(rect_b, rect_a, 0) == 0.0
            and projection_gap(rect_b, rect_a, 1) == 0.0)


@dataclass(frozen=True)
class VehicleView:
    """Immutable per-vehicle record of a world snapshot."""
    vehicle_id: str
    x: float
    y: float
    v: float
    heading: float
    length: float
    width: float
    lane: int
    kind: str = "scripted"
    q: Optional[float] = None

    def rect(self) -> OrientedRect:
        return OrientedRect(self.x, self.y, self.heading,
                            self.width / 2.0, self.length / 2.0)


@dataclass(frozen=True)
class Neighbor:
    vehicle_id: str
    gap: float        # bumper-to-bumper (m), floored at 0
    rel_speed: float  # neighbor speed minus ego speed (m/s)


class Vicinity:
    """Nearest leading/following vehicle per lane around an ego vehicle."""

    def __init__(self, slots):
        self._slots = slots  # lane -> (leader, follower)

    def leader(self, lane: int) -> Optional[Neighbor]:
        return self._slots.get(lane, (None, None))[0]

    def follower(self, lane: int) -> Optional[Neighbor]:
        return self._slots.get(lane, (None, None))[1]

    def lanes(self):
        return sorted(self._slots)


def bumper_gap(a: VehicleView, b: VehicleView) -> float:
    return max(0.0, abs(a.y - b.y) - (a.length + b.length) / 2.0)


def lateral_reach(view: VehicleView, scale: float = 1.0) -> float:
    """Half-extent of the (optionally magnified) rectangle across the road."""
    return (scale * view.width / 2.0 * abs(math.cos(view.heading))
            + scale * view.length / 2.0 * abs(math.sin(view.heading)))


class PerceptionNoise:
    """Seeded additive gap noise; sigma shrinks with observer aggressiveness."""

    def __init__(self, rng, sigma0: float, observer_q: float):
        self.rng = rng
        self.sigma = sigma0 * (1.0 - 0.5 * observer_q)

    def perturb(self, gap: float) -> float:
        return max(0.0, gap + self.rng.gauss(0.0, self.sigma))


def classify_vicinity(ego_id: str, views, geometry, *,
                      visibility: float = 100.0,
                      observer_scale: float = 1.0,
                      noise: Optional[PerceptionNoise] = None) -> Vicinity:
    """Partition surrounding vehicles into per-lane leader/follower slots.

    A vehicle registers in its own lane and, when observer_scale > 1, in
    any lane its magnified rectangle laterally overlaps (boundary
    recognition of straddling vehicles).  The nearest qualifying vehicle
    ahead/behind per lane wins the slot; anything farther than the
    visibility range is ignored.
    """
    ego = next(v for v in views if v.vehicle_id == ego_id)
    half_band = geometry.lane_width / 2.0
    best = {}  # (lane, is_leader) -> (gap, view)
    for other in views:
        if other.vehicle_id == ego_id:
            continue
        gap = bumper_gap(ego, other)
        if gap > visibility:
            continue
        lanes = {other.lane}
        if observer_scale > 1.0 or abs(other.heading) > 1e-9:
            reach = lateral_reach(other, observer_scale)
            for lane, center in enumerate(geometry.centers):
                if abs(other.x - center) <= half_band + reach:
                    lanes.add(lane)
        is_leader = other.y > ego.y
        for lane in lanes:
            key = (lane, is_leader)
            if key not in best or gap < best[key][0]:
                best[key] = (gap, other)
    slots = {}
    for lane in range(len(geometry.centers)):
        entries = []
        for is_leader in (True, False):
            hit = best.get((lane, is_leader))
            if hit is None:
                entries.append(None)
            else:
                gap, other = hit
                if noise is not None:
                    gap = noise.perturb(gap)
                entries.append(Neighbor(other.vehicle_id, gap, other.v - ego.v))
        slots[lane] = tuple(entries)
    return Vicinity(slots)
