"""Straight multi-lane road with one ending merge lane."""

from dataclasses import dataclass
from typing import Tuple


@dataclass(frozen=True)
class LaneGeometry:
    """Lane centers across the road; the merge lane is the last entry.

    The merge entrance spans [merge_start, merge_start + entrance_length];
    the extension beyond it exists only to finish an already-started merge.
    """
    centers: Tuple[float, ...] = (0.0, 3.3, 6.6, 9.9)
    lane_width: float = 3.3
    merge_start: float = 50.0
    entrance_length: float = 100.0
    extension: float = 20.0

    def __post_init__(self):
        if list(self.centers) != sorted(self.centers):
            raise ValueError("lane centers must be strictly increasing")
        if len(set(self.centers)) != len(self.centers):
            raise ValueError("lane centers must be distinct")
        if self.entrance_length <= 0:
            raise ValueError("entrance_length must be positive")

    @property
    def merge_lane(self) -> int:
        return len(self.centers) - 1

    @property
    def mainline_lanes(self) -> range:
        return range(len(self.centers) - 1)

    @property
    def merge_target_lane(self) -> int:
        """Mainline lane adjacent to the merge lane."""
        return len(self.centers) - 2

    @property
    def entrance_end(self) -> float:
        return self.merge_start + self.entrance_length

    @property
    def hard_end(self) -> float:
        return self.entrance_end + self.extension


def lane_of(x: float, geometry: LaneGeometry) -> int:
    """Lane whose center is nearest; exact midpoints round to the lower index."""
    best = 0
    best_dist = abs(x - geometry.centers[0])
    for i in range(1, len(geometry.centers)):
        d = abs(x - geometry.centers[i])
        if d < best_dist - 1e-9:
            best = i
            best_dist = d
    return best


def distance_to_merge_end(view, geometry: LaneGeometry) -> float:
    """Remaining meters of merge entrance ahead of a merge-lane vehicle."""
    if view.lane != geometry.merge_lane:
        raise ValueError(f"{view.vehicle_id}: not in the merge lane")
    return max(0.0, geometry.entrance_end - view.y)
