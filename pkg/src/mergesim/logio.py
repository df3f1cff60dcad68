"""Atomic text output and trajectory-file parsing."""

import os
import tempfile

from .world import TRAJECTORY_COLUMNS


class TrajectoryFileError(ValueError):
    """Malformed trajectory file; carries the offending line number."""

    def __init__(self, line_number: int, message: str):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


def write_atomic(path: str, text: str) -> None:
    """Write via a temp file and rename, so readers never see partial files."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_trajectory(path: str):
    """Rows of a trajectory CSV as dicts with typed fields."""
    rows = []
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise TrajectoryFileError(1, "empty file")
    header = lines[0].split(",")
    if tuple(header) != TRAJECTORY_COLUMNS:
        raise TrajectoryFileError(1, f"unexpected header {lines[0]!r}")
    for number, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != len(TRAJECTORY_COLUMNS):
            raise TrajectoryFileError(
                number, f"expected {len(TRAJECTORY_COLUMNS)} fields, got {len(parts)}")
        try:
            rows.append({
                "t": float(parts[0]), "id": parts[1],
                "x_lat": float(parts[2]), "y_long": float(parts[3]),
                "v": float(parts[4]), "theta": float(parts[5]),
                "lane": int(parts[6]), "maneuver": parts[7],
                "accel_directive": parts[8], "competing_id": parts[9],
                "i_col": float(parts[10]), "flags": parts[11],
            })
        except ValueError as exc:
            raise TrajectoryFileError(number, str(exc))
    return rows
