"""Planar two-wheel (bicycle) vehicle model with fixed-step RK4 integration.

Road frame convention: ``y`` runs along the road (direction of travel),
``x`` runs across it (lane centers live on the x axis).  A heading of 0
means the vehicle points straight down the road; positive heading swings
the nose toward +x.
"""

from dataclasses import dataclass, replace
import math

GRAVITY = 9.81  # m/s^2

# Below this forward speed the slip-angle model is meaningless (it divides
# by v_long), so lateral dynamics are frozen instead of evaluated.
LOW_SPEED_FLOOR = 0.1


@dataclass(frozen=True)
class VehicleState:
    x: float = 0.0         # lateral position (m)
    y: float = 0.0         # longitudinal position (m)
    heading: float = 0.0   # rad, 0 = straight ahead
    v_long: float = 0.0    # forward speed (m/s)
    v_lat: float = 0.0     # body-frame lateral speed (m/s)
    yaw_rate: float = 0.0  # rad/s

    @property
    def speed(self) -> float:
        return math.hypot(self.v_long, self.v_lat)


@dataclass(frozen=True)
class VehicleParams:
    mass: float = 1500.0               # kg
    yaw_inertia: float = 2500.0        # kg m^2
    dist_front: float = 1.2            # front axle to CG (m)
    dist_rear: float = 1.6             # rear axle to CG (m)
    corner_stiff_front: float = -60000.0  # N/rad; negative sign keeps the plant stable
    corner_stiff_rear: float = -60000.0
    width: float = 1.8                 # m
    length: float = 4.5                # m
    understeer_gradient: float = 2.0   # deg/g

    @property
    def wheelbase(self) -> float:
        return self.dist_front + self.dist_rear

    @property
    def diagonal(self) -> float:
        return math.hypot(self.length, self.width)


@dataclass(frozen=True)
class Controls:
    accel: float = 0.0  # commanded longitudinal acceleration (m/s^2)
    steer: float = 0.0  # steering angle (rad)


def lateral_matrices(params: VehicleParams, v_long: float):
    """State matrix A and input column B of the lateral dynamics at v_long."""
    cf = params.corner_stiff_front
    cr = params.corner_stiff_rear
    lf = params.dist_front
    lr = params.dist_rear
    m = params.mass
    iz = params.yaw_inertia
    a11 = (cf + cr) / (m * v_long)
    a12 = (-lf * cf + lr * cr) / (m * v_long) - v_long
    a21 = (lf * cf - lr * cr) / (iz * v_long)
    a22 = (-lf * lf * cf + lr * lr * cr) / (iz * v_long)
    b1 = cf / m
    b2 = lf * cf / iz
    return ((a11, a12), (a21, a22)), (b1, b2)


def lateral_derivative(state: VehicleState, params: VehicleParams, steer: float):
    """Time derivatives (dv_lat, dyaw_rate) of the lateral states.

    Frozen (returns zeros) when v_long is at or below LOW_SPEED_FLOOR.
    """
    if state.v_long <= LOW_SPEED_FLOOR:
        return 0.0, 0.0
    ((a11, a12), (a21, a22)), (b1, b2) = lateral_matrices(params, state.v_long)
    dv_lat = a11 * state.v_lat + a12 * state.yaw_rate + b1 * steer
    dr = a21 * state.v_lat + a22 * state.yaw_rate + b2 * steer
    return dv_lat, dr


def pose_derivative(state: VehicleState):
    """Pose rates (dy_long, dx_lat, dheading) from speed magnitude and heading."""
    v = state.speed
    return v * math.cos(state.heading), v * math.sin(state.heading), state.yaw_rate


def _derivative(state: VehicleState, params: VehicleParams, controls: Controls):
    dy, dx, dheading = pose_derivative(state)
    dv_lat, dr = lateral_derivative(state, params, controls.steer)
    # Never drive v_long below zero.
    dv_long = controls.accel
    if state.v_long <= 0.0 and dv_long < 0.0:
        dv_long = 0.0
    return (dx, dy, dheading, dv_long, dv_lat, dr)


def step(state: VehicleState, params: VehicleParams, controls: Controls,
         dt: float) -> VehicleState:
    """One classical fourth-order fixed step of the full vehicle model."""
    if not (math.isfinite(controls.accel) and math.isfinite(controls.steer)):
        raise ValueError("non-finite controls")
    if dt < 0:
        raise ValueError("dt must be non-negative")
    if dt == 0.0:
        return state

    def plus(s: VehicleState, d, h):
        return VehicleState(
            x=s.x + d[0] * h, y=s.y + d[1] * h, heading=s.heading + d[2] * h,
            v_long=s.v_long + d[3] * h, v_lat=s.v_lat + d[4] * h,
            yaw_rate=s.yaw_rate + d[5] * h)

    k1 = _derivative(state, params, controls)
    k2 = _derivative(plus(state, k1, dt / 2.0), params, controls)
    k3 = _derivative(plus(state, k2, dt / 2.0), params, controls)
    k4 = _derivative(plus(state, k3, dt), params, controls)
    sixth = dt / 6.0
    out = VehicleState(
        x=state.x + sixth * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
        y=state.y + sixth * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
        heading=state.heading + sixth * (k1[2] + 2 * k2[2] + 2 * k3[2] + k4[2]),
        v_long=state.v_long + sixth * (k1[3] + 2 * k2[3] + 2 * k3[3] + k4[3]),
        v_lat=state.v_lat + sixth * (k1[4] + 2 * k2[4] + 2 * k3[4] + k4[4]),
        yaw_rate=state.yaw_rate + sixth * (k1[5] + 2 * k2[5] + 2 * k3[5] + k4[5]))
    if out.v_long < 0.0:
        out = replace(out, v_long=0.0, v_lat=0.0, yaw_rate=0.0)
    return out
