"""Quadrotor translational dynamics at fixed altitude.

The vehicle holds altitude by balancing gravity along the tilted thrust
axis, so total thrust is m*g / (cos(roll)*cos(pitch)) and the horizontal
thrust components follow the third column of the attitude rotation matrix.
Quadratic drag opposes each velocity component.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import EulerAngles, rotation_matrix, wrap_angle


@dataclass(frozen=True)
class AirframeParams:
    mass: float = 3.0                 # kg
    gravity: float = 9.81             # m/s^2
    thrust_coeff: float = 4.848e-5    # N/(rad/s)^2
    drag_x: float = 0.11              # N/(m/s)^2
    drag_y: float = 0.11
    drag_z: float = 0.2
    frame_size: float = 0.3           # m

    def __post_init__(self):
        for name in ("mass", "gravity", "thrust_coeff", "drag_x", "drag_y",
                     "drag_z", "frame_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")


@dataclass
class UavState:
    """Kinematic and bookkeeping state of one vehicle at one time slot."""

    position: np.ndarray              # (3,), z fixed at the flight altitude
    velocity: np.ndarray              # (2,), planar
    euler: EulerAngles
    energy_remaining: float           # J
    rate_cum: float = 0.0             # accumulated sum-rate, bits/s/Hz

    def copy(self) -> "UavState":
        return UavState(
            position=self.position.copy(),
            velocity=self.velocity.copy(),
            euler=self.euler,
            energy_remaining=self.energy_remaining,
            rate_cum=self.rate_cum,
        )


def _check_attitude(e: EulerAngles):
    if abs(e.roll) >= np.pi / 2 or abs(e.pitch) >= np.pi / 2:
        raise ValueError("roll/pitch at +-pi/2 puts the thrust balance at a singularity")


def total_thrust(e: EulerAngles, p: AirframeParams) -> float:
    """Thrust needed to hold altitude at the given attitude (>= m*g)."""
    _check_attitude(e)
    return p.mass * p.gravity / (np.cos(e.roll) * np.cos(e.pitch))


def rotor_speed(e: EulerAngles, p: AirframeParams) -> float:
    """Common angular velocity of the four rotors, rad/s."""
    _check_attitude(e)
    return float(np.sqrt(
        p.mass * p.gravity / (4.0 * p.thrust_coeff * np.cos(e.roll) * np.cos(e.pitch))
    ))


def planar_acceleration(e: EulerAngles, v, p: AirframeParams):
    """x/y acceleration from tilted thrust plus quadratic drag.

    The thrust acts along the body z axis, i.e. the third column of the
    rotation matrix, so the horizontal components are g * R[:2, 2] / (cos
    roll * cos pitch); drag is -C_d * v * |v| / m per axis.
    """
    _check_attitude(e)
    boresight = rotation_matrix(e)[:, 2]
    scale = p.gravity / (np.cos(e.roll) * np.cos(e.pitch))
    vx, vy = float(v[0]), float(v[1])
    ax = scale * boresight[0] - p.drag_x * vx * abs(vx) / p.mass
    ay = scale * boresight[1] - p.drag_y * vy * abs(vy) / p.mass
    return np.array([ax, ay])


def step_kinematics(s: UavState, a, dt: float) -> UavState:
    """Constant-acceleration update: v' = v + a*dt, q' = q + v*dt + a*dt^2/2."""
    if dt <= 0:
        raise ValueError("time step must be positive")
    a = np.asarray(a, dtype=float)
    new_v = s.velocity + a * dt
    new_q = s.position.copy()
    new_q[:2] = s.position[:2] + s.velocity * dt + 0.5 * a * dt * dt
    out = s.copy()
    out.position = new_q
    out.velocity = new_v
    return out


def apply_angle_variation(
    e: EulerAngles,
    delta,
    roll_max: float = np.pi / 4,
    pitch_max: float = np.pi / 4,
) -> EulerAngles:
    """Apply a per-slot attitude variation with safety clamping.

    Roll and pitch are clamped to their safety margins; yaw wraps to
    [0, 2*pi).  Variation magnitudes are bounded upstream by action scaling.
    """
    droll, dpitch, dyaw = (float(x) for x in delta)
    return EulerAngles(
        roll=float(np.clip(e.roll + droll, -roll_max, roll_max)),
        pitch=float(np.clip(e.pitch + dpitch, -pitch_max, pitch_max)),
        yaw=wrap_angle(e.yaw + dyaw),
    )
