"""Attitude geometry: Euler rotations, panel normal, view angles, incidence.

The airframe attitude is a roll/pitch/yaw triple composed in ZYX order,
R = Rz(yaw) @ Ry(pitch) @ Rx(roll).  The reflecting panel hangs under the
airframe facing down, i.e. along -z in the body frame, so its world-frame
normal is -R[:, 2].  The incidence cosine between a signal direction and
that normal is what gates and scales the panel gain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class EulerAngles:
    """Roll, pitch, yaw in radians."""

    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.roll, self.pitch, self.yaw])


@dataclass(frozen=True)
class AngleOfView:
    """Azimuth/elevation of one node as seen along the ray toward the panel."""

    azimuth: float
    elevation: float


def rotation_matrix(e: EulerAngles) -> np.ndarray:
    """World-from-body rotation, Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    cr, sr = np.cos(e.roll), np.sin(e.roll)
    cp, sp = np.cos(e.pitch), np.sin(e.pitch)
    cy, sy = np.cos(e.yaw), np.sin(e.yaw)
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, -sr], [0.0, sr, cr]])
    ry = np.array([[cp, 0.0, sp], [0.0, 1.0, 0.0], [-sp, 0.0, cp]])
    rz = np.array([[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]])
    return rz @ ry @ rx


def surface_normal(e: EulerAngles) -> np.ndarray:
    """Unit normal of the downward-facing panel in world coordinates."""
    return rotation_matrix(e) @ np.array([0.0, 0.0, -1.0])


def azimuth_elevation(source: np.ndarray, aris: np.ndarray) -> AngleOfView:
    """View angles of the ray from ``source`` up to the panel at ``aris``.

    Elevation is arcsin(dz/d); azimuth is atan2(dy, dx), with the vertical
    ray assigned azimuth 0 (the atan2(0, 0) convention).
    """
    diff = np.asarray(aris, dtype=float) - np.asarray(source, dtype=float)
    dist = np.linalg.norm(diff)
    if dist == 0.0:
        raise ValueError("source and panel positions coincide")
    elevation = np.arcsin(np.clip(diff[2] / dist, -1.0, 1.0))
    azimuth = np.arctan2(diff[1], diff[0])
    return AngleOfView(azimuth=float(azimuth), elevation=float(elevation))


def direction_vector(a: AngleOfView) -> np.ndarray:
    """Unit vector [cos(el)cos(az), cos(el)sin(az), sin(el)]."""
    cb = np.cos(a.elevation)
    return np.array([cb * np.cos(a.azimuth), cb * np.sin(a.azimuth), np.sin(a.elevation)])


def incidence_cosine(e: EulerAngles, a: AngleOfView) -> float:
    """Cosine of the angle between a signal ray and the panel normal.

    Computed as (-normal) . direction, i.e. the third column of the rotation
    matrix dotted with the ray direction.  Positive values mean the node lies
    in the served half-space of the panel; at level attitude this reduces to
    sin(elevation).
    """
    boresight = rotation_matrix(e)[:, 2]  # = -surface_normal(e)
    return float(boresight @ direction_vector(a))


def wrap_angle(angle: float) -> float:
    """Map an angle to [0, 2*pi)."""
    wrapped = float(np.mod(angle, TWO_PI))
    return 0.0 if wrapped == TWO_PI else wrapped
