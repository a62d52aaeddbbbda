"""Pose and quaternion helpers shared by the simulator, datasets and runtime.

A pose is a length-7 float64 array: position (x, y, z) followed by a unit
rotation quaternion (x, y, z, w). Boxes on the tabletop only ever rotate
about the vertical axis, so yaw<->quaternion conversions are used a lot.
"""

from __future__ import annotations

import math

import numpy as np

IDENTITY_QUAT = np.array([0.0, 0.0, 0.0, 1.0])


def make_pose(position, quat=None) -> np.ndarray:
    """Build a 7-vector pose from a position and an optional quaternion."""
    pose = np.zeros(7)
    pose[:3] = position
    pose[3:] = IDENTITY_QUAT if quat is None else quat
    return pose


def quat_from_yaw(yaw: float) -> np.ndarray:
    half = 0.5 * yaw
    return np.array([0.0, 0.0, math.sin(half), math.cos(half)])


def yaw_from_quat(q) -> float:
    """Rotation about +z encoded in q (exact for pure-yaw quaternions)."""
    return math.atan2(2.0 * (q[3] * q[2] + q[0] * q[1]),
                      1.0 - 2.0 * (q[1] * q[1] + q[2] * q[2]))


def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    norm = float(np.linalg.norm(q))
    if not norm > 0.0 or not np.isfinite(norm):
        raise ValueError("cannot normalize a zero or non-finite quaternion")
    return q / norm


def quat_multiply(a, b) -> np.ndarray:
    ax, ay, az, aw = a
    bx, by, bz, bw = b
    return np.array([
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
        aw * bw - ax * bx - ay * by - az * bz,
    ])


def quat_conjugate(q) -> np.ndarray:
    return np.array([-q[0], -q[1], -q[2], q[3]])


def rotate_vector(q, v) -> np.ndarray:
    """Rotate a 3-vector by a unit quaternion."""
    u = np.asarray(q[:3], dtype=float)
    w = float(q[3])
    return v + 2.0 * np.cross(u, np.cross(u, v) + w * np.asarray(v, dtype=float))


def quat_angle(a, b) -> float:
    """Geodesic angle between two unit quaternions (double cover folded)."""
    dot = abs(float(np.dot(a, b)))
    return 2.0 * math.acos(min(1.0, dot))


def slerp(q0, q1, frac: float) -> np.ndarray:
    """Spherical interpolation from q0 to q1 along the shorter arc."""
    q0 = np.asarray(q0, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    dot = float(np.dot(q0, q1))
    if dot < 0.0:
        q1 = -q1
        dot = -dot
    if dot > 1.0 - 1e-12:
        return quat_normalize(q0 + frac * (q1 - q0))
    theta = math.acos(min(1.0, dot))
    s = math.sin(theta)
    return quat_normalize((math.sin((1.0 - frac) * theta) / s) * q0
                          + (math.sin(frac * theta) / s) * q1)


def wrap_angle(angle: float) -> float:
    """Wrap into (-pi, pi]."""
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def wrap_half_angle(angle: float) -> float:
    """Wrap into (-pi/2, pi/2]; distance for 180-degree symmetric boxes."""
    wrapped = math.fmod(angle + 0.5 * math.pi, math.pi)
    if wrapped <= 0.0:
        wrapped += math.pi
    return wrapped - 0.5 * math.pi
