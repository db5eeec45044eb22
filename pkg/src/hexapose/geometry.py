"""Rigid transforms and 6-DOF pose vectors.

Rotations use the fixed-axis X-Y-Z (roll-pitch-yaw) convention::

    R = Rz(rz) @ Ry(ry) @ Rx(rx)

Lengths are millimetres, angles radians. Degrees only appear at I/O
boundaries (see :mod:`hexapose.io`).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GimbalLockError

EULER_CONVENTION = "fixed-XYZ"
GIMBAL_LOCK_COS = 1e-6

Point3 = np.ndarray  # shape (3,), mm


def rot_x(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class Pose6:
    """Platform pose: translations (mm) then fixed-axis XYZ rotations (rad)."""

    tx: float = 0.0
    ty: float = 0.0
    tz: float = 0.0
    rx: float = 0.0
    ry: float = 0.0
    rz: float = 0.0

    def __post_init__(self):
        for name in ("tx", "ty", "tz", "rx", "ry", "rz"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValueError(f"pose component {name} is not finite: {value}")
            object.__setattr__(self, name, value)

    @classmethod
    def from_array(cls, values) -> "Pose6":
        values = np.asarray(values, dtype=float).reshape(6)
        return cls(*values.tolist())

    @classmethod
    def from_degrees(cls, tx, ty, tz, rx_deg, ry_deg, rz_deg) -> "Pose6":
        return cls(tx, ty, tz, *np.deg2rad([rx_deg, ry_deg, rz_deg]).tolist())

    def as_array(self) -> np.ndarray:
        return np.array([self.tx, self.ty, self.tz, self.rx, self.ry, self.rz])

    @property
    def translation(self) -> np.ndarray:
        return np.array([self.tx, self.ty, self.tz])

    @property
    def angles(self) -> np.ndarray:
        return np.array([self.rx, self.ry, self.rz])

    def __sub__(self, other: "Pose6") -> np.ndarray:
        # Componentwise difference; meaningful for small rotations only.
        return self.as_array() - other.as_array()


@dataclass(frozen=True, eq=False)
class Transform3D:
    """Rigid transform ``x -> rotation @ x + translation``."""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        rot = np.array(self.rotation, dtype=float).reshape(3, 3)
        trans = np.array(self.translation, dtype=float).reshape(3)
        if not (np.all(np.isfinite(rot)) and np.all(np.isfinite(trans))):
            raise ValueError("transform has non-finite entries")
        rot.setflags(write=False)
        trans.setflags(write=False)
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", trans)

    @classmethod
    def identity(cls) -> "Transform3D":
        return cls()

    @classmethod
    def from_matrix(cls, matrix) -> "Transform3D":
        matrix = np.asarray(matrix, dtype=float)
        return cls(matrix[:3, :3], matrix[:3, 3])

    @property
    def matrix(self) -> np.ndarray:
        out = np.eye(4)
        out[:3, :3] = self.rotation
        out[:3, 3] = self.translation
        return out

    def apply(self, points) -> np.ndarray:
        """Map a point ``(3,)`` or a stack of points ``(n, 3)``."""
        points = np.asarray(points, dtype=float)
        return points @ self.rotation.T + self.translation

    def is_valid(self, tol: float = 1e-12) -> bool:
        rot = self.rotation
        return bool(
            np.max(np.abs(rot.T @ rot - np.eye(3))) <= tol
            and abs(np.linalg.det(rot) - 1.0) <= tol
        )

    def allclose(self, other: "Transform3D", atol: float = 1e-12) -> bool:
        return bool(
            np.allclose(self.rotation, other.rotation, rtol=0.0, atol=atol)
            and np.allclose(self.translation, other.translation, rtol=0.0, atol=atol)
        )

    def __matmul__(self, other: "Transform3D") -> "Transform3D":
        return compose(self, other)

    def __repr__(self):
        return (
            f"Transform3D(rotation={self.rotation.tolist()}, "
            f"translation={self.translation.tolist()})"
        )


def rotation_from_angles(rx: float, ry: float, rz: float) -> np.ndarray:
    return rot_z(rz) @ rot_y(ry) @ rot_x(rx)


def angles_from_rotation(rotation: np.ndarray) -> tuple[float, float, float]:
    """Inverse of :func:`rotation_from_angles` away from gimbal lock."""
    rotation = np.asarray(rotation, dtype=float)
    cos_ry = np.hypot(rotation[0, 0], rotation[1, 0])
    if cos_ry < GIMBAL_LOCK_COS:
        raise GimbalLockError(f"|cos(ry)| = {cos_ry:.3e} is below {GIMBAL_LOCK_COS}")
    ry = np.arctan2(-rotation[2, 0], cos_ry)
    rx = np.arctan2(rotation[2, 1], rotation[2, 2])
    rz = np.arctan2(rotation[1, 0], rotation[0, 0])
    return float(rx), float(ry), float(rz)


def pose_to_transform(pose: Pose6) -> Transform3D:
    return Transform3D(rotation_from_angles(pose.rx, pose.ry, pose.rz), pose.translation)


def transform_to_pose(transform: Transform3D) -> Pose6:
    rx, ry, rz = angles_from_rotation(transform.rotation)
    tx, ty, tz = transform.translation.tolist()
    return Pose6(tx, ty, tz, rx, ry, rz)


def compose(a: Transform3D, b: Transform3D) -> Transform3D:
    """Transform that applies ``b`` first, then ``a``."""
    return Transform3D(a.rotation @ b.rotation, a.rotation @ b.translation + a.translation)


def inverse(t: Transform3D) -> Transform3D:
    rot_t = t.rotation.T
    return Transform3D(rot_t, -rot_t @ t.translation)


def relative(frame_a: Transform3D, frame_b: Transform3D) -> Transform3D:
    """Frame ``b`` expressed in frame ``a`` when both are given in a common frame."""
    return compose(inverse(frame_a), frame_b)


def rotation_angle(rotation: np.ndarray) -> float:
    """Angle (rad) of a rotation matrix, robust for tiny angles."""
    rotation = np.asarray(rotation, dtype=float)
    skew = 0.5 * np.array(
        [
            rotation[2, 1] - rotation[1, 2],
            rotation[0, 2] - rotation[2, 0],
            rotation[1, 0] - rotation[0, 1],
        ]
    )
    cos_angle = 0.5 * (np.trace(rotation) - 1.0)
    return float(np.arctan2(np.linalg.norm(skew), cos_angle))
