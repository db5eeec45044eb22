"""Inverse/forward geometric models of a 6-UPS hexapod.

Base joint centres are expressed in the origin frame O (the platform frame
at zero pose), platform joint centres in the platform frame S. A leg length
is the centre-to-centre distance between its two joints.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometryError, NoConvergenceError
from .geometry import Pose6, rot_y, rot_z, rotation_from_angles

logger = logging.getLogger(__name__)

MIN_LEG_LENGTH = 1e-6
MAX_CONDITION = 1e12


@dataclass(frozen=True, eq=False)
class HexapodGeometry:
    """Joint centres of the machine, one row per leg.

    ``check_zero_pose`` enforces that the six legs are equally long at the
    zero pose, which is how the origin frame is defined.
    """

    base_joints: np.ndarray
    platform_joints: np.ndarray
    check_zero_pose: bool = True

    def __post_init__(self):
        base = np.array(self.base_joints, dtype=float)
        plat = np.array(self.platform_joints, dtype=float)
        if base.shape != (6, 3) or plat.shape != (6, 3):
            raise DegenerateGeometryError(
                f"need 6 base and 6 platform joints, got {base.shape} and {plat.shape}"
            )
        if not (np.all(np.isfinite(base)) and np.all(np.isfinite(plat))):
            raise DegenerateGeometryError("joint coordinates must be finite")
        for name, joints in (("base", base), ("platform", plat)):
            gaps = np.linalg.norm(joints[:, None, :] - joints[None, :, :], axis=-1)
            gaps[np.diag_indices(6)] = np.inf
            if gaps.min() <= 1e-6:
                raise DegenerateGeometryError(f"two {name} joints coincide")
        base.setflags(write=False)
        plat.setflags(write=False)
        object.__setattr__(self, "base_joints", base)
        object.__setattr__(self, "platform_joints", plat)
        if self.check_zero_pose:
            q0 = np.linalg.norm(plat - base, axis=1)
            if q0.max() - q0.min() > 1e-9:
                raise DegenerateGeometryError(
                    f"leg lengths at zero pose differ by {q0.max() - q0.min():.3e} mm"
                )

    @property
    def zero_pose_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.platform_joints - self.base_joints, axis=1)


def symmetric_geometry(
    base_radius=250.0,
    platform_radius=150.0,
    leg_length=500.0,
    base_half_angle_deg=15.0,
    platform_half_angle_deg=15.0,
    phase_deg=0.0,
) -> HexapodGeometry:
    """Three-fold symmetric hexapod whose legs all measure ``leg_length`` at zero pose.

    Base joints sit in pairs around ``phase + 120 k`` degrees, platform
    joints in pairs around ``phase + 60 + 120 k``; each leg links a base
    joint with the nearest platform joint. Legs are numbered 1..6
    counter-clockwise seen from above, leg 1 being the base joint just
    after ``phase``. The geometry is mirror-symmetric about the plane
    through ``phase``.
    """
    beta = np.deg2rad(base_half_angle_deg)
    gamma = np.deg2rad(platform_half_angle_deg)
    phase = np.deg2rad(phase_deg)
    base_angles, plat_angles = [], []
    for k in range(3):
        centre = phase + k * 2.0 * np.pi / 3.0
        base_angles += [centre + beta, centre + 2.0 * np.pi / 3.0 - beta]
        plat_angles += [centre + np.pi / 3.0 - gamma, centre + np.pi / 3.0 + gamma]
    base_angles = np.array(base_angles)
    plat_angles = np.array(plat_angles)
    base_xy = base_radius * np.column_stack([np.cos(base_angles), np.sin(base_angles)])
    plat_xy = platform_radius * np.column_stack([np.cos(plat_angles), np.sin(plat_angles)])
    horizontal = np.linalg.norm(plat_xy[0] - base_xy[0])
    if horizontal >= leg_length:
        raise DegenerateGeometryError("leg too short to span the joint circles")
    height = np.sqrt(leg_length**2 - horizontal**2)
    base = np.column_stack([base_xy, np.full(6, -height)])
    plat = np.column_stack([plat_xy, np.zeros(6)])
    return HexapodGeometry(base, plat)


def _legs(geom: HexapodGeometry, pose: Pose6):
    rotation = rotation_from_angles(pose.rx, pose.ry, pose.rz)
    arms = geom.platform_joints @ rotation.T
    legs = arms + pose.translation - geom.base_joints
    lengths = np.linalg.norm(legs, axis=1)
    if lengths.min() < MIN_LEG_LENGTH:
        raise DegenerateGeometryError(
            f"leg {int(lengths.argmin()) + 1} has length {lengths.min():.3e} mm"
        )
    return rotation, arms, legs, lengths


def igm(geom: HexapodGeometry, pose: Pose6) -> np.ndarray:
    """Leg lengths (mm) for a platform pose."""
    return _legs(geom, pose)[3]


def leg_jacobian(geom: HexapodGeometry, pose: Pose6) -> np.ndarray:
    """d(leg length)/d(pose component), shape (6, 6).

    Translational columns are the unit leg vectors. Rotational columns
    project the leg's moment about the platform origin onto the world-frame
    axes of the three elementary rotations (``Rz Ry ex``, ``Rz ey``, ``ez``).
    """
    _, arms, legs, lengths = _legs(geom, pose)
    units = legs / lengths[:, None]
    moments = np.cross(arms, units)
    rz_ry = rot_z(pose.rz) @ rot_y(pose.ry)
    axes = np.column_stack([rz_ry[:, 0], rot_z(pose.rz)[:, 1], [0.0, 0.0, 1.0]])
    return np.hstack([units, moments @ axes])


def fgm(
    geom: HexapodGeometry,
    q_target,
    initial_guess: Pose6 = Pose6(),
    tol: float = 1e-9,
    max_iter: int = 50,
) -> Pose6:
    """Pose reaching the given leg lengths, solved by damped Newton.

    Converges to the assembly branch nearest ``initial_guess``. The stopping
    test is on the leg-length residual (infinity norm, mm). Once within
    ``tol`` a couple of extra Newton steps are taken while they still reduce
    the residual, so the returned pose sits at round-off level.
    """
    q_target = np.asarray(q_target, dtype=float).reshape(6)
    if not np.all(np.isfinite(q_target)) or q_target.min() <= 0.0:
        raise ValueError("target leg lengths must be positive and finite")

    x = initial_guess.as_array()
    residual = igm(geom, Pose6.from_array(x)) - q_target
    err = np.max(np.abs(residual))
    polish = 0
    for iteration in range(max_iter):
        if err <= tol:
            if polish >= 2 or err == 0.0:
                break
            polish += 1
        jac = leg_jacobian(geom, Pose6.from_array(x))
        cond = np.linalg.cond(jac)
        if not np.isfinite(cond) or cond > MAX_CONDITION:
            raise NoConvergenceError(f"leg Jacobian near singular (cond = {cond:.3e})")
        step = np.linalg.solve(jac, residual)
        damping = 1.0
        while True:
            x_new = x - damping * step
            res_new = igm(geom, Pose6.from_array(x_new)) - q_target
            err_new = np.max(np.abs(res_new))
            if err_new < err or damping < 1e-6:
                break
            damping *= 0.5
        if err_new >= err:
            if err <= tol:
                break  # residual already at its floor
            raise NoConvergenceError(
                f"step halving failed at iteration {iteration} (residual {err:.3e} mm)"
            )
        x, residual, err = x_new, res_new, err_new
    else:
        if err > tol:
            raise NoConvergenceError(
                f"no convergence after {max_iter} iterations (residual {err:.3e} mm)"
            )
    logger.debug("fgm converged, residual %.3e mm", err)
    return Pose6.from_array(x)
