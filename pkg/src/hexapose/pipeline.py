"""Conventional and thermal-deflection-decoupled pose estimation.

A session holds the origin frame O (measured at leg temperatures t1) and
a time-ordered list of platform frames measured in the CMM frame M, each
tagged as a reference-pose or target-pose measurement.

The decoupled estimate of a target runs::

    poses of R(t1), R(t2), S(t2) relative to O
      -> leg lengths by IGM
      -> dq_ref = q_R(t2) - q_R(t1)
      -> dq_target = dq_ref rescaled to the target's leg lengths
      -> q_S(t1) = q_S(t2) - dq_target
      -> pose by FGM, seeded with the uncorrected pose
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import MissingReferenceError, MissingTargetError
from .geometry import Pose6, Transform3D, relative, transform_to_pose
from .kinematics import HexapodGeometry, fgm, igm
from .thermal import (
    LegThermalModel,
    implied_leg_temperature_rise,
    reference_deflection,
    scale_deflection,
)

logger = logging.getLogger(__name__)


class Role(str, enum.Enum):
    REF_BEFORE = "ref_before"
    TARGET = "target"
    REF_AFTER = "ref_after"

    @property
    def is_reference(self) -> bool:
        return self is not Role.TARGET


class Method(str, enum.Enum):
    CONVENTIONAL = "conventional"
    DECOUPLED = "decoupled"


@dataclass(frozen=True, eq=False)
class Record:
    role: Role
    frame_in_m: Transform3D
    timestamp: float
    leg_temperatures: np.ndarray | None = None  # degC, diagnostic only
    commanded_pose: Pose6 | None = None

    def __post_init__(self):
        object.__setattr__(self, "role", Role(self.role))
        object.__setattr__(self, "timestamp", float(self.timestamp))
        if self.leg_temperatures is not None:
            temps = np.array(self.leg_temperatures, dtype=float).reshape(6)
            temps.setflags(write=False)
            object.__setattr__(self, "leg_temperatures", temps)


@dataclass(frozen=True, eq=False)
class MeasurementSession:
    """Measured frames of one campaign, kept sorted by timestamp."""

    origin_frame: Transform3D
    records: tuple[Record, ...]
    reference_pose_commanded: Pose6 = Pose6(tz=-40.0)
    target_pose_commanded: Pose6 = Pose6()
    origin_timestamp: float | None = None

    def __post_init__(self):
        records = tuple(sorted(self.records, key=lambda r: r.timestamp))
        times = np.array([r.timestamp for r in records])
        if len(times) > 1 and np.any(np.diff(times) <= 0.0):
            raise ValueError("record timestamps must be strictly increasing")
        object.__setattr__(self, "records", records)

    @property
    def targets(self) -> list[Record]:
        return [r for r in self.records if r.role is Role.TARGET]

    @property
    def references(self) -> list[Record]:
        return [r for r in self.records if r.role.is_reference]

    def target(self, index: int = 0) -> Record:
        targets = self.targets
        if not targets:
            raise MissingTargetError("session has no target measurement")
        if not 0 <= index < len(targets):
            raise MissingTargetError(f"target {index} requested, session has {len(targets)}")
        return targets[index]

    def pose_of(self, record: Record) -> Pose6:
        """Pose of a measured platform frame relative to the origin frame."""
        return transform_to_pose(relative(self.origin_frame, record.frame_in_m))


@dataclass(frozen=True, eq=False)
class Diagnostics:
    dq_ref: np.ndarray
    dq_target: np.ndarray
    implied_dT: np.ndarray
    ref_t1_timestamp: float
    ref_t2_timestamp: float


@dataclass(frozen=True, eq=False)
class PoseEstimate:
    pose: Pose6
    method: Method
    target_timestamp: float
    diagnostics: Diagnostics | None = field(default=None)


def conventional_pose(session: MeasurementSession, target: int = 0) -> PoseEstimate:
    """Target frame relative to O, thermal state ignored."""
    record = session.target(target)
    return PoseEstimate(session.pose_of(record), Method.CONVENTIONAL, record.timestamp)


def reference_pair_strategy(session: MeasurementSession) -> list[tuple[Record, Record]]:
    """Choose the (t1, t2) reference records for every target, in time order.

    The t1 reference is always the session's earliest reference, the one
    taken right after the origin frame. The t2 reference is the reference
    nearest in time to the target; on a tie the later one wins.
    """
    refs = session.references
    if not any(r.role is Role.REF_BEFORE for r in refs):
        raise MissingReferenceError("session has no reference measurement before a target")
    anchor = refs[0]
    records = session.records
    pairs = []
    for pos, record in enumerate(records):
        if record.role is not Role.TARGET:
            continue
        neighbours = records[max(pos - 1, 0) : pos] + records[pos + 1 : pos + 2]
        if not any(n.role.is_reference for n in neighbours):
            raise MissingReferenceError(
                f"target at t = {record.timestamp:g} s has no adjacent reference measurement"
            )
        # min() keeps the first of equal keys, so scan later references first
        nearest = min(reversed(refs), key=lambda r: abs(r.timestamp - record.timestamp))
        pairs.append((anchor, nearest))
    if not pairs:
        raise MissingTargetError("session has no target measurement")
    return pairs


def check_reference_budget(
    session: MeasurementSession,
    target: int = 0,
    max_gap_s: float | None = None,
    max_temperature_change: float | None = None,
) -> list[str]:
    """Describe how far the t2 reference is from its target, if over budget.

    The method assumes the target and its t2 reference see the same leg
    temperatures. Both limits are optional; temperatures are only compared
    when both records carry them.
    """
    ref_t1, ref_t2 = reference_pair_strategy(session)[target]
    record = session.target(target)
    problems = []
    gap = abs(ref_t2.timestamp - record.timestamp)
    if max_gap_s is not None and gap > max_gap_s:
        problems.append(f"t2 reference is {gap:g} s from the target (budget {max_gap_s:g} s)")
    if (
        max_temperature_change is not None
        and ref_t2.leg_temperatures is not None
        and record.leg_temperatures is not None
    ):
        change = np.max(np.abs(ref_t2.leg_temperatures - record.leg_temperatures))
        if change > max_temperature_change:
            problems.append(
                f"leg temperatures differ by {change:.3g} K between target and t2 reference "
                f"(budget {max_temperature_change:g} K)"
            )
    return problems


def _target_deflection_at_t1(model, dq_ref, q_ref, q_s_t2, dq_target, max_iter=20):
    # Contraction factor is alpha_st * dT ~ 1e-4: converges in two or three passes.
    for _ in range(max_iter):
        updated = scale_deflection(model, dq_ref, q_ref, q_s_t2 - dq_target)
        if np.array_equal(updated, dq_target):
            break
        change = np.max(np.abs(updated - dq_target))
        dq_target = updated
        if change <= 1e-15:
            break
    return dq_target


def decoupled_pose(
    geom: HexapodGeometry,
    model: LegThermalModel,
    session: MeasurementSession,
    target: int = 0,
    refine_target_length: bool = True,
    **budget,
) -> PoseEstimate:
    """Target pose with the legs' thermal deflection since t1 removed.

    The Steel segment length that scales the deflection is, physically, the
    target's length at t1, which is unknown until the correction is made.
    With ``refine_target_length`` (default) the correction is iterated to
    that fixed point; otherwise the measured t2 length is used once, which
    leaves an error of order ``alpha_st * dq * dT`` (nanometres for a few K).

    Extra keyword arguments go to :func:`check_reference_budget`; violations
    are logged as warnings, not raised.
    """
    record = session.target(target)
    ref_t1, ref_t2 = reference_pair_strategy(session)[target]
    for problem in check_reference_budget(session, target, **budget) if budget else ():
        logger.warning(problem)

    x_r_t1 = session.pose_of(ref_t1)
    x_r_t2 = session.pose_of(ref_t2)
    x_s_t2 = session.pose_of(record)

    q_r_t1 = igm(geom, x_r_t1)
    q_r_t2 = igm(geom, x_r_t2)
    q_s_t2 = igm(geom, x_s_t2)

    dq_ref = reference_deflection(q_r_t1, q_r_t2)
    dq_target = scale_deflection(model, dq_ref, q_r_t1, q_s_t2)
    if refine_target_length:
        dq_target = _target_deflection_at_t1(model, dq_ref, q_r_t1, q_s_t2, dq_target)
    q_s_t1 = q_s_t2 - dq_target  # dq is t2 - t1 growth, so subtract it
    pose = fgm(geom, q_s_t1, initial_guess=x_s_t2)

    diagnostics = Diagnostics(
        dq_ref=dq_ref,
        dq_target=dq_target,
        implied_dT=implied_leg_temperature_rise(model, dq_ref, q_r_t1),
        ref_t1_timestamp=ref_t1.timestamp,
        ref_t2_timestamp=ref_t2.timestamp,
    )
    return PoseEstimate(pose, Method.DECOUPLED, record.timestamp, diagnostics)


def process_session(
    geom: HexapodGeometry, model: LegThermalModel, session: MeasurementSession, **budget
) -> list[tuple[PoseEstimate, PoseEstimate]]:
    """(conventional, decoupled) estimates for every target, in time order."""
    return [
        (conventional_pose(session, k), decoupled_pose(geom, model, session, k, **budget))
        for k in range(len(session.targets))
    ]
