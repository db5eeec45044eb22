"""Hexapod pose metrology with leg thermal-deflection decoupling."""

from .errors import *  # noqa: F401,F403
from .geometry import (
    Pose6,
    Transform3D,
    compose,
    inverse,
    pose_to_transform,
    transform_to_pose,
)
from .kinematics import HexapodGeometry, fgm, igm, leg_jacobian, symmetric_geometry
from .metrology import BallPlateRelation, establish_relation, fit_sphere, frame_from_balls
from .pipeline import (
    MeasurementSession,
    PoseEstimate,
    Record,
    Role,
    conventional_pose,
    decoupled_pose,
    process_session,
    reference_pair_strategy,
)
from .simulator import ScenarioConfig, run_comparison, simulate_session
from .thermal import (
    LegThermalModel,
    implied_leg_temperature_rise,
    reference_deflection,
    scale_deflection,
)

__version__ = "0.1.0"
