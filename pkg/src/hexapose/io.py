"""File formats: project config, geometry, scenario, session, truth, estimates, reports.

Structured files are JSON objects with explicit keys. Every file names its
format and version, and states its units; unknown versions are rejected.
Frames are stored as rotation matrix plus translation so they re-parse
exactly. Pose vectors are stored with named components, angles in the
unit given by ``units.angle`` (degrees unless asked otherwise).

Probe points are a flat CSV table whose first line is a ``#`` header
carrying the format tag; long-format reports are plain CSV.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import SchemaError
from .geometry import EULER_CONVENTION, Pose6, Transform3D
from .kinematics import HexapodGeometry
from .metrology import DEFAULT_CONGRUENCE_TOL, DEFAULT_POINTS_PER_BALL, BallPlateRelation
from .pipeline import MeasurementSession, PoseEstimate, Record, Role
from .simulator import (
    COMPONENTS,
    ComparisonReport,
    GroundTruth,
    HeatingSchedule,
    ScenarioConfig,
    TrialRow,
    TrialStep,
    TruthRecord,
)
from .thermal import LegThermalModel

FORMAT_VERSION = 1
ANGLE_UNITS = ("deg", "rad")
LENGTH_UNIT = "mm"


# ---------------------------------------------------------------------------
# low-level helpers


def _header(kind: str, angle_unit: str | None = None, **units) -> dict:
    unit_block = {"length": LENGTH_UNIT}
    if angle_unit is not None:
        unit_block["angle"] = angle_unit
    unit_block.update(units)
    return {
        "format": f"hexapose.{kind}",
        "format_version": FORMAT_VERSION,
        "euler_convention": EULER_CONVENTION,
        "units": unit_block,
    }


def _check_header(data, kind: str) -> str | None:
    """Validate the common header; returns the angle unit if the file has one."""
    if not isinstance(data, dict):
        raise SchemaError(f"expected a JSON object for hexapose.{kind}")
    if data.get("format") != f"hexapose.{kind}":
        raise SchemaError(f"expected format 'hexapose.{kind}', found {data.get('format')!r}")
    if data.get("format_version") != FORMAT_VERSION:
        raise SchemaError(
            f"unsupported format_version {data.get('format_version')!r} "
            f"(this build reads version {FORMAT_VERSION})"
        )
    conv = data.get("euler_convention", EULER_CONVENTION)
    if conv != EULER_CONVENTION:
        raise SchemaError(f"unsupported Euler convention {conv!r}")
    units = data.get("units")
    if not isinstance(units, dict) or units.get("length") != LENGTH_UNIT:
        raise SchemaError("file must declare units.length = 'mm'")
    angle = units.get("angle")
    if angle is not None and angle not in ANGLE_UNITS:
        raise SchemaError(f"unknown angle unit {angle!r}")
    return angle


def _require(data: dict, key: str):
    try:
        return data[key]
    except (KeyError, TypeError):
        raise SchemaError(f"missing key {key!r}") from None


def pose_to_dict(pose: Pose6, angle_unit: str = "deg") -> dict:
    angles = pose.angles if angle_unit == "rad" else np.rad2deg(pose.angles)
    return dict(zip(COMPONENTS, [pose.tx, pose.ty, pose.tz, *angles.tolist()]))


def pose_from_dict(data: dict, angle_unit: str) -> Pose6:
    try:
        values = [float(data[name]) for name in COMPONENTS]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad pose entry {data!r}") from exc
    if angle_unit == "deg":
        values[3:] = np.deg2rad(values[3:]).tolist()
    return Pose6(*values)


def frame_to_dict(frame: Transform3D) -> dict:
    return {"rotation": frame.rotation.tolist(), "translation": frame.translation.tolist()}


def frame_from_dict(data: dict) -> Transform3D:
    try:
        frame = Transform3D(data["rotation"], data["translation"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad frame entry: {exc}") from exc
    if not frame.is_valid(1e-9):
        raise SchemaError("frame rotation is not a proper rotation matrix")
    return frame


def _array(data, shape, what):
    try:
        arr = np.array(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{what}: not numeric") from exc
    if arr.shape != shape:
        raise SchemaError(f"{what}: expected shape {shape}, got {arr.shape}")
    return arr


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON ({exc})") from exc


def dumps(data: dict) -> str:
    return json.dumps(data, indent=2) + "\n"


def write_text_atomic(path, text: str):
    """Write via a temporary sibling so readers never see a half-written file."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


# ---------------------------------------------------------------------------
# geometry and project config


def geometry_to_dict(geom: HexapodGeometry) -> dict:
    out = _header("geometry")
    out["base_joints"] = geom.base_joints.tolist()
    out["platform_joints"] = geom.platform_joints.tolist()
    return out


def geometry_from_dict(data: dict) -> HexapodGeometry:
    _check_header(data, "geometry")
    return HexapodGeometry(
        _array(_require(data, "base_joints"), (6, 3), "base_joints"),
        _array(_require(data, "platform_joints"), (6, 3), "platform_joints"),
    )


@dataclass(frozen=True, eq=False)
class ProjectConfig:
    geometry_file: Path
    geometry: HexapodGeometry
    thermal: LegThermalModel
    points_per_ball: int = DEFAULT_POINTS_PER_BALL
    congruence_tol: float = DEFAULT_CONGRUENCE_TOL
    angle_unit: str = "deg"
    euler_convention: str = EULER_CONVENTION


def config_to_dict(cfg: ProjectConfig, base_dir=None) -> dict:
    out = _header("config")
    geom_path = Path(cfg.geometry_file)
    if base_dir is not None:
        try:
            geom_path = geom_path.relative_to(base_dir)
        except ValueError:
            pass
    out.update(
        {
            "geometry_file": str(geom_path),
            "thermal": cfg.thermal.to_dict(),
            "metrology": {
                "points_per_ball": cfg.points_per_ball,
                "congruence_tol_mm": cfg.congruence_tol,
            },
            "angle_unit": cfg.angle_unit,
        }
    )
    return out


def load_config(path) -> ProjectConfig:
    """Parse a project config; the geometry file is resolved relative to it."""
    path = Path(path)
    data = read_json(path)
    _check_header(data, "config")
    geom_file = Path(_require(data, "geometry_file"))
    if not geom_file.is_absolute():
        geom_file = path.parent / geom_file
    if not geom_file.exists():
        raise SchemaError(f"geometry file {geom_file} does not exist")
    geometry = geometry_from_dict(read_json(geom_file))
    try:
        thermal = LegThermalModel.from_dict(_require(data, "thermal"))
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"bad thermal block: {exc}") from exc
    metrology = data.get("metrology", {})
    angle_unit = data.get("angle_unit", "deg")
    if angle_unit not in ANGLE_UNITS:
        raise SchemaError(f"unknown angle unit {angle_unit!r}")
    return ProjectConfig(
        geometry_file=geom_file,
        geometry=geometry,
        thermal=thermal,
        points_per_ball=int(metrology.get("points_per_ball", DEFAULT_POINTS_PER_BALL)),
        congruence_tol=float(metrology.get("congruence_tol_mm", DEFAULT_CONGRUENCE_TOL)),
        angle_unit=angle_unit,
    )


def write_config(cfg: ProjectConfig, path):
    """Write a config and its geometry file (next to it if the path is relative)."""
    path = Path(path)
    geom_path = Path(cfg.geometry_file)
    if not geom_path.is_absolute():
        geom_path = path.parent / geom_path
    write_text_atomic(geom_path, dumps(geometry_to_dict(cfg.geometry)))
    write_text_atomic(path, dumps(config_to_dict(cfg, base_dir=path.parent)))


# ---------------------------------------------------------------------------
# scenario


def scenario_to_dict(cfg: ScenarioConfig, angle_unit: str = "deg") -> dict:
    """Scenario fields other than geometry and thermal data (those live in the config)."""
    out = _header("scenario", angle_unit, time="s", temperature="K")
    out.update(
        {
            "rng_seed": cfg.rng_seed,
            "probe_noise_sigma_mm": cfg.probe_noise_sigma,
            "ball_radius_mm": cfg.ball_radius,
            "points_per_ball": cfg.points_per_ball,
            "probe_max_polar_deg": cfg.probe_max_polar_deg,
            "congruence_tol_mm": cfg.congruence_tol,
            "ambient_temperature_degC": cfg.ambient_temperature,
            "repeatability": None
            if cfg.repeatability is None
            else {"translation_mm": cfg.repeatability[0], "rotation_rad": cfg.repeatability[1]},
            "ball_layout_mm": cfg.ball_layout.ball_positions.tolist(),
            "cmm_placement": frame_to_dict(cfg.cmm_placement),
            "reference_pose": pose_to_dict(cfg.reference_pose, angle_unit),
            "target_pose": pose_to_dict(cfg.target_pose, angle_unit),
            "heating_schedule": {
                "times_s": cfg.heating_schedule.times.tolist(),
                "delta_t_K": cfg.heating_schedule.delta_t.tolist(),
            },
            "trial_plan": [
                {
                    "role": step.role.value,
                    "trial": step.trial,
                    "dwell_s": step.dwell_s,
                    "pose": pose_to_dict(step.pose, angle_unit),
                }
                for step in cfg.trial_plan
            ],
        }
    )
    return out


def scenario_from_dict(data: dict, project: ProjectConfig | None = None) -> ScenarioConfig:
    angle = _check_header(data, "scenario") or "deg"
    kwargs = {}
    if project is not None:
        kwargs.update(geometry=project.geometry, thermal=project.thermal)
    try:
        schedule = _require(data, "heating_schedule")
        plan = [
            TrialStep(
                Role(step["role"]),
                pose_from_dict(step["pose"], angle),
                float(step["dwell_s"]),
                int(step.get("trial", 0)),
            )
            for step in _require(data, "trial_plan")
        ]
        rep = data.get("repeatability")
        simple = {
            "rng_seed": ("rng_seed", int),
            "probe_noise_sigma": ("probe_noise_sigma_mm", float),
            "ball_radius": ("ball_radius_mm", float),
            "points_per_ball": ("points_per_ball", int),
            "probe_max_polar_deg": ("probe_max_polar_deg", float),
            "congruence_tol": ("congruence_tol_mm", float),
            "ambient_temperature": ("ambient_temperature_degC", float),
        }
        for field_name, (key, cast) in simple.items():
            if key in data:
                kwargs[field_name] = cast(data[key])
        if "ball_layout_mm" in data:
            kwargs["ball_layout"] = BallPlateRelation(
                _array(data["ball_layout_mm"], (3, 3), "ball_layout_mm")
            )
        if "cmm_placement" in data:
            kwargs["cmm_placement"] = frame_from_dict(data["cmm_placement"])
        if "reference_pose" in data:
            kwargs["reference_pose"] = pose_from_dict(data["reference_pose"], angle)
        if "target_pose" in data:
            kwargs["target_pose"] = pose_from_dict(data["target_pose"], angle)
        return ScenarioConfig(
            heating_schedule=HeatingSchedule(schedule["times_s"], schedule["delta_t_K"]),
            trial_plan=tuple(plan),
            repeatability=None
            if rep is None
            else (float(rep["translation_mm"]), float(rep["rotation_rad"])),
            **kwargs,
        )
    except SchemaError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad scenario: {exc!r}") from exc


# ---------------------------------------------------------------------------
# session and ground truth


def session_to_dict(session: MeasurementSession, angle_unit: str = "deg") -> dict:
    out = _header("session", angle_unit, time="s", temperature="degC")
    out.update(
        {
            "origin_frame": frame_to_dict(session.origin_frame),
            "origin_timestamp": session.origin_timestamp,
            "reference_pose_commanded": pose_to_dict(session.reference_pose_commanded, angle_unit),
            "target_pose_commanded": pose_to_dict(session.target_pose_commanded, angle_unit),
            "records": [
                {
                    "role": rec.role.value,
                    "timestamp": rec.timestamp,
                    "frame_in_m": frame_to_dict(rec.frame_in_m),
                    "leg_temperatures": None
                    if rec.leg_temperatures is None
                    else rec.leg_temperatures.tolist(),
                    "commanded_pose": None
                    if rec.commanded_pose is None
                    else pose_to_dict(rec.commanded_pose, angle_unit),
                }
                for rec in session.records
            ],
        }
    )
    return out


def session_from_dict(data: dict) -> MeasurementSession:
    angle = _check_header(data, "session") or "deg"
    try:
        records = []
        for rec in _require(data, "records"):
            temps = rec.get("leg_temperatures")
            cmd = rec.get("commanded_pose")
            records.append(
                Record(
                    Role(rec["role"]),
                    frame_from_dict(rec["frame_in_m"]),
                    float(rec["timestamp"]),
                    None if temps is None else _array(temps, (6,), "leg_temperatures"),
                    None if cmd is None else pose_from_dict(cmd, angle),
                )
            )
        origin_t = data.get("origin_timestamp")
        return MeasurementSession(
            frame_from_dict(_require(data, "origin_frame")),
            tuple(records),
            reference_pose_commanded=pose_from_dict(data["reference_pose_commanded"], angle),
            target_pose_commanded=pose_from_dict(data["target_pose_commanded"], angle),
            origin_timestamp=None if origin_t is None else float(origin_t),
        )
    except SchemaError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad session: {exc!r}") from exc


def truth_to_dict(truth: GroundTruth, angle_unit: str = "deg") -> dict:
    out = _header("truth", angle_unit, time="s", temperature="K")
    out.update(
        {
            "origin_frame": frame_to_dict(truth.origin_frame),
            "ball_layout_mm": truth.ball_layout.ball_positions.tolist(),
            "records": [
                {
                    "timestamp": rec.timestamp,
                    "role": rec.role.value,
                    "trial": rec.trial,
                    "commanded_pose": pose_to_dict(rec.commanded_pose, angle_unit),
                    "pose_t1": pose_to_dict(rec.pose_t1, angle_unit),
                    "pose": pose_to_dict(rec.pose, angle_unit),
                    "delta_t_K": rec.delta_t.tolist(),
                    "leg_lengths_t1_mm": rec.leg_lengths_t1.tolist(),
                    "leg_lengths_mm": rec.leg_lengths.tolist(),
                }
                for rec in truth.records
            ],
        }
    )
    return out


def truth_from_dict(data: dict) -> GroundTruth:
    angle = _check_header(data, "truth") or "deg"
    try:
        records = tuple(
            TruthRecord(
                float(rec["timestamp"]),
                Role(rec["role"]),
                int(rec["trial"]),
                pose_from_dict(rec["commanded_pose"], angle),
                pose_from_dict(rec["pose_t1"], angle),
                pose_from_dict(rec["pose"], angle),
                _array(rec["delta_t_K"], (6,), "delta_t_K"),
                _array(rec["leg_lengths_t1_mm"], (6,), "leg_lengths_t1_mm"),
                _array(rec["leg_lengths_mm"], (6,), "leg_lengths_mm"),
            )
            for rec in _require(data, "records")
        )
        return GroundTruth(
            frame_from_dict(data["origin_frame"]),
            BallPlateRelation(_array(data["ball_layout_mm"], (3, 3), "ball_layout_mm")),
            records,
        )
    except SchemaError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad truth file: {exc!r}") from exc


# ---------------------------------------------------------------------------
# estimates (output of `correct`)


def estimates_to_dict(pairs: list[tuple[PoseEstimate, PoseEstimate]], angle_unit="deg") -> dict:
    out = _header("estimates", angle_unit, time="s", deflection="mm", temperature="K")
    targets = []
    for k, (conv, dec) in enumerate(pairs):
        diag = dec.diagnostics
        targets.append(
            {
                "target": k,
                "timestamp": conv.target_timestamp,
                "conventional": pose_to_dict(conv.pose, angle_unit),
                "decoupled": pose_to_dict(dec.pose, angle_unit),
                "diagnostics": {
                    "ref_t1_timestamp": diag.ref_t1_timestamp,
                    "ref_t2_timestamp": diag.ref_t2_timestamp,
                    "dq_ref_mm": diag.dq_ref.tolist(),
                    "dq_target_mm": diag.dq_target.tolist(),
                    "implied_dT_K": diag.implied_dT.tolist(),
                },
            }
        )
    out["targets"] = targets
    return out


def estimates_from_dict(data: dict) -> list[dict]:
    """Parsed estimate entries with poses as :class:`Pose6`."""
    angle = _check_header(data, "estimates") or "deg"
    out = []
    for entry in _require(data, "targets"):
        item = dict(entry)
        item["conventional"] = pose_from_dict(entry["conventional"], angle)
        item["decoupled"] = pose_from_dict(entry["decoupled"], angle)
        out.append(item)
    return out


# ---------------------------------------------------------------------------
# comparison report


def report_to_dict(report: ComparisonReport, angle_unit: str = "deg") -> dict:
    out = _header("report", angle_unit, time="s", temperature="degC", delta_t="K")
    out["n_trials"] = report.n_trials
    out["rows"] = [
        {
            "trial": row.trial,
            "timestamp": row.timestamp,
            "mean_delta_t": row.mean_delta_t,
            "leg_delta_t": row.leg_delta_t.tolist(),
            "leg_temperatures": None
            if row.leg_temperatures is None
            else row.leg_temperatures.tolist(),
            "air_temperature": row.air_temperature,
            "conventional": pose_to_dict(row.conventional, angle_unit),
            "decoupled": pose_to_dict(row.decoupled, angle_unit),
            "truth": None if row.truth is None else pose_to_dict(row.truth, angle_unit),
        }
        for row in report.rows
    ]
    out["summary"] = report.summary
    out["summary_units"] = "drift in mm / rad; slopes per trial"
    return out


def report_from_dict(data: dict) -> ComparisonReport:
    angle = _check_header(data, "report") or "deg"
    try:
        rows = tuple(
            TrialRow(
                trial=int(row["trial"]),
                timestamp=float(row["timestamp"]),
                leg_delta_t=_array(row["leg_delta_t"], (6,), "leg_delta_t"),
                leg_temperatures=None
                if row.get("leg_temperatures") is None
                else _array(row["leg_temperatures"], (6,), "leg_temperatures"),
                air_temperature=float(row["air_temperature"]),
                conventional=pose_from_dict(row["conventional"], angle),
                decoupled=pose_from_dict(row["decoupled"], angle),
                truth=None if row.get("truth") is None else pose_from_dict(row["truth"], angle),
            )
            for row in _require(data, "rows")
        )
    except SchemaError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"bad report: {exc!r}") from exc
    if len(rows) != data.get("n_trials"):
        raise SchemaError("report row count does not match n_trials")
    return ComparisonReport(rows, data.get("summary", {}))


LONG_COLUMNS = ("trial", "timestamp_s", "series", "quantity", "value", "unit")


def report_long_table(report: ComparisonReport, angle_unit: str = "deg") -> str:
    """One row per trial and quantity, ready for plotting pose and temperature traces."""
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LONG_COLUMNS)
    for row in report.rows:
        series = [("conventional", row.conventional), ("decoupled", row.decoupled)]
        if row.truth is not None:
            series.append(("truth", row.truth))
        for label, pose in series:
            for name, value in pose_to_dict(pose, angle_unit).items():
                unit = angle_unit if name.startswith("r") else LENGTH_UNIT
                writer.writerow([row.trial, repr(row.timestamp), label, name, repr(value), unit])
        if row.leg_temperatures is not None:
            for i, temp in enumerate(row.leg_temperatures, start=1):
                writer.writerow(
                    [row.trial, repr(row.timestamp), "temperature", f"leg_{i}", repr(float(temp)), "degC"]
                )
        writer.writerow(
            [row.trial, repr(row.timestamp), "temperature", "air", repr(row.air_temperature), "degC"]
        )
        writer.writerow(
            [row.trial, repr(row.timestamp), "temperature", "mean_leg_rise", repr(row.mean_delta_t), "K"]
        )
    return buf.getvalue()


# ---------------------------------------------------------------------------
# probe points


POINTS_TAG = f"# format=hexapose.points; format_version={FORMAT_VERSION}; units=mm"


def points_to_csv(points, ball_ids=None) -> str:
    points = np.asarray(points, dtype=float)
    buf = _io.StringIO()
    buf.write(POINTS_TAG + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    if ball_ids is None:
        writer.writerow(["x_mm", "y_mm", "z_mm"])
        writer.writerows([[repr(v) for v in p] for p in points.tolist()])
    else:
        writer.writerow(["ball", "x_mm", "y_mm", "z_mm"])
        for ball, p in zip(ball_ids, points.tolist()):
            writer.writerow([ball, *[repr(v) for v in p]])
    return buf.getvalue()


def parse_points_csv(text: str) -> dict[str, np.ndarray]:
    """Points grouped by ball id (a single group ``""`` when there is no ball column)."""
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise SchemaError("points file must start with a '# format=hexapose.points' header")
    tags = dict(
        part.strip().split("=", 1) for part in lines[0].lstrip("#").split(";") if "=" in part
    )
    if tags.get("format") != "hexapose.points":
        raise SchemaError(f"not a points file: {lines[0]!r}")
    if tags.get("format_version") != str(FORMAT_VERSION):
        raise SchemaError(f"unsupported points format_version {tags.get('format_version')!r}")
    if tags.get("units") != LENGTH_UNIT:
        raise SchemaError("points file must declare units=mm")
    reader = csv.DictReader(lines[1:])
    fields = reader.fieldnames or []
    if not {"x_mm", "y_mm", "z_mm"} <= set(fields):
        raise SchemaError(f"points table needs x_mm, y_mm, z_mm columns, found {fields}")
    groups: dict[str, list] = {}
    try:
        for row in reader:
            key = row.get("ball", "") or ""
            groups.setdefault(key, []).append(
                [float(row["x_mm"]), float(row["y_mm"]), float(row["z_mm"])]
            )
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"non-numeric coordinate: {exc}") from exc
    return {key: np.array(pts) for key, pts in groups.items()}
