"""Synthetic heated-hexapod measurement campaigns with known ground truth.

Physics of one measurement at time ``t``:

1. The commanded pose gives the t1 leg lengths ``q1 = igm(pose)``; the
   supplied geometry describes the machine at the leg temperatures of the
   origin measurement (t = 0), which is what defines O.
2. Legs grow by ``(alpha_al l_al + alpha_st (q1 - l_al)) dT`` where ``dT``
   is the schedule value at ``t`` minus its value at ``t = 0``.
3. The true platform pose follows from the grown legs by FGM.
4. Three balls on the platform are probed by a virtual CMM with isotropic
   Gaussian noise, sphere-fitted, and turned into a frame in M.

Leg temperature is frozen for the duration of one frame measurement.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .errors import ScheduleGapError
from .geometry import Pose6, Transform3D, compose, pose_to_transform, rot_z
from .kinematics import HexapodGeometry, fgm, igm, symmetric_geometry
from .metrology import (
    DEFAULT_CONGRUENCE_TOL,
    DEFAULT_POINTS_PER_BALL,
    BallPlateRelation,
    establish_relation,
    fit_sphere,
    frame_from_balls,
)
from .pipeline import (
    MeasurementSession,
    Record,
    Role,
    conventional_pose,
    decoupled_pose,
)
from .thermal import LegThermalModel

COMPONENTS = ("tx", "ty", "tz", "rx", "ry", "rz")
MPE_P = 2e-3  # mm, CMM probing error figure
REFERENCE_POSE = Pose6(tz=-40.0)


@dataclass(frozen=True, eq=False)
class HeatingSchedule:
    """Per-leg temperature rise (K) versus time (s), piecewise linear."""

    times: np.ndarray
    delta_t: np.ndarray

    def __post_init__(self):
        times = np.array(self.times, dtype=float).reshape(-1)
        values = np.array(self.delta_t, dtype=float).reshape(len(times), 6)
        if len(times) == 0 or np.any(np.diff(times) <= 0.0):
            raise ValueError("schedule times must be non-empty and strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValueError("schedule temperatures must be finite")
        times.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "delta_t", values)

    @classmethod
    def constant(cls, delta_t=0.0, until: float = 1e9) -> "HeatingSchedule":
        row = np.broadcast_to(np.asarray(delta_t, dtype=float), (6,))
        return cls([0.0, until], [row, row])

    def at(self, t: float) -> np.ndarray:
        if not self.times[0] <= t <= self.times[-1]:
            raise ScheduleGapError(
                f"t = {t:g} s outside schedule [{self.times[0]:g}, {self.times[-1]:g}] s"
            )
        return np.array([np.interp(t, self.times, self.delta_t[:, i]) for i in range(6)])


@dataclass(frozen=True)
class TrialStep:
    """One frame measurement, ``dwell_s`` seconds after the previous one."""

    role: Role
    pose: Pose6
    dwell_s: float
    trial: int = 0

    def __post_init__(self):
        object.__setattr__(self, "role", Role(self.role))
        if self.dwell_s <= 0.0:
            raise ValueError("dwell times must be positive")


def triangle_layout(side: float = 150.0, height: float = 20.0) -> BallPlateRelation:
    """Equilateral ball triangle centred over the platform origin."""
    radius = side / np.sqrt(3.0)
    angles = np.deg2rad([90.0, 210.0, 330.0])
    return BallPlateRelation(
        np.column_stack([radius * np.cos(angles), radius * np.sin(angles), np.full(3, height)])
    )


def default_geometry() -> HexapodGeometry:
    """Stand-in machine: q0 = 500 mm, joint circles 250/150 mm, 15 deg half-angles.

    Rotated 30 degrees so that running legs 2 and 5 hotter than 3 and 4
    drives the platform toward +X and tilts it positively about X.
    """
    return symmetric_geometry(phase_deg=30.0)


def default_cmm_placement() -> Transform3D:
    return Transform3D(rot_z(np.deg2rad(25.0)), [420.0, 310.0, -180.0])


@dataclass(frozen=True, eq=False)
class ScenarioConfig:
    geometry: HexapodGeometry = field(default_factory=default_geometry)
    thermal: LegThermalModel = field(default_factory=LegThermalModel)
    ball_layout: BallPlateRelation = field(default_factory=triangle_layout)
    heating_schedule: HeatingSchedule = field(default_factory=HeatingSchedule.constant)
    probe_noise_sigma: float = MPE_P / 2.0
    trial_plan: tuple[TrialStep, ...] = ()
    rng_seed: int = 0
    ball_radius: float = 12.7
    points_per_ball: int = DEFAULT_POINTS_PER_BALL
    probe_max_polar_deg: float = 110.0
    congruence_tol: float = DEFAULT_CONGRUENCE_TOL
    cmm_placement: Transform3D = field(default_factory=default_cmm_placement)
    ambient_temperature: float = 20.0
    # (mm, rad) standard deviations of an independent pose perturbation; None = off
    repeatability: tuple[float, float] | None = None
    reference_pose: Pose6 = REFERENCE_POSE
    target_pose: Pose6 = Pose6()

    def __post_init__(self):
        if self.probe_noise_sigma < 0.0:
            raise ValueError("probe_noise_sigma must be non-negative")
        object.__setattr__(self, "trial_plan", tuple(self.trial_plan))

    @property
    def duration(self) -> float:
        return float(sum(step.dwell_s for step in self.trial_plan))


@dataclass(frozen=True, eq=False)
class TruthRecord:
    timestamp: float
    role: Role
    trial: int
    commanded_pose: Pose6
    pose_t1: Pose6  # pose the platform would hold at the t1 leg temperatures
    pose: Pose6  # pose actually held at the measurement instant
    delta_t: np.ndarray  # K, rise since t1
    leg_lengths_t1: np.ndarray
    leg_lengths: np.ndarray


@dataclass(frozen=True, eq=False)
class GroundTruth:
    origin_frame: Transform3D
    ball_layout: BallPlateRelation
    records: tuple[TruthRecord, ...]

    def for_timestamp(self, t: float) -> TruthRecord:
        for rec in self.records:
            if rec.timestamp == t:
                return rec
        raise KeyError(t)


def probe_pattern(n: int, radius: float, max_polar_deg: float = 180.0) -> np.ndarray:
    """``n`` well-spread unit-sphere directions (golden-angle spiral) scaled to ``radius``.

    Directions are restricted to a cap of half-angle ``max_polar_deg`` about +z,
    the part of a ball a probe can reach.
    """
    cos_max = np.cos(np.deg2rad(max_polar_deg))
    k = np.arange(n) + 0.5
    z = 1.0 - (1.0 - cos_max) * k / n
    azimuth = np.pi * (3.0 - np.sqrt(5.0)) * k
    rho = np.sqrt(np.clip(1.0 - z**2, 0.0, None))
    return radius * np.column_stack([rho * np.cos(azimuth), rho * np.sin(azimuth), z])


def probe_ball_centers(centers, cfg: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    """Sphere-fitted centres of balls probed with the configured noise."""
    pattern = probe_pattern(cfg.points_per_ball, cfg.ball_radius, cfg.probe_max_polar_deg)
    fitted = []
    for center in np.asarray(centers, dtype=float):
        points = center + pattern
        if cfg.probe_noise_sigma > 0.0:
            points = points + rng.normal(0.0, cfg.probe_noise_sigma, points.shape)
        fitted.append(fit_sphere(points).center)
    return np.array(fitted)


def simulate_session(cfg: ScenarioConfig) -> tuple[MeasurementSession, GroundTruth]:
    """Run the trial plan and return the measured session plus its ground truth."""
    rng = np.random.default_rng(cfg.rng_seed)
    geom, model = cfg.geometry, cfg.thermal
    dt_origin = cfg.heating_schedule.at(0.0)

    # Origin: zero pose at t1. The platform frame is taken as exact (hole and
    # plane probing is not modelled) and the ball relation is bootstrapped from it.
    origin_true = cfg.cmm_placement
    centers0 = probe_ball_centers(origin_true.apply(cfg.ball_layout.ball_positions), cfg, rng)
    relation = establish_relation(centers0, origin_true)
    origin_measured = frame_from_balls(relation, centers0, cfg.congruence_tol)

    records, truths = [], []
    t = 0.0
    for step in cfg.trial_plan:
        t += step.dwell_s
        delta_t = cfg.heating_schedule.at(t) - dt_origin
        pose_t1 = step.pose
        if cfg.repeatability is not None:
            sigma_t, sigma_r = cfg.repeatability
            jitter = np.concatenate([rng.normal(0, sigma_t, 3), rng.normal(0, sigma_r, 3)])
            pose_t1 = Pose6.from_array(pose_t1.as_array() + jitter)
        q1 = igm(geom, pose_t1)
        q = q1 + model.expansion(q1, delta_t)
        pose = fgm(geom, q, initial_guess=pose_t1)

        frame_true = compose(cfg.cmm_placement, pose_to_transform(pose))
        centers = probe_ball_centers(frame_true.apply(cfg.ball_layout.ball_positions), cfg, rng)
        frame = frame_from_balls(relation, centers, cfg.congruence_tol)
        temps = cfg.ambient_temperature + cfg.heating_schedule.at(t)
        records.append(Record(step.role, frame, t, temps, step.pose))
        truths.append(
            TruthRecord(t, step.role, step.trial, step.pose, pose_t1, pose, delta_t, q1, q)
        )

    session = MeasurementSession(
        origin_measured,
        tuple(records),
        reference_pose_commanded=cfg.reference_pose,
        target_pose_commanded=cfg.target_pose,
        origin_timestamp=0.0,
    )
    return session, GroundTruth(origin_true, cfg.ball_layout, tuple(truths))


# ---------------------------------------------------------------------------
# Scenario builders


def bracketed_plan(
    n_trials: int,
    target: Pose6 = Pose6(),
    reference: Pose6 = REFERENCE_POSE,
    trial_period: float = 600.0,
    gap: float = 30.0,
) -> tuple[TrialStep, ...]:
    """R(t1) right after the origin, then per trial: R, target, R, ``gap`` s apart.

    Trial k (1-based) has its target at ``k * trial_period`` seconds.
    """
    steps = [TrialStep(Role.REF_BEFORE, reference, gap, 0)]
    t = gap
    for k in range(1, n_trials + 1):
        t_ref = k * trial_period - gap
        steps.append(TrialStep(Role.REF_BEFORE, reference, t_ref - t, k))
        steps.append(TrialStep(Role.TARGET, target, gap, k))
        steps.append(TrialStep(Role.REF_AFTER, reference, gap, k))
        t = t_ref + 2 * gap
    return tuple(steps)


def plateau_schedule(
    trial_rises, trial_period: float = 600.0, hold: float = 60.0
) -> HeatingSchedule:
    """Leg temperatures held flat around each trial, ramping in between.

    ``trial_rises`` is an ``(n_trials, 6)`` array of rises (K) held for
    ``hold`` seconds either side of each trial's target time. The schedule
    is zero around the origin and t1 reference measurements.
    """
    rises = np.asarray(trial_rises, dtype=float).reshape(-1, 6)
    times, values = [0.0, hold], [np.zeros(6), np.zeros(6)]
    for k, rise in enumerate(rises, start=1):
        centre = k * trial_period
        times += [centre - hold, centre + hold]
        values += [rise, rise]
    return HeatingSchedule(times, values)


def campaign_rises(n_trials: int = 10, base=None, differential_step: float = 0.3) -> np.ndarray:
    """Rises per trial: all legs follow a heat-up/cool-down base curve while
    legs 2 and 5 run progressively hotter than legs 3 and 4 (legs 1 and 6
    half-way), so the 2/5 minus 3/4 difference grows every trial."""
    if base is None:
        base = np.array([0.5, 1.0, 1.5, 2.0, 2.5, 2.8, 3.0, 2.7, 2.4, 2.1])[:n_trials]
    base = np.asarray(base, dtype=float)
    diff = differential_step * np.arange(1, n_trials + 1)
    rises = np.repeat(base[:, None], 6, axis=1)
    rises[:, [1, 4]] += diff[:, None]
    rises[:, [0, 5]] += 0.5 * diff[:, None]
    return rises


def heated_campaign_scenario(n_trials: int = 10, **overrides) -> ScenarioConfig:
    """Ten-trial heated campaign measuring the zero pose with R = [0, 0, -40 mm, 0, 0, 0]."""
    rises = campaign_rises(n_trials)
    cfg = ScenarioConfig(
        heating_schedule=plateau_schedule(rises),
        trial_plan=bracketed_plan(n_trials),
    )
    return replace(cfg, **overrides)


# ---------------------------------------------------------------------------
# Comparison


@dataclass(frozen=True, eq=False)
class TrialRow:
    trial: int
    timestamp: float
    leg_delta_t: np.ndarray  # K since t1
    leg_temperatures: np.ndarray  # degC
    air_temperature: float
    conventional: Pose6
    decoupled: Pose6
    truth: Pose6 | None = None

    @property
    def mean_delta_t(self) -> float:
        return float(np.mean(self.leg_delta_t))


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    rows: tuple[TrialRow, ...]
    summary: dict

    @property
    def n_trials(self) -> int:
        return len(self.rows)

    def errors(self, method: str) -> np.ndarray:
        """(n_trials, 6) estimate minus truth for ``method``."""
        return np.array(
            [getattr(row, method).as_array() - row.truth.as_array() for row in self.rows]
        )

    def estimates(self, method: str) -> np.ndarray:
        return np.array([getattr(row, method).as_array() for row in self.rows])


def trend_statistics(trial_index, values) -> dict:
    """Least-squares slope of ``values`` against trial index, with its p-value."""
    fit = stats.linregress(np.asarray(trial_index, float), np.asarray(values, float))
    return {
        "slope": float(fit.slope),
        "slope_stderr": float(fit.stderr),
        "p_value": float(fit.pvalue),
    }


def summarize(rows) -> dict:
    trials = np.array([row.trial for row in rows])
    truth = np.array([row.truth.as_array() for row in rows])
    mean_dt = np.array([row.mean_delta_t for row in rows])
    summary = {}
    for method in ("conventional", "decoupled"):
        drift = np.array([getattr(row, method).as_array() for row in rows]) - truth
        block = {}
        for j, name in enumerate(COMPONENTS):
            entry = {"drift_range": float(np.ptp(drift[:, j]))}
            if len(rows) >= 3:
                entry.update(trend_statistics(trials, drift[:, j]))
            block[name] = entry
        summary[method] = block
    if len(rows) >= 3 and np.ptp(mean_dt) > 0:
        conv_tz = np.array([row.conventional.tz for row in rows]) - truth[:, 2]
        summary["conventional_tz_vs_mean_dT_correlation"] = float(
            np.corrcoef(conv_tz, mean_dt)[0, 1]
        )
    return summary


def compare_session(
    cfg: ScenarioConfig, session: MeasurementSession, truth: GroundTruth
) -> ComparisonReport:
    """Post-process every target of a simulated session both ways."""
    rows = []
    for k, record in enumerate(session.targets):
        t_rec = truth.for_timestamp(record.timestamp)
        conv = conventional_pose(session, k)
        dec = decoupled_pose(cfg.geometry, cfg.thermal, session, k)
        rows.append(
            TrialRow(
                trial=t_rec.trial or k + 1,
                timestamp=record.timestamp,
                leg_delta_t=t_rec.delta_t,
                leg_temperatures=record.leg_temperatures,
                air_temperature=cfg.ambient_temperature,
                conventional=conv.pose,
                decoupled=dec.pose,
                truth=t_rec.pose_t1,
            )
        )
    return ComparisonReport(tuple(rows), summarize(rows))


def run_comparison(cfg: ScenarioConfig) -> ComparisonReport:
    """Simulate a campaign and post-process every target both ways."""
    session, truth = simulate_session(cfg)
    return compare_session(cfg, session, truth)
