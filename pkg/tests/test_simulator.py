from dataclasses import replace

import numpy as np
import pytest
from scipy.stats import ks_2samp

from hexapose.errors import ScheduleGapError
from hexapose.geometry import Pose6, compose, inverse, pose_to_transform, rotation_angle
from hexapose.kinematics import fgm, igm
from hexapose.metrology import establish_relation, fit_sphere, frame_from_balls
from hexapose.pipeline import Role, decoupled_pose
from hexapose.simulator import (
    HeatingSchedule,
    ScenarioConfig,
    bracketed_plan,
    heated_campaign_scenario,
    plateau_schedule,
    probe_pattern,
    run_comparison,
    simulate_session,
)
from hexapose.thermal import implied_leg_temperature_rise, reference_deflection


def single_trial(delta_t, sigma=0.0, seed=0, target=Pose6()):
    rises = np.broadcast_to(np.asarray(delta_t, float), (6,))[None, :]
    return ScenarioConfig(
        heating_schedule=plateau_schedule(rises),
        trial_plan=bracketed_plan(1, target=target),
        probe_noise_sigma=sigma,
        rng_seed=seed,
    )


def test_schedule_interpolation_and_gap():
    sched = HeatingSchedule([0, 10], [np.zeros(6), np.arange(6.0)])
    np.testing.assert_allclose(sched.at(5.0), np.arange(6.0) / 2)
    with pytest.raises(ScheduleGapError):
        sched.at(11.0)
    cfg = replace(single_trial(0.0), heating_schedule=HeatingSchedule.constant(0.0, until=100.0))
    with pytest.raises(ScheduleGapError):
        simulate_session(cfg)


def test_probe_pattern_on_sphere():
    pts = probe_pattern(25, 12.7, 110.0)
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 12.7)
    polar = np.degrees(np.arccos(pts[:, 2] / 12.7))
    assert polar.max() <= 110.0


def test_no_heating_no_noise_frames_are_commanded():
    target = Pose6(4, -2, 6, 0.01, -0.02, 0.005)
    session, truth = simulate_session(single_trial(0.0, target=target))
    assert session.origin_frame.allclose(truth.origin_frame, 1e-9)
    for rec in session.records:
        expected = compose(truth.origin_frame, pose_to_transform(rec.commanded_pose))
        assert rec.frame_in_m.allclose(expected, 1e-9)


def test_relation_matches_layout_without_noise():
    cfg = single_trial(0.0)
    centers = cfg.cmm_placement.apply(cfg.ball_layout.ball_positions)
    fitted = np.array([fit_sphere(c + probe_pattern(9, 12.7, 110.0)).center for c in centers])
    rel = establish_relation(fitted, cfg.cmm_placement)
    np.testing.assert_allclose(rel.ball_positions, cfg.ball_layout.ball_positions, atol=1e-12)


def test_uniform_one_kelvin_expansion_and_tz_shift():
    session, truth = simulate_session(single_trial(1.0))
    target = next(r for r in truth.records if r.role is Role.TARGET)
    # 23e-6 * 200 + 12e-6 * 300 = 8.2 um per leg
    np.testing.assert_allclose(target.leg_lengths - target.leg_lengths_t1, 8.2e-3, rtol=1e-9)
    cfg = single_trial(1.0)
    shift = fgm(cfg.geometry, np.full(6, 500.0) + 8.2e-3).as_array()
    np.testing.assert_allclose(target.pose.as_array(), shift, atol=1e-12)
    assert shift[2] > 8.2e-3  # legs lean, so the platform rises more than a leg grows


def test_truth_is_self_consistent():
    cfg = single_trial([0.2, 1.4, 3.3, 0.0, 4.9, 2.5], target=Pose6(3, 1, -5, 0.01, 0, -0.02))
    _, truth = simulate_session(cfg)
    for rec in truth.records:
        np.testing.assert_allclose(igm(cfg.geometry, rec.pose), rec.leg_lengths, atol=1e-9)
        np.testing.assert_allclose(igm(cfg.geometry, rec.pose_t1), rec.leg_lengths_t1, atol=1e-9)


def test_reference_deflection_matches_injected_expansion():
    delta_t = np.array([0.2, 1.4, 3.3, 0.0, 4.9, 2.5])
    cfg = single_trial(delta_t)
    session, truth = simulate_session(cfg)
    refs = [r for r in truth.records if r.role is not Role.TARGET]
    q_t1 = igm(cfg.geometry, session.pose_of(session.records[0]))
    q_t2 = igm(cfg.geometry, session.pose_of(session.records[-1]))
    dq = reference_deflection(q_t1, q_t2)
    injected = refs[-1].leg_lengths - refs[-1].leg_lengths_t1
    np.testing.assert_allclose(dq, injected, rtol=0, atol=1e-12)
    implied = implied_leg_temperature_rise(cfg.thermal, dq, q_t1)
    np.testing.assert_allclose(implied, delta_t, rtol=0, atol=1e-9)


def test_determinism():
    cfg = single_trial(1.0, sigma=1e-3, seed=42)
    a, _ = simulate_session(cfg)
    b, _ = simulate_session(cfg)
    for ra, rb in zip(a.records, b.records):
        np.testing.assert_array_equal(ra.frame_in_m.matrix, rb.frame_in_m.matrix)
    c, _ = simulate_session(replace(cfg, rng_seed=43))
    assert not np.array_equal(a.records[1].frame_in_m.matrix, c.records[1].frame_in_m.matrix)


def test_frame_scatter_consistent_with_metrology_monte_carlo():
    """Simulator frame noise versus the same chain built directly from metrology."""
    sigma = 2e-3
    cfg = single_trial(0.0, sigma=sigma)
    pattern = probe_pattern(cfg.points_per_ball, cfg.ball_radius, cfg.probe_max_polar_deg)
    layout = cfg.ball_layout.ball_positions
    origin = cfg.cmm_placement
    target_frame = compose(origin, pose_to_transform(Pose6()))

    def noisy_centers(frame, rng):
        return np.array(
            [fit_sphere(c + pattern + rng.normal(0, sigma, pattern.shape)).center for c in frame.apply(layout)]
        )

    sim_t, sim_r, mc_t, mc_r = [], [], [], []
    rng = np.random.default_rng(99)
    for seed in range(200):
        session, _ = simulate_session(replace(cfg, rng_seed=seed))
        rec = session.target()
        err = compose(inverse(target_frame), rec.frame_in_m)
        sim_t.append(np.linalg.norm(err.translation))
        sim_r.append(rotation_angle(err.rotation))

        rel = establish_relation(noisy_centers(origin, rng), origin)
        est = frame_from_balls(rel, noisy_centers(target_frame, rng))
        err = compose(inverse(target_frame), est)
        mc_t.append(np.linalg.norm(err.translation))
        mc_r.append(rotation_angle(err.rotation))
    # same distribution; percentiles of 200 draws are too noisy to compare directly
    assert ks_2samp(sim_t, mc_t).pvalue > 0.001
    assert ks_2samp(sim_r, mc_r).pvalue > 0.001
    assert np.sqrt(np.mean(np.square(sim_t))) == pytest.approx(np.sqrt(np.mean(np.square(mc_t))), rel=0.15)


def test_comparison_without_heating_agrees_to_noise_floor():
    cfg = replace(heated_campaign_scenario(4), heating_schedule=HeatingSchedule.constant(0.0))
    rep = run_comparison(cfg)
    assert rep.n_trials == 4
    conv, dec = rep.errors("conventional"), rep.errors("decoupled")
    # sigma = 1 um probing: a few micrometres / tens of microradians at most
    assert np.max(np.abs(conv[:, :3])) < 5e-3 and np.max(np.abs(conv[:, 3:])) < 1e-4
    assert np.max(np.abs(dec[:, :3])) < 10e-3 and np.max(np.abs(dec[:, 3:])) < 2e-4


def test_comparison_ramp_trends():
    rep = run_comparison(heated_campaign_scenario(probe_noise_sigma=0.0))
    assert rep.n_trials == 10
    conv, dec = rep.errors("conventional"), rep.errors("decoupled")
    assert np.all(np.diff(conv[:, 0]) > 0) and np.all(conv[:, 0] > 0)
    assert np.all(np.diff(conv[:, 3]) > 0) and np.all(conv[:, 3] > 0)
    assert np.max(np.abs(dec[:, :3])) < 1e-9 and np.max(np.abs(dec[:, 3:])) < 1e-11
    assert rep.summary["conventional_tz_vs_mean_dT_correlation"] > 0.99
    assert abs(rep.summary["decoupled"]["tx"]["slope"]) < 1e-10


def test_repeatability_injection_changes_truth():
    cfg = replace(single_trial(0.0), repeatability=(0.5e-3, 2.5e-6), rng_seed=3)
    session, truth = simulate_session(cfg)
    target = next(r for r in truth.records if r.role is Role.TARGET)
    assert not np.allclose(target.pose_t1.as_array(), 0.0, atol=1e-7)
    # decoupled still recovers the perturbed t1 pose closely (refs are jittered too)
    est = decoupled_pose(cfg.geometry, cfg.thermal, session)
    assert np.max(np.abs(est.pose.as_array()[:3] - target.pose_t1.as_array()[:3])) < 5e-3


@pytest.mark.slow
def test_decoupled_error_scales_with_probe_noise():
    cfg = single_trial([0.5, 2.0, 1.0, 3.0, 0.0, 4.0])
    sigmas = [0.0, 1e-3, 2e-3, 4e-3]
    rms = []
    for sigma in sigmas:
        errs = []
        for seed in range(100):
            session, truth = simulate_session(replace(cfg, probe_noise_sigma=sigma, rng_seed=seed))
            est = decoupled_pose(cfg.geometry, cfg.thermal, session)
            errs.append(est.pose.as_array()[:3] - truth.records[2].pose_t1.as_array()[:3])
        rms.append(np.sqrt(np.mean(np.square(errs))))
    assert rms[0] < 1e-9
    ratios = np.array(rms[1:]) / np.array(sigmas[1:])
    # proportional: same error per unit sigma at every level
    np.testing.assert_allclose(ratios, ratios.mean(), rtol=0.15)
