import csv
import io as _io
import json
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from hexapose import io
from hexapose.cli import main
from hexapose.errors import SchemaError
from hexapose.geometry import Pose6, pose_to_transform
from hexapose.pipeline import process_session
from hexapose.simulator import (
    bracketed_plan,
    default_geometry,
    heated_campaign_scenario,
    plateau_schedule,
    ScenarioConfig,
    probe_pattern,
    run_comparison,
    simulate_session,
)
from hexapose.thermal import LegThermalModel


def small_scenario(**kw):
    rises = np.array([[0.5, 1.0, 0.2, 0.2, 1.0, 0.5], [1.0, 2.0, 0.4, 0.4, 2.0, 1.0]])
    return ScenarioConfig(
        heating_schedule=plateau_schedule(rises), trial_plan=bracketed_plan(2), rng_seed=5, **kw
    )


@pytest.fixture
def project(tmp_path):
    cfg = io.ProjectConfig(Path("geometry.json"), default_geometry(), LegThermalModel())
    path = tmp_path / "config.json"
    io.write_config(cfg, path)
    return path


def write_scenario(tmp_path, scenario, name="scenario.json", unit="deg"):
    path = tmp_path / name
    path.write_text(io.dumps(io.scenario_to_dict(scenario, unit)))
    return path


# -- schema -----------------------------------------------------------------


def test_pose_and_frame_roundtrip():
    pose = Pose6(1.5, -2, 3, 0.01, -0.02, 0.03)
    for unit in ("deg", "rad"):
        back = io.pose_from_dict(io.pose_to_dict(pose, unit), unit)
        np.testing.assert_allclose(back.as_array(), pose.as_array(), rtol=1e-15, atol=1e-18)
    frame = pose_to_transform(pose)
    assert io.frame_from_dict(json.loads(json.dumps(io.frame_to_dict(frame)))).allclose(frame, 0.0)


def test_config_roundtrip(project):
    cfg = io.load_config(project)
    np.testing.assert_array_equal(cfg.geometry.base_joints, default_geometry().base_joints)
    assert cfg.thermal.l_al[0] == 200.0 and cfg.angle_unit == "deg"
    data = json.loads(project.read_text())
    assert data["format"] == "hexapose.config" and data["format_version"] == 1
    assert data["units"]["length"] == "mm"


def test_missing_geometry_file(tmp_path, project):
    (tmp_path / "geometry.json").unlink()
    with pytest.raises(SchemaError):
        io.load_config(project)


def test_header_rejections():
    good = io.geometry_to_dict(default_geometry())
    io.geometry_from_dict(good)
    for mutate in (
        lambda d: d.update(format_version=2),
        lambda d: d.pop("units"),
        lambda d: d.update(format="hexapose.session"),
        lambda d: d["units"].update(length="m"),
    ):
        bad = json.loads(json.dumps(good))
        mutate(bad)
        with pytest.raises(SchemaError):
            io.geometry_from_dict(bad)


def test_scenario_roundtrip():
    cfg = small_scenario(repeatability=(1e-4, 1e-6))
    for unit in ("deg", "rad"):
        back = io.scenario_from_dict(json.loads(io.dumps(io.scenario_to_dict(cfg, unit))))
        assert back.rng_seed == cfg.rng_seed and back.repeatability == cfg.repeatability
        np.testing.assert_array_equal(back.heating_schedule.delta_t, cfg.heating_schedule.delta_t)
        assert [s.role for s in back.trial_plan] == [s.role for s in cfg.trial_plan]
        for a, b in zip(back.trial_plan, cfg.trial_plan):
            np.testing.assert_allclose(a.pose.as_array(), b.pose.as_array(), atol=1e-15)


def test_session_truth_report_roundtrip():
    cfg = small_scenario()
    session, truth = simulate_session(cfg)
    back = io.session_from_dict(json.loads(io.dumps(io.session_to_dict(session))))
    for a, b in zip(back.records, session.records):
        assert a.role is b.role and a.timestamp == b.timestamp
        assert a.frame_in_m.allclose(b.frame_in_m, 0.0)
    # the pipeline gives bit-identical answers on the reloaded session
    geom, model = cfg.geometry, cfg.thermal
    for (c1, d1), (c2, d2) in zip(process_session(geom, model, back), process_session(geom, model, session)):
        np.testing.assert_array_equal(d1.pose.as_array(), d2.pose.as_array())

    t_back = io.truth_from_dict(json.loads(io.dumps(io.truth_to_dict(truth, "rad"))))
    for a, b in zip(t_back.records, truth.records):
        np.testing.assert_array_equal(a.leg_lengths, b.leg_lengths)
        np.testing.assert_array_equal(a.pose.as_array(), b.pose.as_array())

    rep = run_comparison(cfg)
    r_back = io.report_from_dict(json.loads(io.dumps(io.report_to_dict(rep, "rad"))))
    assert r_back.n_trials == 2
    np.testing.assert_array_equal(r_back.errors("decoupled"), rep.errors("decoupled"))


def test_report_row_count_checked():
    data = io.report_to_dict(run_comparison(small_scenario()))
    data["n_trials"] = 3
    with pytest.raises(SchemaError):
        io.report_from_dict(data)


def test_points_csv_roundtrip_and_errors():
    pts = np.random.default_rng(0).normal(size=(8, 3))
    groups = io.parse_points_csv(io.points_to_csv(pts))
    np.testing.assert_array_equal(groups[""], pts)
    grouped = io.parse_points_csv(io.points_to_csv(pts, ["a"] * 4 + ["b"] * 4))
    np.testing.assert_array_equal(grouped["b"], pts[4:])
    with pytest.raises(SchemaError):
        io.parse_points_csv("x_mm,y_mm,z_mm\n1,2,3\n")
    with pytest.raises(SchemaError):
        io.parse_points_csv(io.points_to_csv(pts).replace("units=mm", "units=in"))


# -- CLI --------------------------------------------------------------------


def test_cli_simulate_writes_three_files(tmp_path, project):
    scen = write_scenario(tmp_path, small_scenario())
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(project), "--scenario", str(scen), "--out", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["report.json", "session.json", "truth.json"]
    report = io.report_from_dict(io.read_json(out / "report.json"))
    assert report.n_trials == 2


def test_cli_simulate_is_deterministic(tmp_path, project):
    scen = write_scenario(tmp_path, small_scenario())
    for name in ("a", "b"):
        main(["simulate", "--config", str(project), "--scenario", str(scen), "--out", str(tmp_path / name)])
    for f in ("session.json", "truth.json", "report.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()
    main(["simulate", "--config", str(project), "--scenario", str(scen),
          "--out", str(tmp_path / "c"), "--seed", "6"])
    assert (tmp_path / "a/session.json").read_bytes() != (tmp_path / "c/session.json").read_bytes()


def test_cli_missing_geometry_exit_code(tmp_path, project, capsys):
    (tmp_path / "geometry.json").unlink()
    scen = write_scenario(tmp_path, small_scenario())
    out = tmp_path / "run"
    code = main(["simulate", "--config", str(project), "--scenario", str(scen), "--out", str(out)])
    assert code == 3
    assert "geometry" in capsys.readouterr().err
    assert not out.exists() or not any(out.iterdir())


def test_cli_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--config", "x.json"])
    assert exc.value.code == 2


def test_cli_campaign_report_rows(tmp_path, project):
    scen = write_scenario(tmp_path, replace(heated_campaign_scenario(), rng_seed=1))
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(project), "--scenario", str(scen), "--out", str(out)]) == 0
    report = io.report_from_dict(io.read_json(out / "report.json"))
    assert report.n_trials == 10


def test_cli_correct_and_report(tmp_path, project):
    scen = write_scenario(tmp_path, small_scenario(probe_noise_sigma=0.0))
    run = tmp_path / "run"
    main(["simulate", "--config", str(project), "--scenario", str(scen), "--out", str(run)])
    est_path = tmp_path / "estimates.json"
    assert main(["correct", "--config", str(project), "--session", str(run / "session.json"),
                 "--out", str(est_path)]) == 0
    entries = io.estimates_from_dict(io.read_json(est_path))
    assert len(entries) == 2
    for entry in entries:
        np.testing.assert_allclose(entry["decoupled"].as_array(), 0.0, atol=1e-9)

    table = tmp_path / "table.csv"
    assert main(["report", str(run / "report.json"), "--out", str(table)]) == 0
    rows = list(csv.DictReader(_io.StringIO(table.read_text())))
    assert tuple(rows[0]) == io.LONG_COLUMNS
    assert {r["series"] for r in rows} >= {"conventional", "decoupled", "temperature"}
    assert {r["trial"] for r in rows} == {"1", "2"}


def test_cli_correct_bad_session(tmp_path, project):
    bad = tmp_path / "session.json"
    bad.write_text('{"format": "hexapose.session", "format_version": 9}')
    assert main(["correct", "--config", str(project), "--session", str(bad),
                 "--out", str(tmp_path / "e.json")]) == 5
    assert not (tmp_path / "e.json").exists()


def test_cli_fit(tmp_path, capsys):
    center = np.array([1.0, 2.0, 3.0])
    pts = center + probe_pattern(9, 12.7, 110.0)
    path = tmp_path / "points.csv"
    path.write_text(io.points_to_csv(pts))
    assert main(["fit", str(path)]) == 0
    out = json.loads(capsys.readouterr().out)
    np.testing.assert_allclose(out["spheres"][0]["center_mm"], center, atol=1e-10)
    assert out["spheres"][0]["radius_mm"] == pytest.approx(12.7, abs=1e-10)

    flat = tmp_path / "flat.csv"
    flat.write_text(io.points_to_csv([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]]))
    assert main(["fit", str(flat)]) == 4
    assert main(["fit", str(tmp_path / "nope.csv")]) == 5
