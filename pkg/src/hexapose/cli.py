"""Command line: ``hexapose {simulate,correct,fit,report}``.

Exit status: 0 success, 2 usage error, 3 config/scenario problem,
4 physics or numerical failure, 5 unreadable/unwritable data file.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import io
from .errors import HexaposeError, SchemaError
from .metrology import fit_sphere
from .pipeline import process_session
from .simulator import compare_session, simulate_session

EXIT_OK = 0
EXIT_CONFIG = 3
EXIT_PHYSICS = 4
EXIT_IO = 5

logger = logging.getLogger("hexapose")


class CliFailure(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load(loader, path, code):
    try:
        return loader(path)
    except FileNotFoundError:
        raise CliFailure(code, f"{path}: file not found") from None
    except OSError as exc:
        raise CliFailure(code, f"{path}: {exc}") from None
    except SchemaError as exc:
        raise CliFailure(code, f"{path}: {exc}") from None


def _angle_unit(args, project=None) -> str:
    if args.angle_unit:
        return args.angle_unit
    return project.angle_unit if project is not None else "deg"


def _write_all(files: dict):
    # Everything is computed before the first write so a failure leaves no outputs.
    written = []
    try:
        for path, text in files.items():
            io.write_text_atomic(path, text)
            written.append(path)
    except OSError as exc:
        for path in written:
            Path(path).unlink(missing_ok=True)
        raise CliFailure(EXIT_IO, f"cannot write output: {exc}") from None


def cmd_simulate(args) -> int:
    project = _load(io.load_config, args.config, EXIT_CONFIG)
    raw = _load(io.read_json, args.scenario, EXIT_CONFIG)
    try:
        scenario = io.scenario_from_dict(raw, project)
    except SchemaError as exc:
        raise CliFailure(EXIT_CONFIG, f"{args.scenario}: {exc}") from None
    if "points_per_ball" not in raw:
        scenario = replace(scenario, points_per_ball=project.points_per_ball)
    if "congruence_tol_mm" not in raw:
        scenario = replace(scenario, congruence_tol=project.congruence_tol)
    if args.seed is not None:
        scenario = replace(scenario, rng_seed=args.seed)

    session, truth = simulate_session(scenario)
    report = compare_session(scenario, session, truth)
    unit = _angle_unit(args, project)

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliFailure(EXIT_IO, f"cannot create {out}: {exc}") from None
    _write_all(
        {
            out / "session.json": io.dumps(io.session_to_dict(session, unit)),
            out / "truth.json": io.dumps(io.truth_to_dict(truth, unit)),
            out / "report.json": io.dumps(io.report_to_dict(report, unit)),
        }
    )
    logger.info("wrote %d-record session and %d-trial report to %s",
                len(session.records), report.n_trials, out)
    return EXIT_OK


def cmd_correct(args) -> int:
    project = _load(io.load_config, args.config, EXIT_CONFIG)
    session = _load(lambda p: io.session_from_dict(io.read_json(p)), args.session, EXIT_IO)
    pairs = process_session(project.geometry, project.thermal, session)
    _write_all({Path(args.out): io.dumps(io.estimates_to_dict(pairs, _angle_unit(args, project)))})
    return EXIT_OK


def cmd_fit(args) -> int:
    def read(path):
        return io.parse_points_csv(Path(path).read_text(encoding="utf-8"))

    groups = _load(read, args.points, EXIT_IO)
    balls = []
    for ball, points in groups.items():
        fit = fit_sphere(points)
        balls.append(
            {
                "ball": ball,
                "n_points": len(points),
                "center_mm": fit.center.tolist(),
                "radius_mm": fit.radius,
                "rms_residual_mm": fit.rms_residual,
            }
        )
    sys.stdout.write(json.dumps({"units": {"length": "mm"}, "spheres": balls}, indent=2) + "\n")
    return EXIT_OK


def cmd_report(args) -> int:
    report = _load(lambda p: io.report_from_dict(io.read_json(p)), args.report, EXIT_IO)
    _write_all({Path(args.out): io.report_long_table(report, _angle_unit(args))})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hexapose", description="Hexapod pose measurement with thermal-deflection correction."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def angle_flag(p):
        p.add_argument("--angle-unit", choices=io.ANGLE_UNITS, default=None,
                       help="angle unit of written files (default: config, else deg)")

    p = sub.add_parser("simulate", help="generate a synthetic heated measurement campaign")
    p.add_argument("--config", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    angle_flag(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("correct", help="conventional and decoupled poses for a session")
    p.add_argument("--config", required=True)
    p.add_argument("--session", required=True)
    p.add_argument("--out", required=True)
    angle_flag(p)
    p.set_defaults(func=cmd_correct)

    p = sub.add_parser("fit", help="fit spheres to probe points, print to stdout")
    p.add_argument("points")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("report", help="long-format table from a comparison report")
    p.add_argument("report")
    p.add_argument("--out", required=True)
    angle_flag(p)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except CliFailure as exc:
        print(f"hexapose: error: {exc}", file=sys.stderr)
        return exc.code
    except HexaposeError as exc:
        print(f"hexapose: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PHYSICS


if __name__ == "__main__":
    sys.exit(main())
