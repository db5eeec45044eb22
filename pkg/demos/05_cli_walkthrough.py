"""End-to-end run of the command line tool in a scratch directory.

Writes a project config and a scenario file, then runs
simulate -> correct -> report and fits one ball from a points file.
"""

import json
import sys
import tempfile
from pathlib import Path

from hexapose import io
from hexapose.cli import main
from hexapose.simulator import default_geometry, heated_campaign_scenario, probe_pattern
from hexapose.thermal import LegThermalModel

work = Path(tempfile.mkdtemp(prefix="hexapose-"))
config = work / "config.json"
io.write_config(io.ProjectConfig(Path("geometry.json"), default_geometry(), LegThermalModel()), config)
scenario = work / "scenario.json"
scenario.write_text(io.dumps(io.scenario_to_dict(heated_campaign_scenario(rng_seed=11))))


def run(*argv):
    print("$ hexapose", " ".join(str(a) for a in argv), flush=True)
    code = main([str(a) for a in argv])
    sys.stderr.flush()
    print("  exit", code)


run("simulate", "--config", config, "--scenario", scenario, "--out", work / "run")
run("correct", "--config", config, "--session", work / "run/session.json", "--out", work / "estimates.json")
run("report", work / "run/report.json", "--out", work / "table.csv")

est = json.loads((work / "estimates.json").read_text())
last = est["targets"][-1]
print("last target, conventional:", {k: round(v, 5) for k, v in last["conventional"].items()})
print("last target, decoupled   :", {k: round(v, 5) for k, v in last["decoupled"].items()})
print("first rows of the long table:")
print("".join((work / "table.csv").read_text().splitlines(keepends=True)[:4]))

points = work / "ball.csv"
points.write_text(io.points_to_csv([10.0, 20.0, 30.0] + probe_pattern(9, 12.7, 110.0)))
run("fit", points)

(work / "geometry.json").unlink()
run("simulate", "--config", config, "--scenario", scenario, "--out", work / "run2")
print("outputs in", work)
