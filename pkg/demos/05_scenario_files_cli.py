#!/usr/bin/env python3
"""The file-and-CLI workflow end to end, in a temp directory.

Builds a mixed scenario (one position-form agent, one control-form
agent), writes it to JSON, and drives the same entry points the
``trajrisk`` console script exposes: ``assess`` for machine-readable
reports, ``compare`` for a quick method/timing table, and ``oracle``
for the Monte Carlo reference.  Everything here works identically from
a shell; the in-process calls just keep the demo self-contained.
"""

import json
import math
import tempfile
from pathlib import Path

from trajrisk.cli import main
from trajrisk.scenario import load_scenario, scenario_from_dict, write_scenario

print(__doc__)

scenario_dict = {
    "ego_trajectory": [
        {"x": 0.0, "y": -3.0 + 0.9 * t, "theta": math.pi / 2} for t in range(8)
    ],
    "ellipsoid": {"q": [[1 / 2.0**2, 0.0], [0.0, 1 / 1.0**2]]},
    "agents": [
        {
            "form": "gmm_position",
            "mode_persistence": True,
            "steps": [
                {
                    "modes": [
                        {
                            "weight": 0.7,
                            "mean": [6.0 - 1.0 * t, 0.2],
                            "cov": [[0.25, 0.0], [0.0, 0.09]],
                        },
                        {
                            "weight": 0.3,
                            "mean": [6.0 - 1.3 * t, -0.4],
                            "cov": [[0.36, 0.05], [0.05, 0.16]],
                        },
                    ]
                }
                for t in range(1, 9)
            ],
        },
        {
            "form": "gmm_control",
            "initial_state": {"x": 7.5, "y": -0.8, "v": 1.1, "theta": math.pi},
            "steps": [
                {
                    "w_v_modes": [{"weight": 1.0, "mean": -0.01, "var": 0.0004}],
                    "w_theta_modes": [{"weight": 1.0, "mean": 0.004, "var": 0.0001}],
                }
            ]
            * 8,
        },
    ],
}

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    scenario_path = str(tmp / "crossing.json")
    write_scenario(scenario_from_dict(scenario_dict), scenario_path)
    print(f"wrote {scenario_path} "
          f"({load_scenario(scenario_path).horizon} steps, 2 agents)")
    print()

    print("$ trajrisk compare --scenario crossing.json "
          "--methods mc,chebyshev-quad,sos --sos-degree 2")
    rc = main(["compare", "--scenario", scenario_path,
               "--methods", "mc,chebyshev-quad,sos", "--sos-degree", "2",
               "--mc-samples", "200000"])
    print(f"(exit code {rc})")
    print()

    report_path = str(tmp / "report.json")
    print("$ trajrisk assess --scenario crossing.json "
          "--methods chebyshev-quad --out report.json")
    rc = main(["assess", "--scenario", scenario_path,
               "--methods", "chebyshev-quad", "--out", report_path])
    report = json.loads(Path(report_path).read_text(encoding="utf-8"))
    print(f"(exit code {rc}; report holds {len(report['per_step'])} per-step rows; "
          f"union bound {report['multi_agent_bound']['chebyshev-quad']:.4f})")
    print()

    csv_path = str(tmp / "report.csv")
    print("$ trajrisk oracle --scenario crossing.json --mc-samples 200000 "
          "--format csv --out report.csv")
    rc = main(["oracle", "--scenario", scenario_path,
               "--mc-samples", "200000", "--format", "csv", "--out", csv_path])
    lines = Path(csv_path).read_text(encoding="utf-8").strip().split("\n")
    print(f"(exit code {rc}; first rows of the csv:)")
    for line in lines[:5]:
        print(f"  {line}")
    print(f"  ... {len(lines) - 5} more rows")
