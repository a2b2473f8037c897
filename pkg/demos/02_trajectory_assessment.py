#!/usr/bin/env python3
"""Whole-horizon risk on a synthetic intersection crossing.

Draws a 30-step crossing scenario (ego northbound, agent westbound, three
prediction modes), assesses it with an exact method and two bounds, and
prints the per-step risk profile around the conflict point.  The second
half composes a hand-built two-mode agent both ways -- modes resampled
independently each step versus one mode persisting over the horizon -- to
show why persistence matters: the persistent union never exceeds the
independent one when the risky steps concentrate in a single mode.
"""

from trajrisk.distributions import Gaussian2D, Gaussian2DMixture
from trajrisk.engine import marginal_risk, trajectory_risk
from trajrisk.frames import EgoPose, Ellipsoid
from trajrisk.scenario import run_assess, scenario_from_dict
from trajrisk.synthetic import crossing_position_scenario

print(__doc__)

# Seed 11 is a near miss: the agent crosses about one second behind the ego.
scenario = scenario_from_dict(crossing_position_scenario(seed=11))
report = run_assess(scenario, ["imhof", "chebyshev-quad", "chebyshev-halfspace"],
                    tol=1e-10)

by_method = {}
for row in report.rows:
    by_method.setdefault(row.method, {})[row.t] = row.value

print(f"{'t':>3s} {'imhof':>12s} {'cheb-quad':>12s} {'cheb-half':>12s}")
risky = [t for t, v in by_method["imhof"].items() if v > 1e-9]
window = range(min(risky) - 2, max(risky) + 3) if risky else range(1, 6)
for t in window:
    if not 1 <= t <= scenario.horizon:
        continue
    print(f"{t:3d} {by_method['imhof'][t]:12.3e} "
          f"{by_method['chebyshev-quad'][t]:12.3e} "
          f"{by_method['chebyshev-halfspace'][t]:12.3e}")
print("(steps outside this window carry negligible risk)")
print()
for total in report.totals:
    print(f"trajectory total via {total.method:20s} {total.value:.3e}")
print()

# --- mode persistence --------------------------------------------------
# An agent that either stays in its lane (harmless) or drifts into the
# ego path (risky), with the same two-mode split at every step.
safe = Gaussian2D([6.0, 0.0], [[0.3, 0.0], [0.0, 0.2]])
drift = Gaussian2D([1.2, 0.0], [[0.3, 0.0], [0.0, 0.2]])
step_mix = Gaussian2DMixture((safe, drift), (0.5, 0.5))
pose = EgoPose(0.0, 0.0, 0.0)
disk = Ellipsoid([[1.0, 0.0], [0.0, 1.0]])

marginals = [marginal_risk(step_mix, pose, disk, "imhof", t=t) for t in range(4)]
independent = trajectory_risk(marginals).total
persistent = trajectory_risk(marginals, mode_persistence=True).total
print("two-mode stay-or-drift agent, 4 steps, per-step mixed risk "
      f"{marginals[0].mixed:.3f}:")
print(f"  modes independent across steps: {independent:.4f}")
print(f"  one mode persists all horizon:  {persistent:.4f}")
print("persistence keeps the harmless mode harmless for the whole run,")
print("so the union concentrates in the drifting mode instead of compounding.")
