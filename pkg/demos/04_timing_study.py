#!/usr/bin/env python3
"""Reduced replication of the interim-timing study across the three effect
patterns, with the qualitative trends summarized at the end.

Run:  python demos/04_timing_study.py     (about a minute on two cores)
"""

import dataclasses
import os
import time

import numpy as np

from fast_trials.design import load_scenarios
from fast_trials.harness import run_grid

HERE = os.path.dirname(os.path.abspath(__file__))
GRID = (90, 150, 210, 300)
LABELS = {1: "both arms effective", 2: "second arm only", 3: "first arm only"}

scenarios = load_scenarios(os.path.join(HERE, "..", "scenarios", "timing_study.json"))
scenarios = [
    dataclasses.replace(s, n_drop_grid=GRID, n_feas_grid=GRID, replicates=250) for s in scenarios
]

all_results = {}
for scenario in scenarios:
    start = time.time()
    all_results[scenario.scenario_id] = run_grid(scenario, threads=os.cpu_count() or 1)
    print(f"scenario {scenario.scenario_id} ({LABELS[scenario.scenario_id]}): "
          f"{len(GRID) ** 2} cells in {time.time() - start:.1f}s")

print("\n== probability of retaining the designed-correct arm, by arm-dropping timing ==")
print(f"{'scenario':>22} " + " ".join(f"n_drop={d:>3}" for d in GRID))
for sid, results in all_results.items():
    by_drop = [np.mean([r.p_retain_correct for r in results if r.n_drop == d]) for d in GRID]
    print(f"{LABELS[sid]:>22} " + " ".join(f"{v:>10.3f}" for v in by_drop))
print("-> flat when the effective arms and the default agree; rising with n_drop")
print("   when the correct arm must be nominated by the data.")

print("\n== probability of proceeding past feasibility, by feasibility timing ==")
print(f"{'scenario':>22} " + " ".join(f"n_feas={f:>3}" for f in GRID))
for sid, results in all_results.items():
    by_feas = [np.mean([r.p_proceed for r in results if r.n_feas == f]) for f in GRID]
    print(f"{LABELS[sid]:>22} " + " ".join(f"{v:>10.3f}" for v in by_feas))
print("-> later feasibility looks at more data and proceeds more often.")

print("\n== overall power by interim ordering ==")
for sid, results in all_results.items():
    early = np.mean([r.power for r in results if r.n_drop < r.n_feas])
    late = np.mean([r.power for r in results if r.n_drop > r.n_feas])
    print(f"{LABELS[sid]:>22}: dropping-first cells {early:.3f} vs feasibility-first {late:.3f}")
print("-> scheduling the arm-dropping analysis before feasibility buys power:")
print("   the post-drop allocation concentrates subjects on control and the")
print("   surviving arm, which sharpens the pooled feasibility comparison.")
