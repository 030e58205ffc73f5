#!/usr/bin/env python3
"""Optimizer comparison experiment at desk scale.

Runs each algorithm N times with seeded initialization on a bundled device's
repeating rectangle and tabulates quality-of-result statistics, mirroring the
toolkit's `compare` subcommand but with a config sized for a longer desk
experiment.

Usage: python scripts/run_compare.py [--device vu11p-like] [--evals 20000]
       [--runs 10] [--out compare-out]
"""

import argparse
import dataclasses
import time
from pathlib import Path

import numpy as np

from rapidplace.design import builtin_conv_unit, replicate_netlist
from rapidplace.device import load_bundled_device
from rapidplace.flow import select_repeating_rectangle
from rapidplace.optimizers import OptimizerConfig, run_optimizer

ALGOS = ("nsga2", "nsga2_reduced", "cmaes", "sa", "ga")


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--device", default="vu11p-like")
    ap.add_argument("--evals", type=int, default=20000)
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--out", default="compare-out")
    args = ap.parse_args()

    device = load_bundled_device(args.device)
    unit = builtin_conv_unit()
    plan = select_repeating_rectangle(device, unit)
    rect = dataclasses.replace(device, region_height=plan.region_height)
    design = replicate_netlist(unit, plan.units_per_rect)
    print(f"{args.device}: rect h={plan.region_height}, "
          f"{plan.units_per_rect} units, {design.size} blocks")

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for algo in ALGOS:
        for seed in range(args.runs):
            cfg = OptimizerConfig(algorithm=algo, rng_seed=seed,
                                  max_evaluations=args.evals)
            t0 = time.perf_counter()
            r = run_optimizer(rect, design, 0, cfg)
            wall = time.perf_counter() - t0
            rows.append((algo, seed, r.best_objectives.wl2,
                         r.best_objectives.max_bbox, r.best_scalar,
                         r.evaluations, wall))
            print(f"{algo} seed {seed}: scalar={r.best_scalar:.4g} "
                  f"wl2={r.best_objectives.wl2} bbox={r.best_objectives.max_bbox} "
                  f"({wall:.1f}s)")

    (out / "runs.csv").write_text(
        "algo,seed,wl2,bbox,scalar,evals,seconds\n"
        + "\n".join(",".join(str(v) for v in row) for row in rows) + "\n")

    print("\nper-algorithm medians:")
    for algo in ALGOS:
        sub = [r for r in rows if r[0] == algo]
        med = lambda i: np.median([r[i] for r in sub])
        print(f"  {algo:14s} wl2={med(2):.0f} bbox={med(3):.0f} "
              f"scalar={med(4):.4g} wall={med(6):.1f}s")


if __name__ == "__main__":
    main()
