#!/usr/bin/env python3
"""Warm-start transfer experiment across the bundled device family.

Solves the seed device's rectangle from scratch, migrates the best genotype
to each destination device, and measures evaluations-to-target against
scratch runs with the same budget.

Usage: python scripts/run_transfer.py [--src vu3p-like]
       [--dst vu5p-like,vu7p-like,vu9p-like] [--evals 10000] [--runs 10]
"""

import argparse
import dataclasses

import numpy as np

from rapidplace.design import builtin_conv_unit, replicate_netlist
from rapidplace.device import load_bundled_device
from rapidplace.flow import select_repeating_rectangle, transfer_place
from rapidplace.optimizers import OptimizerConfig, run_optimizer


def rect_instance(name, unit):
    device = load_bundled_device(name)
    plan = select_repeating_rectangle(device, unit)
    return dataclasses.replace(device, region_height=plan.region_height), plan


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--src", default="vu3p-like")
    ap.add_argument("--dst", default="vu5p-like,vu7p-like,vu9p-like")
    ap.add_argument("--evals", type=int, default=10000)
    ap.add_argument("--runs", type=int, default=10)
    ap.add_argument("--algo", default="nsga2")
    args = ap.parse_args()

    unit = builtin_conv_unit()
    src_dev, src_plan = rect_instance(args.src, unit)
    design = replicate_netlist(unit, src_plan.units_per_rect)
    print(f"seed {args.src}: {src_plan.units_per_rect} units")

    seed_cfg = OptimizerConfig(algorithm=args.algo, rng_seed=0,
                               max_evaluations=args.evals)
    seed_run = run_optimizer(src_dev, design, 0, seed_cfg)
    print(f"seed scalar: {seed_run.best_scalar:.4g}")

    for dst_name in args.dst.split(","):
        dst_dev, _ = rect_instance(dst_name.strip(), unit)
        ratios = []
        for seed in range(args.runs):
            cfg = OptimizerConfig(algorithm=args.algo, rng_seed=seed,
                                  max_evaluations=args.evals)
            scratch = run_optimizer(dst_dev, design, 0, cfg)
            target = scratch.best_scalar
            seeded = transfer_place(seed_run.best_genotype, src_dev, dst_dev,
                                    design, cfg, target=target)
            evals_to = seeded.evaluations_to_target or float("inf")
            ratios.append(evals_to / args.evals)
            print(f"{dst_name} seed {seed}: target={target:.4g} "
                  f"seeded-evals={evals_to} ratio={ratios[-1]:.3f}")
        print(f"{dst_name}: median evals ratio = {np.median(ratios):.3f} "
              f"(speedup ~{1 / max(np.median(ratios), 1e-9):.1f}x)")


if __name__ == "__main__":
    main()
