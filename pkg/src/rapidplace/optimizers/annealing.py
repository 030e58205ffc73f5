"""Single-chain simulated annealing over genotypes."""

from __future__ import annotations

import math

import numpy as np

from ..design import DesignSpec
from ..device import Device, TYPE_ORDER
from ..errors import ValidationError
from ..genotype import Genotype
from .common import (BestTracker, EvolutionTrace, OptimizerConfig, OptResult,
                     PlacementProblem)


def make_schedule(cooling: str, t0: float, tmax: int,
                  beta: float | None, alpha: float | None):
    """Temperature as a function of move index t in [0, tmax]."""
    tmax = max(tmax, 1)
    if cooling == "hyperbolic":
        b = beta if beta is not None else 999.0 / tmax  # final T = 1e-3 * t0
        return lambda t: t0 / (1.0 + b * t)
    if cooling == "exponential":
        a = alpha if alpha is not None else math.exp(math.log(1e-3) / tmax)
        return lambda t: t0 * (a ** t)
    if cooling == "linear":
        return lambda t: t0 * max(0.0, 1.0 - t / tmax)
    raise ValidationError("cooling", f"unknown schedule {cooling!r}")


def _propose(current: Genotype, rng: np.random.Generator,
             sigma: float) -> Genotype:
    g = current.copy()
    swap_types = [t for t in TYPE_ORDER if len(g.mapping[t]) >= 2]
    moves = []
    if len(g.distribution):
        moves.append("distribution")
    if len(g.location):
        moves.append("location")
    if swap_types:
        moves.append("swap")
    kind = moves[int(rng.integers(0, len(moves)))]
    if kind == "distribution":
        i = int(rng.integers(0, len(g.distribution)))
        g.distribution[i] = float(np.clip(
            g.distribution[i] + rng.normal(0, sigma), 0.0, 1.0))
    elif kind == "location":
        i = int(rng.integers(0, len(g.location)))
        g.location[i] = float(np.clip(
            g.location[i] + rng.normal(0, sigma), 0.0, 1.0))
    else:
        t = swap_types[int(rng.integers(0, len(swap_types)))]
        perm = g.mapping[t]
        i, j = rng.integers(0, len(perm), size=2)
        perm[i], perm[j] = perm[j], perm[i]
    return g


def sa_run(device: Device, design: DesignSpec, region: int,
           config: OptimizerConfig,
           initial: list[Genotype] | None = None) -> OptResult:
    """Metropolis annealing: one uniformly chosen gene perturbation or
    mapping swap per move, temperature from the configured schedule."""
    config.validate()
    problem = PlacementProblem(device, design, region, config)
    rng = np.random.default_rng(config.rng_seed)
    trace = EvolutionTrace()
    tracker = BestTracker(trace)

    current = (initial[0].copy() if initial
               else problem.random(int(rng.integers(0, 2**31))))
    cur_values = problem.evaluate(current)
    cur_scalar = problem.scalar(cur_values)
    tracker.update(current, cur_values, cur_scalar)
    evals = 1
    tracker.record(evals)

    t0 = config.t0 if config.t0 is not None else 0.1 * max(cur_scalar, 1.0)
    schedule = make_schedule(config.cooling, t0, config.max_evaluations - 1,
                             config.beta, config.alpha)
    accepted = 0
    target = config.target_scalar
    while evals < config.max_evaluations and (
            target is None or tracker.best_scalar > target):
        temp = schedule(evals - 1)
        cand = _propose(current, rng, config.creep_sigma)
        values = problem.evaluate(cand)
        scalar = problem.scalar(values)
        evals += 1
        tracker.update(cand, values, scalar)
        delta = scalar - cur_scalar
        if delta <= 0 or (temp > 0 and rng.random() < math.exp(-delta / temp)):
            current, cur_values, cur_scalar = cand, values, scalar
            accepted += 1
        tracker.record(evals)

    return OptResult(
        best_genotype=tracker.best_genotype,
        best_objectives=tracker.best_objectives,
        best_scalar=tracker.best_scalar,
        trace=trace, evaluations=evals,
        stats={"accepted": accepted, "moves": evals - 1, "t0": t0,
               "acceptance_rate": accepted / max(evals - 1, 1)},
    )
