"""Generational single-objective genetic algorithm (scalarized objective)."""

from __future__ import annotations

import numpy as np

from ..design import DesignSpec
from ..device import Device
from ..genotype import Genotype
from .common import (BestTracker, EvolutionTrace, OptimizerConfig, OptResult,
                     PlacementProblem, crossover, initial_population, mutate,
                     tournament_pick)


def ga_run(device: Device, design: DesignSpec, region: int,
           config: OptimizerConfig,
           initial: list[Genotype] | None = None) -> OptResult:
    """Tournament selection, the NSGA-II variation operators, elitism of 1."""
    config.validate()
    problem = PlacementProblem(device, design, region, config)
    rng = np.random.default_rng(config.rng_seed)
    trace = EvolutionTrace()
    tracker = BestTracker(trace)
    mu = config.population

    pop = initial_population(problem, config, rng, initial)
    scalars = []
    for g in pop:
        v = problem.evaluate(g)
        s = problem.scalar(v)
        scalars.append(s)
        tracker.update(g, v, s)
    evals = mu
    tracker.record(evals)

    target = config.target_scalar
    while evals < config.max_evaluations and (
            target is None or tracker.best_scalar > target):
        elite_idx = int(np.argmin(scalars))
        children = [pop[elite_idx].copy()]
        child_scalars = [scalars[elite_idx]]
        lam = min(mu - 1, config.max_evaluations - evals)
        for _ in range(lam):
            a = tournament_pick(rng, scalars, config.tournament_size)
            b = tournament_pick(rng, scalars, config.tournament_size)
            child = crossover(pop[a], pop[b], config, rng)
            mutate(child, config, rng, problem.n_real_genes)
            v = problem.evaluate(child)
            s = problem.scalar(v)
            tracker.update(child, v, s)
            children.append(child)
            child_scalars.append(s)
        evals += lam
        pop, scalars = children, child_scalars
        tracker.record(evals)

    return OptResult(
        best_genotype=tracker.best_genotype,
        best_objectives=tracker.best_objectives,
        best_scalar=tracker.best_scalar,
        trace=trace, evaluations=evals,
        stats={"generations": len(trace) - 1},
    )
