"""Elitist two-objective NSGA-II over placement genotypes."""

from __future__ import annotations

import numpy as np

from ..design import DesignSpec
from ..device import Device
from ..genotype import Genotype
from .common import (BestTracker, EvolutionTrace, OptimizerConfig, OptResult,
                     ParetoFront, PlacementProblem, crossover, crowding_distance,
                     fast_non_dominated_sort, initial_population, mutate,
                     tournament_pick)


def _rank_and_crowding(points):
    fronts = fast_non_dominated_sort(points)
    n = len(points)
    rank = np.zeros(n, dtype=np.int64)
    crowd = np.zeros(n)
    for r, front in enumerate(fronts):
        rank[front] = r
        crowd[front] = crowding_distance([points[i] for i in front])
    return fronts, rank, crowd


def _select_survivors(fronts, crowd, mu: int) -> list[int]:
    survivors: list[int] = []
    for front in fronts:
        if len(survivors) + len(front) <= mu:
            survivors.extend(front)
        else:
            need = mu - len(survivors)
            # most-crowded-distance first; stable on index for determinism
            ordered = sorted(front, key=lambda i: (-crowd[i], i))
            survivors.extend(ordered[:need])
            break
    return survivors


def nsga2_run(device: Device, design: DesignSpec, region: int,
              config: OptimizerConfig, initial: list[Genotype] | None = None,
              reduced: bool = False) -> OptResult:
    """(mu + lambda) NSGA-II: binary tournament on (rank, crowding), uniform
    crossover plus creep mutation on the real tiers, order crossover plus
    swap mutation on the mapping tier."""
    config.validate()
    problem = PlacementProblem(device, design, region, config, reduced=reduced)
    rng = np.random.default_rng(config.rng_seed)
    trace = EvolutionTrace()
    tracker = BestTracker(trace)
    mu = config.population

    pop = initial_population(problem, config, rng, initial)
    objs = [problem.evaluate(g) for g in pop]
    for g, v in zip(pop, objs):
        tracker.update(g, v, problem.scalar(v))
    evals = mu
    tracker.record(evals)

    target = config.target_scalar
    while evals < config.max_evaluations and (
            target is None or tracker.best_scalar > target):
        points = [(v.wl2, v.max_bbox) for v in objs]
        _fronts, rank, crowd = _rank_and_crowding(points)
        keys = [(int(rank[i]), -float(crowd[i]), i) for i in range(mu)]

        lam = min(mu, config.max_evaluations - evals)
        children = []
        for _ in range(lam):
            a = tournament_pick(rng, keys, config.tournament_size)
            b = tournament_pick(rng, keys, config.tournament_size)
            child = crossover(pop[a], pop[b], config, rng, reduced=reduced)
            mutate(child, config, rng, problem.n_real_genes, reduced=reduced)
            children.append(child)
        child_objs = [problem.evaluate(c) for c in children]
        evals += lam
        for g, v in zip(children, child_objs):
            tracker.update(g, v, problem.scalar(v))

        merged = pop + children
        merged_objs = objs + child_objs
        merged_points = [(v.wl2, v.max_bbox) for v in merged_objs]
        fronts, _rank2, crowd2 = _rank_and_crowding(merged_points)
        keep = _select_survivors(fronts, crowd2, mu)
        pop = [merged[i] for i in keep]
        objs = [merged_objs[i] for i in keep]
        tracker.record(evals)

    points = [(v.wl2, v.max_bbox) for v in objs]
    fronts = fast_non_dominated_sort(points)
    front = ParetoFront(tuple((pop[i].copy(), objs[i]) for i in fronts[0]))
    return OptResult(
        best_genotype=tracker.best_genotype,
        best_objectives=tracker.best_objectives,
        best_scalar=tracker.best_scalar,
        trace=trace, evaluations=evals, front=front,
        stats={"generations": len(trace) - 1, "front_size": len(front)},
    )


def nsga2_reduced_run(device: Device, design: DesignSpec, region: int,
                      config: OptimizerConfig,
                      initial: list[Genotype] | None = None) -> OptResult:
    """NSGA-II over the mapping-only genotype (uniform split, bottom-up
    stacking); the real tiers are carried but never varied or decoded."""
    return nsga2_run(device, design, region, config, initial=initial,
                     reduced=True)
