"""Search algorithms over placement genotypes."""

from __future__ import annotations

from ..design import DesignSpec
from ..device import Device
from ..genotype import Genotype
from .annealing import sa_run
from .cmaes import cmaes_minimize, cmaes_run
from .common import (ALGORITHMS, EvolutionTrace, OptimizerConfig, OptResult,
                     ParetoFront, PlacementProblem, crowding_distance,
                     dominates, fast_non_dominated_sort)
from .ga import ga_run
from .nsga2 import nsga2_reduced_run, nsga2_run

_RUNNERS = {
    "nsga2": nsga2_run,
    "nsga2_reduced": nsga2_reduced_run,
    "cmaes": cmaes_run,
    "sa": sa_run,
    "ga": ga_run,
}


def run_optimizer(device: Device, design: DesignSpec, region: int,
                  config: OptimizerConfig,
                  initial: list[Genotype] | None = None) -> OptResult:
    """Dispatch on config.algorithm."""
    config.validate()
    return _RUNNERS[config.algorithm](device, design, region, config,
                                      initial=initial)
