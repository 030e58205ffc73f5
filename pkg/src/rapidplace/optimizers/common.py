"""Shared optimizer machinery: config, traces, Pareto tools, variation."""

from __future__ import annotations

import time
from dataclasses import dataclass, field, asdict

import numpy as np

from ..design import DesignSpec
from ..device import Device, TYPE_ORDER
from ..errors import ValidationError
from ..genotype import (Genotype, Placement, _decode_arrays, decode,
                        encoding_shape, random_genotype, reduced_genotype)
from ..objective import EvalContext, ObjectiveValues, check_constraints, scalarize

ALGORITHMS = ("nsga2", "nsga2_reduced", "cmaes", "sa", "ga")
_POPULATION_ALGOS = {"nsga2", "nsga2_reduced", "ga"}


@dataclass
class OptimizerConfig:
    algorithm: str = "nsga2"
    population: int = 50
    max_evaluations: int = 10_000
    rng_seed: int = 0
    # variation (NSGA-II / GA)
    crossover_rate: float = 0.9
    mutation_rate: float | None = None  # default: 1 / (#real genes)
    creep_sigma: float = 0.1
    tournament_size: int = 2
    # simulated annealing
    cooling: str = "hyperbolic"  # hyperbolic | exponential | linear
    t0: float | None = None      # default: 0.1 * initial scalar
    beta: float | None = None    # hyperbolic; default: final T = 1e-3 * t0
    alpha: float | None = None   # exponential decay per move
    # CMA-ES
    sigma0: float = 0.3
    diag_threshold: int = 1000   # switch to separable covariance above this
    # scalarization for single-objective methods
    scalarization: str = "product"  # product | weighted
    weight_wl2: float = 1.0
    weight_bbox: float = 1.0
    # early stop / debugging
    target_scalar: float | None = None
    debug_check_legality: bool = False

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def from_dict(raw: dict) -> "OptimizerConfig":
        known = {f for f in OptimizerConfig.__dataclass_fields__}
        bad = set(raw) - known
        if bad:
            raise ValidationError("config", f"unknown fields: {sorted(bad)}")
        return OptimizerConfig(**raw)

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValidationError("algorithm", f"unknown algorithm {self.algorithm!r}")
        if self.algorithm in _POPULATION_ALGOS and self.population < 2:
            raise ValidationError("population", "must be >= 2 for population methods")
        if self.max_evaluations < self.population:
            raise ValidationError("max_evaluations", "must be >= population")
        if self.cooling not in ("hyperbolic", "exponential", "linear"):
            raise ValidationError("cooling", f"unknown schedule {self.cooling!r}")
        if self.scalarization not in ("product", "weighted"):
            raise ValidationError("scalarization", f"unknown {self.scalarization!r}")


@dataclass
class TraceRecord:
    evals: int
    wl2: int
    bbox: int
    scalar: float
    millis: float


class EvolutionTrace:
    """Best-so-far convergence records, one row per iteration."""

    def __init__(self):
        self.records: list[TraceRecord] = []
        self._t0 = time.perf_counter()

    def record(self, evals: int, wl2: int, bbox: int, scalar: float) -> None:
        ms = (time.perf_counter() - self._t0) * 1000.0
        self.records.append(TraceRecord(evals, wl2, bbox, scalar, ms))

    def evals_to(self, scalar_level: float) -> int | None:
        """First evaluation count at which best scalar reached the level."""
        for r in self.records:
            if r.scalar <= scalar_level:
                return r.evals
        return None

    def to_csv(self) -> str:
        lines = ["evals,wl2,bbox,scalar,millis"]
        for r in self.records:
            lines.append(f"{r.evals},{r.wl2},{r.bbox},{r.scalar},{r.millis:.3f}")
        return "\n".join(lines) + "\n"

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class ParetoFront:
    entries: tuple[tuple[Genotype, ObjectiveValues], ...]

    def __len__(self) -> int:
        return len(self.entries)

    def objectives(self) -> list[ObjectiveValues]:
        return [v for _, v in self.entries]


@dataclass
class OptResult:
    best_genotype: Genotype
    best_objectives: ObjectiveValues
    best_scalar: float
    trace: EvolutionTrace
    evaluations: int
    front: ParetoFront | None = None
    stats: dict = field(default_factory=dict)


def dominates(a, b) -> bool:
    """Component-wise <= with at least one strict < (minimization)."""
    return a[0] <= b[0] and a[1] <= b[1] and (a[0] < b[0] or a[1] < b[1])


def fast_non_dominated_sort(points) -> list[list[int]]:
    """Peel points into non-domination fronts (front 0 = non-dominated)."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if n == 0:
        return []
    le = (pts[:, None, :] <= pts[None, :, :]).all(axis=-1)
    lt = (pts[:, None, :] < pts[None, :, :]).any(axis=-1)
    dom = le & lt  # dom[i, j]: i dominates j
    ndom = dom.sum(axis=0).astype(np.int64)
    remaining = np.ones(n, dtype=bool)
    fronts: list[list[int]] = []
    while remaining.any():
        current = np.where(remaining & (ndom <= 0))[0]
        fronts.append(current.tolist())
        remaining[current] = False
        ndom = ndom - dom[current].sum(axis=0)
    return fronts


def crowding_distance(front_points) -> np.ndarray:
    """NSGA-II crowding distance; boundary points get inf per objective and
    a degenerate objective range contributes nothing."""
    pts = np.asarray(front_points, dtype=float)
    n = len(pts)
    dist = np.zeros(n)
    if n == 0:
        return dist
    for k in range(pts.shape[1]):
        vals = pts[:, k]
        vmin, vmax = vals.min(), vals.max()
        if vmax == vmin:
            continue
        order = np.argsort(vals, kind="stable")
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        gaps = (vals[order[2:]] - vals[order[:-2]]) / (vmax - vmin)
        dist[order[1:-1]] += gaps
    return dist


class PlacementProblem:
    """Decode-and-evaluate wrapper binding a search to one instance."""

    def __init__(self, device: Device, design: DesignSpec, region: int,
                 config: OptimizerConfig, reduced: bool = False):
        self.device = device
        self.design = design
        self.region = region
        self.config = config
        self.reduced = reduced
        self.shape = encoding_shape(device, design, region)
        self.shape.require_feasible()
        self.ctx = EvalContext(design)

    def evaluate(self, genotype: Genotype) -> ObjectiveValues:
        xs, ys = _decode_arrays(self.shape, genotype, reduced=self.reduced)
        if self.config.debug_check_legality:
            placement = Placement(self.shape.block_ids, self.shape.block_types,
                                  xs.copy(), ys.copy())
            report = check_constraints(placement, self.design, self.device,
                                       self.region)
            assert report.ok, f"illegal candidate:\n{report}"
        return self.ctx.evaluate(xs, ys)

    def scalar(self, values: ObjectiveValues) -> float:
        if self.config.scalarization == "weighted":
            return (self.config.weight_wl2 * values.wl2
                    + self.config.weight_bbox * values.max_bbox)
        return float(scalarize(values))

    def random(self, seed) -> Genotype:
        if self.reduced:
            return reduced_genotype(self.device, self.design, self.region, seed)
        return random_genotype(self.device, self.design, self.region, seed)

    @property
    def n_real_genes(self) -> int:
        return self.shape.n_dist + self.shape.n_blocks


class BestTracker:
    """Best-so-far bookkeeping shared by every algorithm's trace."""

    def __init__(self, trace: EvolutionTrace):
        self.trace = trace
        self.best_wl2: int | None = None
        self.best_bbox: int | None = None
        self.best_scalar: float = float("inf")
        self.best_genotype: Genotype | None = None
        self.best_objectives: ObjectiveValues | None = None

    def update(self, genotype: Genotype, values: ObjectiveValues,
               scalar: float) -> None:
        if self.best_wl2 is None or values.wl2 < self.best_wl2:
            self.best_wl2 = values.wl2
        if self.best_bbox is None or values.max_bbox < self.best_bbox:
            self.best_bbox = values.max_bbox
        if scalar < self.best_scalar:
            self.best_scalar = scalar
            self.best_genotype = genotype.copy()
            self.best_objectives = values

    def record(self, evals: int) -> None:
        self.trace.record(evals, self.best_wl2, self.best_bbox, self.best_scalar)


def tournament_pick(rng: np.random.Generator, keys: list, k: int) -> int:
    """Index of the best of k random entrants; keys sort ascending-is-better."""
    entrants = rng.integers(0, len(keys), size=k)
    best = entrants[0]
    for idx in entrants[1:]:
        if keys[idx] < keys[best]:
            best = idx
    return int(best)


def order_crossover(p1: np.ndarray, p2: np.ndarray,
                    rng: np.random.Generator) -> np.ndarray:
    """OX1: keep a slice of p1, fill the rest in p2's order."""
    m = len(p1)
    if m < 2:
        return p1.copy()
    i, j = sorted(rng.integers(0, m + 1, size=2))
    if i == j:
        return p1.copy()
    child = np.empty(m, dtype=p1.dtype)
    child[i:j] = p1[i:j]
    rest = p2[~np.isin(p2, p1[i:j])]
    child[:i] = rest[:i]
    child[j:] = rest[i:]
    return child


def crossover(a: Genotype, b: Genotype, config: OptimizerConfig,
              rng: np.random.Generator, reduced: bool = False) -> Genotype:
    child = a.copy()
    do_real = not reduced and rng.random() < config.crossover_rate
    if do_real:
        for attr in ("distribution", "location"):
            ga, gb = getattr(a, attr), getattr(b, attr)
            take_b = rng.random(len(ga)) < 0.5
            merged = np.where(take_b, gb, ga)
            setattr(child, attr, merged)
    for t in TYPE_ORDER:
        if len(child.mapping[t]) >= 2 and rng.random() < config.crossover_rate:
            child.mapping[t] = order_crossover(a.mapping[t], b.mapping[t], rng)
    return child


def mutate(genotype: Genotype, config: OptimizerConfig,
           rng: np.random.Generator, n_real: int, reduced: bool = False) -> None:
    # per-gene rate of 1/len for each tier, so the short distribution tier
    # sees as much mutation pressure as the long location tier
    if not reduced and n_real > 0:
        for attr in ("distribution", "location"):
            g = getattr(genotype, attr)
            if not len(g):
                continue
            pm = (config.mutation_rate if config.mutation_rate is not None
                  else 1.0 / len(g))
            mask = rng.random(len(g)) < pm
            hits = int(mask.sum())
            if hits:
                g[mask] = np.clip(g[mask] + rng.normal(0, config.creep_sigma, hits),
                                  0.0, 1.0)
    for t in TYPE_ORDER:
        perm = genotype.mapping[t]
        m = len(perm)
        if m < 2:
            continue
        pm = config.mutation_rate if config.mutation_rate is not None else 1.0 / m
        hits = np.where(rng.random(m) < pm)[0]
        for i in hits:
            j = int(rng.integers(0, m))
            perm[i], perm[j] = perm[j], perm[i]


def creep_variant(genotype: Genotype, sigma: float,
                  rng: np.random.Generator) -> Genotype:
    """Full-vector Gaussian creep used to spread a transfer seed."""
    g = genotype.copy()
    g.distribution = np.clip(
        g.distribution + rng.normal(0, sigma, len(g.distribution)), 0.0, 1.0)
    g.location = np.clip(
        g.location + rng.normal(0, sigma, len(g.location)), 0.0, 1.0)
    for t in TYPE_ORDER:
        perm = g.mapping[t]
        m = len(perm)
        if m >= 2 and rng.random() < 0.5:
            i, j = rng.integers(0, m, size=2)
            perm[i], perm[j] = perm[j], perm[i]
    return g


def initial_population(problem: PlacementProblem, config: OptimizerConfig,
                       rng: np.random.Generator,
                       initial: list[Genotype] | None) -> list[Genotype]:
    pop = [g.copy() for g in (initial or [])][: config.population]
    base = int(rng.integers(0, 2**31))
    while len(pop) < config.population:
        pop.append(problem.random(base + len(pop)))
    return pop
