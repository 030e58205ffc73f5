"""CMA-ES: full-covariance core with a separable high-dimensional mode,
plus the placement wrapper over a flat real vector.

The placement vector concatenates distribution, location, and one random
key per chain-group; mapping permutations are recovered by ranking the
keys, which keeps the whole search space continuous.
"""

from __future__ import annotations

import math

import numpy as np

from ..design import DesignSpec
from ..device import Device, TYPE_ORDER
from ..genotype import Genotype
from .common import (BestTracker, EvolutionTrace, OptimizerConfig, OptResult,
                     PlacementProblem)


def default_popsize(n: int) -> int:
    return 4 + int(3 * math.log(n))


def cmaes_minimize(fn, x0, sigma0: float, max_evals: int, seed: int,
                   popsize: int | None = None, diagonal: bool | None = None,
                   target: float | None = None, on_generation=None):
    """Minimize fn over R^n. Returns (xbest, fbest, evaluations).

    ``diagonal`` forces the separable covariance update; by default it is
    used for n > 1000. ``on_generation(evals, xbest, fbest)`` is called once
    per iteration. Raises RuntimeError on a non-finite objective value.
    """
    xmean = np.asarray(x0, dtype=float).copy()
    n = len(xmean)
    rng = np.random.default_rng(seed)
    lam = popsize or default_popsize(n)
    if diagonal is None:
        diagonal = n > 1000

    mun = lam // 2
    weights = np.log(mun + 0.5) - np.log(np.arange(1, mun + 1))
    weights /= weights.sum()
    mueff = weights.sum() ** 2 / (weights ** 2).sum()

    cc = (4.0 + mueff / n) / (n + 4.0 + 2.0 * mueff / n)
    cs = (mueff + 2.0) / (n + mueff + 5.0)
    c1 = 2.0 / ((n + 1.3) ** 2 + mueff)
    cmu = min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((n + 2.0) ** 2 + mueff))
    if diagonal:
        # separable variant: faster learning on the diagonal
        scale = (n + 2.0) / 3.0
        c1 = min(1.0, c1 * scale)
        cmu = min(1.0 - c1, cmu * scale)
    damps = 1.0 + 2.0 * max(0.0, math.sqrt((mueff - 1.0) / (n + 1.0)) - 1.0) + cs
    chin = math.sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n ** 2))

    sigma = float(sigma0)
    pc = np.zeros(n)
    ps = np.zeros(n)
    if diagonal:
        cdiag = np.ones(n)
    else:
        B = np.eye(n)
        D = np.ones(n)
        C = np.eye(n)
        invsqrtC = np.eye(n)
        eigeneval = 0

    xbest = xmean.copy()
    fbest = float("inf")
    evals = 0
    while evals < max_evals:
        k = min(lam, max_evals - evals)
        z = rng.standard_normal((lam, n))[:k]
        if diagonal:
            y = z * np.sqrt(cdiag)
        else:
            y = z @ (B * D).T
        xs = xmean + sigma * y
        fs = np.array([fn(x) for x in xs])
        evals += k
        if not np.isfinite(fs).all():
            raise RuntimeError(
                f"non-finite objective at evaluation {evals}: {fs}")
        order = np.argsort(fs, kind="stable")
        if fs[order[0]] < fbest:
            fbest = float(fs[order[0]])
            xbest = xs[order[0]].copy()
        if on_generation is not None:
            on_generation(evals, xbest, fbest)
        if target is not None and fbest <= target:
            break
        if k < mun:  # budget exhausted mid-generation
            break

        xold = xmean
        sel = order[:mun]
        xmean = weights @ xs[sel]
        y_w = (xmean - xold) / sigma

        if diagonal:
            ps = (1 - cs) * ps + math.sqrt(cs * (2 - cs) * mueff) * (
                y_w / np.sqrt(cdiag))
        else:
            ps = (1 - cs) * ps + math.sqrt(cs * (2 - cs) * mueff) * (
                invsqrtC @ y_w)
        hsig = (np.linalg.norm(ps)
                / math.sqrt(1 - (1 - cs) ** (2 * evals / lam)) / chin
                < 1.4 + 2 / (n + 1))
        pc = (1 - cc) * pc
        if hsig:
            pc = pc + math.sqrt(cc * (2 - cc) * mueff) * y_w

        artmp = (xs[sel] - xold) / sigma
        if diagonal:
            rank_mu = weights @ (artmp ** 2)
            cdiag = ((1 - c1 - cmu) * cdiag
                     + c1 * (pc ** 2 + (0.0 if hsig else cc * (2 - cc)) * cdiag)
                     + cmu * rank_mu)
            cdiag = np.maximum(cdiag, 1e-20)
        else:
            rank_mu = artmp.T @ (weights[:, None] * artmp)
            C = ((1 - c1 - cmu) * C
                 + c1 * (np.outer(pc, pc)
                         + (0.0 if hsig else cc * (2 - cc)) * C)
                 + cmu * rank_mu)
            if evals - eigeneval > lam / (c1 + cmu) / n / 10.0:
                eigeneval = evals
                C = np.triu(C) + np.triu(C, 1).T
                dvals, B = np.linalg.eigh(C)
                D = np.sqrt(np.maximum(dvals, 1e-20))
                invsqrtC = (B / D) @ B.T

        sigma *= math.exp((cs / damps) * (np.linalg.norm(ps) / chin - 1.0))
        if not math.isfinite(sigma) or sigma > 1e12:
            raise RuntimeError(f"step size diverged (sigma={sigma})")
    return xbest, fbest, evals


def flatten_genotype(genotype: Genotype) -> np.ndarray:
    keys = []
    for t in TYPE_ORDER:
        perm = np.asarray(genotype.mapping[t], dtype=float)
        m = len(perm)
        keys.append(perm / m if m else perm)
    return np.concatenate([genotype.distribution, genotype.location, *keys])


def unflatten_genotype(vec: np.ndarray, shape) -> Genotype:
    nd, nb = shape.n_dist, shape.n_blocks
    dist = np.clip(vec[:nd], 0.0, 1.0)
    loc = np.clip(vec[nd:nd + nb], 0.0, 1.0)
    mapping = {}
    off = nd + nb
    for t in TYPE_ORDER:
        m = shape.mapping_sizes[t]
        keys = vec[off:off + m]
        off += m
        order = np.argsort(keys, kind="stable")
        ranks = np.empty(m, dtype=np.int64)
        ranks[order] = np.arange(m)
        mapping[t] = ranks
    return Genotype(dist, loc, mapping)


def cmaes_run(device: Device, design: DesignSpec, region: int,
              config: OptimizerConfig,
              initial: list[Genotype] | None = None) -> OptResult:
    """Minimize the scalarized objective with CMA-ES over the flat vector."""
    config.validate()
    problem = PlacementProblem(device, design, region, config)
    rng = np.random.default_rng(config.rng_seed)
    trace = EvolutionTrace()
    tracker = BestTracker(trace)

    if initial:
        x0 = flatten_genotype(initial[0])
    else:
        n = (problem.shape.n_dist + problem.shape.n_blocks
             + sum(problem.shape.mapping_sizes[t] for t in TYPE_ORDER))
        x0 = rng.random(n)

    def fn(vec: np.ndarray) -> float:
        g = unflatten_genotype(vec, problem.shape)
        values = problem.evaluate(g)
        s = problem.scalar(values)
        tracker.update(g, values, s)
        return s

    def on_gen(evals, _xbest, _fbest):
        tracker.record(evals)

    diag = len(x0) > config.diag_threshold
    _xb, _fb, evals = cmaes_minimize(
        fn, x0, config.sigma0, config.max_evaluations,
        seed=int(rng.integers(0, 2**31)), diagonal=diag,
        target=config.target_scalar, on_generation=on_gen)

    return OptResult(
        best_genotype=tracker.best_genotype,
        best_objectives=tracker.best_objectives,
        best_scalar=tracker.best_scalar,
        trace=trace, evaluations=evals,
        stats={"dimension": len(x0), "diagonal": diag},
    )
