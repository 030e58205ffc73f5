"""End-to-end flow: rectangle selection, optimization, replication,
post-placement pipelining, and transfer seeding.

The optimizer only ever sees the minimum repeating rectangle; its placement
is copy-pasted to tile one SLR and the SLR is cloned across the die. The
clock-frequency figure is a declared proxy (monotone in the worst per-stage
wire span) and is labeled proxy-MHz everywhere.
"""

from __future__ import annotations

import dataclasses
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .design import DesignSpec, UnitSpec, replicate_netlist
from .device import BlockType, Device, TYPE_ORDER, column_window_counts
from .errors import CapacityError, FlowError, ValidationError
from .genotype import (Genotype, Placement, encoding_shape, migrate,
                       save_placement)
from .objective import ObjectiveValues, check_constraints, evaluate_placement
from .optimizers import OptResult, OptimizerConfig, run_optimizer
from .optimizers.common import creep_variant
from .render import floorplan_svg

PROXY_F_BASE_MHZ = 800.0
PROXY_SLOPE = 0.008
DEFAULT_REACH = 16


@dataclass(frozen=True)
class RectanglePlan:
    region_height: int
    units_per_rect: int
    utilization: dict[BlockType, float]

    def min_utilization(self) -> float:
        return min(self.utilization.values())


def _window_lane_sizes(device: Device, btype: BlockType, rows: int):
    """Per-column cascade-lane sizes for the bottom window of ``rows``."""
    s = btype.cascade_stride
    out = []
    for _x, n in column_window_counts(device, btype, 0, rows):
        out.append([(n - r + s - 1) // s if n > r else 0 for r in range(s)])
    return out


def _units_fit(device: Device, unit: UnitSpec, rows: int) -> int:
    """How many unit copies the bottom ``rows``-high slice can host."""
    demands: dict[BlockType, list[int]] = {t: [] for t in TYPE_ORDER}
    chained: set[int] = set()
    for ch in unit.chains:
        demands[ch.block_type].append(len(ch.members))
        chained.update(ch.members)
    for b in unit.blocks:
        if b.id not in chained:
            demands[b.block_type].append(1)

    def fits(u: int) -> bool:
        for t in TYPE_ORDER:
            per_unit = demands[t]
            if not per_unit:
                continue
            lanes = [list(sz) for sz in _window_lane_sizes(device, t, rows)]
            flat = [lane for col in lanes for lane in col]
            for length in sorted(per_unit, reverse=True):
                need = u
                # first-fit-decreasing into lane free space
                flat.sort(reverse=True)
                for i, free in enumerate(flat):
                    if need == 0:
                        break
                    take = free // length
                    if take:
                        used = min(take, need)
                        flat[i] -= used * length
                        need -= used
                if need > 0:
                    return False
        return True

    lo, hi = 0, 0
    # exponential then binary search
    step = 1
    while fits(hi + step):
        hi += step
        step *= 2
    lo = hi
    step //= 2
    while step:
        if fits(lo + step):
            lo += step
        step //= 2
    return lo


def _slice_utilization(device: Device, unit: UnitSpec, rows: int,
                       units: int) -> dict[BlockType, float]:
    util = {}
    counts = unit.type_counts()
    for t in TYPE_ORDER:
        if counts[t] == 0:
            continue
        avail = sum(n for _x, n in column_window_counts(device, t, 0, rows))
        util[t] = (units * counts[t]) / avail if avail else 0.0
    return util


def select_repeating_rectangle(device: Device, unit: UnitSpec) -> RectanglePlan:
    """Walk halvings of the SLR height while a slice still fits a unit and
    keep the plan with the best minimum per-type utilization (ties go to
    the smaller slice)."""
    h = device.slr_height
    best: RectanglePlan | None = None
    while h >= 1:
        units = _units_fit(device, unit, h)
        if units == 0:
            break
        util = _slice_utilization(device, unit, h, units)
        plan = RectanglePlan(h, units, util)
        if best is None or plan.min_utilization() >= best.min_utilization():
            best = plan  # >= prefers the smaller (later) height on ties
        h //= 2
    if best is None:
        raise CapacityError({t.value: c for t, c in unit.type_counts().items() if c})
    return best


def replicate_placement(rect_placement: Placement, plan: RectanglePlan,
                        device: Device, unit: UnitSpec) -> Placement:
    """Tile the rectangle placement up one SLR, then clone across SLRs.

    Block ids are renumbered per clone exactly as replicate_netlist numbers
    a design of rects_per_slr * slr_count * units_per_rect units.
    """
    h = plan.region_height
    if device.slr_height % h != 0:
        raise ValidationError(
            "region_height",
            f"SLR height {device.slr_height} not a multiple of rect height {h}")
    rects_per_slr = device.slr_height // h
    n_blocks = len(rect_placement.block_ids)
    sites = {(c.block_type, c.x): c.y_sites for c in device.columns}

    ids = []
    types: list[BlockType] = []
    xs = []
    ys = []
    clone = 0
    for slr in range(device.slr_count):
        for r in range(rects_per_slr):
            dy = slr * device.slr_height + r * h
            off = clone * n_blocks
            for bid, bt, x, y in zip(rect_placement.block_ids,
                                     rect_placement.block_types,
                                     rect_placement.xs, rect_placement.ys):
                ny = int(y) + dy
                max_y = sites.get((bt, int(x)))
                if max_y is None or ny >= max_y:
                    raise ValidationError(
                        "replication",
                        f"clone of block {bid} lands on missing site ({x},{ny})")
                ids.append(bid + off)
                types.append(bt)
                xs.append(int(x))
                ys.append(ny)
            clone += 1
    return Placement(tuple(ids), tuple(types),
                     np.array(xs, dtype=np.int64), np.array(ys, dtype=np.int64))


@dataclass(frozen=True)
class PipelineReport:
    depth: int
    registers: int
    per_net_stages: tuple[int, ...]
    estimated_frequency: float  # proxy-MHz

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "registers": self.registers,
            "estimated_frequency_proxy_mhz": round(self.estimated_frequency, 3),
            "per_net_stages": list(self.per_net_stages),
        }


def pipeline_nets(placement: Placement, design: DesignSpec, depth: int,
                  reach: int = DEFAULT_REACH,
                  f_base: float = PROXY_F_BASE_MHZ,
                  slope: float = PROXY_SLOPE) -> PipelineReport:
    """Register insertion estimate for non-cascade nets.

    A net of Manhattan length L gets min(depth, ceil(L / reach)) stages;
    cascades ride dedicated wires and never get registers. The frequency
    proxy decays with the worst per-stage span: f_base / (1 + slope * span).
    """
    if depth < 0:
        raise ValidationError("depth", "must be >= 0")
    if reach <= 0:
        raise ValidationError("reach", "must be > 0")
    pos = {bid: i for i, bid in enumerate(placement.block_ids)}
    cascade_pairs = set()
    for ch in design.chains:
        for a, b in zip(ch.members, ch.members[1:]):
            cascade_pairs.add((a, b))
            cascade_pairs.add((b, a))
    stages = []
    registers = 0
    worst_span = 0.0
    for conn in design.connections:
        if (conn.src, conn.dst) in cascade_pairs:
            stages.append(0)
            continue
        i, j = pos[conn.src], pos[conn.dst]
        length = abs(int(placement.xs[i]) - int(placement.xs[j])) + abs(
            int(placement.ys[i]) - int(placement.ys[j]))
        s = min(depth, math.ceil(length / reach)) if length else 0
        stages.append(s)
        registers += s * conn.weight
        worst_span = max(worst_span, length / (s + 1))
    freq = f_base / (1.0 + slope * worst_span)
    return PipelineReport(depth, registers, tuple(stages), freq)


@dataclass
class FlowConfig:
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    pipeline_depth: int = 2
    pipeline_reach: int = DEFAULT_REACH

    def to_dict(self) -> dict:
        return {"optimizer": self.optimizer.to_dict(),
                "pipeline_depth": self.pipeline_depth,
                "pipeline_reach": self.pipeline_reach}


@dataclass
class FlowBundle:
    device: Device
    plan: RectanglePlan
    rect_design: DesignSpec
    rect_placement: Placement
    full_design: DesignSpec
    full_placement: Placement
    slr_pipeline: PipelineReport
    rect_objectives: ObjectiveValues
    full_objectives: ObjectiveValues
    result: OptResult
    log: list[str]


def run_flow(device: Device, unit: UnitSpec, config: FlowConfig) -> FlowBundle:
    """Replicate, select the rectangle, optimize, tile, pipeline, clone."""
    log: list[str] = []

    def step(name: str, fn):
        try:
            out = fn()
        except Exception as exc:
            raise FlowError(name, exc) from exc
        log.append(f"[{name}] ok")
        return out

    plan = step("select-rectangle", lambda: select_repeating_rectangle(device, unit))
    log.append(f"[select-rectangle] h={plan.region_height} units={plan.units_per_rect} "
               f"util={{{', '.join(f'{t.value}: {u:.4f}' for t, u in plan.utilization.items())}}}")
    rect_design = step("netlist-replication",
                       lambda: replicate_netlist(unit, plan.units_per_rect))

    rect_device = dataclasses.replace(device, region_height=plan.region_height)
    result = step("evolutionary-placement",
                  lambda: run_optimizer(rect_device, rect_design, 0,
                                        config.optimizer))
    rect_placement = step(
        "decode-best",
        lambda: _decode_best(result, rect_device, rect_design))
    rect_obj = evaluate_placement(rect_placement, rect_design)
    log.append(f"[evolutionary-placement] evals={result.evaluations} "
               f"wl2={rect_obj.wl2} bbox={rect_obj.max_bbox}")

    full_placement = step("replication",
                          lambda: replicate_placement(rect_placement, plan,
                                                      device, unit))
    rects_total = (device.slr_height // plan.region_height) * device.slr_count
    full_design = step("netlist-replication-full",
                       lambda: replicate_netlist(
                           unit, plan.units_per_rect * rects_total))

    slr_units = plan.units_per_rect * (device.slr_height // plan.region_height)
    slr_design = replicate_netlist(unit, slr_units)
    slr_blocks = len(slr_design.blocks)
    slr_placement = Placement(
        full_placement.block_ids[:slr_blocks],
        full_placement.block_types[:slr_blocks],
        full_placement.xs[:slr_blocks].copy(),
        full_placement.ys[:slr_blocks].copy())
    pipeline = step("pipelining",
                    lambda: pipeline_nets(slr_placement, slr_design,
                                          config.pipeline_depth,
                                          config.pipeline_reach))
    log.append(f"[pipelining] depth={pipeline.depth} regs={pipeline.registers} "
               f"freq={pipeline.estimated_frequency:.1f} proxy-MHz")

    full_obj = evaluate_placement(full_placement, full_design)
    report = step("constraint-check",
                  lambda: check_constraints(full_placement, full_design,
                                            _full_region_view(device), 0))
    if not report.ok:
        raise FlowError("constraint-check", ValidationError("placement", str(report)))
    log.append(f"[full-chip] blocks={len(full_placement.block_ids)} "
               f"wl2={full_obj.wl2} bbox={full_obj.max_bbox}")

    return FlowBundle(device=device, plan=plan, rect_design=rect_design,
                      rect_placement=rect_placement, full_design=full_design,
                      full_placement=full_placement, slr_pipeline=pipeline,
                      rect_objectives=rect_obj, full_objectives=full_obj,
                      result=result, log=log)


def _full_region_view(device: Device) -> Device:
    """Device view whose single region spans the whole die (SLR structure is
    irrelevant for legality checking)."""
    return dataclasses.replace(device, region_height=device.ymax, slr_count=1)


def _decode_best(result: OptResult, device: Device, design: DesignSpec) -> Placement:
    from .genotype import decode, decode_reduced
    shape = encoding_shape(device, design, 0)
    g = result.best_genotype
    try:
        return decode(g, device, design, 0)
    except ValidationError:
        return decode_reduced(g, device, design, 0)


def write_bundle(bundle: FlowBundle, out_dir: str | Path,
                 manifest: dict | None = None) -> Path:
    """Emit the flow artifact directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_placement(bundle.full_placement, out / "placement.json")
    (out / "trace.csv").write_text(bundle.result.trace.to_csv())
    pipeline = dict(bundle.slr_pipeline.to_dict())
    pipeline["chip_registers"] = bundle.slr_pipeline.registers * bundle.device.slr_count
    (out / "pipeline.json").write_text(json.dumps(pipeline, indent=2) + "\n")
    (out / "floorplan.svg").write_text(
        floorplan_svg(bundle.device, bundle.full_placement, bundle.full_design))
    (out / "flow.log").write_text("\n".join(bundle.log) + "\n")
    (out / "genotype.json").write_text(
        json.dumps(bundle.result.best_genotype.to_dict()) + "\n")
    summary = {
        "rect": {"height": bundle.plan.region_height,
                 "units": bundle.plan.units_per_rect,
                 "utilization": {t.value: u
                                 for t, u in bundle.plan.utilization.items()},
                 "objectives": bundle.rect_objectives.to_dict()},
        "full": bundle.full_objectives.to_dict(),
        "evaluations": bundle.result.evaluations,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    if bundle.result.front is not None:
        front = [{"objectives": v.to_dict(), "genotype": g.to_dict()}
                 for g, v in bundle.result.front.entries]
        (out / "front.json").write_text(json.dumps(front) + "\n")
    if manifest is not None:
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return out


@dataclass
class TransferOutcome:
    result: OptResult
    target: float
    evaluations_to_target: int | None


def transfer_place(seed_genotype: Genotype, src_device: Device,
                   dst_device: Device, design: DesignSpec,
                   config: OptimizerConfig, region: int = 0,
                   target: float | None = None) -> TransferOutcome:
    """Seed a destination-device search with a migrated genotype.

    The initial population keeps one unmutated migrated elite and fills the
    rest with creep-mutated copies (sigma 0.1); the run stops early once the
    best scalar reaches ``target``.
    """
    migrated = migrate(seed_genotype, src_device, dst_device, design,
                       region=region, rng_seed=config.rng_seed)
    rng = np.random.default_rng(config.rng_seed + 0x5EED)
    pop = [migrated]
    n = config.population if config.algorithm in ("nsga2", "nsga2_reduced", "ga") else max(config.population, 1)
    while len(pop) < n:
        pop.append(creep_variant(migrated, 0.1, rng))
    run_config = dataclasses.replace(config, target_scalar=target)
    result = run_optimizer(dst_device, design, region, run_config, initial=pop)
    evals_to = (result.trace.evals_to(target) if target is not None else None)
    return TransferOutcome(result=result, target=target if target is not None
                           else result.best_scalar,
                           evaluations_to_target=evals_to)
