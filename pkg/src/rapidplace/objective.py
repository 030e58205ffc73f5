"""Twin placement objectives and the legality checker.

Squared wirelength sums ((|dx| + |dy|) * w)^2 over all weighted
connections; the bounding-box term is the worst (width + height) over the
per-unit enclosing rectangles. Both are exact integers on the grid. The
scalarized single objective is their product.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import DesignSpec
from .device import BlockType, Device
from .errors import ValidationError
from .genotype import Placement


@dataclass(frozen=True)
class ObjectiveValues:
    wl2: int
    max_bbox: int
    scalar: int

    def __post_init__(self):
        if self.wl2 < 0 or self.max_bbox < 0:
            raise ValidationError("objective", "components must be >= 0")
        if self.scalar != self.wl2 * self.max_bbox:
            raise ValidationError("scalar", "must equal wl2 * max_bbox")

    @staticmethod
    def of(wl2: int, max_bbox: int) -> "ObjectiveValues":
        return ObjectiveValues(int(wl2), int(max_bbox), int(wl2) * int(max_bbox))

    def to_dict(self) -> dict:
        return {"wl2": self.wl2, "max_bbox": self.max_bbox, "scalar": self.scalar}


def scalarize(values: ObjectiveValues) -> int:
    """Product objective; a degenerate zero-size bounding box falls back to
    wl2 so a single-site unit cannot zero out the whole objective."""
    if values.max_bbox == 0:
        return values.wl2
    return values.scalar


class EvalContext:
    """Vectorized evaluator for a fixed design.

    Placements are given as coordinate arrays in design block order, so the
    optimizer hot loop never materializes Placement objects.
    """

    def __init__(self, design: DesignSpec):
        self.design = design
        idx = {b.id: i for i, b in enumerate(design.blocks)}
        self.src = np.array([idx[c.src] for c in design.connections], dtype=np.int64)
        self.dst = np.array([idx[c.dst] for c in design.connections], dtype=np.int64)
        self.w = np.array([c.weight for c in design.connections], dtype=np.int64)
        self.unit = np.array([b.unit for b in design.blocks], dtype=np.int64)
        self.n_units = int(self.unit.max()) + 1 if len(design.blocks) else 0
        cascade_pairs = set()
        for ch in design.chains:
            for a, b in zip(ch.members, ch.members[1:]):
                cascade_pairs.add((idx[a], idx[b]))
                cascade_pairs.add((idx[b], idx[a]))
        self.is_cascade = np.array(
            [(int(s), int(d)) in cascade_pairs for s, d in zip(self.src, self.dst)],
            dtype=bool,
        )

    def wl2(self, xs: np.ndarray, ys: np.ndarray) -> int:
        dist = (np.abs(xs[self.src] - xs[self.dst])
                + np.abs(ys[self.src] - ys[self.dst]))
        term = dist * self.w
        return int(np.dot(term, term))

    def max_bbox(self, xs: np.ndarray, ys: np.ndarray) -> int:
        if self.n_units == 0:
            return 0
        hi = np.iinfo(np.int64)
        min_x = np.full(self.n_units, hi.max, dtype=np.int64)
        max_x = np.full(self.n_units, hi.min, dtype=np.int64)
        min_y = np.full(self.n_units, hi.max, dtype=np.int64)
        max_y = np.full(self.n_units, hi.min, dtype=np.int64)
        np.minimum.at(min_x, self.unit, xs)
        np.maximum.at(max_x, self.unit, xs)
        np.minimum.at(min_y, self.unit, ys)
        np.maximum.at(max_y, self.unit, ys)
        return int(((max_x - min_x) + (max_y - min_y)).max())

    def evaluate(self, xs: np.ndarray, ys: np.ndarray) -> ObjectiveValues:
        return ObjectiveValues.of(self.wl2(xs, ys), self.max_bbox(xs, ys))


def _coords_for(placement: Placement, design: DesignSpec):
    pos = {bid: i for i, bid in enumerate(placement.block_ids)}
    try:
        order = [pos[b.id] for b in design.blocks]
    except KeyError as exc:
        raise ValidationError(
            "placement", f"missing assignment for block {exc.args[0]}") from exc
    sel = np.array(order, dtype=np.int64)
    return placement.xs[sel], placement.ys[sel]


def wirelength_squared(placement: Placement, design: DesignSpec) -> int:
    xs, ys = _coords_for(placement, design)
    return EvalContext(design).wl2(xs, ys)


def max_bbox(placement: Placement, design: DesignSpec) -> int:
    xs, ys = _coords_for(placement, design)
    return EvalContext(design).max_bbox(xs, ys)


def evaluate_placement(placement: Placement, design: DesignSpec) -> ObjectiveValues:
    xs, ys = _coords_for(placement, design)
    return EvalContext(design).evaluate(xs, ys)


@dataclass(frozen=True)
class Violation:
    kind: str  # region | exclusivity | cascade
    blocks: tuple[int, ...]
    detail: str


@dataclass(frozen=True)
class ConstraintReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(f"[{v.kind}] blocks {v.blocks}: {v.detail}"
                         for v in self.violations)


def check_constraints(placement: Placement, design: DesignSpec,
                      device: Device, region: int) -> ConstraintReport:
    """Report region, exclusivity, and cascade violations (ok if none)."""
    violations: list[Violation] = []
    site_of = {}
    for bid, bt, x, y in zip(placement.block_ids, placement.block_types,
                             placement.xs, placement.ys):
        site_of[bid] = (bt, int(x), int(y))

    h = device.region_height
    y_lo, y_hi = region * h, (region + 1) * h
    cols = {(c.block_type, c.x): c for c in device.columns}
    for b in design.blocks:
        if b.id not in site_of:
            violations.append(Violation("region", (b.id,), "block not assigned"))
            continue
        bt, x, y = site_of[b.id]
        if bt is not b.block_type:
            violations.append(Violation(
                "region", (b.id,),
                f"assigned {bt.value} site but block is {b.block_type.value}"))
            continue
        col = cols.get((bt, x))
        if not (0 <= x < device.xmax and y_lo <= y < y_hi):
            violations.append(Violation(
                "region", (b.id,), f"site ({x},{y}) outside region {region}"))
        elif col is None or y >= col.y_sites:
            violations.append(Violation(
                "region", (b.id,), f"no {bt.value} site at ({x},{y})"))

    seen: dict[tuple[int, int, BlockType], int] = {}
    for b in design.blocks:
        if b.id not in site_of:
            continue
        bt, x, y = site_of[b.id]
        key = (x, y, bt)
        if key in seen:
            violations.append(Violation(
                "exclusivity", (seen[key], b.id), f"both at ({x},{y})"))
        else:
            seen[key] = b.id

    for ch in design.chains:
        s = ch.block_type.cascade_stride
        for a, b in zip(ch.members, ch.members[1:]):
            if a not in site_of or b not in site_of:
                continue
            _, xa, ya = site_of[a]
            _, xb, yb = site_of[b]
            if xa != xb or yb != ya + s:
                violations.append(Violation(
                    "cascade", (a, b),
                    f"({xa},{ya}) -> ({xb},{yb}), expected ({xa},{ya + s})"))
    return ConstraintReport(tuple(violations))
