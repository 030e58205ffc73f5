"""Three-tier chromosome encoding and placement decoding.

A genotype carries three tiers:

* distribution -- one real in [0,1] per (block type, column): how many
  chain-groups of that type land in each column,
* location -- one real per logical block: ordering of groups inside a
  column (a group's key is the mean of its members' genes),
* mapping -- one permutation per block type over that type's chain-groups:
  which logical chain takes which physical slot.

Chains are placed as atomic groups (anchor plus stride), so cascade
adjacency holds by construction and decoding never needs a repair step.
Inside a column, groups pack bottom-up per parity lane; longer chain
classes pack before shorter ones so the capacity arithmetic used by the
distribution legalizer is exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .design import DesignSpec
from .device import BlockType, Device, Site, TYPE_ORDER, column_window_counts
from .errors import CapacityError, ValidationError


@dataclass(eq=False)
class Genotype:
    distribution: np.ndarray
    location: np.ndarray
    mapping: dict[BlockType, np.ndarray]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Genotype):
            return NotImplemented
        return (
            np.array_equal(self.distribution, other.distribution)
            and np.array_equal(self.location, other.location)
            and self.mapping.keys() == other.mapping.keys()
            and all(np.array_equal(self.mapping[t], other.mapping[t])
                    for t in self.mapping)
        )

    def copy(self) -> "Genotype":
        return Genotype(self.distribution.copy(), self.location.copy(),
                        {t: v.copy() for t, v in self.mapping.items()})

    def to_dict(self) -> dict:
        return {
            "distribution": self.distribution.tolist(),
            "location": self.location.tolist(),
            "mapping": {t.value: self.mapping[t].tolist() for t in self.mapping},
        }

    @staticmethod
    def from_dict(raw: dict) -> "Genotype":
        return Genotype(
            np.asarray(raw["distribution"], dtype=float),
            np.asarray(raw["location"], dtype=float),
            {BlockType(k): np.asarray(v, dtype=np.int64)
             for k, v in raw["mapping"].items()},
        )


@dataclass(frozen=True)
class Placement:
    """Total block-to-site assignment, indexed in design block order."""

    block_ids: tuple[int, ...]
    block_types: tuple[BlockType, ...]
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        self.xs.setflags(write=False)
        self.ys.setflags(write=False)

    def site_of(self, block_id: int) -> Site:
        i = self.block_ids.index(block_id)
        return Site(self.block_types[i], int(self.xs[i]), int(self.ys[i]))

    @property
    def assignment(self) -> dict[int, Site]:
        return {
            bid: Site(bt, int(x), int(y))
            for bid, bt, x, y in zip(self.block_ids, self.block_types, self.xs, self.ys)
        }

    def to_records(self) -> list[dict]:
        return [
            {"block_id": bid, "type": bt.value, "x": int(x), "y": int(y)}
            for bid, bt, x, y in zip(self.block_ids, self.block_types, self.xs, self.ys)
        ]

    @staticmethod
    def from_records(records: list[dict]) -> "Placement":
        ids = tuple(int(r["block_id"]) for r in records)
        types = tuple(BlockType(r["type"]) for r in records)
        xs = np.array([int(r["x"]) for r in records], dtype=np.int64)
        ys = np.array([int(r["y"]) for r in records], dtype=np.int64)
        return Placement(ids, types, xs, ys)

    def loc_lines(self) -> list[str]:
        """Human-readable one-line-per-block constraint text."""
        return [
            f"{bt.value} {bid} => ({int(x)},{int(y)})"
            for bid, bt, x, y in zip(self.block_ids, self.block_types, self.xs, self.ys)
        ]


def save_placement(placement: Placement, path: str | Path) -> None:
    Path(path).write_text(json.dumps(placement.to_records(), indent=1) + "\n")


def load_placement(path: str | Path) -> Placement:
    return Placement.from_records(json.loads(Path(path).read_text()))


class _TypePlan:
    """Static per-type decode tables for one (device, design, region)."""

    def __init__(self, btype: BlockType, device: Device, design: DesignSpec,
                 region: int):
        self.btype = btype
        self.stride = btype.cascade_stride
        h = device.region_height
        self.y0 = region * h
        self.col_xs: list[int] = []
        self.lane_sizes: list[list[int]] = []
        for x, n in column_window_counts(device, btype, self.y0, h):
            self.col_xs.append(x)
            s = self.stride
            self.lane_sizes.append([(n - r + s - 1) // s if n > r else 0
                                    for r in range(s)])
        self.ncols = len(self.col_xs)

        # Chain-groups: chains in design order, then unchained singletons.
        id_to_idx = {b.id: i for i, b in enumerate(design.blocks)}
        chained: set[int] = set()
        groups: list[tuple[int, ...]] = []
        for ch in design.chains:
            if ch.block_type is btype:
                groups.append(tuple(id_to_idx[m] for m in ch.members))
                chained.update(ch.members)
        for b in design.blocks:
            if b.block_type is btype and b.id not in chained:
                groups.append((id_to_idx[b.id],))
        self.groups = groups
        self.n_groups = len(groups)

        # Length classes, longest first, each with canonical-order tables.
        by_len: dict[int, list[int]] = {}
        for gi, g in enumerate(groups):
            by_len.setdefault(len(g), []).append(gi)
        self.classes = []
        self.class_rows = []  # gid -> row within the class's member table
        for length in sorted(by_len, reverse=True):
            gids = np.array(by_len[length], dtype=np.int64)
            members = np.array([groups[gi] for gi in by_len[length]],
                               dtype=np.int64)  # (m, length)
            rows = np.full(self.n_groups, -1, dtype=np.int64)
            rows[gids] = np.arange(len(gids))
            self.classes.append((length, gids, members))
            self.class_rows.append(rows)

    def lane_free(self, fills: list[list[int]]) -> list[list[int]]:
        return [[size - used for size, used in zip(sizes, f)]
                for sizes, f in zip(self.lane_sizes, fills)]

    def class_caps(self, length: int, fills: list[list[int]]) -> np.ndarray:
        caps = np.zeros(self.ncols, dtype=np.int64)
        for c in range(self.ncols):
            caps[c] = sum((size - used) // length
                          for size, used in zip(self.lane_sizes[c], fills[c]))
        return caps

    def pack_column(self, c: int, count: int, length: int,
                    fills: list[list[int]]) -> list[int]:
        """Greedy lowest-anchor packing; returns grid anchors (ascending)."""
        anchors = []
        s = self.stride
        sizes = self.lane_sizes[c]
        f = fills[c]
        for _ in range(count):
            best_r, best_y = -1, None
            for r in range(s):
                if f[r] + length <= sizes[r]:
                    y = r + s * f[r]
                    if best_y is None or y < best_y:
                        best_r, best_y = r, y
            if best_r < 0:
                raise CapacityError({self.btype.value: count})
            anchors.append(self.y0 + best_y)
            f[best_r] += length
        return anchors


class EncodingShape:
    """Gene-vector layout plus decode tables for a (device, design, region)."""

    def __init__(self, device: Device, design: DesignSpec, region: int):
        if not 0 <= region < device.num_regions:
            raise ValidationError("region", f"{region} out of range")
        self.device = device
        self.design = design
        self.region = region
        self.plans = {t: _TypePlan(t, device, design, region) for t in TYPE_ORDER}

        self.dist_slices: dict[BlockType, slice] = {}
        off = 0
        for t in TYPE_ORDER:
            n = self.plans[t].ncols
            self.dist_slices[t] = slice(off, off + n)
            off += n
        self.n_dist = off
        self.n_blocks = len(design.blocks)
        self.block_ids = tuple(b.id for b in design.blocks)
        self.block_types = tuple(b.block_type for b in design.blocks)
        self.mapping_sizes = {t: self.plans[t].n_groups for t in TYPE_ORDER}

        # Canonical (gene-independent) allocation, used for feasibility
        # checking and for the reduced decode.
        self._canonical = None
        self.deficits = self._feasibility()

    def _feasibility(self) -> dict[str, int]:
        deficits: dict[str, int] = {}
        canonical = {}
        for t in TYPE_ORDER:
            plan = self.plans[t]
            if plan.n_groups == 0:
                canonical[t] = []
                continue
            fills = [[0] * len(sz) for sz in plan.lane_sizes]
            uniform = np.full(max(plan.ncols, 1), 0.5)
            per_class = []
            short = 0
            for length, gids, _members in plan.classes:
                caps = plan.class_caps(length, fills)
                need = len(gids)
                have = int(caps.sum())
                if have < need:
                    short += (need - have) * length
                    need = have
                counts = legalize_distribution(uniform[:plan.ncols], need, caps)
                anchors = [plan.pack_column(c, int(counts[c]), length, fills)
                           for c in range(plan.ncols)]
                per_class.append((length, counts, anchors))
            if short:
                deficits[t.value] = short
            canonical[t] = per_class
        self._canonical = canonical
        return deficits

    def require_feasible(self) -> None:
        if self.deficits:
            raise CapacityError(self.deficits)


@lru_cache(maxsize=64)
def encoding_shape(device: Device, design: DesignSpec, region: int) -> EncodingShape:
    return EncodingShape(device, design, region)


def legalize_distribution(genes, required: int, capacities) -> np.ndarray:
    """Quantize one type's distribution genes into per-column counts.

    Genes are clipped to [0,1] and normalized; raw shares are floored and the
    remainder handed out by largest fractional part (ties favor the lower
    column index). Columns at capacity spill to the next column in that same
    remainder order.
    """
    caps = np.asarray(capacities, dtype=np.int64)
    genes = np.clip(np.asarray(genes, dtype=float), 0.0, 1.0)
    ncols = len(caps)
    if required == 0:
        return np.zeros(ncols, dtype=np.int64)
    if caps.sum() < required:
        raise CapacityError({"columns": int(required - caps.sum())})
    total = genes.sum()
    fracs = genes / total if total > 0 else np.full(ncols, 1.0 / ncols)
    raw = fracs * required
    counts = np.minimum(np.floor(raw).astype(np.int64), caps)
    rem = raw - np.floor(raw)
    order = np.lexsort((np.arange(ncols), -rem))
    deficit = required - int(counts.sum())
    while deficit > 0:
        placed = False
        for c in order:
            if counts[c] < caps[c]:
                counts[c] += 1
                deficit -= 1
                placed = True
                if deficit == 0:
                    break
        if not placed:  # unreachable given the precondition
            raise CapacityError({"columns": deficit})
    return counts


def random_genotype(device: Device, design: DesignSpec, region: int,
                    rng_seed: int) -> Genotype:
    """Uniform random genes and Fisher-Yates mapping permutations."""
    shape = encoding_shape(device, design, region)
    shape.require_feasible()
    rng = np.random.default_rng(rng_seed)
    return Genotype(
        distribution=rng.random(shape.n_dist),
        location=rng.random(shape.n_blocks),
        mapping={t: rng.permutation(shape.mapping_sizes[t]).astype(np.int64)
                 for t in TYPE_ORDER},
    )


def _validate_shape(genotype: Genotype, shape: EncodingShape) -> None:
    if len(genotype.distribution) != shape.n_dist:
        raise ValidationError(
            "distribution",
            f"length {len(genotype.distribution)} != expected {shape.n_dist}")
    if len(genotype.location) != shape.n_blocks:
        raise ValidationError(
            "location",
            f"length {len(genotype.location)} != expected {shape.n_blocks}")
    for t in TYPE_ORDER:
        m = shape.mapping_sizes[t]
        perm = genotype.mapping.get(t)
        if perm is None or len(perm) != m:
            raise ValidationError("mapping", f"{t.value}: expected length {m}")
        if m and not np.array_equal(np.sort(perm), np.arange(m)):
            raise ValidationError("mapping", f"{t.value}: not a permutation")


def _assign_class(plan: _TypePlan, gids: np.ndarray, members: np.ndarray,
                  rows_of: np.ndarray, counts: np.ndarray,
                  anchors_per_col: list[list[int]],
                  perm: np.ndarray, loc_key: np.ndarray,
                  xs: np.ndarray, ys: np.ndarray) -> None:
    """Map logical groups onto packed slots and emit member coordinates."""
    order = gids[np.lexsort((gids, perm[gids]))]
    assigned_x = np.empty(len(order), dtype=np.int64)
    assigned_anchor = np.empty(len(order), dtype=np.int64)
    pos = 0
    for c in range(plan.ncols):
        k = int(counts[c])
        if k == 0:
            continue
        col_groups = order[pos:pos + k]
        order[pos:pos + k] = col_groups[
            np.lexsort((col_groups, loc_key[col_groups]))]
        assigned_x[pos:pos + k] = plan.col_xs[c]
        assigned_anchor[pos:pos + k] = anchors_per_col[c]
        pos += k

    length = members.shape[1]
    member_concat = members[rows_of[order]].reshape(-1)
    xs[member_concat] = np.repeat(assigned_x, length)
    ys[member_concat] = (np.repeat(assigned_anchor, length)
                         + np.tile(np.arange(length) * plan.stride, len(order)))


def _decode_arrays(shape: EncodingShape, genotype: Genotype,
                   reduced: bool = False) -> tuple[np.ndarray, np.ndarray]:
    xs = np.zeros(shape.n_blocks, dtype=np.int64)
    ys = np.zeros(shape.n_blocks, dtype=np.int64)
    for t in TYPE_ORDER:
        plan = shape.plans[t]
        if plan.n_groups == 0:
            continue
        perm = genotype.mapping[t]
        if reduced:
            loc_key = np.zeros(plan.n_groups)
            per_class = shape._canonical[t]
            for (length, gids, members), rows_of, (_l, counts, anchors) in zip(
                    plan.classes, plan.class_rows, per_class):
                _assign_class(plan, gids, members, rows_of, counts, anchors,
                              perm, loc_key, xs, ys)
            continue
        genes = np.asarray(genotype.distribution[shape.dist_slices[t]])
        loc = np.asarray(genotype.location)
        fills = [[0] * len(sz) for sz in plan.lane_sizes]
        staged = []
        fallback = False
        for length, gids, members in plan.classes:
            caps = plan.class_caps(length, fills)
            if caps.sum() < len(gids):
                fallback = True
                break
            counts = legalize_distribution(genes, len(gids), caps)
            anchors = [plan.pack_column(c, int(counts[c]), length, fills)
                       for c in range(plan.ncols)]
            staged.append((counts, anchors))
        if fallback:
            # Gene-driven packing of longer chains fragmented the lanes;
            # fall back to the canonical allocation, which is feasibility-
            # checked up front. Cannot happen with a single chain length
            # plus singletons per type.
            staged = [(counts, anchors)
                      for _l, counts, anchors in shape._canonical[t]]
        for (length, gids, members), rows_of, (counts, anchors) in zip(
                plan.classes, plan.class_rows, staged):
            loc_key = np.add.reduceat(
                loc[members.reshape(-1)],
                np.arange(0, members.size, length)) / length
            full_key = np.zeros(plan.n_groups)
            full_key[gids] = loc_key
            _assign_class(plan, gids, members, rows_of, counts, anchors,
                          perm, full_key, xs, ys)
    return xs, ys


def decode(genotype: Genotype, device: Device, design: DesignSpec,
           region: int) -> Placement:
    """Decode a genotype into a constraint-legal placement (total function)."""
    shape = encoding_shape(device, design, region)
    shape.require_feasible()
    _validate_shape(genotype, shape)
    xs, ys = _decode_arrays(shape, genotype)
    return Placement(shape.block_ids, shape.block_types, xs, ys)


def decode_reduced(genotype: Genotype, device: Device, design: DesignSpec,
                   region: int) -> Placement:
    """Mapping-only decode: uniform column split, bottom-up stacking."""
    shape = encoding_shape(device, design, region)
    shape.require_feasible()
    for t in TYPE_ORDER:
        m = shape.mapping_sizes[t]
        perm = genotype.mapping.get(t)
        if perm is None or len(perm) != m:
            raise ValidationError("mapping", f"{t.value}: expected length {m}")
    xs, ys = _decode_arrays(shape, genotype, reduced=True)
    return Placement(shape.block_ids, shape.block_types, xs, ys)


def reduced_genotype(device: Device, design: DesignSpec, region: int,
                     rng_seed: int) -> Genotype:
    """Random mapping-only genotype (real tiers pinned at 0.5)."""
    shape = encoding_shape(device, design, region)
    shape.require_feasible()
    rng = np.random.default_rng(rng_seed)
    return Genotype(
        distribution=np.full(shape.n_dist, 0.5),
        location=np.full(shape.n_blocks, 0.5),
        mapping={t: rng.permutation(shape.mapping_sizes[t]).astype(np.int64)
                 for t in TYPE_ORDER},
    )


def _resample_nearest(src: np.ndarray, n_dst: int) -> np.ndarray:
    n_src = len(src)
    if n_dst == 0 or n_src == 0:
        return np.zeros(n_dst)
    if n_src == 1:
        return np.full(n_dst, src[0])
    src_pos = np.arange(n_src) / (n_src - 1)
    dst_pos = (np.arange(n_dst) / (n_dst - 1) if n_dst > 1
               else np.array([0.5]))
    idx = np.abs(dst_pos[:, None] - src_pos[None, :]).argmin(axis=1)
    return src[idx]


def _resize_permutation(perm: np.ndarray, n_dst: int,
                        rng: np.random.Generator) -> np.ndarray:
    n_src = len(perm)
    if n_dst == n_src:
        return perm.copy()
    if n_dst < n_src:
        return perm[perm < n_dst]
    extra = rng.permutation(np.arange(n_src, n_dst))
    return np.concatenate([perm, extra]).astype(np.int64)


def migrate(genotype: Genotype, src_device: Device, dst_device: Device,
            design: DesignSpec, region: int = 0, rng_seed: int = 0) -> Genotype:
    """Reshape a genotype from one device onto another.

    Distribution genes are resampled per type by nearest normalized column
    position; location and mapping are kept (same design) or resized by
    truncation/seeded extension. Migrating onto the identical device is the
    identity.
    """
    dst_shape = encoding_shape(dst_device, design, region)
    dst_shape.require_feasible()
    rng = np.random.default_rng(rng_seed)

    dist = np.empty(dst_shape.n_dist)
    for t in TYPE_ORDER:
        n_src = len(src_device.columns_of(t))
        src_start = 0
        for tt in TYPE_ORDER:
            if tt is t:
                break
            src_start += len(src_device.columns_of(tt))
        src_genes = np.asarray(genotype.distribution[src_start:src_start + n_src])
        dst_n = dst_shape.plans[t].ncols
        dist[dst_shape.dist_slices[t]] = _resample_nearest(src_genes, dst_n)

    if len(genotype.location) == dst_shape.n_blocks:
        location = genotype.location.copy()
    elif len(genotype.location) > dst_shape.n_blocks:
        location = genotype.location[:dst_shape.n_blocks].copy()
    else:
        pad = rng.random(dst_shape.n_blocks - len(genotype.location))
        location = np.concatenate([genotype.location, pad])

    mapping = {t: _resize_permutation(np.asarray(genotype.mapping[t]),
                                      dst_shape.mapping_sizes[t], rng)
               for t in TYPE_ORDER}
    return Genotype(dist, location, mapping)
