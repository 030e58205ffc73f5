"""Synthetic columnar fabric model.

A device is a grid of typed hard-block columns. Every column holds
``y_sites`` sites stacked from row 0 upward; rows are grouped into equal
repeatable regions, and an integer number of regions tiles one SLR (die).
Coordinates are plain integer grid positions, which is all the Manhattan
wirelength and bounding-box math needs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError


class BlockType(Enum):
    DSP = "DSP"
    BRAM = "BRAM"
    URAM = "URAM"

    @property
    def cascade_stride(self) -> int:
        """Row distance between cascade-adjacent sites (BRAM interleaves)."""
        return 2 if self is BlockType.BRAM else 1


# Canonical ordering used for gene-vector layout and reports.
TYPE_ORDER = (BlockType.DSP, BlockType.BRAM, BlockType.URAM)


@dataclass(frozen=True)
class Column:
    block_type: BlockType
    x: int
    y_sites: int


@dataclass(frozen=True)
class Site:
    block_type: BlockType
    x: int
    y: int


@dataclass(frozen=True)
class Device:
    name: str
    columns: tuple[Column, ...]
    xmax: int
    ymax: int
    slr_count: int
    region_height: int

    def __post_init__(self):
        if self.slr_count < 1:
            raise ValidationError("slr_count", "must be >= 1")
        if self.region_height < 1:
            raise ValidationError("region_height", "must be >= 1")
        if self.ymax % self.region_height != 0:
            raise ValidationError(
                "ymax", f"{self.ymax} not divisible by region_height {self.region_height}"
            )
        if self.ymax % self.slr_count != 0:
            raise ValidationError(
                "ymax", f"{self.ymax} not divisible by slr_count {self.slr_count}"
            )
        if (self.ymax // self.slr_count) % self.region_height != 0:
            raise ValidationError(
                "region_height",
                f"SLR height {self.ymax // self.slr_count} not a multiple of "
                f"region_height {self.region_height}",
            )
        seen: set[tuple[BlockType, int]] = set()
        for col in self.columns:
            if col.y_sites < 1:
                raise ValidationError("y_sites", f"column x={col.x} has y_sites < 1")
            if col.y_sites > self.ymax:
                raise ValidationError(
                    "y_sites", f"column x={col.x} has y_sites {col.y_sites} > ymax {self.ymax}"
                )
            if not 0 <= col.x < self.xmax:
                raise ValidationError("x", f"column x={col.x} outside [0, xmax={self.xmax})")
            key = (col.block_type, col.x)
            if key in seen:
                raise ValidationError("x", f"duplicate {col.block_type.value} column at x={col.x}")
            seen.add(key)

    @property
    def slr_height(self) -> int:
        return self.ymax // self.slr_count

    @property
    def num_regions(self) -> int:
        return self.ymax // self.region_height

    def columns_of(self, block_type: BlockType) -> tuple[Column, ...]:
        """Columns of one type, sorted by x."""
        return tuple(sorted((c for c in self.columns if c.block_type is block_type),
                            key=lambda c: c.x))

    def site_count(self, block_type: BlockType | None = None) -> int:
        return sum(c.y_sites for c in self.columns
                   if block_type is None or c.block_type is block_type)


def column_window_counts(device: Device, block_type: BlockType,
                         y0: int, rows: int) -> tuple[tuple[int, int], ...]:
    """Per-column (x, sites-in-window) for rows [y0, y0 + rows).

    Columns are dense from row 0, so a window sees ``clamp(y_sites - y0)``
    sites, capped at the window height.
    """
    out = []
    for col in device.columns_of(block_type):
        n = min(col.y_sites - y0, rows)
        out.append((col.x, max(0, n)))
    return tuple(out)


def sites_in_region(device: Device, block_type: BlockType, region_index: int) -> list[Site]:
    """All sites of one type inside a region, sorted by (x, y)."""
    if not 0 <= region_index < device.num_regions:
        raise ValidationError(
            "region_index",
            f"{region_index} out of range [0, {device.num_regions})",
        )
    h = device.region_height
    y0 = region_index * h
    sites = []
    for x, n in column_window_counts(device, block_type, y0, h):
        for dy in range(n):
            sites.append(Site(block_type, x, y0 + dy))
    return sites


def _require(obj: dict, field: str, kind: type, where: str = "device"):
    if field not in obj:
        raise ValidationError(field, f"missing from {where} file")
    value = obj[field]
    if kind is int and isinstance(value, bool) or not isinstance(value, kind):
        raise ValidationError(field, f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def device_from_dict(raw: dict) -> Device:
    name = _require(raw, "name", str)
    xmax = _require(raw, "xmax", int)
    ymax = _require(raw, "ymax", int)
    region_height = _require(raw, "region_height", int)
    slr_count = _require(raw, "slr_count", int)
    cols_raw = _require(raw, "columns", list)
    columns = []
    for i, entry in enumerate(cols_raw):
        if not isinstance(entry, dict):
            raise ValidationError("columns", f"entry {i} is not an object")
        tname = _require(entry, "type", str, where=f"columns[{i}]")
        try:
            btype = BlockType(tname)
        except ValueError:
            raise ValidationError("type", f"columns[{i}]: unknown block type {tname!r}") from None
        x = _require(entry, "x", int, where=f"columns[{i}]")
        y_sites = _require(entry, "y_sites", int, where=f"columns[{i}]")
        columns.append(Column(btype, x, y_sites))
    return Device(name=name, columns=tuple(columns), xmax=xmax, ymax=ymax,
                  slr_count=slr_count, region_height=region_height)


def device_to_dict(device: Device) -> dict:
    return {
        "name": device.name,
        "xmax": device.xmax,
        "ymax": device.ymax,
        "region_height": device.region_height,
        "slr_count": device.slr_count,
        "columns": [
            {"type": c.block_type.value, "x": c.x, "y_sites": c.y_sites}
            for c in device.columns
        ],
    }


def load_device(path: str | Path) -> Device:
    """Load and validate a device description from JSON."""
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: top level must be an object")
    return device_from_dict(raw)


def save_device(device: Device, path: str | Path) -> None:
    Path(path).write_text(json.dumps(device_to_dict(device), indent=2) + "\n")


def bundled_device_path(name: str) -> Path:
    """Path of a descriptor shipped with the package (e.g. 'tiny4')."""
    fname = name if name.endswith(".json") else f"{name}.json"
    return Path(str(resources.files("rapidplace").joinpath("data", fname)))


def load_bundled_device(name: str) -> Device:
    return load_device(bundled_device_path(name))


def synth_device(dsp_cols: int, bram_cols: int, uram_cols: int,
                 sites_per_col: dict[BlockType, int] | tuple[int, int, int],
                 region_height: int, slr_count: int, seed: int,
                 name: str | None = None) -> Device:
    """Generate a device with a seeded-random column ordering.

    ``sites_per_col`` gives the total sites per column for each type, either
    as a mapping or as a (dsp, bram, uram) tuple. The same arguments and seed
    always produce the identical device.
    """
    if min(dsp_cols, bram_cols, uram_cols) < 1:
        raise ValidationError("columns", "all column counts must be >= 1")
    if isinstance(sites_per_col, tuple):
        sites = {BlockType.DSP: sites_per_col[0],
                 BlockType.BRAM: sites_per_col[1],
                 BlockType.URAM: sites_per_col[2]}
    else:
        sites = dict(sites_per_col)
    if any(sites.get(t, 0) < 1 for t in TYPE_ORDER):
        raise ValidationError("sites_per_col", "all per-type site counts must be >= 1")

    types = ([BlockType.DSP] * dsp_cols + [BlockType.BRAM] * bram_cols
             + [BlockType.URAM] * uram_cols)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(types))
    shuffled = [types[i] for i in order]

    max_sites = max(sites[t] for t in TYPE_ORDER)
    step = region_height * slr_count
    ymax = step * -(-max_sites // step)  # ceil to a multiple of region*slr
    columns = tuple(Column(t, x, sites[t]) for x, t in enumerate(shuffled))
    return Device(
        name=name or f"synth-{dsp_cols}d{bram_cols}b{uram_cols}u-s{seed}",
        columns=columns, xmax=len(columns), ymax=ymax,
        slr_count=slr_count, region_height=region_height,
    )
