"""Logical design model: hard blocks, weighted connections, cascade chains.

The repeating computational tile is a convolution engine built from
2 URAM + 18 DSP + 8 BRAM blocks; a full design is that unit replicated n
times with no nets between units.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .device import BlockType
from .errors import ParseError, ValidationError


@dataclass(frozen=True)
class LogicalBlock:
    id: int
    block_type: BlockType
    unit: int


@dataclass(frozen=True)
class Connection:
    src: int
    dst: int
    weight: int


@dataclass(frozen=True)
class CascadeChain:
    block_type: BlockType
    members: tuple[int, ...]


@dataclass(frozen=True)
class UnitSpec:
    """One repeatable tile: blocks with unit-local ids 0..m-1."""

    blocks: tuple[LogicalBlock, ...]
    connections: tuple[Connection, ...]
    chains: tuple[CascadeChain, ...]

    def type_counts(self) -> dict[BlockType, int]:
        counts = {t: 0 for t in BlockType}
        for b in self.blocks:
            counts[b.block_type] += 1
        return counts

    @property
    def size(self) -> int:
        return len(self.blocks)


@dataclass(frozen=True)
class DesignSpec:
    unit: UnitSpec
    num_units: int
    blocks: tuple[LogicalBlock, ...]
    connections: tuple[Connection, ...]
    chains: tuple[CascadeChain, ...]

    def __post_init__(self):
        _validate_netlist(self.blocks, self.connections, self.chains)

    def type_counts(self) -> dict[BlockType, int]:
        counts = {t: 0 for t in BlockType}
        for b in self.blocks:
            counts[b.block_type] += 1
        return counts

    @property
    def size(self) -> int:
        return len(self.blocks)


def _validate_netlist(blocks, connections, chains):
    by_id: dict[int, LogicalBlock] = {}
    for b in blocks:
        if b.id in by_id:
            raise ValidationError("blocks", f"duplicate block id {b.id}")
        if b.unit < 0:
            raise ValidationError("unit", f"block {b.id} has negative unit index")
        by_id[b.id] = b
    for c in connections:
        if c.src == c.dst:
            raise ValidationError("connections", f"self-connection on block {c.src}")
        if c.weight < 1:
            raise ValidationError("weight", f"connection {c.src}->{c.dst} weight < 1")
        for end in (c.src, c.dst):
            if end not in by_id:
                raise ValidationError("connections", f"unknown block id {end}")
    chained: set[int] = set()
    for ch in chains:
        if len(ch.members) < 2:
            raise ValidationError("chains", f"chain {ch.members} shorter than 2")
        for m in ch.members:
            if m not in by_id:
                raise ValidationError("chains", f"unknown block id {m}")
            if by_id[m].block_type is not ch.block_type:
                raise ValidationError(
                    "chains",
                    f"block {m} is {by_id[m].block_type.value}, "
                    f"chain is {ch.block_type.value}",
                )
            if m in chained:
                raise ValidationError("chains", f"block {m} appears in two chains")
            chained.add(m)


def builtin_conv_unit() -> UnitSpec:
    """The fixed convolution tile: 2 URAM, 18 DSP, 8 BRAM.

    Wiring: two 9-long DSP accumulate cascades (one per 3x3 kernel), each fed
    by a 3-long BRAM cascade whose members drive one DSP triple apiece; the
    URAM pair is cascaded and feeds the BRAM chain heads plus the two
    un-cascaded buffer BRAMs. Cascade-adjacent pairs get weight 1, BRAM-to-DSP
    buses weight 3, URAM-to-BRAM links weight 2.
    """
    blocks = []
    uram = [0, 1]
    dsp = list(range(2, 20))
    bram = list(range(20, 28))
    for i in uram:
        blocks.append(LogicalBlock(i, BlockType.URAM, 0))
    for i in dsp:
        blocks.append(LogicalBlock(i, BlockType.DSP, 0))
    for i in bram:
        blocks.append(LogicalBlock(i, BlockType.BRAM, 0))

    chains = [
        CascadeChain(BlockType.URAM, tuple(uram)),
        CascadeChain(BlockType.DSP, tuple(dsp[0:9])),
        CascadeChain(BlockType.DSP, tuple(dsp[9:18])),
        CascadeChain(BlockType.BRAM, tuple(bram[0:3])),
        CascadeChain(BlockType.BRAM, tuple(bram[3:6])),
    ]

    connections = []
    for ch in chains:
        for a, b in zip(ch.members, ch.members[1:]):
            connections.append(Connection(a, b, 1))
    # Each chained BRAM feeds one DSP triple of its kernel's cascade.
    for k in range(2):
        for j in range(3):
            connections.append(Connection(bram[3 * k + j], dsp[9 * k + 3 * j], 3))
    # URAMs feed the BRAM chain heads and the free buffer BRAMs.
    connections.append(Connection(uram[0], bram[0], 2))
    connections.append(Connection(uram[1], bram[3], 2))
    connections.append(Connection(uram[0], bram[6], 2))
    connections.append(Connection(uram[1], bram[7], 2))

    return UnitSpec(tuple(blocks), tuple(connections), tuple(chains))


def replicate_netlist(unit: UnitSpec, n: int) -> DesignSpec:
    """Clone the unit n times with block ids offset per clone."""
    if n < 1:
        raise ValidationError("num_units", "must be >= 1")
    m = unit.size
    blocks = []
    connections = []
    chains = []
    for k in range(n):
        off = k * m
        for b in unit.blocks:
            blocks.append(LogicalBlock(b.id + off, b.block_type, k))
        for c in unit.connections:
            connections.append(Connection(c.src + off, c.dst + off, c.weight))
        for ch in unit.chains:
            chains.append(CascadeChain(ch.block_type, tuple(i + off for i in ch.members)))
    return DesignSpec(unit=unit, num_units=n, blocks=tuple(blocks),
                      connections=tuple(connections), chains=tuple(chains))


def _netlist_to_dicts(blocks, connections, chains):
    return (
        [{"id": b.id, "type": b.block_type.value, "unit": b.unit} for b in blocks],
        [{"src": c.src, "dst": c.dst, "weight": c.weight} for c in connections],
        [{"type": ch.block_type.value, "members": list(ch.members)} for ch in chains],
    )


def design_to_dict(spec: DesignSpec) -> dict:
    blocks, connections, chains = _netlist_to_dicts(
        spec.blocks, spec.connections, spec.chains)
    ub, uc, uch = _netlist_to_dicts(
        spec.unit.blocks, spec.unit.connections, spec.unit.chains)
    return {
        "num_units": spec.num_units,
        "unit": {"blocks": ub, "connections": uc, "chains": uch},
        "blocks": blocks,
        "connections": connections,
        "chains": chains,
    }


def _netlist_from_dicts(raw: dict, where: str):
    blocks = []
    for i, e in enumerate(raw.get("blocks", [])):
        try:
            btype = BlockType(e["type"])
        except (KeyError, ValueError) as exc:
            raise ValidationError("blocks", f"{where}[{i}]: bad or missing type") from exc
        if not isinstance(e.get("id"), int):
            raise ValidationError("blocks", f"{where}[{i}]: bad or missing id")
        blocks.append(LogicalBlock(e["id"], btype, int(e.get("unit", 0))))
    connections = []
    for i, e in enumerate(raw.get("connections", [])):
        try:
            connections.append(Connection(int(e["src"]), int(e["dst"]),
                                          int(e.get("weight", 1))))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError("connections", f"{where}[{i}]: bad entry") from exc
    chains = []
    for i, e in enumerate(raw.get("chains", [])):
        try:
            btype = BlockType(e["type"])
            members = tuple(int(m) for m in e["members"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError("chains", f"{where}[{i}]: bad entry") from exc
        chains.append(CascadeChain(btype, members))
    return tuple(blocks), tuple(connections), tuple(chains)


def design_from_dict(raw: dict) -> DesignSpec:
    blocks, connections, chains = _netlist_from_dicts(raw, "blocks")
    if "unit" in raw and isinstance(raw["unit"], dict):
        ub, uc, uch = _netlist_from_dicts(raw["unit"], "unit")
        unit = UnitSpec(ub, uc, uch)
        num_units = int(raw.get("num_units", 1))
    else:
        # Flat file: the whole netlist doubles as its own unit template.
        unit = UnitSpec(blocks, connections, chains)
        num_units = 1
    return DesignSpec(unit=unit, num_units=num_units, blocks=blocks,
                      connections=connections, chains=chains)


def load_design(path: str | Path) -> DesignSpec:
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: top level must be an object")
    return design_from_dict(raw)


def save_design(spec: DesignSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(design_to_dict(spec), indent=2) + "\n")
