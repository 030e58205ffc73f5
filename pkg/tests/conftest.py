import numpy as np
import pytest

from rapidplace.design import (CascadeChain, Connection, LogicalBlock, UnitSpec,
                               builtin_conv_unit, replicate_netlist)
from rapidplace.device import BlockType, Column, Device, load_bundled_device


@pytest.fixture(scope="session")
def tiny4():
    return load_bundled_device("tiny4")


@pytest.fixture(scope="session")
def vu11p():
    return load_bundled_device("vu11p-like")


@pytest.fixture(scope="session")
def conv_unit():
    return builtin_conv_unit()


@pytest.fixture(scope="session")
def conv2(conv_unit):
    return replicate_netlist(conv_unit, 2)


@pytest.fixture(scope="session")
def conv80(conv_unit):
    return replicate_netlist(conv_unit, 80)


def small_symmetric_unit() -> UnitSpec:
    """2 URAM + 18 DSP + 4 BRAM tile with kernel-symmetric buses.

    Every BRAM chain head feeds both DSP chain heads, and the URAM head
    feeds both BRAM heads, so swapping same-type groups inside a unit never
    changes the objective. Used for the exhaustively-enumerable instance.
    """
    blocks = []
    uram = [0, 1]
    dsp = list(range(2, 20))
    bram = list(range(20, 24))
    for i in uram:
        blocks.append(LogicalBlock(i, BlockType.URAM, 0))
    for i in dsp:
        blocks.append(LogicalBlock(i, BlockType.DSP, 0))
    for i in bram:
        blocks.append(LogicalBlock(i, BlockType.BRAM, 0))
    chains = [
        CascadeChain(BlockType.URAM, tuple(uram)),
        CascadeChain(BlockType.DSP, tuple(dsp[:9])),
        CascadeChain(BlockType.DSP, tuple(dsp[9:])),
        CascadeChain(BlockType.BRAM, tuple(bram[:2])),
        CascadeChain(BlockType.BRAM, tuple(bram[2:])),
    ]
    conns = []
    for ch in chains:
        for a, b in zip(ch.members, ch.members[1:]):
            conns.append(Connection(a, b, 1))
    for head in (bram[0], bram[2]):
        for dhead in (dsp[0], dsp[9]):
            conns.append(Connection(head, dhead, 3))
    conns.append(Connection(uram[0], bram[0], 2))
    conns.append(Connection(uram[0], bram[2], 2))
    return UnitSpec(tuple(blocks), tuple(conns), tuple(chains))


def exhaustive_device() -> Device:
    """Five columns sized so the 2-unit symmetric design saturates them."""
    return Device("tiny-exh", (
        Column(BlockType.DSP, 0, 18), Column(BlockType.BRAM, 1, 4),
        Column(BlockType.URAM, 2, 4), Column(BlockType.BRAM, 3, 4),
        Column(BlockType.DSP, 4, 18)),
        xmax=5, ymax=18, slr_count=1, region_height=18)


@pytest.fixture(scope="session")
def exh_instance():
    unit = small_symmetric_unit()
    return exhaustive_device(), replicate_netlist(unit, 2)


def brute_force_wl2(placement, design) -> int:
    """Plain-python oracle for the squared-wirelength sum."""
    site = {bid: (int(x), int(y)) for bid, x, y in
            zip(placement.block_ids, placement.xs, placement.ys)}
    total = 0
    for c in design.connections:
        (x1, y1), (x2, y2) = site[c.src], site[c.dst]
        d = abs(x1 - x2) + abs(y1 - y2)
        total += (d * c.weight) ** 2
    return total


def brute_force_max_bbox(placement, design) -> int:
    site = {bid: (int(x), int(y)) for bid, x, y in
            zip(placement.block_ids, placement.xs, placement.ys)}
    units = {}
    for b in design.blocks:
        units.setdefault(b.unit, []).append(site[b.id])
    worst = 0
    for pts in units.values():
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        worst = max(worst, (max(xs) - min(xs)) + (max(ys) - min(ys)))
    return worst


def enumerate_exhaustive(device: Device, design) -> np.ndarray:
    """All objective values of the saturated 2-unit instance.

    Works directly from the device geometry: every column is exactly filled,
    so the only freedom is which logical chain takes which forced slot. The
    enumeration is independent of the genotype decoder.
    """
    import itertools

    from rapidplace.objective import EvalContext, scalarize

    ctx = EvalContext(design)
    idx = {b.id: i for i, b in enumerate(design.blocks)}
    chains = {t: [ch.members for ch in design.chains if ch.block_type is t]
              for t in (BlockType.URAM, BlockType.DSP, BlockType.BRAM)}
    slots = {}
    for t in (BlockType.URAM, BlockType.DSP, BlockType.BRAM):
        per_type = []
        for c in device.columns_of(t):
            if t is BlockType.DSP:
                length, stride = 9, 1
            elif t is BlockType.URAM:
                length, stride = 2, 1
            else:
                length, stride = 2, 2
            if t is BlockType.BRAM:
                for r in range(2):
                    lane = (c.y_sites - r + 1) // 2
                    for a in range(0, lane - length + 1, length):
                        per_type.append((c.x, r + 2 * a, stride))
            else:
                for a in range(0, c.y_sites - length + 1, length):
                    per_type.append((c.x, a, stride))
        slots[t] = per_type
        assert len(per_type) == len(chains[t]), (t, per_type, len(chains[t]))

    xs = np.zeros(len(design.blocks), dtype=np.int64)
    ys = np.zeros(len(design.blocks), dtype=np.int64)
    values = []
    import itertools
    for up in itertools.permutations(range(len(slots[BlockType.URAM]))):
        for dp in itertools.permutations(range(len(slots[BlockType.DSP]))):
            for bp in itertools.permutations(range(len(slots[BlockType.BRAM]))):
                for perm, t in ((up, BlockType.URAM), (dp, BlockType.DSP),
                                (bp, BlockType.BRAM)):
                    for i, s in enumerate(perm):
                        x, anchor, stride = slots[t][s]
                        for k, m in enumerate(chains[t][i]):
                            xs[idx[m]] = x
                            ys[idx[m]] = anchor + k * stride
                v = ctx.evaluate(xs, ys)
                values.append((float(scalarize(v)), v.wl2, v.max_bbox))
    return np.array(values)
