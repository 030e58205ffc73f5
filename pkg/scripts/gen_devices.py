#!/usr/bin/env python3
"""Regenerate the bundled device descriptors.

The *-like family keeps the per-SLR column-count ratios of the real part
family (URAM:DSP:BRAM = 5:48:21 for the largest member) at desk scale, with
seeded-shuffled column orderings. tiny4 is a hand-sized fixture whose two-unit
convolution design saturates every site, which keeps its legal placement
space exactly enumerable.
"""

from pathlib import Path

from rapidplace.device import BlockType, Column, Device, save_device, synth_device

DATA = Path(__file__).resolve().parent.parent / "src" / "rapidplace" / "data"

FAMILY = {
    # name: (dsp, bram, uram, sites_per_col, slr_count, seed)
    "vu3p-like": (30, 13, 3, 36, 1, 11),
    "vu5p-like": (40, 17, 4, 72, 2, 12),
    "vu7p-like": (38, 18, 4, 72, 2, 13),
    "vu9p-like": (44, 20, 5, 108, 3, 14),
    "vu11p-like": (48, 21, 5, 108, 3, 15),
    "vu13p-like": (52, 24, 6, 144, 4, 16),
}


def tiny4() -> Device:
    cols = (
        Column(BlockType.BRAM, 0, 12),
        Column(BlockType.DSP, 1, 36),
        Column(BlockType.URAM, 2, 4),
        Column(BlockType.BRAM, 3, 4),
    )
    return Device(name="tiny4", columns=cols, xmax=4, ymax=36,
                  slr_count=1, region_height=36)


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    save_device(tiny4(), DATA / "tiny4.json")
    for name, (dsp, bram, uram, sites, slr, seed) in FAMILY.items():
        dev = synth_device(
            dsp_cols=dsp, bram_cols=bram, uram_cols=uram,
            sites_per_col=(sites, sites, sites),
            region_height=36, slr_count=slr, seed=seed, name=name,
        )
        save_device(dev, DATA / f"{name}.json")
        print(f"{name}: {dev.xmax} cols, ymax {dev.ymax}, {dev.slr_count} SLR")


if __name__ == "__main__":
    main()
