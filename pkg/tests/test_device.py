import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rapidplace.device import (BlockType, Column, Device, column_window_counts,
                               device_to_dict, load_device, save_device,
                               sites_in_region, synth_device)
from rapidplace.errors import ParseError, ValidationError


def write_device(tmp_path, raw):
    p = tmp_path / "dev.json"
    p.write_text(json.dumps(raw))
    return p


MINIMAL = {
    "name": "mini", "xmax": 1, "ymax": 8, "region_height": 8, "slr_count": 1,
    "columns": [{"type": "DSP", "x": 0, "y_sites": 8}],
}


def test_load_minimal_device(tmp_path):
    dev = load_device(write_device(tmp_path, MINIMAL))
    assert dev.name == "mini"
    assert dev.site_count(BlockType.DSP) == 8
    sites = sites_in_region(dev, BlockType.DSP, 0)
    assert [(s.x, s.y) for s in sites] == [(0, y) for y in range(8)]


def test_column_outside_xmax_rejected(tmp_path):
    raw = dict(MINIMAL, xmax=4,
               columns=[{"type": "DSP", "x": 5, "y_sites": 8}])
    with pytest.raises(ValidationError) as err:
        load_device(write_device(tmp_path, raw))
    assert "x" in str(err.value)


def test_malformed_json_is_parse_error(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ParseError):
        load_device(p)


def test_missing_field_names_it(tmp_path):
    raw = {k: v for k, v in MINIMAL.items() if k != "region_height"}
    with pytest.raises(ValidationError, match="region_height"):
        load_device(write_device(tmp_path, raw))


def test_region_must_divide_slr_height():
    with pytest.raises(ValidationError, match="region_height"):
        Device("bad", (Column(BlockType.DSP, 0, 8),), 1, 12, 2, 4)


def test_cascade_strides():
    assert BlockType.DSP.cascade_stride == 1
    assert BlockType.URAM.cascade_stride == 1
    assert BlockType.BRAM.cascade_stride == 2


def test_vu11p_region_admits_80_units(vu11p, conv_unit):
    # capacity arithmetic oracle: 80 x (2 URAM, 18 DSP, 8 BRAM) groups must
    # fit the chain slots of one region
    h = vu11p.region_height
    assert h == 36
    uram_cols = len(vu11p.columns_of(BlockType.URAM))
    dsp_cols = len(vu11p.columns_of(BlockType.DSP))
    bram_cols = len(vu11p.columns_of(BlockType.BRAM))
    assert uram_cols * (h // 2) >= 80          # 2-chains
    assert dsp_cols * (h // 9) >= 160          # 9-chains
    assert bram_cols * 2 * ((h // 2) // 3) >= 160  # 3-chains per parity lane
    # sites left over for the 2 free BRAMs per unit
    assert bram_cols * h - 160 * 3 >= 160


def test_synth_counts_and_determinism():
    dev1 = synth_device(1, 1, 1, (9, 8, 2), region_height=8, slr_count=1, seed=7)
    dev2 = synth_device(1, 1, 1, (9, 8, 2), region_height=8, slr_count=1, seed=7)
    assert dev1 == dev2
    assert dev1.xmax == 3
    assert dev1.site_count() == 19
    assert dev1.ymax % dev1.region_height == 0


def test_synth_seed_changes_order_not_multiset():
    a = synth_device(4, 3, 1, (8, 8, 8), region_height=8, slr_count=1, seed=1)
    b = synth_device(4, 3, 1, (8, 8, 8), region_height=8, slr_count=1, seed=2)
    key = lambda c: (c.block_type.value, c.y_sites)
    assert sorted(map(key, a.columns)) == sorted(map(key, b.columns))
    assert [c.block_type for c in a.columns] != [c.block_type for c in b.columns]


def test_synth_rejects_zero_columns():
    with pytest.raises(ValidationError):
        synth_device(0, 1, 1, (8, 8, 8), region_height=8, slr_count=1, seed=0)


def test_sites_in_region_offsets():
    dev = synth_device(1, 1, 1, (16, 16, 16), region_height=8, slr_count=1, seed=3)
    r0 = sites_in_region(dev, BlockType.DSP, 0)
    r1 = sites_in_region(dev, BlockType.DSP, 1)
    assert [s.y for s in r0] == list(range(8))
    assert [s.y for s in r1] == list(range(8, 16))
    assert {s.x for s in r0} == {s.x for s in r1}


def test_sites_in_region_out_of_range(tiny4):
    with pytest.raises(ValidationError, match="region_index"):
        sites_in_region(tiny4, BlockType.DSP, tiny4.num_regions)


@settings(max_examples=25, deadline=None)
@given(dsp=st.integers(1, 4), bram=st.integers(1, 4), uram=st.integers(1, 3),
       sites=st.integers(1, 24), region=st.integers(2, 8), seed=st.integers(0, 99))
def test_regions_partition_sites(dsp, bram, uram, sites, region, seed):
    dev = synth_device(dsp, bram, uram, (sites, sites, sites),
                       region_height=region, slr_count=1, seed=seed)
    for t in BlockType:
        seen = set()
        for r in range(dev.num_regions):
            for s in sites_in_region(dev, t, r):
                assert (s.x, s.y) not in seen
                seen.add((s.x, s.y))
        assert len(seen) == dev.site_count(t)


def test_save_load_roundtrip(tmp_path, vu11p):
    p = tmp_path / "dev.json"
    save_device(vu11p, p)
    assert load_device(p) == vu11p


def test_window_counts_clamp(tiny4):
    counts = dict(column_window_counts(tiny4, BlockType.URAM, 0, 36))
    assert counts == {2: 4}
    counts = dict(column_window_counts(tiny4, BlockType.URAM, 18, 18))
    assert counts == {2: 0}
