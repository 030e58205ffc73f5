import json
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from rapidplace.cli import main


def run_cli(*args, env=None):
    import os
    e = dict(os.environ)
    if env:
        e.update(env)
    return subprocess.run([sys.executable, "-m", "rapidplace.cli", *args],
                          capture_output=True, text=True, env=e)


def test_place_smoke(tmp_path):
    out = tmp_path / "run1"
    rc = main(["place", "--device", "tiny4", "--design", "builtin:conv",
               "--algo", "sa", "--seed", "1", "--evals", "2000",
               "--out", str(out)])
    assert rc == 0
    for name in ("placement.json", "trace.csv", "pipeline.json",
                 "floorplan.svg", "flow.log", "manifest.json"):
        assert (out / name).exists()
    trace = (out / "trace.csv").read_text().splitlines()
    assert trace[0] == "evals,wl2,bbox,scalar,millis"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "place"
    assert manifest["seeds"] == [1]
    assert "device" in manifest["input_hashes"]


def test_place_unknown_algo_usage_error(tmp_path):
    rc = main(["place", "--device", "tiny4", "--algo", "foo",
               "--out", str(tmp_path / "x")])
    assert rc == 2


def test_place_infeasible_exit_code(tmp_path):
    # flat design needing 6 URAM sites; tiny4 only has 4
    raw = {"blocks": [{"id": i, "type": "URAM"} for i in range(6)],
           "connections": [], "chains": []}
    f = tmp_path / "big.json"
    f.write_text(json.dumps(raw))
    rc = main(["place", "--device", "tiny4", "--design", str(f),
               "--algo", "sa", "--seed", "0", "--evals", "100",
               "--out", str(tmp_path / "y")])
    assert rc == 3


def test_place_emit_loc(tmp_path):
    out = tmp_path / "run-loc"
    rc = main(["place", "--device", "tiny4", "--algo", "ga", "--seed", "0",
               "--evals", "200", "--population", "10", "--out", str(out),
               "--emit-loc"])
    assert rc == 0
    lines = (out / "placement.loc").read_text().splitlines()
    assert len(lines) == 56
    assert " => (" in lines[0]


def test_evaluate_prints_json(tmp_path, capsys):
    out = tmp_path / "run2"
    assert main(["place", "--device", "tiny4", "--algo", "sa", "--seed", "2",
                 "--evals", "500", "--out", str(out)]) == 0
    capsys.readouterr()
    rc = main(["evaluate", "--device", "tiny4",
               "--placement", str(out / "placement.json")])
    assert rc == 0
    payload = json.loads(capsys.readouterr().out.strip())
    assert set(payload) == {"wl2", "max_bbox", "scalar"}
    assert payload["scalar"] == payload["wl2"] * payload["max_bbox"]


def test_svg_structure(tmp_path, conv2):
    out = tmp_path / "run3"
    assert main(["place", "--device", "tiny4", "--algo", "sa", "--seed", "3",
                 "--evals", "300", "--out", str(out)]) == 0
    svg_path = tmp_path / "plan.svg"
    rc = main(["svg", "--device", "tiny4",
               "--placement", str(out / "placement.json"),
               "--design", "builtin:conv", "--out", str(svg_path)])
    assert rc == 0
    root = ET.fromstring(svg_path.read_text())
    ns = "{http://www.w3.org/2000/svg}"
    rects = root.findall(f"{ns}rect")
    sites = [r for r in rects if r.get("class") == "site"]
    boxes = [r for r in rects if r.get("class") == "unit-bbox"]
    cols = [r for r in rects if r.get("class") == "column"]
    assert len(sites) == 56
    assert len(boxes) == 2
    assert len(cols) == 4


def test_svg_empty_placement(tmp_path):
    svg_path = tmp_path / "empty.svg"
    rc = main(["svg", "--device", "tiny4", "--out", str(svg_path)])
    assert rc == 0
    root = ET.fromstring(svg_path.read_text())
    ns = "{http://www.w3.org/2000/svg}"
    rects = root.findall(f"{ns}rect")
    assert [r for r in rects if r.get("class") == "column"]
    assert not [r for r in rects if r.get("class") == "site"]


def test_compare_table(tmp_path):
    out = tmp_path / "cmp"
    rc = main(["compare", "--device", "tiny4", "--algos", "sa,ga",
               "--runs", "3", "--evals", "300", "--population", "10",
               "--out", str(out)])
    assert rc == 0
    runs = (out / "runs.csv").read_text().splitlines()
    assert runs[0] == "algo,seed,wl2,bbox,scalar,evals,seconds"
    assert len(runs) == 1 + 6  # 2 algos x 3 runs
    # deterministic ordering by (algo, seed)
    keys = [tuple(r.split(",")[:2]) for r in runs[1:]]
    assert keys == sorted(keys)
    summary = (out / "summary.csv").read_text().splitlines()
    assert len(summary) == 1 + 2


def test_compare_top_k(tmp_path):
    out = tmp_path / "cmp-top"
    rc = main(["compare", "--device", "tiny4", "--algos", "sa",
               "--runs", "4", "--evals", "200", "--top", "2",
               "--out", str(out)])
    assert rc == 0
    summary = (out / "summary.csv").read_text().splitlines()
    header = summary[0].split(",")
    row = dict(zip(header, summary[1].split(",")))
    assert row["runs"] == "4"
    assert row["top"] == "2"


def test_transfer_identical_device_auto_target(tmp_path):
    seed_out = tmp_path / "seed"
    assert main(["place", "--device", "tiny4", "--algo", "sa", "--seed", "4",
                 "--evals", "1500", "--out", str(seed_out)]) == 0
    out = tmp_path / "xfer"
    rc = main(["transfer", "--seed-bundle", str(seed_out),
               "--device", "tiny4", "--target", "auto",
               "--algo", "nsga2", "--population", "20",
               "--evals", "2000", "--seed", "5", "--out", str(out)])
    assert rc == 0
    record = json.loads((out / "transfer.json").read_text())
    assert record["seeded_evaluations_to_target"] <= 20


def test_transfer_baseline_record_schema(tmp_path):
    seed_out = tmp_path / "seed2"
    assert main(["place", "--device", "tiny4", "--algo", "sa", "--seed", "6",
                 "--evals", "800", "--out", str(seed_out)]) == 0
    out = tmp_path / "xfer2"
    rc = main(["transfer", "--seed-bundle", str(seed_out),
               "--device", "tiny4", "--target", "auto", "--baseline",
               "--algo", "ga", "--population", "10",
               "--evals", "600", "--seed", "7", "--out", str(out)])
    assert rc == 0
    record = json.loads((out / "transfer.json").read_text())
    assert "seeded_evaluations_to_target" in record
    assert "scratch_evaluations_to_target" in record
    if record.get("speedup"):
        assert record["speedup"] == pytest.approx(
            record["scratch_evaluations_to_target"]
            / record["seeded_evaluations_to_target"])


def test_device_gen_roundtrip(tmp_path):
    f = tmp_path / "synth.json"
    rc = main(["device-gen", "--dsp", "2", "--bram", "2", "--uram", "1",
               "--sites", "18,8,4", "--region-height", "9", "--slr", "2",
               "--seed", "3", "--out", str(f)])
    assert rc == 0
    from rapidplace.device import load_device
    dev = load_device(f)
    assert dev.xmax == 5
    assert dev.slr_count == 2


def test_config_file_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"max_evaluations": 150, "population": 8}))
    out = tmp_path / "cfgrun"
    rc = main(["place", "--device", "tiny4", "--algo", "ga",
               "--config", str(cfg), "--seed", "0", "--out", str(out)])
    assert rc == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["optimizer"]["max_evaluations"] == 150
    # CLI flag overrides config file
    out2 = tmp_path / "cfgrun2"
    rc = main(["place", "--device", "tiny4", "--algo", "ga",
               "--config", str(cfg), "--seed", "0", "--evals", "220",
               "--out", str(out2)])
    assert rc == 0
    manifest2 = json.loads((out2 / "manifest.json").read_text())
    assert manifest2["config"]["optimizer"]["max_evaluations"] == 220


def _strip_timing(out: Path) -> dict:
    files = {}
    for f in sorted(out.iterdir()):
        if f.name == "trace.csv":
            rows = [",".join(line.split(",")[:4])
                    for line in f.read_text().splitlines()]
            files[f.name] = "\n".join(rows)
        elif f.name == "manifest.json":
            m = json.loads(f.read_text())
            m.pop("argv", None)
            files[f.name] = json.dumps(m, sort_keys=True)
        else:
            files[f.name] = f.read_text()
    return files


def test_place_reproducible(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["place", "--device", "tiny4", "--algo", "sa",
                     "--seed", "11", "--evals", "400", "--out", str(out)]) == 0
    fa, fb = _strip_timing(a), _strip_timing(b)
    assert fa.keys() == fb.keys()
    for k in fa:
        if k == "manifest.json":
            continue  # contains the differing --out path
        assert fa[k] == fb[k], k
