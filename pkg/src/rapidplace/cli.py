"""Command-line front end.

Subcommands: place, compare, svg, transfer, evaluate, device-gen.
Exit codes: 0 success, 2 usage or validation error, 3 infeasible
design/device pair, 4 internal error. RAPIDPLACE_THREADS caps sweep
parallelism in `compare`.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .design import (DesignSpec, UnitSpec, builtin_conv_unit, load_design,
                     replicate_netlist)
from .device import Device, bundled_device_path, load_device, save_device, synth_device
from .errors import CapacityError, ParseError, RapidPlaceError, ValidationError
from .flow import (FlowConfig, run_flow, select_repeating_rectangle,
                   transfer_place, write_bundle)
from .genotype import Genotype, decode, load_placement
from .objective import check_constraints, evaluate_placement
from .optimizers import OptimizerConfig, run_optimizer
from .render import floorplan_svg

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_INTERNAL = 4

_ALGO_NAMES = {"nsga2": "nsga2", "nsga2-reduced": "nsga2_reduced",
               "cmaes": "cmaes", "sa": "sa", "ga": "ga"}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _resolve_device(arg: str) -> tuple[Device, Path]:
    p = Path(arg)
    if not p.exists():
        candidate = bundled_device_path(arg)
        if candidate.exists():
            p = candidate
        else:
            raise ValidationError("device", f"no such device file or bundled name: {arg}")
    return load_device(p), p


def _resolve_unit(arg: str) -> tuple[UnitSpec, str]:
    """--design accepts 'builtin:conv' or a design file used as the unit."""
    if arg == "builtin:conv":
        return builtin_conv_unit(), "builtin:conv"
    p = Path(arg)
    if not p.exists():
        raise ValidationError("design", f"no such design file: {arg}")
    spec = load_design(p)
    return spec.unit, _sha256(p)


def _optimizer_config(args, algo: str) -> OptimizerConfig:
    base = {}
    if getattr(args, "config", None):
        raw = json.loads(Path(args.config).read_text())
        if not isinstance(raw, dict):
            raise ValidationError("config", "config file must hold a JSON object")
        base.update(raw)
    cfg = OptimizerConfig.from_dict(base)
    cfg.algorithm = algo
    if getattr(args, "seed", None) is not None:
        cfg.rng_seed = args.seed
    if getattr(args, "evals", None) is not None:
        cfg.max_evaluations = args.evals
    if getattr(args, "population", None) is not None:
        cfg.population = args.population
    cfg.validate()
    return cfg


def cmd_place(args) -> int:
    device, device_path = _resolve_device(args.device)
    unit, design_id = _resolve_unit(args.design)
    algo = _ALGO_NAMES[args.algo]
    opt_config = _optimizer_config(args, algo)
    flow_config = FlowConfig(optimizer=opt_config,
                             pipeline_depth=args.pipeline_depth)
    bundle = run_flow(device, unit, flow_config)
    manifest = {
        "command": "place",
        "argv": sys.argv[1:],
        "tool_version": __version__,
        "config": flow_config.to_dict(),
        "seeds": [opt_config.rng_seed],
        "input_hashes": {"device": _sha256(device_path), "design": design_id},
        "device_file": str(device_path),
        "design_arg": args.design,
        "rect_units": bundle.plan.units_per_rect,
        "rect_height": bundle.plan.region_height,
    }
    out = write_bundle(bundle, args.out, manifest=manifest)
    if args.emit_loc:
        (out / "placement.loc").write_text(
            "\n".join(bundle.full_placement.loc_lines()) + "\n")
    print(f"bundle written to {out}")
    return EXIT_OK


def _compare_worker(payload):
    device, design, region, config = payload
    t0 = time.perf_counter()
    result = run_optimizer(device, design, region, config)
    wall = time.perf_counter() - t0
    return {
        "algo": config.algorithm, "seed": config.rng_seed,
        "wl2": result.best_objectives.wl2,
        "bbox": result.best_objectives.max_bbox,
        "scalar": result.best_scalar,
        "evals": result.evaluations, "seconds": wall,
    }


def cmd_compare(args) -> int:
    device, _ = _resolve_device(args.device)
    unit, _ = _resolve_unit(args.design)
    plan = select_repeating_rectangle(device, unit)
    design = replicate_netlist(unit, plan.units_per_rect)
    rect_device = dataclasses.replace(device, region_height=plan.region_height)

    jobs = []
    for algo_arg in args.algos.split(","):
        algo_arg = algo_arg.strip()
        if algo_arg not in _ALGO_NAMES:
            raise ValidationError("algo", f"unknown algorithm {algo_arg!r}")
        for run in range(args.runs):
            cfg = _optimizer_config(args, _ALGO_NAMES[algo_arg])
            cfg.rng_seed = (args.seed or 0) + run
            jobs.append((rect_device, design, 0, cfg))

    threads = int(os.environ.get("RAPIDPLACE_THREADS", "1"))
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_compare_worker, jobs))
    else:
        rows = [_compare_worker(j) for j in jobs]
    rows.sort(key=lambda r: (r["algo"], r["seed"]))

    groups: dict[str, list[dict]] = {}
    for r in rows:
        groups.setdefault(r["algo"], []).append(r)
    summary = []
    for algo, rs in sorted(groups.items()):
        picked = sorted(rs, key=lambda r: r["scalar"])[: args.top or len(rs)]
        n = len(picked)
        summary.append({
            "algo": algo, "runs": len(rs), "top": n,
            "wl2_mean": sum(r["wl2"] for r in picked) / n,
            "wl2_min": min(r["wl2"] for r in picked),
            "bbox_mean": sum(r["bbox"] for r in picked) / n,
            "bbox_min": min(r["bbox"] for r in picked),
            "scalar_mean": sum(r["scalar"] for r in picked) / n,
            "scalar_min": min(r["scalar"] for r in picked),
            "evals_mean": sum(r["evals"] for r in picked) / n,
            "seconds_mean": sum(r["seconds"] for r in picked) / n,
        })

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    header = ["algo", "seed", "wl2", "bbox", "scalar", "evals", "seconds"]
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(str(r[h]) for h in header))
    (out / "runs.csv").write_text("\n".join(lines) + "\n")

    cols = ["algo", "runs", "top", "wl2_mean", "wl2_min", "bbox_mean",
            "bbox_min", "scalar_mean", "scalar_min", "evals_mean", "seconds_mean"]
    text = [" ".join(f"{c:>12}" for c in cols)]
    for s in summary:
        text.append(" ".join(
            f"{s[c]:>12.1f}" if isinstance(s[c], float) else f"{str(s[c]):>12}"
            for c in cols))
    table = "\n".join(text) + "\n"
    (out / "summary.txt").write_text(table)
    (out / "summary.csv").write_text(
        ",".join(cols) + "\n"
        + "\n".join(",".join(str(s[c]) for c in cols) for s in summary) + "\n")
    print(table, end="")
    return EXIT_OK


def cmd_svg(args) -> int:
    device, _ = _resolve_device(args.device)
    placement = load_placement(args.placement) if args.placement else None
    design = None
    if args.design:
        unit, _ = _resolve_unit(args.design)
        if placement is not None:
            n_units = len(placement.block_ids) // unit.size
            design = replicate_netlist(unit, max(n_units, 1))
    svg = floorplan_svg(device, placement, design,
                        highlight_unit=args.highlight_unit)
    Path(args.out).write_text(svg)
    print(f"svg written to {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    device, _ = _resolve_device(args.device)
    unit, _ = _resolve_unit(args.design)
    placement = load_placement(args.placement)
    n_units = len(placement.block_ids) // unit.size
    design = replicate_netlist(unit, max(n_units, 1))
    values = evaluate_placement(placement, design)
    print(json.dumps(values.to_dict()))
    return EXIT_OK


def cmd_transfer(args) -> int:
    bundle_dir = Path(args.seed_bundle)
    manifest = json.loads((bundle_dir / "manifest.json").read_text())
    genotype = Genotype.from_dict(
        json.loads((bundle_dir / "genotype.json").read_text()))
    src_device, _ = _resolve_device(manifest["device_file"])
    unit, _ = _resolve_unit(manifest["design_arg"])
    design = replicate_netlist(unit, manifest["rect_units"])
    dst_device, _ = _resolve_device(args.device)

    src_rect = dataclasses.replace(src_device,
                                   region_height=manifest["rect_height"])
    dst_plan = select_repeating_rectangle(dst_device, unit)
    dst_rect = dataclasses.replace(dst_device,
                                   region_height=dst_plan.region_height)

    config = _optimizer_config(args, _ALGO_NAMES[args.algo])
    if args.target == "auto":
        summary = json.loads((bundle_dir / "summary.json").read_text())
        target = float(summary["rect"]["objectives"]["scalar"])
    else:
        target = float(args.target)

    outcome = transfer_place(genotype, src_rect, dst_rect, design, config,
                             region=0, target=target)
    record = {
        "src_device": src_device.name,
        "dst_device": dst_device.name,
        "target_scalar": target,
        "seeded_evaluations_to_target": outcome.evaluations_to_target,
        "seeded_best_scalar": outcome.result.best_scalar,
    }
    if args.baseline:
        scratch_cfg = dataclasses.replace(config, target_scalar=target)
        scratch = run_optimizer(dst_rect, design, 0, scratch_cfg)
        record["scratch_evaluations_to_target"] = scratch.trace.evals_to(target)
        record["scratch_best_scalar"] = scratch.best_scalar
        if (record["scratch_evaluations_to_target"]
                and record["seeded_evaluations_to_target"]):
            record["speedup"] = (record["scratch_evaluations_to_target"]
                                 / record["seeded_evaluations_to_target"])
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "transfer.json").write_text(json.dumps(record, indent=2) + "\n")
    print(json.dumps(record, indent=2))
    return EXIT_OK


def cmd_device_gen(args) -> int:
    sites = [int(s) for s in args.sites.split(",")]
    if len(sites) != 3:
        raise ValidationError("sites", "expected dsp,bram,uram site counts")
    device = synth_device(args.dsp, args.bram, args.uram,
                          (sites[0], sites[1], sites[2]),
                          region_height=args.region_height,
                          slr_count=args.slr, seed=args.seed or 0,
                          name=args.name)
    save_device(device, args.out)
    print(f"device written to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rapidplace",
        description="Evolutionary hard-block placement for columnar fabrics")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common_opt(p, with_algo=True):
        p.add_argument("--device", required=True,
                       help="device file or bundled name (e.g. tiny4)")
        p.add_argument("--design", default="builtin:conv",
                       help="design file or builtin:conv")
        if with_algo:
            p.add_argument("--algo", choices=sorted(_ALGO_NAMES), default="nsga2")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--evals", type=int, default=None)
        p.add_argument("--population", type=int, default=None)
        p.add_argument("--config", help="JSON optimizer config file")

    p = sub.add_parser("place", help="run the full placement flow")
    common_opt(p)
    p.add_argument("--out", required=True)
    p.add_argument("--pipeline-depth", type=int, default=2)
    p.add_argument("--emit-loc", action="store_true",
                   help="also write one LOC-style line per block")
    p.set_defaults(fn=cmd_place)

    p = sub.add_parser("compare", help="seed-sweep several algorithms")
    common_opt(p, with_algo=False)
    p.add_argument("--algos", required=True,
                   help="comma list, e.g. sa,cmaes,nsga2")
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--top", type=int, default=None,
                   help="aggregate only the best k runs per algorithm")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_compare)

    p = sub.add_parser("svg", help="render a floorplan SVG")
    p.add_argument("--device", required=True)
    p.add_argument("--placement", default=None)
    p.add_argument("--design", default=None)
    p.add_argument("--highlight-unit", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_svg)

    p = sub.add_parser("transfer", help="seed a search from an existing bundle")
    p.add_argument("--seed-bundle", required=True)
    p.add_argument("--device", required=True, help="destination device")
    p.add_argument("--target", default="auto",
                   help="scalar to reach, or 'auto' for the seed's own")
    p.add_argument("--baseline", action="store_true",
                   help="also run a scratch baseline for comparison")
    p.add_argument("--algo", choices=sorted(_ALGO_NAMES), default="nsga2")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--evals", type=int, default=None)
    p.add_argument("--population", type=int, default=None)
    p.add_argument("--config", help="JSON optimizer config file")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_transfer)

    p = sub.add_parser("evaluate", help="print objectives of a placement")
    p.add_argument("--device", required=True)
    p.add_argument("--design", default="builtin:conv")
    p.add_argument("--placement", required=True)
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("device-gen", help="generate a synthetic device file")
    p.add_argument("--dsp", type=int, required=True)
    p.add_argument("--bram", type=int, required=True)
    p.add_argument("--uram", type=int, required=True)
    p.add_argument("--sites", required=True, help="dsp,bram,uram sites per column")
    p.add_argument("--region-height", type=int, required=True)
    p.add_argument("--slr", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--name", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_device_gen)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValidationError, ParseError, FileNotFoundError,
            json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RapidPlaceError as exc:
        cause = getattr(exc, "cause", None)
        if isinstance(cause, CapacityError):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INFEASIBLE
        if isinstance(cause, (ValidationError, ParseError)):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
