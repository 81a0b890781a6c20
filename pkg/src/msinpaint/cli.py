"""Command line entry point.

Subcommands cover the full workflow: synthesize data, cut masks, run a
single sample or a whole experiment, sweep stage-1 parameters,
re-aggregate reports, render comparison panels, and verify gradients.
Exit codes: 0 success, 1 usage or config error, 2 a run finished with
per-sample failures, 3 nothing succeeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from .data_model import InpaintMask, MSICube
from .dip.network import SkipNetConfig
from .dip.train import TrainSpec, grad_check
from .errors import ExperimentConfigError
from .harness import (
    METHODS,
    TABLE_GRID,
    ExperimentConfig,
    MaskSpec,
    PanelSample,
    _load_scene,
    _mask_for,
    aggregate,
    load_config,
    render_panel,
    run_method,
    run_pipeline,
    sample_seed,
    sweep,
    write_aggregate_csv,
)
from .masking import MASK_KINDS, apply_fill, generate_mask
from .metrics import EvalReport
from .npyio import load_tensor, save_tensor
from .preprocess import DEFAULT_SCALE
from .synthdata import write_dataset

GRADCHECK_THRESHOLD = 1e-4


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as exit code 1, not 2."""

    def error(self, message):
        raise _UsageError(message)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file mirroring ExperimentConfig fields")
    p.add_argument("--dataset", help="dataset directory (overrides config)")
    p.add_argument("--method", action="append", choices=METHODS,
                   help="method to run; repeat for several (overrides config)")
    p.add_argument("--backend-endpoint", help="diffusion service URL")
    p.add_argument("--mock-backend", action="store_true",
                   help="substitute the deterministic mock for the HTTP backend")
    p.add_argument("--steps", type=int, help="optimization steps per image")
    p.add_argument("--lr", type=float, help="optimization learning rate")
    p.add_argument("--coverage", type=float, help="generated mask coverage fraction")
    p.add_argument("--seed", type=int, help="run seed")
    p.add_argument("--out", help="output directory")


def _config_from_args(args) -> ExperimentConfig:
    # collect every override first so validation sees the final field set;
    # building intermediate configs would reject e.g. --method sd-inpaint
    # before --backend-endpoint is applied
    if args.config:
        base = load_config(args.config)
        values = {f.name: getattr(base, f.name) for f in fields(ExperimentConfig)}
    else:
        if not args.dataset:
            raise ExperimentConfigError("need --config or --dataset")
        values = {"dataset_dir": args.dataset, "methods": ("mock",)}
    if args.dataset:
        values["dataset_dir"] = args.dataset
    if args.method:
        values["methods"] = tuple(args.method)
    if args.backend_endpoint:
        values["backend_endpoint"] = args.backend_endpoint
    if args.mock_backend:
        values["mock_backend"] = True
    if args.steps is not None or args.lr is not None:
        spec = values.get("train_spec", TrainSpec())
        if args.steps is not None:
            spec = replace(spec, steps=args.steps)
        if args.lr is not None:
            spec = replace(spec, learning_rate=args.lr)
        values["train_spec"] = spec
    if args.coverage is not None:
        values["mask"] = replace(values.get("mask", MaskSpec()), coverage=args.coverage)
    if args.seed is not None:
        values["seed"] = args.seed
    if args.out:
        values["output_dir"] = args.out
    return ExperimentConfig(**values)


def _cmd_synth(args) -> int:
    written = write_dataset(args.out, args.n, h=args.height, w=args.width, seed=args.seed)
    print(f"wrote {len(written)} samples under {args.out}")
    return 0


def _cmd_mask(args) -> int:
    mask = generate_mask(args.height, args.width, args.coverage,
                         kind=args.kind, seed=args.seed)
    save_tensor(mask.values.astype(np.float64), args.out)
    print(f"wrote {args.out} ({mask.num_masked} masked pixels)")
    return 0


def _cmd_run(args) -> int:
    config = _config_from_args(args)
    result = run_pipeline(config)
    rows = aggregate(result.reports, result.failures) if (
        result.reports or result.failures) else []
    for row in rows:
        print(f"{row['method']:16s} {row['scope']:6s} "
              f"ssim_whole={row['ssim_whole']:.4f} ssim_mask={row['ssim_mask']:.4f} "
              f"rmse_whole={row['rmse_whole']:.4f} rmse_mask={row['rmse_mask']:.4f} "
              f"n={row['n_samples']} failed={row['n_failed']}")
    if result.skipped:
        print(f"skipped (saturated): {', '.join(result.skipped)}")
    for failure in result.failures:
        print(f"FAILED {failure.sample_id} {failure.method}: {failure.message}",
              file=sys.stderr)
    return result.exit_code


def _cmd_inpaint(args) -> int:
    """One sample, one method; a run restricted to a single directory."""
    sample = Path(args.sample)
    if not args.config and not args.dataset:
        args.dataset = str(sample.parent)
    config = _config_from_args(args)
    scene = _load_scene(sample, config.scale)
    if scene is None:
        print(f"{sample.name}: rejected as saturated", file=sys.stderr)
        return 3
    seed = sample_seed(config.seed, sample.name)
    mask = _mask_for(sample, config.mask, scene.current.height, scene.current.width, seed)
    method = config.methods[0]
    cube = run_method(method, scene, mask, config, seed)
    out = Path(args.out or sample)
    out.mkdir(parents=True, exist_ok=True)
    save_tensor(cube.values, out / f"{sample.name}_{method}.npy")
    print(f"wrote {out / f'{sample.name}_{method}.npy'}")
    return 0


def _cmd_sweep(args) -> int:
    config = _config_from_args(args)
    if args.grid:
        with open(args.grid, encoding="utf-8") as fh:
            grid = json.load(fh)
    else:
        grid = TABLE_GRID
    target = args.out or config.output_dir or "."
    out_csv = Path(target) if str(target).endswith(".csv") else Path(target) / "sweep.csv"
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    rows = sweep(config, grid, csv_path=out_csv)
    print(f"wrote {out_csv} ({len(rows)} rows)")
    return 2 if any(r["n_failed"] for r in rows) else 0


def _cmd_report(args) -> int:
    reports = []
    with open(args.reports, encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            reports.append(EvalReport(
                ssim_whole=float(row["ssim_whole"]), ssim_mask=float(row["ssim_mask"]),
                rmse_whole=float(row["rmse_whole"]), rmse_mask=float(row["rmse_mask"]),
                channel_scope=row["scope"], sample_id=row["sample_id"],
                method=row["method"]))
    if not reports:
        print("no reports to aggregate", file=sys.stderr)
        return 3
    write_aggregate_csv(aggregate(reports), args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_panel(args) -> int:
    run_dir = Path(args.run_dir)
    mask_files = sorted((run_dir / "outputs").glob("*_mask.npy"))
    if args.samples:
        mask_files = mask_files[:args.samples]
    if not mask_files:
        print(f"no outputs under {run_dir}", file=sys.stderr)
        return 3
    samples = []
    for mask_file in mask_files:
        sample_id = mask_file.name[:-len("_mask.npy")]
        scene = _load_scene(Path(args.dataset) / sample_id, DEFAULT_SCALE)
        mask = InpaintMask(load_tensor(mask_file))
        outputs = {}
        for npy in sorted(run_dir.glob(f"outputs/{sample_id}_*.npy")):
            method = npy.stem[len(sample_id) + 1:]
            if method == "mask":
                continue
            outputs[method] = MSICube(load_tensor(npy))
        samples.append(PanelSample(
            truth=scene.current, historical=scene.historical,
            masked_input=apply_fill(scene, mask, "blank"), outputs=outputs))
    grid = render_panel(samples, path=args.out)
    print(f"wrote {args.out} ({grid.shape[0]}x{grid.shape[1]})")
    return 0


def _cmd_gradcheck(args) -> int:
    config = SkipNetConfig(
        input_channels=3, scales=2, down_channels=(6, 8), skip_channels=2,
        use_norm=not args.no_norm, out_channels=4)
    rng = np.random.default_rng(args.seed)
    x = rng.uniform(0.0, 0.1, size=(3, args.size, args.size))
    target = rng.uniform(0.2, 0.8, size=(4, args.size, args.size))
    lmask = (rng.uniform(size=(4, args.size, args.size)) < 0.7).astype(np.float64)
    lmask.flat[0] = 1.0
    err = grad_check(config, x, target, lmask, eps=args.eps, n_probes=args.probes)
    status = "ok" if err < GRADCHECK_THRESHOLD else "FAIL"
    print(f"gradcheck max relative error {err:.3e} ({status}, "
          f"norm={'off' if args.no_norm else 'on'})")
    return 0 if err < GRADCHECK_THRESHOLD else 3


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="msinpaint", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic scene-pair dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("mask", help="write a mask NPY")
    p.add_argument("--out", required=True)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--coverage", type=float, default=0.25)
    p.add_argument("--kind", choices=MASK_KINDS, default="rect")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_mask)

    p = sub.add_parser("inpaint", help="reconstruct a single sample directory")
    p.add_argument("--sample", required=True, help="sample directory with s2.npy")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_inpaint)

    p = sub.add_parser("run", help="run an experiment over a dataset")
    _add_config_flags(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="one-at-a-time stage-1 parameter sweep")
    _add_config_flags(p)
    p.add_argument("--grid", help="JSON file mapping parameter -> value list")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("report", help="aggregate a per-sample reports CSV")
    p.add_argument("--reports", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("panel", help="render a comparison panel from a run directory")
    p.add_argument("--run-dir", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--samples", type=int)
    p.set_defaults(func=_cmd_panel)

    p = sub.add_parser("gradcheck", help="finite-difference check of the network gradients")
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--probes", type=int, default=50)
    p.add_argument("--size", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-norm", action="store_true")
    p.set_defaults(func=_cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ExperimentConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"invalid value: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
