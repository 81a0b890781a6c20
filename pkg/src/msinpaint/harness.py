"""Experiment orchestration: dataset runs, sweeps, aggregation, panels.

A run walks ``dataset_dir/sample_*/``, reconstructs each sample with
every configured method, scores against the ground-truth cube, and
writes NPY outputs, PNG previews and CSV reports under ``output_dir``.
Per-sample randomness (mask placement, network init) is derived from
the run seed and the sample id, so results do not depend on worker
count or completion order.
"""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
from PIL import Image

from .backends import (
    BackendRequest,
    InpaintParams,
    diffusion_client_inpaint,
    direct_dip_inpaint,
    mock_inpaint,
)
from .data_model import RGB_BANDS, InpaintMask, MSICube, RGBImage, ScenePair, extract_rgb
from .dip.network import SkipNetConfig
from .dip.train import TrainSpec
from .errors import (
    BackendProtocolError,
    BackendServerError,
    BackendTransportError,
    DivergenceError,
    ExperimentConfigError,
    TensorCorruptionError,
    TensorFormatError,
    UnsupportedTensorError,
)
from .guidance import edge_map
from .masking import MASK_KINDS, apply_fill, composite_known, generate_mask
from .metrics import CHANNEL_SCOPES, EvalReport, evaluate_sample, rmse, ssim
from .npyio import load_tensor, save_tensor
from .preprocess import DEFAULT_SCALE, RawCube, normalize_raw, saturation_check, scale_raw
from .rgb2msi import complete_msi

METHODS = ("sd-inpaint", "edge-guided", "direct-dip", "direct-dip-hist", "ideal-rgb", "mock")

# Stage-1 methods go through an RGB backend; the rest are single-stage
# or use ground truth RGB.
_BACKEND_METHODS = ("sd-inpaint", "edge-guided", "mock")

SWEEP_AXES = ("mask_fill_mode", "text_guidance_scale", "num_steps", "edge_guidance_scale")

# The default one-at-a-time grid; everything not being swept stays at
# the InpaintParams defaults.
TABLE_GRID = {
    "mask_fill_mode": ["blank", "historical"],
    "text_guidance_scale": [0.0, 1.0, 7.5],
    "num_steps": [20, 50, 100],
    "edge_guidance_scale": [0.1, 0.5, 1.0],
}

PANEL_GAIN = 3.0
PANEL_REFERENCE_ROWS = ("truth", "historical", "input")

AGGREGATE_COLUMNS = (
    "method", "scope", "ssim_whole", "ssim_mask", "rmse_whole", "rmse_mask",
    "n_samples", "n_failed",
)
REPORT_COLUMNS = (
    "sample_id", "method", "scope", "ssim_whole", "ssim_mask", "rmse_whole", "rmse_mask",
)

# Anything here marks the (sample, method) as failed and lets the run
# continue; ValueError covers per-sample data problems (bad mask files,
# shape mismatches) surfacing as precondition violations.
_SAMPLE_ERRORS = (
    BackendTransportError,
    BackendServerError,
    BackendProtocolError,
    DivergenceError,
    TensorFormatError,
    UnsupportedTensorError,
    TensorCorruptionError,
    OSError,
    ValueError,
)


@dataclass(frozen=True)
class MaskSpec:
    """Where masks come from: generated (coverage/kind/seed) or a fixed NPY file."""

    coverage: float = 0.25
    kind: str = "rect"
    path: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.coverage <= 1.0:
            raise ExperimentConfigError(f"mask coverage must be in [0, 1], got {self.coverage}")
        if self.kind not in MASK_KINDS:
            raise ExperimentConfigError(f"mask kind must be one of {MASK_KINDS}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one reproducible run needs; JSON config files mirror these names."""

    dataset_dir: str
    methods: tuple[str, ...]
    output_dir: str | None = None
    mask: MaskSpec = field(default_factory=MaskSpec)
    backend_endpoint: str | None = None
    mock_backend: bool = False
    backend_timeout: float = 120.0
    inpaint_params: InpaintParams = field(default_factory=InpaintParams)
    train_spec: TrainSpec = field(default_factory=TrainSpec)
    skip_config: SkipNetConfig = field(default_factory=SkipNetConfig)
    scopes: tuple[str, ...] = ("all13",)
    seed: int = 0
    workers: int = 1
    scale: float = DEFAULT_SCALE

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "scopes", tuple(self.scopes))
        if not self.methods:
            raise ExperimentConfigError("methods must be non-empty")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ExperimentConfigError(f"unknown methods {unknown}, want a subset of {METHODS}")
        if not self.scopes or any(s not in CHANNEL_SCOPES for s in self.scopes):
            raise ExperimentConfigError(f"scopes must be a non-empty subset of {CHANNEL_SCOPES}")
        needs_backend = [m for m in self.methods if m in ("sd-inpaint", "edge-guided")]
        if needs_backend and self.backend_endpoint is None and not self.mock_backend:
            raise ExperimentConfigError(
                f"methods {needs_backend} need backend_endpoint or mock_backend=true")
        if self.workers < 1:
            raise ExperimentConfigError(f"workers must be >= 1, got {self.workers}")


_NESTED = {
    "mask": MaskSpec,
    "inpaint_params": InpaintParams,
    "train_spec": TrainSpec,
    "skip_config": SkipNetConfig,
}


def _build(cls, data: dict, where: str):
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ExperimentConfigError(f"unknown {where} fields: {unknown}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ExperimentConfigError(f"bad {where}: {exc}") from exc


def config_from_dict(data: dict) -> ExperimentConfig:
    """Build a config from a plain dict (parsed JSON) with nested sections."""
    if not isinstance(data, dict):
        raise ExperimentConfigError(f"config must be a JSON object, got {type(data).__name__}")
    data = dict(data)
    for key, cls in _NESTED.items():
        if isinstance(data.get(key), dict):
            data[key] = _build(cls, data[key], key)
    return _build(ExperimentConfig, data, "config")


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ExperimentConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ExperimentConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def sample_seed(run_seed: int, sample_id: str) -> int:
    """Stable per-sample seed; independent of sample order and worker count."""
    digest = hashlib.blake2s(
        f"{run_seed}:{sample_id}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def discover_samples(dataset_dir: str | Path) -> list[Path]:
    root = Path(dataset_dir)
    if not root.is_dir():
        raise ExperimentConfigError(f"dataset directory {root} does not exist")
    dirs = sorted(p for p in root.iterdir() if p.is_dir() and (p / "s2.npy").is_file())
    if not dirs:
        raise ExperimentConfigError(f"no sample directories with s2.npy under {root}")
    return dirs


def _load_scene(sample_dir: Path, scale: float) -> ScenePair | None:
    """Read one sample; None means it was rejected as saturated."""
    raw = RawCube(load_tensor(sample_dir / "s2.npy"))
    if not saturation_check(scale_raw(raw, scale)):
        return None
    current = normalize_raw(raw, scale)
    hist_path = sample_dir / "s2_historical.npy"
    if hist_path.is_file():
        historical = normalize_raw(RawCube(load_tensor(hist_path)), scale)
    else:
        historical = current
    return ScenePair(current=current, historical=historical)


def _mask_for(sample_dir: Path, spec: MaskSpec, h: int, w: int, seed: int) -> InpaintMask:
    if spec.path is not None:
        return InpaintMask(load_tensor(spec.path))
    local = sample_dir / "mask.npy"
    if local.is_file():
        return InpaintMask(load_tensor(local))
    return generate_mask(h, w, spec.coverage, kind=spec.kind, seed=seed)


def _stage1_rgb(method: str, scene: ScenePair, mask: InpaintMask,
                config: ExperimentConfig, params: InpaintParams) -> RGBImage:
    """Run the RGB backend for one sample and composite over the known pixels."""
    filled = apply_fill(scene, mask, params.mask_fill_mode)
    control = edge_map(extract_rgb(scene.historical)) if method == "edge-guided" else None
    request = BackendRequest(
        image=extract_rgb(filled), mask=mask, control=control, params=params)
    if method == "mock" or config.mock_backend:
        rgb = mock_inpaint(request)
    else:
        rgb = diffusion_client_inpaint(
            config.backend_endpoint, request, timeout=config.backend_timeout)
    return composite_known(rgb, extract_rgb(scene.current), mask)


def run_method(method: str, scene: ScenePair, mask: InpaintMask,
               config: ExperimentConfig, seed: int) -> MSICube:
    """Reconstruct one sample with one method; returns the composited cube."""
    if method not in METHODS:
        raise ExperimentConfigError(f"unknown method {method!r}")
    spec = replace(config.train_spec, seed=seed)
    blanked = apply_fill(scene, mask, "blank")
    if method in _BACKEND_METHODS:
        params = replace(config.inpaint_params, seed=seed)
        rgb = _stage1_rgb(method, scene, mask, config, params)
        return complete_msi(blanked, rgb, mask, spec, config.skip_config)
    if method == "ideal-rgb":
        return complete_msi(blanked, extract_rgb(scene.current), mask, spec, config.skip_config)
    if method == "direct-dip":
        return direct_dip_inpaint(scene, mask, False, spec, config.skip_config)
    return direct_dip_inpaint(scene, mask, True, spec, config.skip_config)


@dataclass(frozen=True)
class SampleFailure:
    sample_id: str
    method: str
    message: str


@dataclass
class RunResult:
    reports: list[EvalReport]
    failures: list[SampleFailure]
    skipped: list[str]
    output_dir: Path | None

    @property
    def exit_code(self) -> int:
        """0 clean, 2 per-sample failures recorded, 3 nothing produced."""
        if self.failures:
            return 2
        if not self.reports:
            return 3
        return 0


def _preview_png(cube: MSICube, path: Path) -> None:
    Image.fromarray(_rgb_tile(cube)).save(path, format="PNG")


def _rgb_tile(cube: MSICube) -> np.ndarray:
    """uint8 HWC true-color rendering with the fixed display gain."""
    rgb = np.clip(extract_rgb(cube).values * PANEL_GAIN, 0.0, 1.0)
    return np.round(rgb * 255.0).astype(np.uint8).transpose(1, 2, 0)


def _evaluate(cube: MSICube, truth: MSICube, mask: InpaintMask, scope: str,
              sample_id: str, method: str) -> EvalReport:
    """evaluate_sample, with mask columns falling back to whole-image values
    when the mask is empty (there is no masked region to restrict to)."""
    if mask.num_masked > 0:
        return evaluate_sample(cube, truth, mask, scope, sample_id=sample_id, method=method)
    bands = list(RGB_BANDS) if scope == "rgb3" else slice(None)
    a, b = cube.values[bands], truth.values[bands]
    return EvalReport(
        ssim_whole=ssim(a, b), ssim_mask=ssim(a, b),
        rmse_whole=rmse(a, b), rmse_mask=rmse(a, b),
        channel_scope=scope, sample_id=sample_id, method=method)


def _process_sample(sample_dir: Path, config: ExperimentConfig):
    """All methods for one sample. Returns (sample_id, scene, mask, outputs,
    reports, failures) with scene None when the sample was skipped."""
    sample_id = sample_dir.name
    seed = sample_seed(config.seed, sample_id)
    outputs: dict[str, MSICube] = {}
    reports: list[EvalReport] = []
    failures: list[SampleFailure] = []

    try:
        scene = _load_scene(sample_dir, config.scale)
        if scene is None:
            return sample_id, None, None, outputs, reports, failures
        mask = _mask_for(sample_dir, config.mask, scene.current.height,
                         scene.current.width, seed)
    except ExperimentConfigError:
        raise
    except _SAMPLE_ERRORS as exc:
        failures.extend(
            SampleFailure(sample_id, m, f"load failed: {exc}") for m in config.methods)
        return sample_id, None, None, outputs, reports, failures

    for method in config.methods:
        try:
            cube = run_method(method, scene, mask, config, seed)
        except ExperimentConfigError:
            raise
        except _SAMPLE_ERRORS as exc:
            failures.append(SampleFailure(sample_id, method, str(exc)))
            continue
        outputs[method] = cube
        for scope in config.scopes:
            reports.append(_evaluate(cube, scene.current, mask, scope, sample_id, method))
    return sample_id, scene, mask, outputs, reports, failures


def _produce(sample_dirs: list[Path], config: ExperimentConfig):
    """Yield per-sample results in dataset order, regardless of pool width."""
    if config.workers == 1:
        for d in sample_dirs:
            yield _process_sample(d, config)
        return
    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        futures = [pool.submit(_process_sample, d, config) for d in sample_dirs]
        for f in futures:
            yield f.result()


def run_pipeline(config: ExperimentConfig) -> RunResult:
    """Run every configured method over the dataset and write artifacts.

    Backend and optimization errors are recorded per (sample, method)
    and the run continues; see :attr:`RunResult.exit_code` for how they
    surface in the CLI.
    """
    sample_dirs = discover_samples(config.dataset_dir)
    out = Path(config.output_dir) if config.output_dir else None
    if out is not None:
        (out / "outputs").mkdir(parents=True, exist_ok=True)
        (out / "previews").mkdir(parents=True, exist_ok=True)

    result = RunResult(reports=[], failures=[], skipped=[], output_dir=out)

    for sample_id, scene, mask, outputs, reports, failures in _produce(sample_dirs, config):
        result.reports.extend(reports)
        result.failures.extend(failures)
        if scene is None and not failures:
            result.skipped.append(sample_id)
            continue
        if out is not None and scene is not None:
            save_tensor(mask.values.astype(np.float64), out / "outputs" / f"{sample_id}_mask.npy")
            for method, cube in outputs.items():
                save_tensor(cube.values, out / "outputs" / f"{sample_id}_{method}.npy")
                _preview_png(cube, out / "previews" / f"{sample_id}_{method}.png")

    if out is not None:
        write_reports_csv(result.reports, out / "reports.csv")
        write_aggregate_csv(aggregate(result.reports, result.failures), out / "summary.csv")
    return result


def aggregate(reports: list[EvalReport], failures: list[SampleFailure] = ()) -> list[dict]:
    """Unweighted per-(method, scope) means, Table-style whole/mask columns."""
    if not reports and not failures:
        raise ValueError("nothing to aggregate")
    failed_per_method: dict[str, int] = {}
    for failure in failures:
        failed_per_method[failure.method] = failed_per_method.get(failure.method, 0) + 1

    groups: dict[tuple[str, str], list[EvalReport]] = {}
    for report in reports:
        groups.setdefault((report.method, report.channel_scope), []).append(report)
    for method in failed_per_method:
        if not any(m == method for m, _ in groups):
            groups[(method, "all13")] = []

    rows = []
    for (method, scope), members in groups.items():
        def mean(attr):
            if not members:
                return float("nan")
            return float(np.mean([getattr(r, attr) for r in members]))
        rows.append({
            "method": method,
            "scope": scope,
            "ssim_whole": mean("ssim_whole"),
            "ssim_mask": mean("ssim_mask"),
            "rmse_whole": mean("rmse_whole"),
            "rmse_mask": mean("rmse_mask"),
            "n_samples": len({r.sample_id for r in members}),
            "n_failed": failed_per_method.get(method, 0),
        })
    return rows


def write_reports_csv(reports: list[EvalReport], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(REPORT_COLUMNS)
        for r in reports:
            writer.writerow([r.sample_id, r.method, r.channel_scope,
                             repr(r.ssim_whole), repr(r.ssim_mask),
                             repr(r.rmse_whole), repr(r.rmse_mask)])


def write_aggregate_csv(rows: list[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(AGGREGATE_COLUMNS)
        for row in rows:
            writer.writerow([
                row["method"], row["scope"],
                repr(row["ssim_whole"]), repr(row["ssim_mask"]),
                repr(row["rmse_whole"]), repr(row["rmse_mask"]),
                row["n_samples"], row["n_failed"],
            ])


SWEEP_COLUMNS = ("parameter", "value") + AGGREGATE_COLUMNS


def sweep(base: ExperimentConfig, grid: dict[str, list] | None = None,
          csv_path: str | Path | None = None) -> list[dict]:
    """One-at-a-time parameter sweep over stage-1 knobs.

    Each grid axis is varied on its own while every other parameter
    stays at the base config's value, mirroring the bolded-defaults
    protocol. An empty grid degenerates to a single run of the base
    config. Returns flat rows (one per configuration, method and scope).
    """
    if grid is None:
        grid = TABLE_GRID
    unknown = sorted(set(grid) - set(SWEEP_AXES))
    if unknown:
        raise ExperimentConfigError(
            f"unknown sweep parameters {unknown}, want a subset of {SWEEP_AXES}")

    runs: list[tuple[str, object, ExperimentConfig]] = []
    if not grid:
        runs.append(("base", "", base))
    for axis in SWEEP_AXES:
        if axis not in grid:
            continue
        for value in grid[axis]:
            params = replace(base.inpaint_params, **{axis: value})
            cfg = replace(base, inpaint_params=params, output_dir=None)
            runs.append((axis, value, cfg))

    rows: list[dict] = []
    for axis, value, cfg in runs:
        result = run_pipeline(cfg)
        for agg in aggregate(result.reports, result.failures):
            rows.append({"parameter": axis, "value": value, **agg})

    if csv_path is not None:
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(SWEEP_COLUMNS)
            for row in rows:
                writer.writerow([
                    row["parameter"], row["value"], row["method"], row["scope"],
                    repr(row["ssim_whole"]), repr(row["ssim_mask"]),
                    repr(row["rmse_whole"]), repr(row["rmse_mask"]),
                    row["n_samples"], row["n_failed"],
                ])
    return rows


@dataclass(frozen=True)
class PanelSample:
    """One panel column: references plus per-method reconstructions."""

    truth: MSICube
    historical: MSICube
    masked_input: MSICube
    outputs: dict[str, MSICube]


def render_panel(samples: list[PanelSample], path: str | Path | None = None) -> np.ndarray:
    """Tile a comparison grid: reference rows then one row per method.

    Columns are samples; every tile is the true-color composite with
    the fixed display gain. Output is a uint8 HWC array, optionally
    also written as a PNG. Same inputs give byte-identical files.
    """
    if not samples:
        raise ValueError("render_panel needs at least one sample")
    methods = list(samples[0].outputs)
    for s in samples:
        if list(s.outputs) != methods:
            raise ValueError("all panel samples must carry the same methods")

    columns = []
    for s in samples:
        tiles = [_rgb_tile(s.truth), _rgb_tile(s.historical), _rgb_tile(s.masked_input)]
        tiles.extend(_rgb_tile(s.outputs[m]) for m in methods)
        columns.append(np.concatenate(tiles, axis=0))
    grid = np.concatenate(columns, axis=1)
    if path is not None:
        Image.fromarray(grid).save(path, format="PNG")
    return grid
