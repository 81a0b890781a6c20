"""Two-stage multi-spectral satellite image inpainting toolkit.

Stage one repaints the missing region of the true-color bands with a
pluggable RGB backend (a remote diffusion service, or a deterministic
mock); stage two lifts the completed RGB to all 13 bands by fitting a
randomly initialized convolutional network to the single image. The
package also carries single-stage baselines, masked metrics, a
synthetic scene generator and an experiment harness.
"""

from .backends import (
    Backend,
    BackendRequest,
    DEFAULT_PROMPT,
    InpaintParams,
    diffusion_client_inpaint,
    direct_dip_inpaint,
    mock_inpaint,
)
from .data_model import (
    BAND_ORDER,
    NUM_BANDS,
    RGB_BANDS,
    InpaintMask,
    MSICube,
    RGBImage,
    ScenePair,
    extract_rgb,
    insert_rgb,
)
from .dip import (
    LossMask,
    NetworkState,
    SkipNetConfig,
    TrainSpec,
    grad_check,
    init_network,
    make_noise_input,
    masked_mse,
    train_dip,
)
from .errors import (
    BackendProtocolError,
    BackendServerError,
    BackendTransportError,
    DegenerateMaskError,
    DivergenceError,
    ExperimentConfigError,
    TensorCorruptionError,
    TensorFormatError,
    UnsupportedTensorError,
)
from .guidance import EdgeMap, edge_map
from .harness import (
    ExperimentConfig,
    MaskSpec,
    PanelSample,
    RunResult,
    aggregate,
    load_config,
    render_panel,
    run_pipeline,
    sweep,
)
from .masking import apply_fill, composite_known, generate_mask
from .metrics import EvalReport, evaluate_sample, rmse, ssim, ssim_map
from .npyio import load_tensor, save_tensor
from .preprocess import (
    DEFAULT_SCALE,
    RawCube,
    normalize_raw,
    saturation_check,
    scale_raw,
)
from .rgb2msi import build_completion_target, complete_msi
from .synthdata import generate_scene_pair, write_dataset

__version__ = "0.1.0"

__all__ = [
    "BAND_ORDER",
    "Backend",
    "BackendProtocolError",
    "BackendRequest",
    "BackendServerError",
    "BackendTransportError",
    "DEFAULT_PROMPT",
    "DEFAULT_SCALE",
    "DegenerateMaskError",
    "DivergenceError",
    "EdgeMap",
    "EvalReport",
    "ExperimentConfig",
    "ExperimentConfigError",
    "InpaintMask",
    "InpaintParams",
    "LossMask",
    "MSICube",
    "MaskSpec",
    "NUM_BANDS",
    "NetworkState",
    "PanelSample",
    "RGBImage",
    "RGB_BANDS",
    "RawCube",
    "RunResult",
    "ScenePair",
    "SkipNetConfig",
    "TensorCorruptionError",
    "TensorFormatError",
    "TrainSpec",
    "UnsupportedTensorError",
    "aggregate",
    "apply_fill",
    "build_completion_target",
    "complete_msi",
    "composite_known",
    "diffusion_client_inpaint",
    "direct_dip_inpaint",
    "edge_map",
    "evaluate_sample",
    "extract_rgb",
    "generate_mask",
    "generate_scene_pair",
    "grad_check",
    "init_network",
    "insert_rgb",
    "load_config",
    "load_tensor",
    "make_noise_input",
    "masked_mse",
    "mock_inpaint",
    "normalize_raw",
    "render_panel",
    "rmse",
    "run_pipeline",
    "saturation_check",
    "save_tensor",
    "scale_raw",
    "ssim",
    "ssim_map",
    "sweep",
    "train_dip",
    "write_dataset",
]
