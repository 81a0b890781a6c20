"""Run the whole benchmark loop on synthetic data with the mock backend.

This is the offline version of the full pipeline: dataset discovery,
per-sample masking, stage-1 fill via the mock, stage-2 completion,
masked metrics, CSV reports, and the comparison panel. No network, no
model weights. Swap mock_backend for a backend_endpoint to drive a
real diffusion service with the same config.

Takes a couple of minutes; trim steps further if impatient.
"""

from pathlib import Path

from msinpaint.dip.network import SkipNetConfig
from msinpaint.dip.train import TrainSpec
from msinpaint.harness import ExperimentConfig, PanelSample, render_panel, run_pipeline
from msinpaint.masking import generate_mask
from msinpaint.npyio import load_tensor
from msinpaint.preprocess import RawCube, normalize_raw
from msinpaint.data_model import InpaintMask, MSICube
from msinpaint.synthdata import write_dataset

out = Path("demo_out/06_full_experiment")
dataset = out / "dataset"
run_dir = out / "run"
write_dataset(dataset, n_samples=2, h=64, w=64, seed=100)

config = ExperimentConfig(
    dataset_dir=str(dataset),
    methods=("mock", "direct-dip", "direct-dip-hist", "ideal-rgb"),
    output_dir=str(run_dir),
    mock_backend=True,
    train_spec=TrainSpec(steps=200, learning_rate=0.02),
    skip_config=SkipNetConfig(input_channels=13, scales=3,
                              down_channels=(16, 32, 64), skip_channels=4,
                              out_channels=13),
    seed=0,
)
result = run_pipeline(config)
print(f"exit code {result.exit_code}, {len(result.reports)} reports, "
      f"{len(result.failures)} failures")
print(f"per-sample metrics: {run_dir / 'reports.csv'}")
print(f"aggregate table:    {run_dir / 'summary.csv'}")
print()
print((run_dir / "summary.csv").read_text())

# rebuild a comparison panel from the saved artifacts
samples = []
for i in range(2):
    sid = f"sample_{i:03d}"
    truth = normalize_raw(RawCube(load_tensor(dataset / sid / "s2.npy")))
    hist = normalize_raw(RawCube(load_tensor(dataset / sid / "s2_historical.npy")))
    mask = InpaintMask(load_tensor(run_dir / "outputs" / f"{sid}_mask.npy").astype("uint8"))
    outputs = {m: MSICube(load_tensor(run_dir / "outputs" / f"{sid}_{m}.npy"))
               for m in config.methods}
    masked = truth.values.copy()
    masked[:, mask.values == 1] = 0.0
    samples.append(PanelSample(truth=truth, historical=hist,
                               masked_input=MSICube(masked), outputs=outputs))
render_panel(samples, out / "panel.png")
print(f"panel image:        {out / 'panel.png'}")
