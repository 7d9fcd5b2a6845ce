"""End-to-end at toy scale: synthesize a dataset, train both model kinds,
compare, and export the prediction-vs-simulation table.

Uses a reduced budget (60 samples, 30 epochs) so the whole story runs in
about a minute; the full published protocol lives in the acceptance tests.
"""

import time
from pathlib import Path

from shapenergy import (
    DatasetConfig, TrainConfig,
    build_cnn, build_dnn, evaluate, export_predictions, generate,
    load_dataset, param_count, train_model,
)

OUT = Path(__file__).parent / "out"


def main():
    OUT.mkdir(exist_ok=True)
    ds_dir = OUT / "toy_dataset"
    t0 = time.perf_counter()
    if (ds_dir / "manifest.json").exists():
        ds = load_dataset(ds_dir)
        print(f"reusing dataset at {ds_dir}")
    else:
        ds = generate(DatasetConfig(n_samples=60, seed=2024), ds_dir)
        print(f"generated {len(ds)} samples in {time.perf_counter() - t0:.0f}s -> {ds_dir}")
    print(f"split: {len(ds.train_ids)} train / {len(ds.test_ids)} test; "
          f"targets mu {ds.normalizer.mu_y:.0f} kWh, sigma {ds.normalizer.sigma_y:.0f} kWh\n")

    cfg = TrainConfig(epochs=30, batch_size=8, lr=1e-3, seed=3)
    for name, spec in (("dnn(64)", build_dnn(64)), ("cnn(8)", build_cnn(8))):
        t0 = time.perf_counter()
        state, history = train_model(spec, ds, ds.normalizer, cfg)
        metrics = evaluate(state, ds, ds.normalizer)
        print(f"{name:8s} {param_count(spec):6d} params  "
              f"loss {history.train_loss[0]:.3f} -> {history.train_loss[-1]:.4f}  "
              f"test mse {metrics.mse:.4f}  r2 {metrics.r2:.3f}  "
              f"rmse {metrics.rmse_kwh:.0f} kWh  ({time.perf_counter() - t0:.0f}s)")
        export_predictions(state, ds, ds.normalizer, OUT / f"predictions_{name.split('(')[0]}.csv")

    print(f"\nprediction tables in {OUT}/")


if __name__ == "__main__":
    main()
