"""Spin up the HTTP service against the toy dataset and query it.

Run demos/04 first (it creates the dataset and checkpoints are retrained
here if missing).  The same endpoints back the browser explorer in
frontend/.
"""

import json
import threading
import urllib.request
from pathlib import Path

from shapenergy import DatasetConfig, TrainConfig, build_dnn, build_cnn, generate, load_dataset, save_checkpoint, train_model
from shapenergy.serve import make_server

OUT = Path(__file__).parent / "out"


def ensure_artifacts():
    ds_dir = OUT / "toy_dataset"
    if not (ds_dir / "manifest.json").exists():
        print("generating toy dataset (also see demos/04)...")
        generate(DatasetConfig(n_samples=60, seed=2024), ds_dir)
    ds = load_dataset(ds_dir)
    for name, spec in (("dnn", build_dnn(64)), ("cnn", build_cnn(8))):
        ckpt = OUT / f"{name}.ckpt"
        if not ckpt.exists():
            state, _ = train_model(spec, ds, ds.normalizer, TrainConfig(epochs=30, batch_size=8, seed=3))
            save_checkpoint(ckpt, state, {
                "mu_y": ds.normalizer.mu_y, "sigma_y": ds.normalizer.sigma_y,
                "param_scale": ds.normalizer.param_scale,
            }, meta={"model": name})
    return ds_dir


def post(base, path, x):
    req = urllib.request.Request(
        base + path, data=json.dumps({"x": x}).encode(),
        headers={"Content-Type": "application/json"},
    )
    with urllib.request.urlopen(req) as resp:
        return json.loads(resp.read())


def main():
    ds_dir = ensure_artifacts()
    server = make_server(
        port=0, dnn_path=OUT / "dnn.ckpt", cnn_path=OUT / "cnn.ckpt", data_dir=ds_dir,
    )
    threading.Thread(target=server.serve_forever, daemon=True).start()
    base = f"http://127.0.0.1:{server.server_address[1]}"
    print(f"service at {base}\n")

    with urllib.request.urlopen(base + "/api/info") as resp:
        info = json.loads(resp.read())
    print("models:", {k: v["param_count"] for k, v in info["models"].items()})

    for x in ([0, 0, 0, 0], [-3.5, 2.0, -1.0, 0.5]):
        fp = post(base, "/api/footprint", x)
        pred = post(base, "/api/predict", x)
        sim = post(base, "/api/simulate", x)
        print(f"\nx = {x}")
        print(f"  footprint: {len(fp['vertices'])} vertices, {fp['area_m2']} m2")
        print(f"  predicted: dnn {pred['dnn_kwh']:.0f}, cnn {pred['cnn_kwh']:.0f} kWh/yr")
        print(f"  simulated: {sim['total_kwh']:.0f} kWh/yr "
              f"(heat {sim['heating_kwh']:.0f} / cool {sim['cooling_kwh']:.0f} / light {sim['lighting_kwh']:.0f})")

    server.shutdown()
    print("\n(for the browser UI: shapenergy serve --data <dataset> --dnn <ckpt> --cnn <ckpt> --ui frontend)")


if __name__ == "__main__":
    main()
