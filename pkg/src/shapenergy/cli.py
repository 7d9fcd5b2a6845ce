"""Command-line entry points: generate, train, gridsearch, eval, predict, serve.

Every subcommand writes a `run.json` manifest into its output directory
with enough of the configuration to replay the run byte-for-byte.  Exit
codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .dataset import DatasetConfig, config_from_manifest, generate, load_dataset
from .energy import annual_energy
from .geometry import ShapeParams, ShapeRangeError, build_footprint
from .nn import build_cnn, build_dnn, load_checkpoint, param_count, save_checkpoint
from .train import (
    TrainConfig, evaluate, export_predictions, grid_search, kfold,
    train_model, write_grid_csv,
)
from .weather import SyntheticWeatherConfig


def _write_run_manifest(out_dir: Path, subcommand: str, settings: dict) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": 1,
        "tool": "shapenergy",
        "tool_version": __version__,
        "subcommand": subcommand,
        "settings": settings,
    }
    (out_dir / "run.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _apply_config_file(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    """JSON config supplies defaults; explicit CLI flags win."""
    if not getattr(args, "config", None):
        return
    sub = getattr(args, "_subparser", parser)
    try:
        overrides = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as e:
        parser.error(f"--config {args.config}: {e}")
    for key, value in overrides.items():
        if not hasattr(args, key):
            parser.error(f"--config {args.config}: unknown setting {key!r}")
        # a flag still at its subcommand default was not given explicitly
        if sub.get_default(key) == getattr(args, key):
            setattr(args, key, value)


def _dataset_config(args) -> DatasetConfig:
    synth = SyntheticWeatherConfig()
    return DatasetConfig(
        n_samples=args.n,
        seed=args.seed,
        split_ratio=args.split_ratio,
        weather_source=args.weather,
        synthetic_weather=synth,
    )


def cmd_generate(args, parser) -> int:
    out = Path(args.out)
    if args.from_manifest:
        manifest = json.loads(Path(args.from_manifest).read_text())
        cfg = config_from_manifest(manifest)
    else:
        cfg = _dataset_config(args)
    try:
        ds = generate(cfg, out)
    except Exception as e:
        print(f"generate failed: {e}", file=sys.stderr)
        return 1
    _write_run_manifest(out, "generate", {"dataset": asdict(cfg)})
    print(f"wrote {len(ds)} samples to {out} "
          f"(train {len(ds.train_ids)} / test {len(ds.test_ids)})")
    return 0


def _build_model(args, parser):
    if args.model == "dnn":
        return build_dnn(args.depth)
    if args.model == "cnn":
        return build_cnn(args.depth, filters=args.filters, kernel=args.kernel, pool=args.pool)
    parser.error(f"unknown model {args.model!r}")


def cmd_train(args, parser) -> int:
    spec = _build_model(args, parser)
    try:
        ds = load_dataset(args.data)
    except Exception as e:
        print(f"cannot load dataset {args.data}: {e}", file=sys.stderr)
        return 1
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch, lr=args.lr, seed=args.seed)
    state, history = train_model(spec, ds, ds.normalizer, cfg)
    metrics = evaluate(state, ds, ds.normalizer)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ckpt = out / f"{args.model}_{args.depth}.ckpt"
    save_checkpoint(
        ckpt, state,
        {"mu_y": ds.normalizer.mu_y, "sigma_y": ds.normalizer.sigma_y,
         "param_scale": ds.normalizer.param_scale},
        meta={"model": args.model, "depth": args.depth, "dataset_seed": ds.config.seed,
              "train_seed": args.seed, "epochs": args.epochs},
    )
    hist_lines = ["epoch,train_loss,step_time_s"]
    for i, (l, t) in enumerate(zip(history.train_loss, history.step_time_s), start=1):
        hist_lines.append(f"{i},{repr(l)},{repr(t)}")
    (out / f"history_{args.model}_{args.depth}.csv").write_text("\n".join(hist_lines) + "\n")
    (out / f"metrics_{args.model}_{args.depth}.json").write_text(
        json.dumps({"version": __version__, **metrics.as_dict()}, indent=2, sort_keys=True) + "\n"
    )
    if args.kfold:
        report = kfold(spec, ds, cfg, k=args.kfold)
        (out / f"cv_{args.model}_{args.depth}.csv").write_text(
            "fold,val_mse\n"
            + "\n".join(f"{i},{repr(v)}" for i, v in enumerate(report.fold_mse))
            + f"\nmean,{repr(report.mean_mse)}\nstd,{repr(report.std_mse)}\n"
        )
    export_predictions(state, ds, ds.normalizer, out / f"predictions_{args.model}_{args.depth}.csv")
    _write_run_manifest(out, "train", {
        "model": args.model, "depth": args.depth, "filters": args.filters,
        "kernel": args.kernel, "pool": args.pool, "data": str(args.data),
        "train": asdict(cfg), "kfold": args.kfold,
    })
    print(f"checkpoint {ckpt} ({param_count(spec)} parameters), "
          f"test mse {metrics.mse:.6f}, r2 {metrics.r2:.4f}")
    return 0


def cmd_gridsearch(args, parser) -> int:
    try:
        ds = load_dataset(args.data)
    except Exception as e:
        print(f"cannot load dataset {args.data}: {e}", file=sys.stderr)
        return 1
    depths = [int(d) for d in args.depths.split(",") if d.strip()]
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch, lr=args.lr, seed=args.seed)
    kwargs = {}
    if args.model == "cnn":
        kwargs = {"filters": args.filters, "kernel": args.kernel, "pool": args.pool}
    rows = grid_search(args.model, depths, ds, cfg, **kwargs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"grid_{args.model}.csv"
    write_grid_csv(rows, csv_path)
    _write_run_manifest(out, "gridsearch", {
        "model": args.model, "depths": depths, "data": str(args.data),
        "train": asdict(cfg), **kwargs,
    })
    for r in rows:
        print(f"depth {r.depth}: {r.params} params, mse {r.mse:.6f}, "
              f"{r.time_per_step_s * 1e6:.0f} us/step")
    print(f"wrote {csv_path}")
    return 0


def cmd_eval(args, parser) -> int:
    try:
        state, norm_stats, meta = load_checkpoint(args.checkpoint)
        ds = load_dataset(args.data)
    except Exception as e:
        print(f"eval failed: {e}", file=sys.stderr)
        return 1
    metrics = evaluate(state, ds, ds.normalizer)
    payload = {"version": __version__, "checkpoint": str(args.checkpoint), **metrics.as_dict()}
    text = json.dumps(payload, indent=2, sort_keys=True)
    print(text)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text + "\n")
        _write_run_manifest(out.parent, "eval", {
            "checkpoint": str(args.checkpoint), "data": str(args.data), "out": str(out),
        })
    return 0


def _parse_x(raw: str, parser) -> ShapeParams:
    parts = [p for p in raw.replace(" ", "").split(",") if p]
    if len(parts) != 4:
        parser.error(f"--x needs 4 comma-separated offsets, got {len(parts)}")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        parser.error(f"--x values must be numeric: {raw!r}")
    try:
        return ShapeParams(*values)
    except ShapeRangeError as e:
        parser.error(str(e))


def cmd_predict(args, parser) -> int:
    p = _parse_x(args.x, parser)
    try:
        ds = load_dataset(args.data)
    except Exception as e:
        print(f"cannot load dataset {args.data}: {e}", file=sys.stderr)
        return 1

    import numpy as np
    from .nn import forward
    for label, path in (("dnn", args.dnn), ("cnn", args.cnn)):
        if not path:
            continue
        state, norm_stats, meta = load_checkpoint(path)
        if state.spec.input_shape == (4,):
            x = np.asarray([p.as_tuple()]) / norm_stats["param_scale"]
        else:
            from .raster import RasterSpec, rasterize
            footprint = build_footprint(p, ds.config.geometry)
            img = rasterize(footprint, RasterSpec.for_config(ds.config.geometry))
            x = img.pixels[None, None, :, :].astype(float)
        z = float(forward(state, x)[0, 0])
        kwh = z * norm_stats["sigma_y"] + norm_stats["mu_y"]
        print(f"{label}: {kwh:.1f} kWh/yr")

    if args.simulate:
        from .dataset import build_weather
        footprint = build_footprint(p, ds.config.geometry)
        weather = build_weather(ds.config)
        breakdown = annual_energy(footprint, weather, ds.config.building)
        print(f"simulated: heating {breakdown.heating_kwh:.1f}, "
              f"cooling {breakdown.cooling_kwh:.1f}, "
              f"lighting {breakdown.lighting_kwh:.1f}, "
              f"total {breakdown.total_kwh:.1f} kWh/yr")
    return 0


def cmd_serve(args, parser) -> int:
    from .serve import run_server
    try:
        return run_server(
            port=args.port,
            dnn_path=args.dnn,
            cnn_path=args.cnn,
            data_dir=args.data,
            ui_dir=args.ui,
        )
    except KeyboardInterrupt:
        return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shapenergy",
        description="Building-shape energy surrogates: data synthesis, training, serving.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add_config(p):
        p.add_argument("--config", help="JSON file supplying defaults for any flag")

    g = sub.add_parser("generate", help="synthesize a labeled dataset")
    g.add_argument("--n", type=int, default=350)
    g.add_argument("--seed", type=int, default=42)
    g.add_argument("--out", required=True)
    g.add_argument("--weather", default="synthetic", help="'synthetic' or 'epw:<path>'")
    g.add_argument("--split-ratio", type=float, default=0.8, dest="split_ratio")
    g.add_argument("--from-manifest", dest="from_manifest",
                   help="regenerate byte-identically from an existing manifest.json")
    add_config(g)
    g.set_defaults(fn=cmd_generate, _subparser=g)

    t = sub.add_parser("train", help="train one model on a dataset")
    t.add_argument("--model", required=True, choices=["dnn", "cnn"])
    t.add_argument("--depth", type=int, required=True,
                   help="size-grid row: hidden units + 1 for dnn, conv filters for cnn")
    t.add_argument("--data", required=True)
    t.add_argument("--out", default="runs")
    t.add_argument("--epochs", type=int, default=100)
    t.add_argument("--batch", type=int, default=32)
    t.add_argument("--lr", type=float, default=1e-3)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--filters", type=int, default=None,
                   help="override the cnn filter count (defaults to --depth)")
    t.add_argument("--kernel", type=int, default=3)
    t.add_argument("--pool", type=int, default=2)
    t.add_argument("--kfold", type=int, default=0, help="also run k-fold cross-validation")
    add_config(t)
    t.set_defaults(fn=cmd_train, _subparser=t)

    gs = sub.add_parser("gridsearch", help="train/evaluate/time a list of sizes")
    gs.add_argument("--model", required=True, choices=["dnn", "cnn"])
    gs.add_argument("--depths", required=True, help="comma-separated size list")
    gs.add_argument("--data", required=True)
    gs.add_argument("--out", default="runs")
    gs.add_argument("--epochs", type=int, default=100)
    gs.add_argument("--batch", type=int, default=32)
    gs.add_argument("--lr", type=float, default=1e-3)
    gs.add_argument("--seed", type=int, default=0)
    gs.add_argument("--filters", type=int, default=None)
    gs.add_argument("--kernel", type=int, default=3)
    gs.add_argument("--pool", type=int, default=2)
    add_config(gs)
    gs.set_defaults(fn=cmd_gridsearch, _subparser=gs)

    e = sub.add_parser("eval", help="evaluate a checkpoint on a dataset's test split")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--out", help="also write the metrics JSON here")
    add_config(e)
    e.set_defaults(fn=cmd_eval, _subparser=e)

    p = sub.add_parser("predict", help="predict kWh for one shape")
    p.add_argument("--x", required=True, help='four offsets, e.g. "0,0,0,0"')
    p.add_argument("--data", required=True, help="dataset dir supplying configs/normalizer")
    p.add_argument("--dnn", help="dnn checkpoint")
    p.add_argument("--cnn", help="cnn checkpoint")
    p.add_argument("--simulate", action="store_true", help="also run the energy model")
    add_config(p)
    p.set_defaults(fn=cmd_predict, _subparser=p)

    s = sub.add_parser("serve", help="serve the prediction/simulation HTTP API")
    s.add_argument("--port", type=int, default=8077)
    s.add_argument("--dnn", help="dnn checkpoint")
    s.add_argument("--cnn", help="cnn checkpoint")
    s.add_argument("--data", required=True, help="dataset dir for configs and weather")
    s.add_argument("--ui", help="static UI directory served at /")
    add_config(s)
    s.set_defaults(fn=cmd_serve, _subparser=s)

    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    _apply_config_file(args, parser)
    return args.fn(args, parser)


if __name__ == "__main__":
    sys.exit(main())
