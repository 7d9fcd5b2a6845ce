"""JSON-over-HTTP service for the shape explorer.

Endpoints (all responses carry a `version` field):
  GET  /api/info       model and dataset summary
  POST /api/footprint  {"x": [x1..x4]} -> vertices, area, raster grid
  POST /api/predict    {"x": [...]} -> denormalized dnn/cnn kWh
  POST /api/simulate   {"x": [...]} -> energy breakdown from the hourly model

Errors: 400 malformed body, 422 out-of-range offsets, 503 model or dataset
not loaded.  Checkpoints and dataset metadata are immutable snapshots read
at startup; request handling is pure, so the threaded server needs no
locking.  Static UI assets, when a directory is configured, are served at /.
"""

from __future__ import annotations

import json
import mimetypes
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import build_weather, load_dataset
from .energy import annual_energy
from .geometry import ShapeParams, ShapeRangeError, build_footprint
from .nn import forward, load_checkpoint, param_count, spec_to_dict
from .raster import RasterSpec, rasterize


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


class ServerContext:
    """Everything a request needs, loaded once and never mutated."""

    def __init__(self, dnn_path=None, cnn_path=None, data_dir=None, ui_dir=None):
        self.models = {}
        for name, path in (("dnn", dnn_path), ("cnn", cnn_path)):
            if path:
                state, norm_stats, meta = load_checkpoint(path)
                self.models[name] = (state, norm_stats, meta)
        self.dataset = load_dataset(data_dir, audit=False) if data_dir else None
        self.weather = build_weather(self.dataset.config) if self.dataset else None
        self.ui_dir = Path(ui_dir) if ui_dir else None

    def geometry(self):
        if self.dataset is None:
            raise ApiError(503, "no dataset loaded")
        return self.dataset.config.geometry

    def parse_shape(self, body: bytes) -> ShapeParams:
        try:
            payload = json.loads(body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise ApiError(400, "body is not valid JSON") from None
        if not isinstance(payload, dict) or "x" not in payload:
            raise ApiError(400, 'body must be {"x": [x1, x2, x3, x4]}')
        x = payload["x"]
        if not isinstance(x, list) or len(x) != 4 or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in x
        ):
            raise ApiError(400, '"x" must be a list of 4 numbers')
        try:
            return ShapeParams(*(float(v) for v in x))
        except ShapeRangeError as e:
            raise ApiError(422, str(e)) from None

    def info(self) -> dict:
        models = {}
        for name, (state, _, meta) in self.models.items():
            models[name] = {
                "param_count": param_count(state.spec),
                "spec": spec_to_dict(state.spec),
                "meta": meta,
            }
        dataset = None
        if self.dataset is not None:
            cfg = self.dataset.config
            dataset = {
                "n_samples": cfg.n_samples,
                "seed": cfg.seed,
                "weather_source": cfg.weather_source,
                "train_size": len(self.dataset.train_ids),
                "test_size": len(self.dataset.test_ids),
            }
        return {"version": __version__, "models": models, "dataset": dataset}

    def footprint(self, p: ShapeParams) -> dict:
        cfg = self.geometry()
        f = build_footprint(p, cfg)
        img = rasterize(f, RasterSpec.for_config(cfg))
        return {
            "version": __version__,
            "vertices": [[float(x), float(y)] for x, y in f.vertices],
            "area_m2": round(f.area, 6),
            "perimeter_m": round(f.perimeter, 6),
            "raster": img.pixels.astype(int).tolist(),
        }

    def predict(self, p: ShapeParams) -> dict:
        if "dnn" not in self.models or "cnn" not in self.models:
            missing = {"dnn", "cnn"} - set(self.models)
            raise ApiError(503, f"model(s) not loaded: {', '.join(sorted(missing))}")
        cfg = self.geometry()
        out = {"version": __version__}
        for name, (state, norm_stats, _) in self.models.items():
            if state.spec.input_shape == (4,):
                x = np.asarray([p.as_tuple()]) / norm_stats["param_scale"]
            else:
                f = build_footprint(p, cfg)
                img = rasterize(f, RasterSpec.for_config(cfg))
                x = img.pixels[None, None, :, :].astype(np.float64)
            z = float(forward(state, x)[0, 0])
            out[f"{name}_kwh"] = z * norm_stats["sigma_y"] + norm_stats["mu_y"]
        return out

    def simulate(self, p: ShapeParams) -> dict:
        if self.dataset is None or self.weather is None:
            raise ApiError(503, "no dataset loaded")
        f = build_footprint(p, self.dataset.config.geometry)
        b = annual_energy(f, self.weather, self.dataset.config.building)
        return {
            "version": __version__,
            "heating_kwh": b.heating_kwh,
            "cooling_kwh": b.cooling_kwh,
            "lighting_kwh": b.lighting_kwh,
            "total_kwh": b.total_kwh,
        }


def make_handler(ctx: ServerContext):
    class Handler(BaseHTTPRequestHandler):
        server_version = f"shapenergy/{__version__}"

        def log_message(self, fmt, *args):
            pass  # keep test output quiet; systemd/docker capture stdout anyway

        def _send_json(self, status: int, payload: dict):
            blob = json.dumps(payload).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(blob)))
            self.end_headers()
            self.wfile.write(blob)

        def _read_body(self) -> bytes:
            length = int(self.headers.get("Content-Length", 0))
            return self.rfile.read(length)

        def do_GET(self):
            if self.path == "/api/info":
                self._send_json(200, ctx.info())
                return
            self._serve_static()

        def do_POST(self):
            routes = {
                "/api/footprint": ctx.footprint,
                "/api/predict": ctx.predict,
                "/api/simulate": ctx.simulate,
            }
            fn = routes.get(self.path)
            if fn is None:
                self._send_json(404, {"version": __version__, "error": f"no route {self.path}"})
                return
            try:
                shape = ctx.parse_shape(self._read_body())
                self._send_json(200, fn(shape))
            except ApiError as e:
                self._send_json(e.status, {"version": __version__, "error": e.message})

        def _serve_static(self):
            if ctx.ui_dir is None:
                self._send_json(404, {"version": __version__, "error": "no UI configured"})
                return
            rel = self.path.lstrip("/") or "index.html"
            target = (ctx.ui_dir / rel).resolve()
            if not str(target).startswith(str(ctx.ui_dir.resolve())) or not target.is_file():
                self._send_json(404, {"version": __version__, "error": f"not found: {self.path}"})
                return
            ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
            blob = target.read_bytes()
            self.send_response(200)
            self.send_header("Content-Type", ctype)
            self.send_header("Content-Length", str(len(blob)))
            self.end_headers()
            self.wfile.write(blob)

    return Handler


def make_server(port=0, dnn_path=None, cnn_path=None, data_dir=None, ui_dir=None):
    ctx = ServerContext(dnn_path=dnn_path, cnn_path=cnn_path, data_dir=data_dir, ui_dir=ui_dir)
    return ThreadingHTTPServer(("127.0.0.1", port), make_handler(ctx))


def run_server(port, dnn_path=None, cnn_path=None, data_dir=None, ui_dir=None) -> int:
    server = make_server(port, dnn_path, cnn_path, data_dir, ui_dir)
    loaded = " ".join(sorted(["dnn"] * bool(dnn_path) + ["cnn"] * bool(cnn_path))) or "none"
    print(f"serving on http://127.0.0.1:{server.server_address[1]} (models: {loaded})")
    server.serve_forever()
    return 0
