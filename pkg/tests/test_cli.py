import json
import threading
import urllib.error
import urllib.request

import pytest

from shapenergy.cli import main
from shapenergy.serve import make_server


@pytest.fixture(scope="module")
def cli_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "ds"
    rc = main(["generate", "--n", "12", "--seed", "11", "--out", str(out)])
    assert rc == 0
    return out


@pytest.fixture(scope="module")
def cli_checkpoints(cli_dataset, tmp_path_factory):
    runs = tmp_path_factory.mktemp("cli") / "runs"
    rc = main([
        "train", "--model", "dnn", "--depth", "64", "--data", str(cli_dataset),
        "--out", str(runs), "--epochs", "3", "--seed", "1",
    ])
    assert rc == 0
    rc = main([
        "train", "--model", "cnn", "--depth", "2", "--data", str(cli_dataset),
        "--out", str(runs), "--epochs", "2", "--seed", "1",
    ])
    assert rc == 0
    return runs


class TestGenerate:
    def test_outputs(self, cli_dataset):
        assert (cli_dataset / "manifest.json").exists()
        assert (cli_dataset / "run.json").exists()
        manifest = json.loads((cli_dataset / "manifest.json").read_text())
        assert manifest["n_samples"] == 12
        assert len(manifest["train_ids"]) == 9

    def test_missing_out_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["generate", "--n", "12"])
        assert exc.value.code == 2

    def test_config_file_supplies_defaults(self, tmp_path):
        cfg = tmp_path / "gen.json"
        cfg.write_text(json.dumps({"n": 10, "seed": 5}))
        out = tmp_path / "ds"
        rc = main(["generate", "--out", str(out), "--config", str(cfg)])
        assert rc == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["n_samples"] == 10
        assert manifest["seed"] == 5

    def test_config_file_loses_to_explicit_flags(self, tmp_path):
        cfg = tmp_path / "gen.json"
        cfg.write_text(json.dumps({"n": 10, "seed": 5}))
        out = tmp_path / "ds"
        rc = main(["generate", "--n", "11", "--out", str(out), "--config", str(cfg)])
        assert rc == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["n_samples"] == 11
        assert manifest["seed"] == 5

    def test_regenerate_from_manifest_byte_identical(self, cli_dataset, tmp_path):
        out2 = tmp_path / "regen"
        rc = main([
            "generate", "--out", str(out2),
            "--from-manifest", str(cli_dataset / "manifest.json"),
        ])
        assert rc == 0
        assert (out2 / "labels.csv").read_bytes() == (cli_dataset / "labels.csv").read_bytes()
        assert (out2 / "manifest.json").read_bytes() == (cli_dataset / "manifest.json").read_bytes()
        for i in range(12):
            assert (out2 / f"img_{i}.pgm").read_bytes() == (cli_dataset / f"img_{i}.pgm").read_bytes()


class TestTrain:
    def test_checkpoint_param_count(self, cli_checkpoints):
        from shapenergy.nn import load_checkpoint, param_count
        state, norm, meta = load_checkpoint(cli_checkpoints / "dnn_64.ckpt")
        assert param_count(state.spec) == 379
        assert meta["model"] == "dnn"
        assert (cli_checkpoints / "metrics_dnn_64.json").exists()
        assert (cli_checkpoints / "history_dnn_64.csv").exists()
        assert (cli_checkpoints / "predictions_dnn_64.csv").exists()

    def test_reduced_cnn_variant(self, cli_dataset, tmp_path):
        rc = main([
            "train", "--model", "cnn", "--depth", "32", "--kernel", "5", "--pool", "4",
            "--data", str(cli_dataset), "--out", str(tmp_path), "--epochs", "1", "--seed", "1",
        ])
        assert rc == 0
        from shapenergy.nn import load_checkpoint, param_count
        state, _, _ = load_checkpoint(tmp_path / "cnn_32.ckpt")
        assert param_count(state.spec) == 2945

    def test_unknown_model_is_usage_error(self, cli_dataset):
        with pytest.raises(SystemExit) as exc:
            main(["train", "--model", "mlp", "--depth", "4", "--data", str(cli_dataset)])
        assert exc.value.code == 2

    def test_missing_dataset_is_runtime_error(self, tmp_path):
        rc = main([
            "train", "--model", "dnn", "--depth", "4",
            "--data", str(tmp_path / "nope"), "--out", str(tmp_path),
        ])
        assert rc == 1


class TestGridsearchEvalPredict:
    def test_gridsearch_param_column(self, cli_dataset, tmp_path):
        rc = main([
            "gridsearch", "--model", "dnn", "--depths", "2,4,8,16,32,64,128,256,512",
            "--data", str(cli_dataset), "--out", str(tmp_path),
            "--epochs", "1", "--batch", "8", "--seed", "2",
        ])
        assert rc == 0
        lines = (tmp_path / "grid_dnn.csv").read_text().splitlines()
        params = [int(l.split(",")[1]) for l in lines[1:]]
        assert params == [7, 19, 43, 91, 187, 379, 763, 1531, 3067]

    def test_eval_schema(self, cli_dataset, cli_checkpoints, capsys, tmp_path):
        rc = main([
            "eval", "--checkpoint", str(cli_checkpoints / "dnn_64.ckpt"),
            "--data", str(cli_dataset), "--out", str(tmp_path / "metrics.json"),
        ])
        assert rc == 0
        payload = json.loads((tmp_path / "metrics.json").read_text())
        for key in ("mse", "rmse", "r2", "mse_kwh2", "rmse_kwh", "n_test", "version"):
            assert key in payload

    def test_predict_prints_kwh(self, cli_dataset, cli_checkpoints, capsys):
        rc = main([
            "predict", "--x", "0,0,0,0", "--data", str(cli_dataset),
            "--dnn", str(cli_checkpoints / "dnn_64.ckpt"),
            "--cnn", str(cli_checkpoints / "cnn_2.ckpt"),
            "--simulate",
        ])
        assert rc == 0
        out = capsys.readouterr().out
        assert "dnn:" in out and "cnn:" in out and "simulated:" in out
        assert "kWh/yr" in out

    def test_predict_out_of_range(self, cli_dataset):
        with pytest.raises(SystemExit) as exc:
            main(["predict", "--x", "4.0,0,0,0", "--data", str(cli_dataset)])
        assert exc.value.code == 2


@pytest.fixture(scope="module")
def server(cli_dataset, cli_checkpoints):
    srv = make_server(
        port=0,
        dnn_path=cli_checkpoints / "dnn_64.ckpt",
        cnn_path=cli_checkpoints / "cnn_2.ckpt",
        data_dir=cli_dataset,
    )
    thread = threading.Thread(target=srv.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{srv.server_address[1]}"
    srv.shutdown()


def api(base, path, body=None):
    if body is None:
        req = urllib.request.Request(base + path)
    else:
        req = urllib.request.Request(
            base + path, data=json.dumps(body).encode(),
            headers={"Content-Type": "application/json"},
        )
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, json.loads(resp.read())
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read())


class TestServe:
    def test_info(self, server):
        status, payload = api(server, "/api/info")
        assert status == 200
        assert payload["models"]["dnn"]["param_count"] == 379
        assert payload["dataset"]["n_samples"] == 12
        assert "version" in payload

    def test_footprint_base_rectangle(self, server):
        status, payload = api(server, "/api/footprint", {"x": [0, 0, 0, 0]})
        assert status == 200
        assert len(payload["vertices"]) == 4
        assert payload["area_m2"] == 990.0
        raster = payload["raster"]
        assert len(raster) == 30 and len(raster[0]) == 48
        assert set(v for row in raster for v in row) <= {0, 1}

    def test_predict_and_determinism(self, server):
        s1, p1 = api(server, "/api/predict", {"x": [1.0, -2.0, 0.5, 3.0]})
        s2, p2 = api(server, "/api/predict", {"x": [1.0, -2.0, 0.5, 3.0]})
        assert s1 == s2 == 200
        assert p1 == p2
        assert isinstance(p1["dnn_kwh"], float) and isinstance(p1["cnn_kwh"], float)

    def test_simulate_deterministic(self, server):
        s1, b1 = api(server, "/api/simulate", {"x": [-3.5, 1.0, 2.0, -1.0]})
        s2, b2 = api(server, "/api/simulate", {"x": [-3.5, 1.0, 2.0, -1.0]})
        assert s1 == s2 == 200
        assert b1 == b2
        assert b1["total_kwh"] == pytest.approx(
            b1["heating_kwh"] + b1["cooling_kwh"] + b1["lighting_kwh"], rel=1e-9
        )

    def test_out_of_range_is_422(self, server):
        status, payload = api(server, "/api/predict", {"x": [4.0, 0, 0, 0]})
        assert status == 422
        assert "error" in payload

    def test_malformed_body_is_400(self, server):
        req = urllib.request.Request(
            server + "/api/predict", data=b"{not json", headers={"Content-Type": "application/json"}
        )
        with pytest.raises(urllib.error.HTTPError) as exc:
            urllib.request.urlopen(req)
        assert exc.value.code == 400
        status, _ = api(server, "/api/footprint", {"y": [0, 0, 0, 0]})
        assert status == 400
        status, _ = api(server, "/api/footprint", {"x": [0, 0, 0]})
        assert status == 400

    def test_missing_model_is_503(self, cli_dataset):
        srv = make_server(port=0, data_dir=cli_dataset)  # no checkpoints
        thread = threading.Thread(target=srv.serve_forever, daemon=True)
        thread.start()
        base = f"http://127.0.0.1:{srv.server_address[1]}"
        try:
            status, payload = api(base, "/api/predict", {"x": [0, 0, 0, 0]})
            assert status == 503
            status, _ = api(base, "/api/footprint", {"x": [0, 0, 0, 0]})
            assert status == 200  # geometry needs no models
        finally:
            srv.shutdown()

    def test_static_ui_served(self, cli_dataset, tmp_path):
        ui = tmp_path / "ui"
        (ui / "assets").mkdir(parents=True)
        (ui / "index.html").write_text("<!doctype html><title>explorer</title>")
        (ui / "assets" / "main.js").write_text("export const ok = true;\n")
        srv = make_server(port=0, data_dir=cli_dataset, ui_dir=ui)
        thread = threading.Thread(target=srv.serve_forever, daemon=True)
        thread.start()
        base = f"http://127.0.0.1:{srv.server_address[1]}"
        try:
            with urllib.request.urlopen(base + "/") as resp:
                assert resp.status == 200
                assert b"explorer" in resp.read()
            with urllib.request.urlopen(base + "/assets/main.js") as resp:
                assert resp.status == 200
            with pytest.raises(urllib.error.HTTPError) as exc:
                urllib.request.urlopen(base + "/../secret")
            assert exc.value.code == 404
        finally:
            srv.shutdown()
