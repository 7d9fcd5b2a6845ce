"""Training loop, metrics, cross-validation, depth grid search and timing.

Reproducibility contract: a (dataset manifest, TrainConfig) pair pins the
whole run.  The per-epoch minibatch shuffle and each model init draw from
sub-streams of the config seed (stream 0 init, stream 1 shuffle, stream
1000+i for fold i), so k-fold folds and grid-search cells are independent
but replayable.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import Dataset, Normalizer
from .nn import AdamState, ModelSpec, ModelState, adam_step, backward, build_cnn, build_dnn, forward, init, loss_mse, param_count
from .rng import Xoshiro256StarStar, derive_seed

_STREAM_INIT = 0
_STREAM_SHUFFLE = 1
_STREAM_FOLD_BASE = 1000


class TrainingDivergedError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 100
    batch_size: int = 32
    lr: float = 1e-3
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or self.lr <= 0:
            raise ValueError("epochs >= 1, batch_size >= 1, lr > 0 required")


@dataclass(frozen=True)
class Metrics:
    mse: float
    rmse: float
    r2: float
    mse_kwh2: float
    rmse_kwh: float
    n_test: int

    def as_dict(self) -> dict:
        return {
            "mse": self.mse, "rmse": self.rmse, "r2": self.r2,
            "mse_kwh2": self.mse_kwh2, "rmse_kwh": self.rmse_kwh,
            "n_test": self.n_test,
        }


@dataclass
class History:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] | None = None
    step_time_s: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class CVReport:
    k: int
    fold_mse: tuple[float, ...]
    mean_mse: float
    std_mse: float


@dataclass(frozen=True)
class GridSearchRow:
    depth: int
    params: int
    mse: float
    time_per_step_s: float


def model_inputs(ds: Dataset, ids, spec: ModelSpec) -> np.ndarray:
    """The input the spec consumes: offset rows for (4,), images for (1,h,w)."""
    if spec.input_shape == (4,):
        return ds.params_matrix(ids)
    return ds.images_tensor(ids)


def train_model(
    spec: ModelSpec, ds: Dataset, normalizer: Normalizer, cfg: TrainConfig
) -> tuple[ModelState, History]:
    """Adam on shuffled minibatches of the train split; deterministic per seed."""
    ids = list(ds.train_ids)
    if not ids:
        raise ValueError("dataset has no training split")
    x_all = model_inputs(ds, ids, spec)
    y_all = normalizer.apply_target(ds.totals(ids))[:, None]

    state = init(spec, derive_seed(cfg.seed, _STREAM_INIT))
    adam = AdamState.for_state(state)
    shuffle_rng = Xoshiro256StarStar(derive_seed(cfg.seed, _STREAM_SHUFFLE))

    n = len(ids)
    order = list(range(n))
    history = History()
    for epoch in range(cfg.epochs):
        if cfg.shuffle:
            shuffle_rng.shuffle(order)
        losses = []
        t0 = time.perf_counter()
        n_steps = 0
        for lo in range(0, n, cfg.batch_size):
            batch = order[lo:lo + cfg.batch_size]
            xb = x_all[batch]
            yb = y_all[batch]
            pred = forward(state, xb)
            loss = loss_mse(pred, yb)
            if not math.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, step {n_steps}"
                )
            grad = backward(state, xb, yb)
            adam_step(state, adam, grad, cfg.lr)
            losses.append(loss)
            n_steps += 1
        history.train_loss.append(float(np.mean(losses)))
        history.step_time_s.append((time.perf_counter() - t0) / n_steps)
    return state, history


def predict(state: ModelState, ds: Dataset, ids, normalizer: Normalizer) -> np.ndarray:
    """Denormalized kWh predictions for the given sample ids."""
    x = model_inputs(ds, ids, state.spec)
    z = forward(state, x)[:, 0]
    return normalizer.invert_target(z)


def evaluate(
    state: ModelState, ds: Dataset, normalizer: Normalizer, ids=None
) -> Metrics:
    """Metrics on the test split (or explicit ids), normalized and in kWh.

    r2 is 1 - SS_res/SS_tot about the evaluation-set mean, so a constant
    mean predictor scores exactly 0.
    """
    ids = list(ds.test_ids if ids is None else ids)
    if not ids:
        raise ValueError("empty evaluation split")
    x = model_inputs(ds, ids, state.spec)
    y = normalizer.apply_target(ds.totals(ids))[:, None]
    pred = forward(state, x)
    mse = loss_mse(pred, y)
    ss_res = float(np.sum((pred - y) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else -math.inf)
    sigma = normalizer.sigma_y
    return Metrics(
        mse=mse,
        rmse=math.sqrt(mse),
        r2=r2,
        mse_kwh2=mse * sigma * sigma,
        rmse_kwh=math.sqrt(mse) * sigma,
        n_test=len(ids),
    )


def kfold(spec: ModelSpec, ds: Dataset, cfg: TrainConfig, k: int = 5) -> CVReport:
    """Contiguous folds of the shuffled train ids; one fresh model per fold."""
    ids = list(ds.train_ids)
    if not 2 <= k <= len(ids):
        raise ValueError(f"k={k} must be in [2, {len(ids)}]")
    rng = Xoshiro256StarStar(derive_seed(cfg.seed, _STREAM_SHUFFLE))
    rng.shuffle(ids)
    base, extra = divmod(len(ids), k)
    folds = []
    start = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        folds.append(ids[start:start + size])
        start += size

    fold_mse = []
    for i, val_ids in enumerate(folds):
        train_ids = [s for j, f in enumerate(folds) if j != i for s in f]
        sub = Dataset(ds.config, ds.samples, train_ids, val_ids, ds.normalizer)
        fold_cfg = TrainConfig(
            epochs=cfg.epochs, batch_size=cfg.batch_size, lr=cfg.lr,
            seed=derive_seed(cfg.seed, _STREAM_FOLD_BASE + i), shuffle=cfg.shuffle,
        )
        state, _ = train_model(spec, sub, ds.normalizer, fold_cfg)
        fold_mse.append(evaluate(state, sub, ds.normalizer, ids=val_ids).mse)
    mean = float(np.mean(fold_mse))
    std = float(np.std(fold_mse))
    return CVReport(k=k, fold_mse=tuple(fold_mse), mean_mse=mean, std_mse=std)


def build_family(family: str, depth: int, **kwargs) -> ModelSpec:
    if family == "dnn":
        return build_dnn(depth)
    if family == "cnn":
        return build_cnn(depth, **kwargs)
    raise ValueError(f"unknown model family {family!r}")


def measure_step_time(
    spec: ModelSpec, ds: Dataset, cfg: TrainConfig,
    n_warmup: int = 10, n_timed: int = 100,
) -> float:
    """Median wall time of a full forward+backward+Adam step at the
    configured batch size, after warmup (which also absorbs JIT)."""
    ids = list(ds.train_ids)
    x_all = model_inputs(ds, ids, spec)
    y_all = ds.targets(ids)
    state = init(spec, derive_seed(cfg.seed, _STREAM_INIT))
    adam = AdamState.for_state(state)
    n = len(ids)

    def batch(step):
        lo = (step * cfg.batch_size) % n
        sel = [(lo + j) % n for j in range(cfg.batch_size)]
        return x_all[sel], y_all[sel]

    for s in range(n_warmup):
        xb, yb = batch(s)
        adam_step(state, adam, backward(state, xb, yb), cfg.lr)
    times = []
    for s in range(n_timed):
        xb, yb = batch(n_warmup + s)
        t0 = time.perf_counter()
        grad = backward(state, xb, yb)
        adam_step(state, adam, grad, cfg.lr)
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def grid_search(
    family: str, depths, ds: Dataset, cfg: TrainConfig,
    out_csv=None, timing_steps: int = 50, **builder_kwargs,
) -> list[GridSearchRow]:
    """Per depth: build, train, evaluate, time; optionally mirror to CSV."""
    if not depths:
        raise ValueError("depths must be non-empty")
    rows = []
    for depth in depths:
        spec = build_family(family, depth, **builder_kwargs)
        state, _ = train_model(spec, ds, ds.normalizer, cfg)
        metrics = evaluate(state, ds, ds.normalizer)
        step_s = measure_step_time(spec, ds, cfg, n_warmup=5, n_timed=timing_steps)
        rows.append(GridSearchRow(
            depth=depth, params=param_count(spec), mse=metrics.mse,
            time_per_step_s=step_s,
        ))
    if out_csv is not None:
        write_grid_csv(rows, out_csv)
    return rows


def write_grid_csv(rows: list[GridSearchRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["depth", "params", "mse", "time_per_step_s"])
        for r in rows:
            writer.writerow([r.depth, r.params, repr(r.mse), repr(r.time_per_step_s)])


def export_predictions(
    state: ModelState, ds: Dataset, normalizer: Normalizer, path
) -> None:
    """Test-set CSV `id,simulated_kwh,predicted_kwh`, sorted by simulation."""
    ids = list(ds.test_ids)
    sim = ds.totals(ids)
    pred = predict(state, ds, ids, normalizer)
    order = np.argsort(sim, kind="stable")
    lines = ["id,simulated_kwh,predicted_kwh"]
    for j in order:
        lines.append(f"{ids[j]},{repr(float(sim[j]))},{repr(float(pred[j]))}")
    Path(path).write_text("\n".join(lines) + "\n")
