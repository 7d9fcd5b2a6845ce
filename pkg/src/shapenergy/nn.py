"""Minimal float64 layer engine with exact backpropagation and Adam.

Models are described by a ModelSpec (ordered layer specs plus the input
shape without the batch axis) and carried as a single flat float64
parameter vector.  The flat layout is fixed: layers in order, each layer's
weights in row-major order followed by its bias.  Weight init is
Glorot-uniform with zero biases, drawn from the project PRNG in exactly
that layout order, so a seed pins every parameter.

Two builders reproduce the benchmark size grids: a dense regressor over
the four shape offsets (6N - 5 parameters at grid size N) and a conv
regressor over the 30x48 plan images (332N + 1 at the default kernel and
pool).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .rng import Xoshiro256StarStar

CHECKPOINT_VERSION = 1


class SpecError(ValueError):
    """A layer stack that cannot be assembled."""


class ShapeError(ValueError):
    """A batch whose shape does not fit the model."""


class NumericError(FloatingPointError):
    """Non-finite values where finite ones are required."""


@dataclass(frozen=True)
class Dense:
    n_in: int
    n_out: int


@dataclass(frozen=True)
class Conv2D:
    """Square kernel, stride 1; 'same' zero padding (odd kernel) or 'valid'."""

    in_ch: int
    out_ch: int
    kernel: int
    padding: str = "same"


@dataclass(frozen=True)
class MaxPool:
    pool: int


@dataclass(frozen=True)
class Flatten:
    pass


@dataclass(frozen=True)
class ReLU:
    pass


@dataclass(frozen=True)
class ModelSpec:
    layers: tuple
    input_shape: tuple  # without the batch axis

    def __post_init__(self):
        _infer_shapes(self)  # raises SpecError on inconsistency


def _infer_shapes(spec: ModelSpec) -> list[tuple]:
    """Shape after each layer; validates the stack composes."""
    shape = tuple(spec.input_shape)
    shapes = []
    for i, layer in enumerate(spec.layers):
        if isinstance(layer, Dense):
            if len(shape) != 1 or shape[0] != layer.n_in:
                raise SpecError(f"layer {i} dense({layer.n_in}->{layer.n_out}) after shape {shape}")
            shape = (layer.n_out,)
        elif isinstance(layer, Conv2D):
            if len(shape) != 3 or shape[0] != layer.in_ch:
                raise SpecError(f"layer {i} conv2d(in={layer.in_ch}) after shape {shape}")
            if layer.kernel < 1:
                raise SpecError(f"layer {i} conv kernel {layer.kernel} < 1")
            if layer.padding == "same":
                if layer.kernel % 2 == 0:
                    raise SpecError(f"layer {i} same-padded kernel {layer.kernel} must be odd")
                shape = (layer.out_ch, shape[1], shape[2])
            elif layer.padding == "valid":
                h = shape[1] - layer.kernel + 1
                w = shape[2] - layer.kernel + 1
                if h < 1 or w < 1:
                    raise SpecError(f"layer {i} kernel {layer.kernel} too large for shape {shape}")
                shape = (layer.out_ch, h, w)
            else:
                raise SpecError(f"layer {i} unknown padding {layer.padding!r}")
        elif isinstance(layer, MaxPool):
            if len(shape) != 3:
                raise SpecError(f"layer {i} maxpool after shape {shape}")
            h, w = shape[1] // layer.pool, shape[2] // layer.pool
            if layer.pool < 1 or h < 1 or w < 1:
                raise SpecError(f"layer {i} pool {layer.pool} too large for shape {shape}")
            shape = (shape[0], h, w)
        elif isinstance(layer, Flatten):
            shape = (int(np.prod(shape)),)
        elif isinstance(layer, ReLU):
            pass
        else:
            raise SpecError(f"layer {i}: unknown layer {layer!r}")
        shapes.append(shape)
    return shapes


def _param_shapes(layer) -> list[tuple]:
    """Parameter arrays of one layer, in flat-vector order."""
    if isinstance(layer, Dense):
        return [(layer.n_in, layer.n_out), (layer.n_out,)]
    if isinstance(layer, Conv2D):
        return [(layer.out_ch, layer.in_ch, layer.kernel, layer.kernel), (layer.out_ch,)]
    return []


def param_count(spec: ModelSpec) -> int:
    return sum(
        int(np.prod(s)) for layer in spec.layers for s in _param_shapes(layer)
    )


def _param_views(spec: ModelSpec, flat: np.ndarray) -> list[list[np.ndarray]]:
    views = []
    offset = 0
    for layer in spec.layers:
        sub = []
        for s in _param_shapes(layer):
            n = int(np.prod(s))
            sub.append(flat[offset:offset + n].reshape(s))
            offset += n
        views.append(sub)
    if offset != flat.size:
        raise ShapeError(f"flat vector has {flat.size} values, spec needs {offset}")
    return views


@dataclass
class ModelState:
    spec: ModelSpec
    params: np.ndarray
    seed: int


def _ws(state: ModelState, key, shape, dtype=np.float64) -> np.ndarray:
    """Reusable scratch buffer, keyed per layer and role.

    Large fresh allocations are served by mmap and page-fault on every
    touch, which costs more than the conv kernels themselves; recycling
    buffers across training steps avoids that.  Only the training path
    (`backward`) uses the workspace, so concurrent read-only `forward`
    calls on a shared state stay safe.
    """
    ws = state.__dict__.setdefault("_workspace", {})
    buf = ws.get(key)
    if buf is None or buf.shape != shape or buf.dtype != dtype:
        buf = np.empty(shape, dtype=dtype)
        ws[key] = buf
    return buf


def build_dnn(n_layers: int) -> ModelSpec:
    """Dense regressor over the 4 offsets with exactly 6N - 5 parameters.

    The size grid is reproduced by one ReLU hidden layer of width N - 1:
    (4+1)(N-1) weights+biases in, (N-1)+1 out, totalling 6N - 5.  A deep
    width-2 chain matches the same counts but is untrainable at this
    depth (the forward signal decays ~0.5 per ReLU layer and width-2
    layers die), and its per-step cost would grow linearly with N, which
    contradicts the flat measured step times across the size grid.
    """
    if n_layers < 2:
        raise SpecError(f"dnn size {n_layers} < 2")
    width = n_layers - 1
    layers = (Dense(4, width), ReLU(), Dense(width, 1))
    return ModelSpec(layers=layers, input_shape=(4,))


def build_cnn(
    size: int,
    filters: int | None = None,
    kernel: int = 3,
    pool: int = 2,
    input_hw: tuple[int, int] = (30, 48),
) -> ModelSpec:
    """Conv regressor over plan images: one valid-padded conv layer of
    `size` filters with ReLU, one max pool, flatten, dense output.

    With the 30x48 images, kernel 3 and pool 2 this is 332*size + 1
    parameters, reproducing the published size grid (size 32: 10,625);
    kernel 5 with pool 4 gives the reduced 2,945-parameter variant at
    size 32.  `filters` overrides the filter count if it should differ
    from the grid size.
    """
    if size < 1:
        raise SpecError(f"cnn size {size} < 1")
    f = size if filters is None else filters
    if f < 1:
        raise SpecError(f"cnn filter count {f} < 1")
    h, w = input_hw
    ch, cw = h - kernel + 1, w - kernel + 1
    layers = (
        Conv2D(1, f, kernel, padding="valid"),
        ReLU(),
        MaxPool(pool),
        Flatten(),
        Dense((ch // pool) * (cw // pool) * f, 1),
    )
    return ModelSpec(layers=layers, input_shape=(1, h, w))


def init(spec: ModelSpec, seed: int) -> ModelState:
    """Glorot-uniform weights, zero biases, drawn in flat-layout order."""
    rng = Xoshiro256StarStar(seed)
    flat = np.zeros(param_count(spec), dtype=np.float64)
    views = _param_views(spec, flat)
    for layer, sub in zip(spec.layers, views):
        if isinstance(layer, Dense):
            fan_in, fan_out = layer.n_in, layer.n_out
        elif isinstance(layer, Conv2D):
            fan_in = layer.in_ch * layer.kernel * layer.kernel
            fan_out = layer.out_ch * layer.kernel * layer.kernel
        else:
            continue
        bound = math.sqrt(6.0 / (fan_in + fan_out))
        weights = sub[0].reshape(-1)
        for i in range(weights.size):
            weights[i] = rng.uniform(-bound, bound)
        # biases stay zero and consume no draws
    return ModelState(spec=spec, params=flat, seed=seed)


def _check_batch(spec: ModelSpec, batch: np.ndarray) -> np.ndarray:
    x = np.asarray(batch, dtype=np.float64)
    if x.shape[1:] != tuple(spec.input_shape):
        raise ShapeError(
            f"batch shape {x.shape} does not match input {('n',) + tuple(spec.input_shape)}"
        )
    if not np.isfinite(x).all():
        raise NumericError("non-finite values in input batch")
    return x


def _forward_layers(state: ModelState, x: np.ndarray, keep: bool):
    """Run the stack; optionally keep per-layer caches for backward.

    ReLU runs in place once `x` is an array this function allocated; its
    cache is the post-activation array, whose positivity mask equals the
    pre-activation one.  No later layer mutates its input, so cached
    arrays stay valid.
    """
    views = _param_views(state.spec, state.params)
    caches = []
    owned = False  # whether x is a buffer allocated inside this pass
    for i, (layer, sub) in enumerate(zip(state.spec.layers, views)):
        if isinstance(layer, Dense):
            if x.ndim != 2 or x.shape[1] != layer.n_in:
                raise ShapeError(f"layer {i} dense expects (n, {layer.n_in}), got {x.shape}")
            w, b = sub
            if keep:
                caches.append(x)
            x = x @ w + b
            owned = True
        elif isinstance(layer, Conv2D):
            if x.ndim != 4 or x.shape[1] != layer.in_ch:
                raise ShapeError(f"layer {i} conv expects (n, {layer.in_ch}, h, w), got {x.shape}")
            w, b = sub
            if layer.padding == "same":
                # the kernels see a pre-padded array; 'valid' on it == 'same' on x
                p = layer.kernel // 2
                pad_shape = (x.shape[0], x.shape[1], x.shape[2] + 2 * p, x.shape[3] + 2 * p)
                xin = _ws(state, (i, "pad"), pad_shape) if keep else np.empty(pad_shape)
                _kernels.pad_into(x, xin)
            else:
                xin = x
            out_shape = (
                x.shape[0], layer.out_ch,
                xin.shape[2] - layer.kernel + 1, xin.shape[3] - layer.kernel + 1,
            )
            out = _ws(state, (i, "out"), out_shape) if keep else np.empty(out_shape)
            _kernels.conv2d_forward(xin, w, b, out)
            if keep:
                caches.append(xin)
            x = out
            owned = True
        elif isinstance(layer, MaxPool):
            p = layer.pool
            n, c, h, w_ = x.shape
            out = np.empty((n, c, h // p, w_ // p))
            argmax = np.empty((n, c, h // p, w_ // p), dtype=np.int64)
            _kernels.maxpool_forward(x, p, out, argmax)
            if keep:
                caches.append((x.shape, argmax))
            x = out
            owned = True
        elif isinstance(layer, Flatten):
            if keep:
                caches.append(x.shape)
            x = x.reshape(x.shape[0], -1)
        elif isinstance(layer, ReLU):
            x = np.maximum(x, 0.0, out=x) if owned else np.maximum(x, 0.0)
            owned = True
            if keep:
                caches.append(x)
        else:
            raise SpecError(f"layer {i}: unknown layer {layer!r}")
    return x, caches


def forward(state: ModelState, batch) -> np.ndarray:
    """Predictions of shape (n, 1)."""
    x = _check_batch(state.spec, batch)
    out, _ = _forward_layers(state, x, keep=False)
    if not np.isfinite(out).all():
        raise NumericError("non-finite values in model output")
    return out


def loss_mse(pred, target) -> float:
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise ShapeError(f"prediction shape {p.shape} != target shape {t.shape}")
    return float(np.mean((p - t) ** 2))


def backward(state: ModelState, batch, targets) -> np.ndarray:
    """Exact gradient of mean-squared error over the batch, flat layout.

    ReLU uses subgradient 0 at 0; max pooling routes to the first maximal
    element in row-major window order.
    """
    x = _check_batch(state.spec, batch)
    t = np.asarray(targets, dtype=np.float64)
    out, caches = _forward_layers(state, x, keep=True)
    if out.shape != t.shape:
        raise ShapeError(f"prediction shape {out.shape} != target shape {t.shape}")

    grad = np.zeros_like(state.params)
    gviews = _param_views(state.spec, grad)
    pviews = _param_views(state.spec, state.params)

    dy = 2.0 * (out - t) / t.size
    for i in range(len(state.spec.layers) - 1, -1, -1):
        layer = state.spec.layers[i]
        cache = caches[i]
        if isinstance(layer, Dense):
            w, _ = pviews[i]
            gw, gb = gviews[i]
            gw += cache.T @ dy
            gb += dy.sum(axis=0)
            dy = dy @ w.T
        elif isinstance(layer, Conv2D):
            w, _ = pviews[i]
            gw, gb = gviews[i]
            xin = cache
            dxin = _ws(state, (i, "dpad"), xin.shape)
            _kernels.conv2d_backward(xin, w, dy, dxin, gw, gb)
            if layer.padding == "same":
                p = layer.kernel // 2
                h, w_ = xin.shape[2] - 2 * p, xin.shape[3] - 2 * p
                dcrop = _ws(state, (i, "dcrop"), (xin.shape[0], xin.shape[1], h, w_))
                np.copyto(dcrop, dxin[:, :, p:p + h, p:p + w_])
                dy = dcrop
            else:
                dy = dxin
        elif isinstance(layer, MaxPool):
            in_shape, argmax = cache
            dx = np.empty(in_shape)
            _kernels.maxpool_backward(dy, argmax, layer.pool, dx)
            dy = dx
        elif isinstance(layer, Flatten):
            dy = dy.reshape(cache)
        elif isinstance(layer, ReLU):
            dy *= cache > 0.0
    return grad


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_state(cls, state: ModelState) -> "AdamState":
        return cls(m=np.zeros_like(state.params), v=np.zeros_like(state.params))


def adam_step(state: ModelState, adam: AdamState, grad: np.ndarray, lr: float) -> ModelState:
    """One Adam update, in place on `state.params` and `adam`."""
    g = np.asarray(grad, dtype=np.float64)
    if g.shape != state.params.shape:
        raise ShapeError(f"gradient shape {g.shape} != params {state.params.shape}")
    if not np.isfinite(g).all():
        raise NumericError("non-finite gradient")
    adam.t += 1
    adam.m = adam.beta1 * adam.m + (1.0 - adam.beta1) * g
    adam.v = adam.beta2 * adam.v + (1.0 - adam.beta2) * g * g
    m_hat = adam.m / (1.0 - adam.beta1 ** adam.t)
    v_hat = adam.v / (1.0 - adam.beta2 ** adam.t)
    state.params -= lr * m_hat / (np.sqrt(v_hat) + adam.eps)
    return state


# --- spec (de)serialization and checkpoints ---------------------------------

_LAYER_TAGS = {Dense: "dense", Conv2D: "conv2d", MaxPool: "maxpool", Flatten: "flatten", ReLU: "relu"}


def spec_to_dict(spec: ModelSpec) -> dict:
    layers = []
    for layer in spec.layers:
        d = {"kind": _LAYER_TAGS[type(layer)]}
        d.update(vars(layer))
        layers.append(d)
    return {"layers": layers, "input_shape": list(spec.input_shape)}


def spec_from_dict(d: dict) -> ModelSpec:
    kinds = {v: k for k, v in _LAYER_TAGS.items()}
    layers = []
    for item in d["layers"]:
        item = dict(item)
        cls = kinds[item.pop("kind")]
        layers.append(cls(**item))
    return ModelSpec(layers=tuple(layers), input_shape=tuple(d["input_shape"]))


def save_checkpoint(path, state: ModelState, normalizer_stats: dict, meta: dict | None = None) -> None:
    """One file: a JSON header line, then the raw little-endian float64 params."""
    header = {
        "format_version": CHECKPOINT_VERSION,
        "spec": spec_to_dict(state.spec),
        "seed": state.seed,
        "param_count": int(state.params.size),
        "normalizer": normalizer_stats,
        "meta": meta or {},
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8") + b"\n"
    blob += state.params.astype("<f8").tobytes()
    Path(path).write_bytes(blob)


def load_checkpoint(path) -> tuple[ModelState, dict, dict]:
    """Returns (state, normalizer_stats, meta); round-trips bit-exactly."""
    blob = Path(path).read_bytes()
    nl = blob.index(b"\n")
    header = json.loads(blob[:nl].decode("utf-8"))
    if header.get("format_version") != CHECKPOINT_VERSION:
        raise ValueError(
            f"{path}: checkpoint format {header.get('format_version')}, "
            f"expected {CHECKPOINT_VERSION}"
        )
    spec = spec_from_dict(header["spec"])
    params = np.frombuffer(blob[nl + 1:], dtype="<f8").astype(np.float64)
    if params.size != header["param_count"] or params.size != param_count(spec):
        raise ValueError(f"{path}: parameter payload does not match the spec")
    state = ModelState(spec=spec, params=params.copy(), seed=header["seed"])
    return state, header["normalizer"], header["meta"]
