import math

import numpy as np
import pytest

from shapenergy.nn import (
    AdamState, Conv2D, Dense, Flatten, MaxPool, ModelSpec, ModelState, ReLU,
    NumericError, ShapeError, SpecError,
    adam_step, backward, build_cnn, build_dnn, forward, init,
    load_checkpoint, loss_mse, param_count, save_checkpoint,
    spec_from_dict, spec_to_dict,
)
from shapenergy.nn import _param_views
from shapenergy.rng import Xoshiro256StarStar

DNN_SIZE_GRID = {2: 7, 4: 19, 8: 43, 16: 91, 32: 187, 64: 379, 128: 763, 256: 1531, 512: 3067}
CNN_SIZE_GRID = {2: 665, 4: 1329, 8: 2657, 16: 5313, 32: 10625, 64: 21249, 128: 42497, 256: 84993}


def general_position_state(spec, seed, bias_scale=0.2):
    """He-scaled weights with small nonzero biases: keeps every ReLU away
    from its kink so central differences are a valid oracle."""
    rng = Xoshiro256StarStar(seed)
    flat = np.zeros(param_count(spec))
    for layer, sub in zip(spec.layers, _param_views(spec, flat)):
        if isinstance(layer, Dense):
            fan_in = layer.n_in
        elif isinstance(layer, Conv2D):
            fan_in = layer.in_ch * layer.kernel ** 2
        else:
            continue
        bound = math.sqrt(6.0 / fan_in)
        w = sub[0].reshape(-1)
        for i in range(w.size):
            w[i] = rng.uniform(-bound, bound)
        b = sub[1]
        for i in range(b.size):
            b[i] = rng.uniform(-bias_scale, bias_scale)
    return ModelState(spec=spec, params=flat, seed=seed)


def finite_difference_worst_error(spec, seed, n_batch, h=1e-5, params="he"):
    rng = Xoshiro256StarStar(seed ^ 0x5EED)
    if params == "he":
        state = general_position_state(spec, seed)
    else:
        state = init(spec, seed)
    size = int(np.prod(spec.input_shape))
    x = rng.uniforms(n_batch * size, -1, 1).reshape((n_batch,) + tuple(spec.input_shape))
    y = rng.uniforms(n_batch, -1, 1).reshape(n_batch, 1)
    grad = backward(state, x, y)
    worst = 0.0
    for i in range(state.params.size):
        p0 = state.params[i]
        state.params[i] = p0 + h
        lp = loss_mse(forward(state, x), y)
        state.params[i] = p0 - h
        lm = loss_mse(forward(state, x), y)
        state.params[i] = p0
        fd = (lp - lm) / (2 * h)
        worst = max(worst, abs(fd - grad[i]) / max(abs(fd), abs(grad[i]), 1e-6))
    return worst


class TestBuilders:
    @pytest.mark.parametrize("n,expected", sorted(DNN_SIZE_GRID.items()))
    def test_dnn_size_grid(self, n, expected):
        spec = build_dnn(n)
        assert param_count(spec) == expected
        assert init(spec, 0).params.size == expected

    @pytest.mark.parametrize("n,expected", sorted(CNN_SIZE_GRID.items()))
    def test_cnn_size_grid(self, n, expected):
        spec = build_cnn(n)
        assert param_count(spec) == expected
        assert init(spec, 0).params.size == expected

    def test_cnn_reduced_variant(self):
        # 5x5 kernels with 4x4 pooling shrink the 32-filter model to 2,945
        assert param_count(build_cnn(32, kernel=5, pool=4)) == 2945

    def test_cnn_degenerate_shapes(self):
        spec = build_cnn(1, filters=1, kernel=1, pool=30, input_hw=(30, 30))
        assert param_count(spec) == 4  # 1x1 conv (2) + 1-wide dense (2)
        out = forward(init(spec, 3), np.ones((2, 1, 30, 30)))
        assert out.shape == (2, 1)

    def test_cnn_param_ratio(self):
        assert param_count(build_cnn(32)) / param_count(build_dnn(64)) == pytest.approx(28.0, abs=0.1)

    def test_invalid_sizes(self):
        with pytest.raises(SpecError):
            build_dnn(1)
        with pytest.raises(SpecError):
            build_cnn(0)
        with pytest.raises(SpecError):
            build_cnn(2, kernel=31)  # valid conv collapses the image

    def test_spec_shape_validation(self):
        with pytest.raises(SpecError):
            ModelSpec(layers=(Dense(4, 2), Dense(3, 1)), input_shape=(4,))
        with pytest.raises(SpecError):
            ModelSpec(layers=(Conv2D(1, 2, 4, padding="same"),), input_shape=(1, 8, 8))
        with pytest.raises(SpecError):
            ModelSpec(layers=(MaxPool(9),), input_shape=(1, 8, 8))


class TestInit:
    def test_deterministic(self):
        a = init(build_dnn(8), 123)
        b = init(build_dnn(8), 123)
        assert np.array_equal(a.params, b.params)
        assert not np.array_equal(a.params, init(build_dnn(8), 124).params)

    def test_biases_zero(self):
        spec = build_cnn(4)
        state = init(spec, 5)
        for layer, sub in zip(spec.layers, _param_views(spec, state.params)):
            if isinstance(layer, (Dense, Conv2D)):
                assert np.all(sub[1] == 0.0)

    def test_glorot_bounds(self):
        spec = ModelSpec(layers=(Dense(4, 2),), input_shape=(4,))
        state = init(spec, 77)
        w, _ = _param_views(spec, state.params)[0]
        bound = math.sqrt(6.0 / (4 + 2))
        assert np.all(np.abs(w) <= bound)
        assert np.abs(w).max() > 0.5 * bound  # actually spread out


class TestForward:
    def test_zero_params_zero_output(self):
        state = init(build_dnn(4), 1)
        state.params[:] = 0.0
        out = forward(state, np.ones((5, 4)))
        assert np.all(out == 0.0)

    def test_dense_affine(self):
        spec = ModelSpec(layers=(Dense(1, 1),), input_shape=(1,))
        state = ModelState(spec, np.array([2.0, 1.0]), 0)
        assert forward(state, np.array([[3.0]]))[0, 0] == 7.0

    def test_conv_center_full_dot(self):
        # same-padded 3x3 conv on a 3x3 input: center output = kernel . input + bias
        spec = ModelSpec(layers=(Conv2D(1, 1, 3, padding="same"),), input_shape=(1, 3, 3))
        state = ModelState(spec, np.arange(10, dtype=np.float64), 0)
        x = np.arange(9, dtype=np.float64).reshape(1, 1, 3, 3)
        out = forward(state, x)
        assert out[0, 0, 1, 1] == float(np.dot(np.arange(9), np.arange(9)) + 9)

    def test_valid_conv_shape(self):
        spec = ModelSpec(layers=(Conv2D(1, 3, 5, padding="valid"),), input_shape=(1, 30, 48))
        state = init(spec, 2)
        assert forward(state, np.zeros((2, 1, 30, 48))).shape == (2, 3, 26, 44)

    def test_maxpool_floor_semantics(self):
        spec = ModelSpec(layers=(MaxPool(4),), input_shape=(1, 30, 48))
        state = ModelState(spec, np.zeros(0), 0)
        x = np.arange(30 * 48, dtype=np.float64).reshape(1, 1, 30, 48)
        out = forward(state, x)
        assert out.shape == (1, 1, 7, 12)
        assert out[0, 0, 0, 0] == x[0, 0, :4, :4].max()

    def test_relu(self):
        spec = ModelSpec(layers=(ReLU(),), input_shape=(3,))
        state = ModelState(spec, np.zeros(0), 0)
        out = forward(state, np.array([[-1.0, 0.0, 2.0]]))
        assert out.tolist() == [[0.0, 0.0, 2.0]]

    def test_shape_error(self):
        state = init(build_dnn(4), 1)
        with pytest.raises(ShapeError):
            forward(state, np.zeros((5, 3)))

    def test_nan_input_rejected(self):
        state = init(build_dnn(4), 1)
        x = np.zeros((2, 4))
        x[0, 0] = np.nan
        with pytest.raises(NumericError):
            forward(state, x)

    def test_positive_homogeneity_of_bias_free_relu_stack(self):
        spec = ModelSpec(
            layers=(Dense(4, 6), ReLU(), Dense(6, 6), ReLU(), Dense(6, 1)),
            input_shape=(4,),
        )
        state = init(spec, 17)  # biases are zero at init
        rng = Xoshiro256StarStar(18)
        x = rng.uniforms(8 * 4, -1, 1).reshape(8, 4)
        for alpha in (0.5, 2.0, 7.5):
            assert forward(state, alpha * x) == pytest.approx(alpha * forward(state, x), rel=1e-12)


class TestLoss:
    def test_zero_at_match(self):
        assert loss_mse(np.ones((4, 1)), np.ones((4, 1))) == 0.0

    def test_two_point(self):
        assert loss_mse(np.array([[0.0], [0.0]]), np.array([[1.0], [3.0]])) == 5.0

    def test_symmetry(self):
        a = np.array([[1.0], [2.0]])
        b = np.array([[0.5], [-1.0]])
        assert loss_mse(a, b) == loss_mse(b, a)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            loss_mse(np.zeros((2, 1)), np.zeros((3, 1)))


class TestBackward:
    def test_output_bias_gradient(self):
        # linear 1->1 model with zero params: d(mse)/d(bias) = mean(2*(0 - y))
        spec = ModelSpec(layers=(Dense(1, 1),), input_shape=(1,))
        state = ModelState(spec, np.zeros(2), 0)
        x = np.array([[1.0], [2.0], [3.0]])
        y = np.array([[1.0], [-2.0], [5.0]])
        grad = backward(state, x, y)
        assert grad[1] == pytest.approx(float(np.mean(2.0 * (0.0 - y))), rel=1e-12)

    def test_gradient_zero_at_minimum(self):
        spec = ModelSpec(layers=(Dense(2, 1),), input_shape=(2,))
        state = ModelState(spec, np.array([1.0, -1.0, 0.5]), 0)
        x = np.array([[0.3, 0.4], [-1.0, 2.0]])
        y = forward(state, x)
        assert np.all(backward(state, x, y) == 0.0)

    @pytest.mark.parametrize("builder,seed,n", [
        ("dnn8", 101, 8), ("dnn64", 404, 8), ("cnn2", 303, 3), ("cnn4", 404, 2),
    ])
    def test_finite_difference_agreement(self, builder, seed, n):
        spec = {"dnn8": build_dnn(8), "dnn64": build_dnn(64),
                "cnn2": build_cnn(2), "cnn4": build_cnn(4)}[builder]
        assert finite_difference_worst_error(spec, seed, n) < 1e-5

    def test_maxpool_tie_routes_to_first(self):
        spec = ModelSpec(layers=(MaxPool(2), Flatten(), Dense(1, 1)), input_shape=(1, 2, 2))
        state = ModelState(spec, np.array([1.0, 0.0]), 0)
        x = np.full((1, 1, 2, 2), 3.0)  # all four entries tie for the max
        from shapenergy.nn import _forward_layers
        _, caches = _forward_layers(state, x, keep=True)
        _, argmax = caches[0]
        assert argmax[0, 0, 0, 0] == 0  # first element in row-major window order


class TestAdam:
    def test_first_step(self):
        spec = ModelSpec(layers=(Dense(1, 1),), input_shape=(1,))
        state = ModelState(spec, np.zeros(2), 0)
        adam = AdamState.for_state(state)
        adam_step(state, adam, np.array([1.0, 1.0]), 1e-3)
        assert adam.t == 1
        assert state.params[0] == pytest.approx(-9.99999990e-4, rel=1e-9)

    def test_zero_gradient_is_noop(self):
        spec = ModelSpec(layers=(Dense(1, 1),), input_shape=(1,))
        state = ModelState(spec, np.array([0.25, -0.5]), 0)
        adam = AdamState.for_state(state)
        adam_step(state, adam, np.zeros(2), 1e-3)
        assert state.params.tolist() == [0.25, -0.5]

    def test_two_constant_steps(self):
        spec = ModelSpec(layers=(Dense(1, 1),), input_shape=(1,))
        state = ModelState(spec, np.zeros(2), 0)
        adam = AdamState.for_state(state)
        adam_step(state, adam, np.ones(2), 1e-3)
        adam_step(state, adam, np.ones(2), 1e-3)
        assert state.params[0] == pytest.approx(-2e-3 * (1.0 / (1.0 + 1e-8)), rel=1e-9)

    def test_nonfinite_gradient_rejected(self):
        spec = ModelSpec(layers=(Dense(1, 1),), input_shape=(1,))
        state = ModelState(spec, np.zeros(2), 0)
        adam = AdamState.for_state(state)
        with pytest.raises(NumericError):
            adam_step(state, adam, np.array([np.inf, 0.0]), 1e-3)


class TestDeterminismAndCheckpoints:
    def test_training_steps_bit_identical(self):
        rng = Xoshiro256StarStar(9)
        x = rng.uniforms(64 * 4, -1, 1).reshape(64, 4)
        y = rng.uniforms(64, -1, 1).reshape(64, 1)

        def run():
            state = init(build_dnn(16), 55)
            adam = AdamState.for_state(state)
            for lo in range(0, 64, 16):
                grad = backward(state, x[lo:lo + 16], y[lo:lo + 16])
                adam_step(state, adam, grad, 1e-3)
            return state.params

        assert np.array_equal(run(), run())

    def test_checkpoint_round_trip(self, tmp_path):
        state = init(build_cnn(4), 77)
        state.params += 0.25  # make it non-trivial
        norm = {"mu_y": 123.456, "sigma_y": 7.89, "param_scale": 3.5}
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, state, norm, meta={"note": "test"})
        loaded, norm2, meta = load_checkpoint(path)
        assert np.array_equal(loaded.params, state.params)
        assert loaded.spec == state.spec
        assert norm2 == norm
        assert meta == {"note": "test"}
        # byte-exact re-save
        save_checkpoint(tmp_path / "again.ckpt", loaded, norm2, meta)
        assert (tmp_path / "again.ckpt").read_bytes() == path.read_bytes()

    def test_spec_dict_round_trip(self):
        for spec in (build_dnn(8), build_cnn(4, kernel=5, pool=4)):
            assert spec_from_dict(spec_to_dict(spec)) == spec
