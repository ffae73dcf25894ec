import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fdqn.errors import ConfigError, ContractError, NumericError
from fdqn.gradcheck import random_problem, relative_error
from fdqn.nn import (
    AdamState,
    ConvSpec,
    Layer,
    NetworkSpec,
    Parameters,
    adam_step,
    clip_by_global_norm,
    default_conv_layers,
    finite_diff_grads,
    forward,
    global_norm,
    init_params,
    loss_and_grads,
)


def tiny_params(w1, b1, w2, b2):
    spec = NetworkSpec((2,), 2, (2,))
    return Parameters(spec, (Layer(np.array(w1, np.float32), np.array(b1, np.float32)),
                             Layer(np.array(w2, np.float32), np.array(b2, np.float32))))


def naive_conv(x, w, b, stride):
    """Direct loop convolution used as an oracle for the im2col path."""
    n, c, h, width = x.shape
    o, _, k, _ = w.shape
    ho = (h - k) // stride + 1
    wo = (width - k) // stride + 1
    out = np.zeros((n, o, ho, wo))
    for ni in range(n):
        for oi in range(o):
            for i in range(ho):
                for j in range(wo):
                    patch = x[ni, :, i * stride:i * stride + k, j * stride:j * stride + k]
                    out[ni, oi, i, j] = np.sum(patch * w[oi]) + b[oi]
    return out


class TestNetworkSpec:
    def test_rejects_single_action(self):
        with pytest.raises(ConfigError):
            NetworkSpec((4,), 1)

    def test_rejects_empty_hidden(self):
        with pytest.raises(ConfigError):
            NetworkSpec((4,), 2, ())

    def test_rejects_collapsing_conv(self):
        with pytest.raises(ConfigError):
            NetworkSpec((1, 6, 6), 2, (8,), (ConvSpec(4, 8, 1),))

    def test_default_frame_architecture(self):
        spec = NetworkSpec((4, 48, 48), 2, (128,), default_conv_layers())
        assert spec.conv_output_shapes() == [(16, 11, 11), (32, 4, 4)]
        assert [w for w, _ in spec.layer_shapes()] == [(16, 4, 8, 8), (32, 16, 4, 4), (512, 128), (128, 2)]


class TestInit:
    def test_deterministic(self):
        spec = NetworkSpec((4,), 2)
        assert init_params(spec, 7).equals(init_params(spec, 7))
        assert not init_params(spec, 7).equals(init_params(spec, 8))

    def test_zero_bias(self):
        for layer in init_params(NetworkSpec((4, 48, 48), 2, (128,), default_conv_layers()), 0).layers:
            assert not layer.bias.any()

    def test_first_layer_bound(self):
        spec = NetworkSpec((4,), 2, (64,))
        bound = np.sqrt(6 / 4)
        worst = max(np.abs(init_params(spec, s).layers[0].weights).max() for s in range(10_000))
        assert worst <= np.float32(bound)
        assert worst > 0.99 * bound  # the bound is tight, not an accident of scale

    def test_float32(self):
        assert init_params(NetworkSpec((4,), 2), 0).dtype == np.float32


class TestForward:
    def test_zero_network(self):
        spec = NetworkSpec((3,), 4, (5, 6))
        zero = Parameters.zeros_like(init_params(spec, 0))
        q = forward(zero, np.random.default_rng(0).normal(size=(7, 3)))
        assert q.shape == (7, 4) and not q.any()

    def test_tiny_hand_computed(self):
        params = tiny_params([[1, 0], [0, 1]], [0, 0], [[1, 1], [1, -1]], [0, 0])
        x = np.array([[3.0, -1.0]])
        # oracle: hidden = relu(x @ W1) = [3, 0]; Q = hidden @ W2 = [3, 3]
        hidden = [max(3 * 1 + -1 * 0, 0), max(3 * 0 + -1 * 1, 0)]
        expected = [hidden[0] * 1 + hidden[1] * 1, hidden[0] * 1 + hidden[1] * -1]
        np.testing.assert_array_equal(forward(params, x)[0], expected)
        assert expected == [3, 3]

    def test_duplicate_rows(self):
        params = init_params(NetworkSpec((4,), 2), 3)
        x = np.random.default_rng(1).normal(size=(5, 4)).astype(np.float32)
        q = forward(params, x)
        q2 = forward(params, np.concatenate([x, x]))
        np.testing.assert_allclose(q2[:5], q, rtol=1e-6)
        np.testing.assert_allclose(q2[5:], q, rtol=1e-6)

    def test_shape_mismatch(self):
        params = init_params(NetworkSpec((4,), 2), 0)
        with pytest.raises(ContractError):
            forward(params, np.zeros((3, 5)))

    def test_conv_matches_loop_oracle(self):
        rng = np.random.default_rng(4)
        spec = NetworkSpec((2, 11, 11), 2, (3,), (ConvSpec(3, 4, 3),))
        params = init_params(spec, 0, dtype=np.float64).map(lambda a: a + rng.normal(0, 0.1, a.shape))
        x = rng.normal(size=(2, 2, 11, 11))
        conv = params.layers[0]
        act = np.maximum(naive_conv(x, conv.weights, conv.bias, 3), 0).reshape(2, -1)
        h = np.maximum(act @ params.layers[1].weights + params.layers[1].bias, 0)
        q = h @ params.layers[2].weights + params.layers[2].bias
        np.testing.assert_allclose(forward(params, x), q, rtol=1e-12, atol=1e-12)


class TestLossAndGrads:
    def test_zero_loss_at_fixed_point(self):
        params = init_params(NetworkSpec((3,), 2, (4,)), 0)
        x = np.random.default_rng(0).normal(size=(5, 3)).astype(np.float32)
        a = np.array([0, 1, 1, 0, 1])
        y = forward(params, x)[np.arange(5), a]
        loss, grads = loss_and_grads(params, x, a, y)
        assert loss == 0.0
        assert all(not g.any() for g in grads.arrays())

    def test_output_layer_gradient_formula(self):
        # for one sample, d loss / d W_out[:, a] = -2 (y - Q) h
        rng = np.random.default_rng(2)
        params = init_params(NetworkSpec((3,), 2, (4,)), 1, dtype=np.float64)
        x = rng.normal(size=(1, 3))
        h = np.maximum(x @ params.layers[0].weights, 0)[0]
        q = forward(params, x)[0]
        y = 1.5
        _, grads = loss_and_grads(params, x, np.array([1]), np.array([y]))
        np.testing.assert_allclose(grads.layers[1].weights[:, 1], -2 * (y - q[1]) * h, rtol=1e-12)
        assert not grads.layers[1].weights[:, 0].any()
        np.testing.assert_allclose(grads.layers[1].bias, [0.0, -2 * (y - q[1])], rtol=1e-12)

    def test_loss_is_mean_over_batch(self):
        params = init_params(NetworkSpec((3,), 2, (4,)), 0, dtype=np.float64)
        x = np.random.default_rng(5).normal(size=(4, 3))
        a = np.array([0, 1, 0, 1])
        y = np.array([1.0, -1.0, 0.5, 2.0])
        q = forward(params, x)
        expected = sum((y[i] - q[i, a[i]]) ** 2 for i in range(4)) / 4
        loss, _ = loss_and_grads(params, x, a, y)
        assert loss == pytest.approx(expected, rel=1e-12)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        spec = NetworkSpec((3,), 2, (4,))
        params = init_params(spec, 3, dtype=np.float64).map(lambda a: a + rng.normal(0, 0.1, a.shape))
        x, a, y = rng.normal(size=(5, 3)), rng.integers(0, 2, 5), rng.normal(size=5)
        _, grads = loss_and_grads(params, x, a, y)
        assert relative_error(grads, finite_diff_grads(params, x, a, y)) < 1e-4

    def test_conv_net_matches_finite_differences(self):
        params, x, a, y = random_problem(np.random.default_rng(3), conv=True)
        _, grads = loss_and_grads(params, x, a, y)
        assert relative_error(grads, finite_diff_grads(params, x, a, y)) < 1e-4

    def test_float32_close_to_float64(self):
        params, x, a, y = random_problem(np.random.default_rng(8))
        _, g64 = loss_and_grads(params, x, a, y)
        _, g32 = loss_and_grads(params.astype(np.float32), x.astype(np.float32), a, y.astype(np.float32))
        for u, v in zip(g32.arrays(), g64.arrays()):
            assert u.dtype == np.float32
            np.testing.assert_allclose(u, v, atol=1e-5 * max(1.0, np.abs(v).max()))

    @pytest.mark.parametrize("field", ["batch", "targets"])
    def test_nan_names_tensor(self, field):
        params = init_params(NetworkSpec((3,), 2, (4,)), 0)
        x = np.zeros((2, 3), np.float32)
        y = np.zeros(2, np.float32)
        (x if field == "batch" else y)[0] = np.nan
        with pytest.raises(NumericError, match=field):
            loss_and_grads(params, x, np.array([0, 1]), y)

    def test_rejects_bad_action(self):
        params = init_params(NetworkSpec((3,), 2, (4,)), 0)
        with pytest.raises(ContractError):
            loss_and_grads(params, np.zeros((1, 3)), np.array([2]), np.zeros(1))


class TestFiniteDifferences:
    def test_zero_loss_configuration(self):
        params = init_params(NetworkSpec((3,), 2, (4,)), 0, dtype=np.float64)
        x = np.random.default_rng(0).normal(size=(3, 3))
        a = np.array([0, 1, 0])
        y = forward(params, x)[np.arange(3), a]
        fd = finite_diff_grads(params, x, a, y)
        assert max(np.abs(g).max() for g in fd.arrays()) < 1e-8

    def test_step_halving_converges(self):
        params, x, a, y = random_problem(np.random.default_rng(21))
        g = [finite_diff_grads(params, x, a, y, h).to_vector() for h in (1e-3, 5e-4, 2.5e-4)]
        d1 = np.abs(g[0] - g[1]).max()
        d2 = np.abs(g[1] - g[2]).max()
        # the loss is piecewise quadratic per parameter, so away from kinks the
        # central difference is exact up to rounding; allow an O(h^2) trend
        assert d1 < 1e-6 and d2 < 1e-6

    def test_rejects_nonpositive_step(self):
        params, x, a, y = random_problem(np.random.default_rng(0))
        with pytest.raises(ContractError):
            finite_diff_grads(params, x, a, y, h=0.0)


def scalar_adam(w, grad_fn, lr, steps, b1=0.9, b2=0.999, eps=1e-8):
    """Reference scalar Adam, written independently of fdqn.nn."""
    m = v = 0.0
    for t in range(1, steps + 1):
        g = grad_fn(w)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        w -= lr * (m / (1 - b1 ** t)) / ((v / (1 - b2 ** t)) ** 0.5 + eps)
    return w


class TestAdam:
    spec = NetworkSpec((1,), 2, (1,))

    def ones(self, dtype=np.float64):
        return init_params(self.spec, 0, dtype).map(np.ones_like)

    def test_zero_grads_leave_params(self):
        params = init_params(self.spec, 0)
        state = AdamState.zeros(params)
        new, new_state = adam_step(params, Parameters.zeros_like(params), state, 0.1)
        assert new.equals(params)
        assert new_state.t == 1

    def test_first_step_is_signed_lr(self):
        rng = np.random.default_rng(0)
        params = init_params(self.spec, 0, np.float64)
        grads = params.map(lambda a: rng.choice([-1, 1], a.shape) * rng.uniform(0.1, 10, a.shape))
        new, _ = adam_step(params, grads, AdamState.zeros(params), 1e-3)
        for p, g, n in zip(params.arrays(), grads.arrays(), new.arrays()):
            np.testing.assert_allclose(n - p, -1e-3 * np.sign(g), atol=1e-6 * 1e-3 + 1e-12)

    def test_quadratic_descent_matches_reference(self):
        params = self.ones()
        state = AdamState.zeros(params)
        for _ in range(100):
            grads = params.map(lambda w: 2 * w)
            params, state = adam_step(params, grads, state, 0.1)
        expected = scalar_adam(1.0, lambda w: 2 * w, 0.1, 100)
        assert abs(expected) < 0.1
        for arr in params.arrays():
            np.testing.assert_allclose(arr, expected, rtol=1e-12)
        assert state.t == 100

    def test_shape_mismatch(self):
        params = init_params(self.spec, 0)
        other = init_params(NetworkSpec((2,), 2, (1,)), 0)
        with pytest.raises(ContractError):
            adam_step(params, other, AdamState.zeros(params), 0.1)

    @given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=8))
    @settings(max_examples=40, deadline=None)
    def test_second_moment_nonnegative(self, gs):
        params = init_params(self.spec, 0, np.float64)
        state = AdamState.zeros(params)
        for g in gs:
            params, state = adam_step(params, params.map(lambda a: np.full_like(a, g)), state, 1e-3)
        assert all((v >= 0).all() for v in state.v.arrays())
        assert state.t == len(gs)


def test_clip_by_global_norm():
    params = init_params(NetworkSpec((3,), 2, (4,)), 0, np.float64)
    grads = params.map(lambda a: np.full_like(a, 3.0))
    clipped = clip_by_global_norm(grads, 1.0)
    assert global_norm(clipped) == pytest.approx(1.0)
    assert clip_by_global_norm(grads, 1e9) is grads


def test_vector_round_trip():
    params = init_params(NetworkSpec((4, 12, 12), 3, (5,), (ConvSpec(2, 4, 2),)), 0)
    assert Parameters.from_vector(params.spec, params.to_vector()).equals(params)


specs = st.builds(
    lambda d, hidden, a: NetworkSpec((d,), a, tuple(hidden)),
    st.integers(1, 5),
    st.lists(st.integers(1, 6), min_size=1, max_size=3),
    st.integers(2, 4),
)


@given(spec=specs, seed=st.integers(0, 2**16), n=st.integers(1, 6))
@settings(max_examples=40, deadline=None)
def test_pure_deterministic_shape_preserving(spec, seed, n):
    rng = np.random.default_rng(seed)
    params = init_params(spec, seed)
    x = rng.normal(size=(n, *spec.input_shape)).astype(np.float32)
    a = rng.integers(0, spec.action_size, n)
    y = rng.normal(size=n).astype(np.float32)
    before = [arr.tobytes() for arr in params.arrays()], x.tobytes(), a.tobytes(), y.tobytes()

    q1 = forward(params, x)
    l1, g1 = loss_and_grads(params, x, a, y)
    q2 = forward(params, x)
    l2, g2 = loss_and_grads(params, x, a, y)

    after = [arr.tobytes() for arr in params.arrays()], x.tobytes(), a.tobytes(), y.tobytes()
    assert before == after
    assert q1.tobytes() == q2.tobytes() and l1 == l2 and g1.equals(g2)
    assert np.all(np.isfinite(q1)) and np.isfinite(l1)
    for p, g in zip(params.arrays(), g1.arrays()):
        assert p.shape == g.shape
