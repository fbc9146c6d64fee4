import numpy as np
import pytest

from noisereg import ops

from conftest import finite_difference, relative_error


def naive_conv2d(x, weight, bias):
    """Six-nested-loop reference convolution (pad 1, 3x3), the oracle the
    fast path is checked against."""
    n, cin, h, w = x.shape
    cout = weight.shape[0]
    out = np.zeros((n, cout, h, w), dtype=np.float64)
    xp = np.pad(x.astype(np.float64), ((0, 0), (0, 0), (1, 1), (1, 1)))
    for b in range(n):
        for co in range(cout):
            for i in range(h):
                for j in range(w):
                    acc = 0.0
                    for ci in range(cin):
                        for a in range(3):
                            for bb in range(3):
                                acc += xp[b, ci, i + a, j + bb] * weight[co, ci, a, bb]
                    out[b, co, i, j] = acc + bias[co]
    return out


class TestConv2dForward:
    def test_zero_input_passes_bias(self):
        x = np.zeros((1, 1, 3, 3), dtype=np.float32)
        w = np.ones((1, 1, 3, 3), dtype=np.float32)
        b = np.array([0.5], dtype=np.float32)
        out, _ = ops.conv2d_forward(x, w, b)
        assert np.allclose(out, 0.5)

    def test_center_tap_identity(self):
        x = np.array([[[[2.0]]]], dtype=np.float32)
        w = np.zeros((1, 1, 3, 3), dtype=np.float32)
        w[0, 0, 1, 1] = 3.0
        b = np.array([1.0], dtype=np.float32)
        out, _ = ops.conv2d_forward(x, w, b)
        assert out.shape == (1, 1, 1, 1)
        assert np.allclose(out, 7.0)

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(1, 2, 4, 4)).astype(np.float32)
        w = rng.normal(size=(3, 2, 3, 3)).astype(np.float32)
        b = rng.normal(size=3).astype(np.float32)
        out, _ = ops.conv2d_forward(x, w, b)
        assert np.max(np.abs(out - naive_conv2d(x, w, b))) < 1e-5

    @pytest.mark.parametrize("shape,cout", [((2, 4, 8, 8), 3), ((1, 1, 5, 7), 2), ((2, 3, 2, 2), 4)])
    def test_oracle_various_shapes(self, shape, cout):
        rng = np.random.default_rng(hash(shape) % 2**32)
        x = rng.normal(size=shape).astype(np.float32)
        w = rng.normal(size=(cout, shape[1], 3, 3)).astype(np.float32)
        b = rng.normal(size=cout).astype(np.float32)
        out, _ = ops.conv2d_forward(x, w, b)
        assert np.max(np.abs(out - naive_conv2d(x, w, b))) < 1e-5

    def test_channel_mismatch_raises(self):
        x = np.zeros((1, 2, 4, 4), dtype=np.float32)
        w = np.zeros((3, 3, 3, 3), dtype=np.float32)
        with pytest.raises(ValueError):
            ops.conv2d_forward(x, w, np.zeros(3, dtype=np.float32))

    def test_deterministic(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(1, 2, 5, 5)).astype(np.float32)
        w = rng.normal(size=(2, 2, 3, 3)).astype(np.float32)
        b = rng.normal(size=2).astype(np.float32)
        a, _ = ops.conv2d_forward(x, w, b)
        c, _ = ops.conv2d_forward(x, w, b)
        assert np.array_equal(a, c)


class TestConv2dBackward:
    def test_zero_grad_out(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(1, 2, 4, 4)).astype(np.float32)
        w = rng.normal(size=(2, 2, 3, 3)).astype(np.float32)
        out, cache = ops.conv2d_forward(x, w, np.zeros(2, dtype=np.float32))
        gx, gw, gb = ops.conv2d_backward(cache, np.zeros_like(out))
        assert not gx.any() and not gw.any() and not gb.any()

    def test_single_pixel_grad_gives_input_patch(self):
        x = np.arange(9, dtype=np.float32).reshape(1, 1, 3, 3)
        w = np.zeros((1, 1, 3, 3), dtype=np.float32)
        out, cache = ops.conv2d_forward(x, w, np.zeros(1, dtype=np.float32))
        gout = np.zeros_like(out)
        gout[0, 0, 1, 1] = 1.0  # center output pixel
        _, gw, gb = ops.conv2d_backward(cache, gout)
        assert np.allclose(gw[0, 0], x[0, 0])  # patch under the center is x itself
        assert np.allclose(gb, 1.0)

    def test_grad_shape_mismatch_raises(self):
        x = np.zeros((1, 1, 4, 4), dtype=np.float32)
        w = np.zeros((1, 1, 3, 3), dtype=np.float32)
        _, cache = ops.conv2d_forward(x, w, np.zeros(1, dtype=np.float32))
        with pytest.raises(ValueError):
            ops.conv2d_backward(cache, np.zeros((1, 1, 3, 3), dtype=np.float32))

    def test_finite_differences(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(2, 2, 4, 4))
        w = rng.normal(size=(2, 2, 3, 3))
        b = rng.normal(size=2)
        r = rng.normal(size=(2, 2, 4, 4))

        out, cache = ops.conv2d_forward(x, w, b)
        gx, gw, gb = ops.conv2d_backward(cache, r)

        fd_x = finite_difference(lambda v: float((ops.conv2d_forward(v, w, b)[0] * r).sum()), x)
        fd_w = finite_difference(lambda v: float((ops.conv2d_forward(x, v, b)[0] * r).sum()), w)
        fd_b = finite_difference(lambda v: float((ops.conv2d_forward(x, w, v)[0] * r).sum()), b)
        assert relative_error(gx, fd_x) < 1e-3
        assert relative_error(gw, fd_w) < 1e-3
        assert relative_error(gb, fd_b) < 1e-3


class TestInstanceNorm:
    def test_constant_channel_maps_to_zero(self):
        x = np.full((1, 1, 4, 4), 5.0, dtype=np.float32)
        out, _ = ops.instance_norm_forward(x, np.ones(1, np.float32), np.zeros(1, np.float32))
        assert np.max(np.abs(out)) < 1e-2

    def test_binary_values(self):
        x = np.array([-1.0, 1.0] * 8, dtype=np.float32).reshape(1, 1, 4, 4)
        out, _ = ops.instance_norm_forward(
            x, np.full(1, 2.0, np.float32), np.full(1, 1.0, np.float32)
        )
        assert np.allclose(np.sort(np.unique(np.round(out, 3))), [-1.0, 3.0], atol=1e-2)

    def test_zero_gamma_gives_beta(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(2, 3, 5, 5)).astype(np.float32)
        beta = np.array([1.0, -2.0, 0.5], dtype=np.float32)
        out, _ = ops.instance_norm_forward(x, np.zeros(3, np.float32), beta)
        assert np.allclose(out, beta.reshape(1, 3, 1, 1) * np.ones_like(x))

    def test_normalized_statistics(self):
        rng = np.random.default_rng(5)
        x = rng.normal(0.0, 3.0, size=(2, 4, 8, 8)).astype(np.float32)
        out, _ = ops.instance_norm_forward(x, np.ones(4, np.float32), np.zeros(4, np.float32))
        means = out.mean(axis=(2, 3))
        variances = out.var(axis=(2, 3))
        assert np.max(np.abs(means)) < 1e-4
        assert np.max(np.abs(variances - 1.0)) < 1e-2

    def test_backward_zero_grad(self):
        rng = np.random.default_rng(6)
        x = rng.normal(size=(1, 2, 4, 4)).astype(np.float32)
        _, cache = ops.instance_norm_forward(x, np.ones(2, np.float32), np.zeros(2, np.float32))
        gx, gg, gb = ops.instance_norm_backward(cache, np.zeros_like(x))
        assert not gx.any() and not gg.any() and not gb.any()

    def test_constant_upstream_grad_vanishes_on_input(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=(1, 2, 5, 5))
        gamma, beta = np.ones(2), np.zeros(2)
        _, cache = ops.instance_norm_forward(x, gamma, beta)
        gx, _, _ = ops.instance_norm_backward(cache, np.ones_like(x))
        assert np.max(np.abs(gx)) < 1e-6

    def test_finite_differences(self):
        rng = np.random.default_rng(8)
        x = rng.normal(size=(2, 3, 4, 4))
        gamma = rng.normal(size=3)
        beta = rng.normal(size=3)
        r = rng.normal(size=(2, 3, 4, 4))

        _, cache = ops.instance_norm_forward(x, gamma, beta)
        gx, gg, gb = ops.instance_norm_backward(cache, r)

        def loss(xv, gv, bv):
            return float((ops.instance_norm_forward(xv, gv, bv)[0] * r).sum())

        fd_x = finite_difference(lambda v: loss(v, gamma, beta), x)
        fd_g = finite_difference(lambda v: loss(x, v, beta), gamma)
        fd_b = finite_difference(lambda v: loss(x, gamma, v), beta)
        assert relative_error(gx, fd_x) < 1e-3
        assert relative_error(gg, fd_g) < 1e-3
        assert relative_error(gb, fd_b) < 1e-3


class TestActivations:
    def test_relu_values(self):
        out, _ = ops.relu(np.array([-2.0, 3.0], dtype=np.float32))
        assert np.array_equal(out, [0.0, 3.0])

    def test_tanh_zero(self):
        out, _ = ops.tanh(np.array([0.0], dtype=np.float32))
        assert out[0] == 0.0

    def test_tanh_range(self):
        out, _ = ops.tanh(np.array([-8.0, 8.0], dtype=np.float64))
        assert np.all(out > -1.0) and np.all(out < 1.0)

    @pytest.mark.parametrize("fwd,bwd", [(ops.relu, ops.relu_backward), (ops.tanh, ops.tanh_backward)])
    def test_finite_differences(self, fwd, bwd):
        rng = np.random.default_rng(9)
        x = rng.normal(size=(2, 2, 3, 3))
        x[np.abs(x) < 1e-2] = 0.5  # keep away from relu's kink
        r = rng.normal(size=x.shape)
        out, cache = fwd(x)
        g = bwd(cache, r)
        fd = finite_difference(lambda v: float((fwd(v)[0] * r).sum()), x)
        assert relative_error(g, fd) < 1e-3


class TestL1Loss:
    def test_identical(self):
        x = np.ones((1, 1, 2, 2), dtype=np.float32)
        loss, grad = ops.l1_loss(x, x.copy())
        assert loss == 0.0
        assert not grad.any()

    def test_simple_value(self):
        pred = np.array([1.0, 3.0], dtype=np.float32).reshape(1, 1, 1, 2)
        target = np.array([0.0, 1.0], dtype=np.float32).reshape(1, 1, 1, 2)
        loss, _ = ops.l1_loss(pred, target)
        assert loss == pytest.approx(1.5)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            ops.l1_loss(np.zeros((1, 1, 2, 2)), np.zeros((1, 1, 2, 3)))

    def test_finite_differences_away_from_ties(self):
        rng = np.random.default_rng(10)
        pred = rng.normal(size=(1, 2, 3, 3))
        target = rng.normal(size=(1, 2, 3, 3))
        keep = np.abs(pred - target) > 1e-4  # exclude non-differentiable ties
        _, grad = ops.l1_loss(pred, target)
        fd = finite_difference(lambda v: ops.l1_loss(v, target)[0], pred)
        assert relative_error(grad[keep], fd[keep]) < 1e-3


class TestTvLoss:
    def test_constant_tensor(self):
        loss, grad = ops.tv_loss(np.full((1, 2, 3, 3), 4.0, dtype=np.float32))
        assert loss == 0.0
        assert not grad.any()

    def test_hand_evaluated_2x2(self):
        x = np.array([[0.0, 1.0], [0.0, 1.0]], dtype=np.float32).reshape(1, 1, 2, 2)
        loss, _ = ops.tv_loss(x)
        assert loss == pytest.approx(0.5)

    def test_small_dims_raise(self):
        with pytest.raises(ValueError):
            ops.tv_loss(np.zeros((1, 1, 1, 4)))

    def test_finite_differences_away_from_ties(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=(1, 2, 4, 4))
        _, grad = ops.tv_loss(x)
        fd = finite_difference(lambda v: ops.tv_loss(v)[0], x)
        dh = np.abs(np.diff(x, axis=3)).min()
        dv = np.abs(np.diff(x, axis=2)).min()
        assert min(dh, dv) > 1e-4  # all pairs away from ties for this seed
        assert relative_error(grad, fd) < 1e-3


class TestAdam:
    def test_zero_gradient_keeps_params(self):
        p = [np.array([1.0, 2.0], dtype=np.float32)]
        g = [np.zeros(2, dtype=np.float32)]
        state = ops.adam_init(p, learning_rate=1e-3)
        before = p[0].copy()
        ops.adam_step(p, g, state)
        assert np.array_equal(p[0], before)
        assert state.step_count == 1

    def test_first_step_magnitude_is_lr(self):
        lr = 2e-4
        p = [np.array([1.0])]
        g = [np.array([0.5])]
        state = ops.adam_init(p, learning_rate=lr)
        ops.adam_step(p, g, state)
        # bias-corrected m/sqrt(v) equals sign(g) on the first step
        assert abs((1.0 - p[0][0]) - lr) < 1e-8

    def test_two_steps_reduce_quadratic(self):
        p = [np.array([3.0])]
        state = ops.adam_init(p, learning_rate=0.1)
        values = [p[0][0] ** 2]
        for _ in range(2):
            g = [2.0 * p[0]]
            ops.adam_step(p, g, state)
            values.append(p[0][0] ** 2)
        assert values[1] < values[0] and values[2] < values[1]

    def test_nonfinite_gradient_aborts(self):
        p = [np.array([1.0])]
        state = ops.adam_init(p, learning_rate=0.1)
        with pytest.raises(FloatingPointError):
            ops.adam_step(p, [np.array([np.nan])], state)

    def test_second_moment_nonnegative(self):
        rng = np.random.default_rng(12)
        p = [rng.normal(size=8)]
        state = ops.adam_init(p, learning_rate=1e-3)
        for _ in range(5):
            ops.adam_step(p, [rng.normal(size=8)], state)
        assert np.all(state.second_moment[0] >= 0)
