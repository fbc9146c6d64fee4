"""Low-level layer and loss primitives with handwritten backward passes.

Everything operates on plain numpy arrays laid out as (batch, channel,
height, width). Forward functions return a cache holding whatever the
matching backward needs; all functions are pure and deterministic.
"""

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "conv2d_forward",
    "conv2d_backward",
    "instance_norm_forward",
    "instance_norm_backward",
    "relu",
    "relu_backward",
    "tanh",
    "tanh_backward",
    "l1_loss",
    "tv_loss",
    "AdamState",
    "adam_init",
    "adam_step",
]


def conv2d_forward(x, weight, bias):
    """Same-size 3x3 cross-correlation with zero padding 1.

    x: (n, cin, h, w); weight: (cout, cin, 3, 3); bias: (cout,).
    Returns (out, cache) with out of shape (n, cout, h, w).

    Computed as one matrix product against a patch matrix assembled from
    nine shifted views of the padded input.
    """
    n, cin, h, w = x.shape
    cout, cin_w, kh, kw = weight.shape
    if (kh, kw) != (3, 3):
        raise ValueError(f"conv2d expects 3x3 kernels, got {kh}x{kw}")
    if cin != cin_w:
        raise ValueError(f"input has {cin} channels but weight expects {cin_w}")
    if bias.shape != (cout,):
        raise ValueError(f"bias shape {bias.shape} does not match cout={cout}")
    xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    dtype = np.promote_types(x.dtype, weight.dtype)
    col = np.empty((cin, 9, n, h, w), dtype=dtype)
    for di in range(3):
        for dj in range(3):
            col[:, di * 3 + dj] = xp[:, :, di : di + h, dj : dj + w].transpose(
                1, 0, 2, 3
            )
    out = weight.reshape(cout, cin * 9).astype(dtype, copy=False) @ col.reshape(
        cin * 9, n * h * w
    )
    out += bias.astype(dtype, copy=False)[:, None]
    out = np.ascontiguousarray(out.reshape(cout, n, h, w).transpose(1, 0, 2, 3))
    cache = (x.shape, xp, weight)
    return out, cache


def conv2d_backward(cache, grad_out):
    """Gradients of conv2d_forward w.r.t. input, weight and bias."""
    (n, cin, h, w), xp, weight = cache
    cout = weight.shape[0]
    if grad_out.shape != (n, cout, h, w):
        raise ValueError(
            f"grad_out shape {grad_out.shape} does not match forward output "
            f"{(n, cout, h, w)}"
        )
    grad_bias = grad_out.sum(axis=(0, 2, 3))
    grad_weight = np.empty_like(weight)
    for di in range(3):
        for dj in range(3):
            grad_weight[:, :, di, dj] = np.tensordot(
                grad_out, xp[:, :, di : di + h, dj : dj + w],
                axes=([0, 2, 3], [0, 2, 3]),
            )
    # grad wrt input = correlation of grad_out with the spatially flipped,
    # channel-transposed kernels; same padding keeps shapes aligned.
    w_t = np.ascontiguousarray(weight[:, :, ::-1, ::-1].transpose(1, 0, 2, 3))
    grad_input, _ = conv2d_forward(grad_out, w_t, np.zeros(cin, dtype=weight.dtype))
    return grad_input, grad_weight, grad_bias


def instance_norm_forward(x, gamma, beta, eps=1e-5):
    """Per-(sample, channel) spatial standardization with scale/shift.

    Uses the biased variance estimator over the h*w positions.
    """
    n, c, h, w = x.shape
    if gamma.shape != (c,) or beta.shape != (c,):
        raise ValueError("gamma/beta must have one entry per channel")
    if eps <= 0:
        raise ValueError("eps must be positive")
    mu = x.mean(axis=(2, 3), keepdims=True)
    var = x.var(axis=(2, 3), keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mu) * inv_std
    out = gamma.reshape(1, c, 1, 1) * xhat + beta.reshape(1, c, 1, 1)
    cache = (xhat, inv_std, gamma)
    return out.astype(x.dtype, copy=False), cache


def instance_norm_backward(cache, grad_out):
    xhat, inv_std, gamma = cache
    n, c, h, w = grad_out.shape
    m = h * w
    grad_beta = grad_out.sum(axis=(0, 2, 3))
    grad_gamma = (grad_out * xhat).sum(axis=(0, 2, 3))
    dxhat = grad_out * gamma.reshape(1, c, 1, 1)
    s1 = dxhat.sum(axis=(2, 3), keepdims=True)
    s2 = (dxhat * xhat).sum(axis=(2, 3), keepdims=True)
    grad_input = inv_std / m * (m * dxhat - s1 - xhat * s2)
    return grad_input.astype(grad_out.dtype, copy=False), grad_gamma, grad_beta


def relu(x):
    out = np.maximum(x, 0)
    return out, x > 0


def relu_backward(cache, grad_out):
    return grad_out * cache


def tanh(x):
    out = np.tanh(x)
    return out, out


def tanh_backward(cache, grad_out):
    return grad_out * (1.0 - cache * cache)


def l1_loss(pred, target):
    """Mean absolute error and its subgradient w.r.t. pred (sign(0)=0)."""
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    diff = pred - target
    loss = float(np.abs(diff).mean())
    grad = np.sign(diff) / diff.size
    return loss, grad.astype(pred.dtype, copy=False)


def tv_loss(x):
    """Anisotropic total variation: mean |forward difference| over all
    valid horizontal and vertical neighbor pairs. Returns (loss, subgradient)."""
    n, c, h, w = x.shape
    if h < 2 or w < 2:
        raise ValueError("tv_loss needs spatial dims >= 2")
    dh = x[:, :, :, 1:] - x[:, :, :, :-1]
    dv = x[:, :, 1:, :] - x[:, :, :-1, :]
    count = dh.size + dv.size
    loss = float((np.abs(dh).sum() + np.abs(dv).sum()) / count)
    grad = np.zeros_like(x)
    sh = np.sign(dh) / count
    sv = np.sign(dv) / count
    grad[:, :, :, 1:] += sh
    grad[:, :, :, :-1] -= sh
    grad[:, :, 1:, :] += sv
    grad[:, :, :-1, :] -= sv
    return loss, grad


@dataclass
class AdamState:
    """Adam optimizer state for a flat list of parameter arrays."""

    learning_rate: float
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    first_moment: list = field(default_factory=list)
    second_moment: list = field(default_factory=list)


def adam_init(params, learning_rate, beta1=0.5, beta2=0.999, eps=1e-8):
    return AdamState(
        learning_rate=learning_rate,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
        first_moment=[np.zeros_like(p) for p in params],
        second_moment=[np.zeros_like(p) for p in params],
    )


def adam_step(params, grads, state):
    """One bias-corrected Adam update, applied to params in place."""
    if len(params) != len(grads) or len(params) != len(state.first_moment):
        raise ValueError("params/grads/state layouts differ")
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(
                f"non-finite gradient at adam step {state.step_count + 1}"
            )
    state.step_count += 1
    t = state.step_count
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for p, g, m, v in zip(params, grads, state.first_moment, state.second_moment):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= state.learning_rate * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state
