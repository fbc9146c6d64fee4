"""The self-regression model: a 3-layer fully convolutional network.

Topology: conv(3->C) -> IN -> ReLU -> conv(C->C) -> IN -> ReLU ->
conv(C->3) -> tanh. All kernels are 3x3 with same padding, no shortcuts,
so outputs keep the input's spatial size and land strictly in (-1, 1).
Instance normalization can be swapped for the identity (ablation).
"""

import struct
from dataclasses import dataclass

import numpy as np

from . import ops

__all__ = [
    "SrmParams",
    "CheckpointError",
    "srm_new",
    "srm_forward",
    "srm_backward",
    "srm_save",
    "srm_load",
    "param_count",
]

_MAGIC = b"NSER"
_FORMAT_VERSION = 1


class CheckpointError(Exception):
    """Raised on a malformed or truncated checkpoint file."""


@dataclass
class SrmParams:
    conv1_w: np.ndarray
    conv1_b: np.ndarray
    in1_g: np.ndarray
    in1_b: np.ndarray
    conv2_w: np.ndarray
    conv2_b: np.ndarray
    in2_g: np.ndarray
    in2_b: np.ndarray
    conv3_w: np.ndarray
    conv3_b: np.ndarray
    hidden_width: int
    instance_norm: bool = True

    def param_list(self):
        """All learnable arrays in the fixed checkpoint order."""
        return [
            self.conv1_w, self.conv1_b, self.in1_g, self.in1_b,
            self.conv2_w, self.conv2_b, self.in2_g, self.in2_b,
            self.conv3_w, self.conv3_b,
        ]

    @property
    def param_count(self):
        return sum(p.size for p in self.param_list())


def param_count(hidden_width):
    """Closed-form parameter count for a given hidden width C."""
    c = hidden_width
    return 9 * c * c + 60 * c + 3


def srm_new(seed, hidden_width=9, instance_norm=True):
    """Freshly initialized parameters, fully determined by the seed.

    Conv weights are uniform in +-sqrt(1/fan_in); biases zero; IN scale 1,
    shift 0.
    """
    if hidden_width < 1:
        raise ValueError("hidden_width must be >= 1")
    c = hidden_width
    rng = np.random.default_rng(seed)

    def conv_init(cout, cin):
        bound = np.sqrt(1.0 / (cin * 9))
        return rng.uniform(-bound, bound, size=(cout, cin, 3, 3)).astype(np.float32)

    return SrmParams(
        conv1_w=conv_init(c, 3),
        conv1_b=np.zeros(c, dtype=np.float32),
        in1_g=np.ones(c, dtype=np.float32),
        in1_b=np.zeros(c, dtype=np.float32),
        conv2_w=conv_init(c, c),
        conv2_b=np.zeros(c, dtype=np.float32),
        in2_g=np.ones(c, dtype=np.float32),
        in2_b=np.zeros(c, dtype=np.float32),
        conv3_w=conv_init(3, c),
        conv3_b=np.zeros(3, dtype=np.float32),
        hidden_width=c,
        instance_norm=instance_norm,
    )


def srm_forward(params, x):
    """Run the network on x (n, 3, h, w); returns (output, cache)."""
    p = params
    h1, c_conv1 = ops.conv2d_forward(x, p.conv1_w, p.conv1_b)
    if p.instance_norm:
        h1n, c_in1 = ops.instance_norm_forward(h1, p.in1_g, p.in1_b)
    else:
        h1n, c_in1 = h1, None
    a1, c_relu1 = ops.relu(h1n)
    h2, c_conv2 = ops.conv2d_forward(a1, p.conv2_w, p.conv2_b)
    if p.instance_norm:
        h2n, c_in2 = ops.instance_norm_forward(h2, p.in2_g, p.in2_b)
    else:
        h2n, c_in2 = h2, None
    a2, c_relu2 = ops.relu(h2n)
    h3, c_conv3 = ops.conv2d_forward(a2, p.conv3_w, p.conv3_b)
    y, c_tanh = ops.tanh(h3)
    cache = (c_conv1, c_in1, c_relu1, c_conv2, c_in2, c_relu2, c_conv3, c_tanh)
    return y, cache


def srm_backward(params, cache, grad_y):
    """Backpropagate grad_y through the whole network.

    Returns gradients as a list aligned with params.param_list(). With
    instance norm disabled the gamma/beta slots get zero gradients.
    """
    p = params
    c_conv1, c_in1, c_relu1, c_conv2, c_in2, c_relu2, c_conv3, c_tanh = cache

    g = ops.tanh_backward(c_tanh, grad_y)
    g, g_w3, g_b3 = ops.conv2d_backward(c_conv3, g)
    g = ops.relu_backward(c_relu2, g)
    if p.instance_norm:
        g, g_g2, g_be2 = ops.instance_norm_backward(c_in2, g)
    else:
        g_g2, g_be2 = np.zeros_like(p.in2_g), np.zeros_like(p.in2_b)
    g, g_w2, g_b2 = ops.conv2d_backward(c_conv2, g)
    g = ops.relu_backward(c_relu1, g)
    if p.instance_norm:
        g, g_g1, g_be1 = ops.instance_norm_backward(c_in1, g)
    else:
        g_g1, g_be1 = np.zeros_like(p.in1_g), np.zeros_like(p.in1_b)
    _, g_w1, g_b1 = ops.conv2d_backward(c_conv1, g)

    return [g_w1, g_b1, g_g1, g_be1, g_w2, g_b2, g_g2, g_be2, g_w3, g_b3]


def srm_save(params, path):
    """Write a checkpoint: magic, version, width, flags, then all parameter
    arrays as little-endian float32 in the fixed order."""
    flags = 0 if params.instance_norm else 1
    header = struct.pack("<4sHHH", _MAGIC, _FORMAT_VERSION, params.hidden_width, flags)
    with open(path, "wb") as f:
        f.write(header)
        for arr in params.param_list():
            f.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def srm_load(path):
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < 10:
        raise CheckpointError(f"file too short to hold a header ({len(blob)} bytes)")
    magic, version, width, flags = struct.unpack("<4sHHH", blob[:10])
    if magic != _MAGIC:
        raise CheckpointError(f"bad magic {magic!r}, expected {_MAGIC!r}")
    if version != _FORMAT_VERSION:
        raise CheckpointError(f"unsupported format version {version}")
    if width < 1:
        raise CheckpointError(f"invalid hidden width {width}")
    expected = param_count(width) * 4
    payload = blob[10:]
    if len(payload) != expected:
        raise CheckpointError(
            f"payload is {len(payload)} bytes, expected {expected} for width {width}"
        )
    c = width
    shapes = [
        (c, 3, 3, 3), (c,), (c,), (c,),
        (c, c, 3, 3), (c,), (c,), (c,),
        (3, c, 3, 3), (3,),
    ]
    arrays = []
    offset = 0
    for shape in shapes:
        size = int(np.prod(shape))
        arrays.append(
            np.frombuffer(payload, dtype="<f4", count=size, offset=offset)
            .reshape(shape)
            .astype(np.float32)
        )
        offset += size * 4
    return SrmParams(*arrays, hidden_width=c, instance_norm=not (flags & 1))
