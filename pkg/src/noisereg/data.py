"""Training-signal generators: Gaussian noise, pure-color images, and the
8-color palette. All outputs live in the model's [-1, 1] domain as
(1, 3, h, w) float32 tensors.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["NoiseSpec", "PALETTE_COLORS", "sample_noise", "pure_color_image", "palette_image"]

# Fully saturated palette, raster order for the 2x4 block grid. Every color's
# channel-wise complement is also present, so the palette's channel means are
# equal by construction.
PALETTE_COLORS = [
    (255, 255, 255),  # white
    (0, 255, 255),    # cyan
    (255, 0, 255),    # purple
    (255, 255, 0),    # yellow
    (255, 0, 0),      # red
    (0, 255, 0),      # green
    (0, 0, 255),      # blue
    (0, 0, 0),        # black
]


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float = 1.0
    height: int = 104
    width: int = 104
    seed: int = 0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if self.height < 1 or self.width < 1:
            raise ValueError("noise dims must be positive")


def sample_noise(spec, iteration):
    """i.i.d. N(0, sigma^2) draws, a pure function of (seed, iteration).

    Values are not clamped to [-1, 1].
    """
    rng = np.random.default_rng([spec.seed % 2**63, iteration % 2**63])
    out = rng.standard_normal((1, 3, spec.height, spec.width), dtype=np.float32)
    out *= spec.sigma
    return out


def _normalize_value(v):
    return np.float32(v) / np.float32(127.5) - np.float32(1.0)


def pure_color_image(color, h, w):
    """Constant image of the given 8-bit RGB color, normalized to [-1, 1]."""
    out = np.empty((1, 3, h, w), dtype=np.float32)
    for i, v in enumerate(color):
        out[0, i] = _normalize_value(v)
    return out


def palette_image(h, w):
    """The 8-color palette as a 2x4 block grid (raster order PALETTE_COLORS)."""
    if h % 2 != 0 or w % 4 != 0:
        raise ValueError(f"palette needs h divisible by 2 and w by 4, got {h}x{w}")
    bh, bw = h // 2, w // 4
    out = np.empty((1, 3, h, w), dtype=np.float32)
    for idx, color in enumerate(PALETTE_COLORS):
        r, c = divmod(idx, 4)
        for ch, v in enumerate(color):
            out[0, ch, r * bh:(r + 1) * bh, c * bw:(c + 1) * bw] = _normalize_value(v)
    return out
