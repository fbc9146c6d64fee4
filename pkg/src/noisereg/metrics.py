"""Image quality and color-statistics metrics.

All functions take (h, w, 3) arrays in 0-255 units; uint8 or float both
work. PSNR/SSIM are full-reference; the gray-distance and color-constancy
measures depend only on per-channel means.
"""

import numpy as np
from scipy.ndimage import correlate1d

__all__ = [
    "psnr",
    "ssim",
    "grey_distance",
    "color_constancy",
    "channel_means",
    "PSNR_CAP_DB",
]

PSNR_CAP_DB = 99.0


def _as_float(img):
    return np.asarray(img, dtype=np.float64)


def channel_means(img):
    """Arithmetic mean of each RGB channel, in 0-255 units."""
    m = _as_float(img).reshape(-1, 3).mean(axis=0)
    return float(m[0]), float(m[1]), float(m[2])


def grey_distance(img):
    """Euclidean distance between the channel-mean triple and (128,128,128)."""
    means = np.array(channel_means(img))
    return float(np.sqrt(np.sum((means - 128.0) ** 2)))


def color_constancy(img):
    """Root-sum-square of pairwise channel-mean differences; 0 iff the three
    channel means coincide (the gray-world ideal)."""
    r, g, b = channel_means(img)
    return float(np.sqrt((r - g) ** 2 + (r - b) ** 2 + (g - b) ** 2))


def psnr(a, b):
    """Peak signal-to-noise ratio in dB, capped at 99.0 for identical images."""
    a = _as_float(a)
    b = _as_float(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    mse = np.mean((a - b) ** 2)
    if mse == 0.0:
        return PSNR_CAP_DB
    return float(min(10.0 * np.log10(255.0**2 / mse), PSNR_CAP_DB))


def _luma(img):
    img = _as_float(img)
    return 0.299 * img[:, :, 0] + 0.587 * img[:, :, 1] + 0.114 * img[:, :, 2]


def gaussian_kernel_1d(size=11, sigma=1.5):
    half = (size - 1) / 2.0
    x = np.arange(size) - half
    k = np.exp(-(x**2) / (2.0 * sigma**2))
    return k / k.sum()


def _windowed_mean(x, k):
    # separable Gaussian filter, then crop to valid window centers
    half = len(k) // 2
    y = correlate1d(x, k, axis=0, mode="constant")
    y = correlate1d(y, k, axis=1, mode="constant")
    return y[half:-half, half:-half]


def ssim(a, b, window_size=11, sigma=1.5, k1=0.01, k2=0.03, dynamic_range=255.0):
    """Mean structural similarity over Gaussian-weighted 11x11 windows,
    computed on the luma channel (0.299R + 0.587G + 0.114B)."""
    a = _as_float(a)
    b = _as_float(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    if min(a.shape[0], a.shape[1]) < window_size:
        raise ValueError(f"image smaller than the {window_size}x{window_size} window")
    x = _luma(a)
    y = _luma(b)
    k = gaussian_kernel_1d(window_size, sigma)
    mu_x = _windowed_mean(x, k)
    mu_y = _windowed_mean(y, k)
    var_x = _windowed_mean(x * x, k) - mu_x**2
    var_y = _windowed_mean(y * y, k) - mu_y**2
    cov = _windowed_mean(x * y, k) - mu_x * mu_y
    c1 = (k1 * dynamic_range) ** 2
    c2 = (k2 * dynamic_range) ** 2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x**2 + mu_y**2 + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))
