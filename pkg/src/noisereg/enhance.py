"""Image-domain inference: 8-bit RGB <-> model tensor conversion, single
image enhancement, and directory batch processing with timing.

Images are (h, w, 3) uint8 numpy arrays throughout. PNG is the primary
file format with binary PPM (P6) as a fallback; alpha is stripped and
grayscale is replicated to three channels on read.
"""

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .model import srm_forward

__all__ = [
    "normalize",
    "denormalize",
    "enhance",
    "enhance_dir",
    "load_image",
    "save_image",
    "EnhanceReport",
]

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".ppm")


def normalize(img):
    """(h, w, 3) uint8 -> (1, 3, h, w) float32 via v / 127.5 - 1."""
    t = np.asarray(img, dtype=np.float32) / np.float32(127.5) - np.float32(1.0)
    return t.transpose(2, 0, 1)[None]


def denormalize(t):
    """(1, 3, h, w) tensor -> (h, w, 3) uint8.

    Clamps to [-1, 1] then maps v -> round((v + 1) * 127.5) with
    round-half-away-from-zero (values are non-negative, so floor(x + 0.5)).
    """
    x = np.clip(np.asarray(t, dtype=np.float32), -1.0, 1.0)
    x = (x + np.float32(1.0)) * np.float32(127.5)
    x = np.floor(x + np.float32(0.5))
    return x[0].transpose(1, 2, 0).astype(np.uint8)


def enhance(params, img):
    """Enhance one RGB image with a (trained) model; dimensions preserved."""
    y, _ = srm_forward(params, normalize(img))
    return denormalize(y)


def load_image(path):
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def save_image(img, path):
    Image.fromarray(np.asarray(img, dtype=np.uint8), mode="RGB").save(path)


@dataclass
class EnhanceReport:
    count: int = 0
    times_ms: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    @property
    def mean_ms(self):
        return sum(self.times_ms) / len(self.times_ms) if self.times_ms else 0.0


def enhance_dir(params, in_dir, out_dir):
    """Enhance every PNG/PPM in in_dir into out_dir (same filenames).

    Undecodable files are skipped with a warning; the batch continues.
    Per-image inference wall time (ms) is recorded in the report.
    """
    in_dir = Path(in_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = EnhanceReport()
    for path in sorted(in_dir.iterdir()):
        if not path.is_file() or path.suffix.lower() not in IMAGE_SUFFIXES:
            continue
        try:
            img = load_image(path)
        except (UnidentifiedImageError, OSError, ValueError) as exc:
            log.warning("skipping %s: %s", path.name, exc)
            report.skipped.append(path.name)
            continue
        start = time.perf_counter()
        out = enhance(params, img)
        report.times_ms.append((time.perf_counter() - start) * 1000.0)
        save_image(out, out_dir / path.name)
        report.count += 1
    return report
