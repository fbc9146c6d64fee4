"""Self-regression training loop.

Each iteration builds a training image according to the configured mode
(fresh Gaussian noise, a fixed pure color, or the palette), regresses the
model output onto that same image under L1 + total-variation loss, and
takes one Adam step. Diagnostic curves (gray-distance and color-constancy
of a probe image, plus the same distance on the training output) are
recorded at regular probe points.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from . import metrics, ops
from .data import NoiseSpec, palette_image, pure_color_image, sample_noise
from .enhance import normalize
from .model import srm_backward, srm_forward, srm_new

__all__ = [
    "TrainConfig",
    "CurvePoint",
    "CurveLog",
    "TrainingError",
    "train",
    "train_c_regression",
    "train_p_regression",
    "train_on_noise",
]

TRAIN_HW = (104, 104)


class TrainingError(RuntimeError):
    """Raised when training hits a non-finite loss."""


@dataclass(frozen=True)
class TrainConfig:
    mode: str = "noise"  # noise | pure_color | palette
    color: tuple = None  # required for pure_color
    iterations: int = 2000
    learning_rate: float = 2e-4
    sigma: float = 1.0
    noise_hw: tuple = TRAIN_HW
    seed: int = 0
    probe_every: int = 10
    hidden_width: int = 9
    disable_instance_norm: bool = False
    tv_weight: float = 0.1

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.probe_every < 1:
            raise ValueError("probe_every must be >= 1")
        if self.mode not in ("noise", "pure_color", "palette"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "pure_color" and self.color is None:
            raise ValueError("pure_color mode needs a color")


@dataclass
class CurvePoint:
    iteration: int
    loss: float
    l1: float
    tv: float
    grey_distance: float        # probe output, 0-255 units
    color_constancy: float      # probe output
    train_grey_distance: float  # same distance, on the training output


@dataclass
class CurveLog:
    points: list = field(default_factory=list)

    def column(self, name):
        return [getattr(p, name) for p in self.points]

    def to_csv(self, path):
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["iter", "loss", "l1", "tv", "grey_distance", "color_constancy"])
            for p in self.points:
                writer.writerow(
                    [p.iteration]
                    + [f"{v:.6f}" for v in (p.loss, p.l1, p.tv, p.grey_distance, p.color_constancy)]
                )


def _tensor_to_image_float(t):
    """Model tensor -> (h, w, 3) float array in 0-255 units (no rounding)."""
    x = np.clip(t[0], -1.0, 1.0)
    return (x.transpose(1, 2, 0) + 1.0) * 127.5


def _make_input(config, iteration, fixed):
    if config.mode == "noise":
        spec = NoiseSpec(
            sigma=config.sigma,
            height=config.noise_hw[0],
            width=config.noise_hw[1],
            seed=config.seed,
        )
        return sample_noise(spec, iteration)
    return fixed


def train(config, probe=None, snapshot_fn=None):
    """Run the full self-regression loop; returns (params, CurveLog).

    probe: optional (h, w, 3) uint8 image; defaults to the palette.
    snapshot_fn: optional callable (iteration, params) invoked at every
    probe point, e.g. to dump intermediate enhanced frames.

    Deterministic: an identical config reproduces parameters and log
    bit-exactly.
    """
    h, w = config.noise_hw
    if probe is None:
        probe_t = palette_image(h, w)
    else:
        probe_t = normalize(probe)

    fixed = None
    if config.mode == "pure_color":
        fixed = pure_color_image(config.color, h, w)
    elif config.mode == "palette":
        fixed = palette_image(h, w)

    params = srm_new(
        config.seed,
        hidden_width=config.hidden_width,
        instance_norm=not config.disable_instance_norm,
    )
    plist = params.param_list()
    state = ops.adam_init(plist, config.learning_rate)
    log = CurveLog()

    def record(iteration, loss, l1, tv, train_y):
        probe_y, _ = srm_forward(params, probe_t)
        probe_img = _tensor_to_image_float(probe_y)
        train_img = _tensor_to_image_float(train_y)
        log.points.append(
            CurvePoint(
                iteration=iteration,
                loss=loss,
                l1=l1,
                tv=tv,
                grey_distance=metrics.grey_distance(probe_img),
                color_constancy=metrics.color_constancy(probe_img),
                train_grey_distance=metrics.grey_distance(train_img),
            )
        )
        if snapshot_fn is not None:
            snapshot_fn(iteration, params)

    for i in range(config.iterations):
        x = _make_input(config, i, fixed)
        y, cache = srm_forward(params, x)
        l1, g_l1 = ops.l1_loss(y, x)
        tv_raw, g_tv = ops.tv_loss(y)
        tv = config.tv_weight * tv_raw
        loss = l1 + tv
        if not np.isfinite(loss):
            raise TrainingError(f"non-finite loss {loss} at iteration {i}")
        if i % config.probe_every == 0:
            # probed before the update, so iteration 0 is the untrained model
            record(i, loss, l1, tv, y)
        grads = srm_backward(params, cache, g_l1 + config.tv_weight * g_tv)
        ops.adam_step(plist, grads, state)

    # final point evaluates the fully trained model
    x = _make_input(config, config.iterations, fixed)
    y, _ = srm_forward(params, x)
    l1, _ = ops.l1_loss(y, x)
    tv = config.tv_weight * ops.tv_loss(y)[0]
    record(config.iterations, l1 + tv, l1, tv, y)
    return params, log


def train_c_regression(color, **overrides):
    """Pure-color self-regression with the standard recipe."""
    return train(TrainConfig(mode="pure_color", color=tuple(color), **overrides))


def train_p_regression(**overrides):
    """Palette self-regression with the standard recipe."""
    return train(TrainConfig(mode="palette", **overrides))


def train_on_noise(sigma=1.0, **overrides):
    """Noise self-regression; sigma=1 is the fully-converged default,
    sigma=3 the high-variance variant, iterations=600 the early stop."""
    return train(TrainConfig(mode="noise", sigma=sigma, **overrides))
