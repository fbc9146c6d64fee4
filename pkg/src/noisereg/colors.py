"""Color-mapping logic behind pure-color self-regression.

A model trained to reproduce one pure color learns a per-channel trend
(up or down relative to central grey). At inference a saturated color
either has room to follow a channel's trend or it would overflow; colors
satisfying at least two trends collapse to the training color, the rest
to its opposite. ``verify_mapping`` checks that prediction empirically
against a trained model on the palette.
"""

from dataclasses import dataclass

import numpy as np

from .data import PALETTE_COLORS, palette_image
from .model import srm_forward

__all__ = [
    "central_grey",
    "opposite_color",
    "predict_mapping",
    "verify_mapping",
    "BlockResult",
]


def central_grey():
    """Midpoint of the 8-bit range; 127.5 rounds to the integer color 128."""
    return (128, 128, 128)


def opposite_color(color):
    """Reflection across central grey: v -> 255 - v per channel.

    Central grey itself maps to (127, 127, 127), the distinct reflection
    forced by integer arithmetic.
    """
    return tuple(255 - v for v in color)


def predict_mapping(train_color, infer_color):
    """Predict what a model trained on train_color does to infer_color.

    infer_color must be saturated (every channel 0 or 255); train_color
    must not have any channel at exactly 128 (no trend to learn there).
    Returns train_color if at least two channels can follow the learned
    trend, otherwise opposite_color(train_color).
    """
    if any(v == 128 for v in train_color):
        raise ValueError(f"flat trend channel in train color {train_color}")
    if any(v not in (0, 255) for v in infer_color):
        raise ValueError(f"inference color must be saturated, got {infer_color}")
    satisfied = 0
    for t, v in zip(train_color, infer_color):
        if t < 128:
            # downward trend: needs room to decrease
            satisfied += v > 0
        else:
            # upward trend: needs room to increase
            satisfied += v < 255
    return tuple(train_color) if satisfied >= 2 else opposite_color(train_color)


@dataclass
class BlockResult:
    color: tuple       # the palette block's original color
    predicted: tuple   # predict_mapping outcome
    observed: tuple    # majority vote of the model output over the block
    match: bool


def verify_mapping(trained, train_color, h=104, w=104):
    """Run a pure-color-trained model on the palette and compare each
    block's majority mapping (nearest of train color / opposite) against
    the trend prediction. Majority voting tolerates boundary bleed from
    convolution padding."""
    y, _ = srm_forward(trained, palette_image(h, w))
    out = (np.clip(y[0], -1.0, 1.0).transpose(1, 2, 0) + 1.0) * 127.5
    train_c = np.array(train_color, dtype=np.float64)
    opp_c = np.array(opposite_color(train_color), dtype=np.float64)
    bh, bw = h // 2, w // 4
    results = []
    for idx, color in enumerate(PALETTE_COLORS):
        r, c = divmod(idx, 4)
        block = out[r * bh:(r + 1) * bh, c * bw:(c + 1) * bw]
        d_train = np.sum((block - train_c) ** 2, axis=-1)
        d_opp = np.sum((block - opp_c) ** 2, axis=-1)
        observed = tuple(train_color) if np.mean(d_train < d_opp) > 0.5 else tuple(opp_c.astype(int))
        predicted = predict_mapping(train_color, color)
        results.append(
            BlockResult(color=color, predicted=predicted, observed=observed,
                        match=predicted == observed)
        )
    return results
