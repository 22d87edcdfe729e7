"""
Evaluation metrics and the correlated-noise degradation.

PSNR uses the standard peak^2 / MSE form by default; the printed_form
flag switches the numerator to peak / sum-of-squares for comparison
against tables computed that way. Dice-style scores carry a small eps so
empty-vs-empty comparisons stay well-defined (score 1).
"""

import math

import numpy as np
from scipy import ndimage

from .core import Image


def _check_shapes(f, g):
    if f.data.shape != g.data.shape:
        raise ValueError(f"shape mismatch: {f.data.shape} vs {g.data.shape}")


def psnr(f, g, peak=1.0, printed_form=False):
    """Peak signal-to-noise ratio in dB.

    Args:
        f: Image under test.
        g: reference Image, same shape.
        peak: dynamic range of the data (1.0 for [0,1] images, 255 for
            8-bit).
        printed_form: use peak / sum((f-g)^2) instead of peak^2 / mean
            squared error.

    Returns:
        dB value; math.inf when the images are identical.
    """
    _check_shapes(f, g)
    diff = f.data - g.data
    sq = float(np.sum(diff * diff))
    if sq == 0.0:
        return math.inf
    if printed_form:
        return 10.0 * math.log10(peak / sq)
    mse = sq / diff.size
    return 10.0 * math.log10(peak * peak / mse)


def binarize(f, threshold=0.5):
    """Thresholds an Image into a boolean array (value > threshold)."""
    return f.data > threshold


class ConfusionCounts:
    """TP/TN/FP/FN pixel counts of a predicted mask against a reference."""

    def __init__(self, tp, tn, fp, fn):
        self.tp, self.tn, self.fp, self.fn = int(tp), int(tn), int(fp), int(fn)

    @classmethod
    def from_masks(cls, pred, ref):
        pred = np.asarray(pred, dtype=bool)
        ref = np.asarray(ref, dtype=bool)
        if pred.shape != ref.shape:
            raise ValueError(f"shape mismatch: {pred.shape} vs {ref.shape}")
        return cls(
            tp=np.sum(pred & ref),
            tn=np.sum(~pred & ~ref),
            fp=np.sum(pred & ~ref),
            fn=np.sum(~pred & ref),
        )

    @property
    def total(self):
        return self.tp + self.tn + self.fp + self.fn

    def __repr__(self):
        return f"ConfusionCounts(tp={self.tp}, tn={self.tn}, fp={self.fp}, fn={self.fn})"


def dice(pred, ref, eps=1e-6):
    """Dice coefficient (2 TP + eps) / (2 TP + FP + FN + eps) of two masks."""
    c = ConfusionCounts.from_masks(pred, ref)
    return (2.0 * c.tp + eps) / (2.0 * c.tp + c.fp + c.fn + eps)


def dice_loss(f, g, eps=1e-6, printed_form=True):
    """Soft Dice loss of two [0,1]-valued images.

    The default (printed) form is 1 - sum(f g) / (sum(f + g) + eps); note
    for binary inputs this is NOT 1 - dice (the numerator lacks the
    factor 2), approaching 1/2 on perfect overlap. printed_form=False
    restores the complementary form 1 - (2 sum(f g) + eps) /
    (sum(f*f) + sum(g*g) + eps) whose binary specialization matches dice.
    """
    _check_shapes(f, g)
    fd, gd = f.data, g.data
    inter = float(np.sum(fd * gd))
    if printed_form:
        return 1.0 - inter / (float(np.sum(fd + gd)) + eps)
    return 1.0 - (2.0 * inter + eps) / (float(np.sum(fd * fd) + np.sum(gd * gd)) + eps)


def precision(pred, ref, eps=1e-6):
    """Precision (TP + eps) / (TP + FP + eps) of a mask against a reference."""
    c = ConfusionCounts.from_masks(pred, ref)
    return (c.tp + eps) / (c.tp + c.fp + eps)


def correlated_noise(shape, sigma, rho, seed=0):
    """Spatially correlated additive noise field.

    White Gaussian noise of standard deviation sigma, convolved with a
    normalized Gaussian of scale rho (reflecting boundaries). The
    convolution shrinks the pointwise deviation by roughly 1/(2 rho
    sqrt(pi)); sigma refers to the white noise before smoothing.

    Args:
        shape: (H, W).
        sigma: white-noise standard deviation, >= 0.
        rho: correlation scale in pixels, >= 0 (0 leaves the noise white).
        seed: RNG seed; the field is deterministic given (shape, sigma,
            rho, seed).

    Returns:
        Image of the noise field (zero mean in expectation).
    """
    if sigma < 0 or rho < 0:
        raise ValueError(f"sigma and rho must be non-negative, got ({sigma}, {rho})")
    rng = np.random.default_rng(seed)
    field = rng.normal(0.0, sigma, shape) if sigma > 0 else np.zeros(shape)
    if rho > 0 and sigma > 0:
        field = ndimage.gaussian_filter(field, rho, mode="reflect")
    return Image(field)
