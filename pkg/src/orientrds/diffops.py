"""
Finite-difference operators on orientation-lifted volumes.

Every operator differentiates along the directions of a FrameField. The
orientation-aligned invariant frame has, at orientation theta, the
directions (cos theta, sin theta, 0), (-sin theta, cos theta, 0) and
(0, 0, 1): along the orientation, sideways, and angular. Data-adapted
gauge frames (see the gauge module) reuse the same stencil machinery.

Stencil arms land off-grid in general; samples are taken trilinearly with
reflecting spatial and periodic angular boundaries, so all stencils are
convex combinations of grid values. Per-orientation constant arms (the
invariant frame, and the angular direction as a pure integer shift) take
cheap sliced paths instead of gathered interpolation.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import FrameField, Volume, sample_volume

SCHEMES = ("central-first", "central-second", "upwind-forward", "upwind-backward")


@dataclass(frozen=True)
class StencilSpec:
    """One stencil: a frame direction (1, 2 or 3) and a difference scheme.

    Schemes: "central-first" is (v(p+o) - v(p-o)) / (2h), "central-second"
    is (v(p+o) - 2 v(p) + v(p-o)) / h^2. "upwind-forward" is the dilation
    arm max{v(p+o) - v, v(p-o) - v, 0} / h, which only sees larger
    neighbors; "upwind-backward" is the erosion arm
    max{v - v(p+o), v - v(p-o), 0} / h.
    """

    direction: int
    scheme: str

    def __post_init__(self):
        if self.direction not in (1, 2, 3):
            raise ValueError(f"direction must be 1, 2 or 3, got {self.direction}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")


def invariant_frame(v, xi=0.1):
    """Builds the orientation-aligned frame for the grid of a Volume.

    Args:
        v: Volume supplying K and dtheta.
        xi: spatial-vs-angular balance recorded for orthonormality checks;
            the stencils themselves do not depend on it.

    Returns:
        FrameField with per-orientation constant offsets; direction 1 points
        along theta_k, direction 2 sideways, direction 3 along the
        orientation axis with physical step dtheta.
    """
    K = v.num_orientations
    theta = v.orientations()
    offsets = np.zeros((K, 1, 1, 3, 3))
    offsets[:, 0, 0, 0, 0] = np.cos(theta)
    offsets[:, 0, 0, 0, 1] = np.sin(theta)
    offsets[:, 0, 0, 1, 0] = -np.sin(theta)
    offsets[:, 0, 0, 1, 1] = np.cos(theta)
    offsets[:, 0, 0, 2, 2] = 1.0
    steps = np.array([1.0, 1.0, v.dtheta]).reshape(1, 1, 1, 3)
    return FrameField(offsets=offsets, steps=steps, xi=xi, dtheta=v.dtheta)


def _shift_constant(data, ox, oy):
    # Bilinear sample at (x + ox[k], y + oy[k]) with per-slice constant shift,
    # via views into a symmetric-padded copy. Matches sample_volume exactly.
    K, H, W = data.shape
    m = int(np.ceil(np.max(np.abs(np.concatenate([ox, oy]))))) + 1
    pad = np.pad(data, ((0, 0), (m, m), (m, m)), mode="symmetric")
    out = np.empty_like(data)
    for k in range(K):
        x0 = int(np.floor(ox[k]))
        y0 = int(np.floor(oy[k]))
        fx = ox[k] - x0
        fy = oy[k] - y0
        base = pad[k]
        r0 = base[m + y0:m + y0 + H]
        r1 = base[m + y0 + 1:m + y0 + 1 + H]
        a = (1 - fx) * r0[:, m + x0:m + x0 + W] + fx * r0[:, m + x0 + 1:m + x0 + 1 + W]
        if fy == 0.0:
            out[k] = a
        else:
            b = (1 - fx) * r1[:, m + x0:m + x0 + W] + fx * r1[:, m + x0 + 1:m + x0 + 1 + W]
            out[k] = (1 - fy) * a + fy * b
    return out


def _sample_offset(data, off):
    # Sample data at p + off for one direction; off broadcastable (K, H, W, 3).
    K, H, W = data.shape
    if off.ndim == 4 and off.shape[1] == 1 and off.shape[2] == 1:
        ox = off[:, 0, 0, 0]
        oy = off[:, 0, 0, 1]
        ok = off[:, 0, 0, 2]
        if np.all(ok == 0.0):
            if np.all(ox == 0.0) and np.all(oy == 0.0):
                return data.copy()
            return _shift_constant(data, ox, oy)
        if np.all(ox == 0.0) and np.all(oy == 0.0) and np.all(ok == np.round(ok)):
            shifts = np.round(ok).astype(int)
            if np.all(shifts == shifts[0]):
                return np.roll(data, -shifts[0], axis=0)
            out = np.empty_like(data)
            for k in range(K):
                out[k] = data[(k + shifts[k]) % K]
            return out
    kk = np.arange(K)[:, None, None]
    yy = np.arange(H)[None, :, None]
    xx = np.arange(W)[None, None, :]
    return sample_volume(data, xx + off[..., 0], yy + off[..., 1], kk + off[..., 2])


def frame_samples(v, frame):
    """Gathers v(p + o_i) and v(p - o_i) for all three frame directions.

    Returns a list of three (plus, minus) array pairs. Laplacian and upwind
    norms both consume these, so one gather serves a whole PDE step.
    """
    data = v.data
    out = []
    for i in range(3):
        off = frame.offsets[..., i, :]
        out.append((_sample_offset(data, off), _sample_offset(data, -off)))
    return out


def apply_stencil(v, frame, spec, samples=None):
    """Applies one StencilSpec along a frame direction.

    Args:
        v: Volume.
        frame: FrameField.
        spec: StencilSpec naming direction and scheme.
        samples: optional precomputed (plus, minus) pair from frame_samples.

    Returns:
        Array of shape (K, H, W).
    """
    i = spec.direction - 1
    if samples is None:
        off = frame.offsets[..., i, :]
        plus = _sample_offset(v.data, off)
        minus = _sample_offset(v.data, -off)
    else:
        plus, minus = samples
    h = frame.steps[..., i]
    if spec.scheme == "central-first":
        return (plus - minus) / (2.0 * h)
    if spec.scheme == "central-second":
        return (plus - 2.0 * v.data + minus) / (h * h)
    if spec.scheme == "upwind-forward":
        arm = np.maximum(np.maximum(plus - v.data, minus - v.data), 0.0)
        return arm / h
    arm = np.maximum(np.maximum(v.data - plus, v.data - minus), 0.0)
    return arm / h


def derivative_first(v, frame, i):
    """Central first derivative of v along frame direction i (1, 2 or 3)."""
    return Volume(apply_stencil(v, frame, StencilSpec(i, "central-first")))


def derivative_second(v, frame, i):
    """Central second derivative of v along frame direction i (1, 2 or 3)."""
    return Volume(apply_stencil(v, frame, StencilSpec(i, "central-second")))


def laplacian(v, frame, metric, samples=None):
    """Metric-weighted Laplacian: sum_i g^ii * second derivative along i.

    Args:
        v: Volume.
        frame: FrameField.
        metric: DiagonalMetric; its dual coefficients weigh the terms.
        samples: optional result of frame_samples(v, frame).

    Returns:
        Volume.
    """
    dual = metric.dual()
    if samples is None:
        samples = frame_samples(v, frame)
    out = np.zeros_like(v.data)
    for i in range(3):
        plus, minus = samples[i]
        h = frame.steps[..., i]
        out += dual[i] * (plus - 2.0 * v.data + minus) / (h * h)
    return Volume(out)


def perpendicular_laplacian(v, frame, metric, samples=None):
    """Laplacian restricted to directions 2 and 3 (orthogonal to the fibers)."""
    dual = metric.dual()
    if samples is None:
        samples = frame_samples(v, frame)
    out = np.zeros_like(v.data)
    for i in (1, 2):
        plus, minus = samples[i]
        h = frame.steps[..., i]
        out += dual[i] * (plus - 2.0 * v.data + minus) / (h * h)
    return Volume(out)


def gradient_norm_central(v, frame, metric):
    """Metric norm of the gradient from central differences.

    Returns:
        Volume holding sqrt(sum_i g^ii (d_i v)^2).
    """
    dual = metric.dual()
    acc = np.zeros_like(v.data)
    for i in (1, 2, 3):
        d = apply_stencil(v, frame, StencilSpec(i, "central-first"))
        acc += dual[i - 1] * d * d
    return Volume(np.sqrt(acc))


def gradient_norm_upwind(v, frame, metric, mode="dilation", samples=None):
    """Metric norm of the gradient from one-sided monotone stencils.

    In dilation mode each direction contributes
    max{v(p+o) - v, v(p-o) - v, 0} / h, which is bounded by
    (max v - v(p)) / h, so explicit dilation steps cannot overshoot the
    maximum; erosion mode mirrors the signs.

    Args:
        v: Volume.
        frame: FrameField.
        metric: DiagonalMetric.
        mode: "dilation" or "erosion".
        samples: optional result of frame_samples(v, frame).

    Returns:
        Volume.
    """
    if mode not in ("dilation", "erosion"):
        raise ValueError(f"mode must be 'dilation' or 'erosion', got {mode!r}")
    dual = metric.dual()
    if samples is None:
        samples = frame_samples(v, frame)
    acc = np.zeros_like(v.data)
    for i in range(3):
        plus, minus = samples[i]
        if mode == "dilation":
            arm = np.maximum(np.maximum(plus - v.data, minus - v.data), 0.0)
        else:
            arm = np.maximum(np.maximum(v.data - plus, v.data - minus), 0.0)
        h = frame.steps[..., i]
        acc += dual[i] * (arm / h) ** 2
    return Volume(np.sqrt(acc))


def gaussian_regularize(v, sigma_spatial, sigma_angular=0.0):
    """Gaussian smoothing, reflecting spatially and periodic in orientation.

    Args:
        v: Volume.
        sigma_spatial: standard deviation in pixels; 0 skips the spatial pass.
        sigma_angular: standard deviation in orientation steps, default 0.

    Returns:
        Volume.
    """
    out = _gaussian_data(v.data, sigma_spatial, sigma_angular)
    return Volume(out)


def _gaussian_data(data, sigma_spatial, sigma_angular=0.0):
    out = data
    if sigma_spatial > 0:
        out = ndimage.gaussian_filter1d(out, sigma_spatial, axis=2, mode="reflect")
        out = ndimage.gaussian_filter1d(out, sigma_spatial, axis=1, mode="reflect")
    if sigma_angular > 0:
        out = ndimage.gaussian_filter1d(out, sigma_angular, axis=0, mode="wrap")
    if out is data:
        out = data.copy()
    return out
