"""
Data-adapted gauge frames from the second-order structure of a volume.

The invariant frame ignores how lifted data actually bends: discretized
orientations make lifted lines deviate from horizontality, and curved
lines additionally drift in the angular direction. The gauge frame fixes
the first direction as the xi-weighted least-bending direction, the right
singular vector of the smallest singular value of the scaled frame Hessian.
For a lifted circle of radius r this direction is proportional to
(cos theta, sin theta, 1/r), so its angular component encodes curvature.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import FrameField, Volume
from .diffops import StencilSpec, apply_stencil, derivative_first, invariant_frame


@dataclass
class HessianField:
    """Frame Hessian, components[..., r, c] = A_c(A_r v) per voxel."""

    components: np.ndarray


def hessian_field(v, reg_sigma=1.0):
    """Second-order structure of v in the invariant frame.

    Entry (r, c) holds A_c(A_r v) with central differences, so the matrix
    times a direction X gives the derivative of the gradient along X. Each
    component is smoothed with an isotropic spatial Gaussian.

    Args:
        v: Volume.
        reg_sigma: spatial smoothing scale in pixels; 0 disables.

    Returns:
        HessianField with components of shape (K, H, W, 3, 3).
    """
    frame = invariant_frame(v)
    comps = np.empty((*v.data.shape, 3, 3))
    for r in range(3):
        d_r = derivative_first(v, frame, r + 1)
        for c in range(3):
            comps[..., r, c] = apply_stencil(d_r, frame, StencilSpec(c + 1, "central-first"))
    if reg_sigma > 0:
        comps = ndimage.gaussian_filter1d(comps, reg_sigma, axis=2, mode="reflect")
        comps = ndimage.gaussian_filter1d(comps, reg_sigma, axis=1, mode="reflect")
    return HessianField(components=comps)


def fit_gauge_frame(v, xi, reg_sigma=1.0, degeneracy_tol=0.05):
    """Fits a gauge frame per voxel from the scaled Hessian.

    Scales the Hessian by M = diag(xi, xi, 1) on both sides, takes the
    right singular vector of the smallest singular value as the main
    direction (sign-aligned with the invariant A1), completes it with a
    purely spatial perpendicular direction and a right-handed third one,
    all orthonormal for the xi-metric. Voxels whose two smallest singular
    values differ by less than degeneracy_tol (relative to the largest)
    fall back to the invariant frame.

    Args:
        v: Volume.
        xi: spatial-vs-angular balance of the metric.
        reg_sigma: spatial smoothing of the Hessian components.
        degeneracy_tol: relative singular-value gap treated as degenerate.

    Returns:
        FrameField with per-voxel offsets and steps; fallback_fraction
        records how many voxels kept the invariant frame.
    """
    K, H, W = v.data.shape
    dtheta = v.dtheta
    inv = invariant_frame(v, xi=xi)
    hess = hessian_field(v, reg_sigma).components
    minv = np.array([1.0 / xi, 1.0 / xi, 1.0])
    scaled = hess * minv[:, None] * minv[None, :]

    try:
        _, sing, vh = np.linalg.svd(scaled)
    except np.linalg.LinAlgError:
        offsets = np.broadcast_to(inv.offsets, (K, H, W, 3, 3)).copy()
        steps = np.broadcast_to(inv.steps, (K, H, W, 3)).copy()
        return FrameField(offsets=offsets, steps=steps, xi=xi, dtheta=dtheta,
                          fallback_fraction=1.0)

    degenerate = (sing[..., 1] - sing[..., 2]) <= degeneracy_tol * sing[..., 0]
    x_tilde = vh[..., 2, :]

    # Physical main direction, unit for the xi-metric by construction.
    b1 = x_tilde * minv
    theta = v.orientations().reshape(K, 1, 1)
    cos_t = np.broadcast_to(np.cos(theta), (K, H, W))
    sin_t = np.broadcast_to(np.sin(theta), (K, H, W))
    align = b1[..., 0] * cos_t + b1[..., 1] * sin_t
    tiny = 1e-12
    flip = np.where(np.abs(align) > tiny, np.sign(align), np.sign(b1[..., 2]))
    flip = np.where(flip == 0.0, 1.0, flip)
    b1 = b1 * flip[..., None]

    # Purely spatial unit perpendicular; angular-only b1 keeps the invariant A2.
    spatial = np.hypot(b1[..., 0], b1[..., 1])
    safe = spatial > tiny
    b2 = np.empty_like(b1)
    b2[..., 0] = np.where(safe, -b1[..., 1] / np.where(safe, spatial, 1.0), -sin_t) / xi
    b2[..., 1] = np.where(safe, b1[..., 0] / np.where(safe, spatial, 1.0), cos_t) / xi
    b2[..., 2] = 0.0

    scale = np.array([xi, xi, 1.0])
    b3 = np.cross(b1 * scale, b2 * scale) * minv

    offsets = np.empty((K, H, W, 3, 3))
    steps = np.empty((K, H, W, 3))
    for i, (vec, raw_scale) in enumerate(((b1, xi), (b2, xi), (b3, 1.0))):
        raw = vec * raw_scale
        idx = raw / np.array([1.0, 1.0, dtheta])
        length = np.linalg.norm(idx, axis=-1)
        length = np.where(length > tiny, length, 1.0)
        offsets[..., i, :] = idx / length[..., None]
        steps[..., i] = 1.0 / length

    inv_offsets = np.broadcast_to(inv.offsets, (K, H, W, 3, 3))
    inv_steps = np.broadcast_to(inv.steps, (K, H, W, 3))
    offsets = np.where(degenerate[..., None, None], inv_offsets, offsets)
    steps = np.where(degenerate[..., None], inv_steps, steps)

    return FrameField(offsets=offsets, steps=steps, xi=xi, dtheta=dtheta,
                      fallback_fraction=float(np.mean(degenerate)))


def implied_curvature(frame):
    """Curvature encoded by the main gauge direction.

    The angular component of B1 per unit spatial length approximates the
    curvature of the underlying planar structure; a lifted circle of
    radius r yields magnitude 1/r at its ridge voxels.

    Returns:
        Array (K, H, W); non-finite where B1 is purely angular.
    """
    b1 = frame.physical_vectors()[..., 0, :]
    spatial = np.hypot(b1[..., 0], b1[..., 1])
    with np.errstate(divide="ignore", invalid="ignore"):
        return b1[..., 2] / spatial
