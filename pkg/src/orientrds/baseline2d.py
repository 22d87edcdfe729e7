"""
Planar diffusion-shock baseline for side-by-side comparison.

The same switch structure as the lifted evolution, but on the image plane:
    du/dt = g(|grad u_nu|^2) Lap u - (1 - g) S(d_ww u_sigma) |grad u|
with w the dominant eigenvector of the structure tensor, so sharpening
happens across the locally dominant edge direction. Lines that cross share
a single plane, so the baseline cannot continue both branches through an
occlusion; the lifted evolution can (its point of comparison).
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import Image, NumericalInstabilityError, sample_image
from .rds import charbonnier, shock_sigmoid


@dataclass(frozen=True)
class Rds2dParams:
    """Parameters of the planar evolution.

    lam is the Charbonnier contrast, sigma/rho the inner/outer structure
    tensor scales, nu the switch smoothing scale, eps the shock sigmoid
    sharpness. tau=None selects the stable bound.
    """

    lam: float = 0.02
    sigma: float = 1.5
    rho: float = 4.0
    nu: float = 1.0
    eps: float = 1e-2
    tau: float = None


@dataclass
class StructureTensorField:
    """Per-pixel symmetric 2x2 tensor (jxx, jxy, jyy) at scales (sigma, rho)."""

    jxx: np.ndarray
    jxy: np.ndarray
    jyy: np.ndarray
    sigma: float
    rho: float


def stable_timestep_2d(dxy=1.0):
    """min of the planar diffusion bound dxy^2/4 and morphology bound dxy/sqrt(2)."""
    return float(min(dxy * dxy / 4.0, dxy / np.sqrt(2.0)))


def structure_tensor(f, sigma, rho):
    """Outer product of the Gaussian-derivative gradient, smoothed at rho.

    Args:
        f: Image.
        sigma: inner (derivative) scale in pixels; 0 uses plain central
            differences.
        rho: outer (averaging) scale in pixels.

    Returns:
        StructureTensorField; positive semi-definite per pixel.
    """
    data = f.data
    if sigma > 0:
        gx = ndimage.gaussian_filter(data, sigma, order=(0, 1), mode="reflect")
        gy = ndimage.gaussian_filter(data, sigma, order=(1, 0), mode="reflect")
    else:
        gy, gx = np.gradient(data)
    jxx, jxy, jyy = gx * gx, gx * gy, gy * gy
    if rho > 0:
        jxx = ndimage.gaussian_filter(jxx, rho, mode="reflect")
        jxy = ndimage.gaussian_filter(jxy, rho, mode="reflect")
        jyy = ndimage.gaussian_filter(jyy, rho, mode="reflect")
    return StructureTensorField(jxx=jxx, jxy=jxy, jyy=jyy, sigma=sigma, rho=rho)


def dominant_direction(st, tol=1e-9):
    """Unit eigenvector of the larger structure tensor eigenvalue.

    Deterministic sign: non-negative x-component, ties resolved to
    non-negative y. Pixels with a relative eigenvalue gap below tol
    (isotropic neighborhoods) default to (1, 0).

    Returns:
        (wx, wy) arrays.
    """
    jxx, jxy, jyy = st.jxx, st.jxy, st.jyy
    gap = np.sqrt((jxx - jyy) ** 2 + 4.0 * jxy * jxy)
    lam1 = 0.5 * ((jxx + jyy) + gap)
    # Two algebraic eigenvector forms; pick the better conditioned per pixel.
    ax, ay = lam1 - jyy, jxy
    bx, by = jxy, lam1 - jxx
    use_a = np.hypot(ax, ay) >= np.hypot(bx, by)
    wx = np.where(use_a, ax, bx)
    wy = np.where(use_a, ay, by)
    norm = np.hypot(wx, wy)
    isotropic = (gap <= tol * np.maximum(lam1, tol)) | (norm <= tol)
    safe = np.where(isotropic, 1.0, norm)
    wx = np.where(isotropic, 1.0, wx / safe)
    wy = np.where(isotropic, 0.0, wy / safe)
    flip = (wx < 0.0) | ((wx == 0.0) & (wy < 0.0))
    sign = np.where(flip, -1.0, 1.0)
    return wx * sign, wy * sign


def _axis_shifts(data):
    pad = np.pad(data, 1, mode="symmetric")
    east = pad[1:-1, 2:]
    west = pad[1:-1, :-2]
    south = pad[2:, 1:-1]
    north = pad[:-2, 1:-1]
    return east, west, south, north


def rds2d_step(u, params, mask_data=None, u0_data=None):
    """One explicit planar diffusion-shock step.

    Five-point Laplacian, Rouy-Tourin upwind gradient norm, and the
    w-directional second difference u_sigma(p + w) - 2 u_sigma(p) +
    u_sigma(p - w) with bilinear sampling. Masked-out pixels are reset to
    u0_data. Verifies per-step max-min bracketing.

    Args:
        u: Image.
        params: Rds2dParams.
        mask_data: optional boolean (H, W); False pixels clamp to u0_data.
        u0_data: clamp target when mask_data is given.

    Returns:
        Image.
    """
    data = u.data
    tau = params.tau if params.tau is not None else stable_timestep_2d()

    u_nu = ndimage.gaussian_filter(data, params.nu, mode="reflect") if params.nu > 0 else data
    gy, gx = np.gradient(u_nu)
    g = charbonnier(gx * gx + gy * gy, params.lam)

    wx, wy = dominant_direction(structure_tensor(u, params.sigma, params.rho))
    u_sigma = ndimage.gaussian_filter(data, params.sigma, mode="reflect") if params.sigma > 0 else data
    yy, xx = np.mgrid[0:data.shape[0], 0:data.shape[1]]
    d_ww = (sample_image(u_sigma, xx + wx, yy + wy)
            - 2.0 * u_sigma
            + sample_image(u_sigma, xx - wx, yy - wy))
    s = shock_sigmoid(d_ww, params.eps)

    east, west, south, north = _axis_shifts(data)
    lap = east + west + south + north - 4.0 * data
    dil = np.sqrt(np.maximum(np.maximum(east - data, west - data), 0.0) ** 2
                  + np.maximum(np.maximum(south - data, north - data), 0.0) ** 2)
    ero = np.sqrt(np.maximum(np.maximum(data - east, data - west), 0.0) ** 2
                  + np.maximum(np.maximum(data - south, data - north), 0.0) ** 2)
    norm = np.where(s < 0.0, dil, ero)

    new = data + tau * (g * lap - (1.0 - g) * s * norm)
    if mask_data is not None:
        new = np.where(mask_data, new, u0_data)

    lo, hi = float(data.min()), float(data.max())
    span = hi - lo if hi > lo else max(abs(hi), 1.0)
    tol = 1e-6 * span
    if float(new.max()) > hi + tol or float(new.min()) < lo - tol:
        raise NumericalInstabilityError(
            f"planar step left range [{lo:.6g}, {hi:.6g}] (tau={tau:.6g})")
    return Image(new)


def run_rds2d(f, params, T, mask=None):
    """Runs the planar evolution for total time T.

    Args:
        f: Image.
        params: Rds2dParams.
        T: total evolution time, >= 0.
        mask: optional Mask (2D); True pixels evolve, False stay clamped.

    Returns:
        Image.
    """
    if T < 0:
        raise ValueError(f"evolution time must be non-negative, got {T}")
    u = Image(f.data.copy())
    u0_data = f.data.copy()
    mask_data = None
    if mask is not None:
        if mask.data.ndim != 2 or mask.data.shape != f.data.shape:
            raise ValueError(f"mask shape {mask.data.shape} does not match image {f.data.shape}")
        mask_data = mask.data
    tau_max = params.tau if params.tau is not None else stable_timestep_2d()
    t = 0.0
    while t < T - 1e-12:
        dt = min(tau_max, T - t)
        step_params = params if dt == params.tau else Rds2dParams(
            lam=params.lam, sigma=params.sigma, rho=params.rho,
            nu=params.nu, eps=params.eps, tau=dt)
        u = rds2d_step(u, step_params, mask_data=mask_data, u0_data=u0_data)
        t += dt
    return u
