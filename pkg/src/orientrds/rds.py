"""
Regularised diffusion-shock evolution on orientation-lifted volumes.

One explicit step evolves
    U += tau * ( g * Lap_D U  -  (1 - g) * S * ||grad_M U|| )
where g is a Charbonnier switch of the regularized gradient norm (diffusion
on homogeneous regions, shock near edges) and S is a smoothed sign-like
sigmoid of the perpendicular Laplacian (dilation on the concave side,
erosion on the convex side). With tau below stable_timestep every update is
a convex combination of current values, so the evolution never leaves the
initial range; the step aborts if it does.
"""

from dataclasses import dataclass, replace

import numpy as np

from .core import Image, NumericalInstabilityError, Volume
from .diffops import (
    _gaussian_data,
    frame_samples,
    gradient_norm_central,
    gradient_norm_upwind,
    invariant_frame,
    laplacian,
    perpendicular_laplacian,
)
from .gauge import fit_gauge_frame
from .lift import build_cake_wavelets, lift, project


def charbonnier(s_squared, lam):
    """Diffusion-shock switch g(s^2) = (1 + s^2 / lambda^2)^(-1/2).

    Close to 1 where the argument is small against lambda^2 (diffusion),
    decaying to 0 at strong edges (shock).
    """
    return 1.0 / np.sqrt(1.0 + s_squared / (lam * lam))


def shock_sigmoid(x, eps=1e-2):
    """Odd sign-like switch S(x) = x / sqrt(x^2 + eps^2), in (-1, 1)."""
    return x / np.sqrt(x * x + eps * eps)


def diffusion_timestep(metric, dxy, dtheta):
    """Diffusion stability bound: each update stays a convex combination.

    tau_D = 1 / (2 ((g^11 + g^22) / dxy^2 + g^33 / dtheta^2)) with g^ii
    the dual metric components; unit duals on a unit grid give 1/6.
    """
    d11, d22, d33 = metric.dual()
    return float(1.0 / (2.0 * ((d11 + d22) / dxy**2 + d33 / dtheta**2)))


def morphology_timestep(metric_spatial, metric_angular, dxy, dtheta):
    """Upwind transport bound: shock moves at most one cell per step.

    tau_S = ((g_M^11 + g_M^22) / dxy^2 + g_S^33 / dtheta^2)^(-1/2), mixing
    the morphological metric spatially with the shock-switch metric
    angularly; unit duals on a unit grid give 1/sqrt(3).
    """
    m11, m22, _ = metric_spatial.dual()
    s33 = metric_angular.dual()[2]
    return float(1.0 / np.sqrt((m11 + m22) / dxy**2 + s33 / dtheta**2))


def stable_timestep(params, dxy, dtheta):
    """Largest provably stable explicit timestep for the combined flow.

    Args:
        params: RdsParams supplying the metrics.
        dxy: spatial grid spacing (pixels are 1.0).
        dtheta: angular grid spacing.

    Returns:
        min(tau_D, tau_S) of the two bounds above.
    """
    return min(diffusion_timestep(params.metric_d, dxy, dtheta),
               morphology_timestep(params.metric_m, params.metric_s, dxy, dtheta))


def compute_guidance(u, frame, params):
    """Switch fields steering the step: (g, S).

    g = charbonnier(||grad_{G_g} (G_nu * U)||^2, lambda) selects diffusion
    versus shock. S = clip(G_rho * sigmoid(Lap_perp_{G_s} (G_sigma * U)), -1, 1)
    selects dilation (S < 0) versus erosion (S > 0).

    Returns:
        Pair of (K, H, W) arrays.
    """
    u_nu = Volume(_gaussian_data(u.data, params.nu))
    grad = gradient_norm_central(u_nu, frame, params.metric_g).data
    g = charbonnier(grad * grad, params.lam)

    u_sigma = Volume(_gaussian_data(u.data, params.sigma))
    lap_perp = perpendicular_laplacian(u_sigma, frame, params.metric_s).data
    s = shock_sigmoid(lap_perp, params.shock_eps)
    s = np.clip(_gaussian_data(s, params.rho), -1.0, 1.0)
    return g, s


@dataclass
class RdsState:
    """Evolution state threaded through rds_step.

    u is the current volume, u0 the initial data (range reference and
    clamping target for masked voxels), frame the stencil frame, g_switch
    and s_switch the guidance fields, tau the timestep of the next step.
    mask_data is None (evolve everywhere) or a (K, H, W) boolean array
    whose False voxels are reset to u0 after every step.
    """

    u: Volume
    u0: Volume
    frame: object
    g_switch: np.ndarray
    s_switch: np.ndarray
    step_count: int
    tau: float
    mask_data: np.ndarray = None


def initial_state(v, params, tau=None, mask=None, frame=None):
    """Builds the starting RdsState for a lifted volume.

    Args:
        v: lifted Volume (becomes both u and u0).
        params: RdsParams.
        tau: timestep; defaults to stable_timestep on v's grid.
        mask: optional Mask for inpainting.
        frame: optional FrameField; defaults to the invariant frame
            (gauge frames are fitted by run_rds on its refresh cadence).
    """
    if frame is None:
        frame = invariant_frame(v, xi=params.xi)
    if tau is None:
        tau = stable_timestep(params, 1.0, v.dtheta)
    g, s = compute_guidance(v, frame, params)
    mask_data = mask.broadcast_to(v) if mask is not None else None
    return RdsState(u=v, u0=Volume(v.data.copy()), frame=frame, g_switch=g,
                    s_switch=s, step_count=0, tau=tau, mask_data=mask_data)


def rds_step(state, params):
    """One explicit diffusion-shock step.

    Recomputes the guidance fields on the guidance_refresh cadence, applies
    the update, clamps masked voxels to u0 and verifies the max-min
    principle against the initial range.

    Returns:
        New RdsState with step_count advanced.

    Raises:
        NumericalInstabilityError: the update left the initial range by
            more than 1e-6 of the dynamic range (timestep too large).
    """
    u, frame = state.u, state.frame
    if state.step_count == 0 or state.step_count % params.guidance_refresh == 0:
        g, s = compute_guidance(u, frame, params)
    else:
        g, s = state.g_switch, state.s_switch

    samples = frame_samples(u, frame)
    lap = laplacian(u, frame, params.metric_d, samples=samples).data
    dil = gradient_norm_upwind(u, frame, params.metric_m, "dilation", samples=samples).data
    ero = gradient_norm_upwind(u, frame, params.metric_m, "erosion", samples=samples).data
    norm = np.where(s < 0.0, dil, ero)
    new = u.data + state.tau * (g * lap - (1.0 - g) * s * norm)
    if state.mask_data is not None:
        new = np.where(state.mask_data, new, state.u0.data)

    lo, hi = float(state.u0.data.min()), float(state.u0.data.max())
    span = hi - lo if hi > lo else max(abs(hi), 1.0)
    tol = 1e-6 * span
    new_lo, new_hi = float(new.min()), float(new.max())
    if new_hi > hi + tol or new_lo < lo - tol:
        raise NumericalInstabilityError(
            f"range [{new_lo:.6g}, {new_hi:.6g}] left initial [{lo:.6g}, {hi:.6g}] "
            f"at step {state.step_count} (tau={state.tau:.6g})")

    return replace(state, u=Volume(new), g_switch=g, s_switch=s,
                   step_count=state.step_count + 1)


def run_rds(f, params, T, mask=None, num_orientations=32, wavelets=None,
            tau=None, observer=None):
    """Runs the evolution for total time T and projects back.

    Args:
        f: Image (lifted internally) or an already lifted Volume.
        params: RdsParams.
        T: total evolution time, >= 0; the last step is shortened to land
            on T exactly.
        mask: optional Mask; True voxels evolve, False voxels are clamped
            to the input (inpainting). None evolves everything (denoising).
        num_orientations: K used when lifting an Image.
        wavelets: optional prebuilt WaveletStack for the lift.
        tau: timestep override; defaults to stable_timestep. Values above
            the stable bound may trigger NumericalInstabilityError.
        observer: optional callable (t, Volume) invoked after every step.

    Returns:
        (Volume, Image): final lifted state and its projection.
    """
    if T < 0:
        raise ValueError(f"evolution time must be non-negative, got {T}")
    if isinstance(f, Image):
        if wavelets is None:
            wavelets = build_cake_wavelets(num_orientations, _default_kernel_size(f))
        v = lift(f.validate(), wavelets)
    else:
        v = f.validate()

    state = initial_state(v, params, tau=tau, mask=mask)
    tau_max = state.tau
    t = 0.0
    while t < T - 1e-12:
        if params.use_gauge and state.step_count % params.frame_refresh == 0:
            state = replace(state, frame=fit_gauge_frame(
                state.u, params.xi, reg_sigma=params.gauge_sigma,
                degeneracy_tol=params.degeneracy_tol))
        state = replace(state, tau=min(tau_max, T - t))
        new_state = rds_step(state, params)
        t += state.tau
        state = new_state
        if observer is not None:
            observer(t, state.u)
    return state.u, project(state.u)


def _default_kernel_size(image):
    # Odd support around half the short side, clamped to sane sizes.
    n = min(image.height, image.width)
    size = max(9, min(31, n // 2))
    return size if size % 2 == 1 else size - 1
