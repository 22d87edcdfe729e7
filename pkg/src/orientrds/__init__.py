"""Regularised diffusion-shock filtering on position-orientation space."""

import os

# ORIENT_RDS_THREADS caps the BLAS/OpenMP worker count. The knobs below are
# read at numpy import time, so this must run before any submodule import.
_threads = os.environ.get("ORIENT_RDS_THREADS", "")
if _threads.isdigit() and int(_threads) > 0:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                 "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)
del _threads

from .baseline2d import Rds2dParams, run_rds2d, stable_timestep_2d, structure_tensor
from .core import (
    DiagonalMetric,
    FrameField,
    Image,
    Mask,
    NumericalInstabilityError,
    RdsParams,
    Volume,
    reflect_spatial,
    trilinear_sample,
    wrap_orientation,
)
from .diffops import (
    derivative_first,
    derivative_second,
    gaussian_regularize,
    gradient_norm_central,
    gradient_norm_upwind,
    invariant_frame,
    laplacian,
    perpendicular_laplacian,
)
from .gauge import fit_gauge_frame, hessian_field, implied_curvature
from .layer import LayerParams, gated_rds_apply, phi_dif, phi_dil, phi_ero
from .lift import WaveletStack, build_cake_wavelets, lift, project
from .metrics import (
    ConfusionCounts,
    binarize,
    correlated_noise,
    dice,
    dice_loss,
    precision,
    psnr,
)
from .rds import (
    charbonnier,
    diffusion_timestep,
    initial_state,
    morphology_timestep,
    rds_step,
    run_rds,
    shock_sigmoid,
    stable_timestep,
)

__all__ = [
    "ConfusionCounts",
    "DiagonalMetric",
    "FrameField",
    "Image",
    "LayerParams",
    "Mask",
    "NumericalInstabilityError",
    "Rds2dParams",
    "RdsParams",
    "Volume",
    "WaveletStack",
    "binarize",
    "build_cake_wavelets",
    "charbonnier",
    "correlated_noise",
    "derivative_first",
    "derivative_second",
    "dice",
    "dice_loss",
    "diffusion_timestep",
    "fit_gauge_frame",
    "gated_rds_apply",
    "gaussian_regularize",
    "gradient_norm_central",
    "gradient_norm_upwind",
    "hessian_field",
    "implied_curvature",
    "initial_state",
    "invariant_frame",
    "laplacian",
    "lift",
    "morphology_timestep",
    "perpendicular_laplacian",
    "phi_dif",
    "phi_dil",
    "phi_ero",
    "precision",
    "project",
    "psnr",
    "rds_step",
    "reflect_spatial",
    "run_rds",
    "run_rds2d",
    "shock_sigmoid",
    "stable_timestep",
    "stable_timestep_2d",
    "structure_tensor",
    "trilinear_sample",
    "wrap_orientation",
]
