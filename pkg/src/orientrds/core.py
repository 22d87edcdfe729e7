"""
Domain types and grid conventions shared by every module.

Images are real arrays of shape (H, W) indexed [y, x]. Orientation-lifted
volumes are real arrays of shape (K, H, W) indexed [k, y, x], where slice k
holds the response at orientation theta_k = 2 pi k / K. Grid spacing is one
pixel spatially and dtheta = 2 pi / K angularly. Memory layout is C order,
so x is the fastest axis, then y, then theta, matching the on-disk format.

Boundary conventions, used consistently by sampling, stencils and Gaussian
regularization: spatial axes reflect with half-sample symmetry
(v[-1] = v[0], v[n] = v[n-1]), the orientation axis is periodic.
"""

from dataclasses import dataclass, field

import numpy as np


class NumericalInstabilityError(RuntimeError):
    """Raised when an evolution exceeds its initial range bound."""


def wrap_orientation(k, n):
    """Wraps orientation indices periodically onto {0, ..., n-1}.

    Args:
        k: integer index or array of indices, may be negative or >= n.
        n: number of orientations.
    """
    return k % n


def reflect_spatial(i, n):
    """Reflects spatial indices onto {0, ..., n-1} with half-sample symmetry.

    The extension satisfies v[-1-m] = v[m] and v[n+m] = v[n-1-m], so
    reflect_spatial(-1, 10) == 0 and reflect_spatial(10, 10) == 9. Matches
    scipy.ndimage mode="reflect" and np.pad mode="symmetric".

    Args:
        i: integer index or array of indices.
        n: axis length, must be positive.
    """
    if n < 1:
        raise ValueError(f"axis length must be positive, got {n}")
    m = np.asarray(i) % (2 * n)
    out = np.where(m < n, m, 2 * n - 1 - m)
    if np.isscalar(i) or np.ndim(i) == 0:
        return int(out)
    return out


def sample_volume(data, x, y, k):
    """Trilinear interpolation of a (K, H, W) array at fractional coordinates.

    Spatial coordinates reflect at the boundary, the orientation coordinate
    wraps. Each output value is a convex combination of eight grid values,
    so results stay inside [data.min(), data.max()].

    Args:
        data: array of shape (K, H, W).
        x, y, k: coordinates in index units, broadcastable to a common shape.

    Returns:
        Array of the broadcast shape (or scalar for scalar input).
    """
    K, H, W = data.shape
    x, y, k = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float), np.asarray(k, float))

    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    k0 = np.floor(k).astype(np.int64)
    fx = x - x0
    fy = y - y0
    fk = k - k0

    xa = reflect_spatial(x0, W)
    xb = reflect_spatial(x0 + 1, W)
    ya = reflect_spatial(y0, H)
    yb = reflect_spatial(y0 + 1, H)
    ka = wrap_orientation(k0, K)
    kb = wrap_orientation(k0 + 1, K)

    out = (
        (1 - fk) * ((1 - fy) * ((1 - fx) * data[ka, ya, xa] + fx * data[ka, ya, xb])
                    + fy * ((1 - fx) * data[ka, yb, xa] + fx * data[ka, yb, xb]))
        + fk * ((1 - fy) * ((1 - fx) * data[kb, ya, xa] + fx * data[kb, ya, xb])
                + fy * ((1 - fx) * data[kb, yb, xa] + fx * data[kb, yb, xb]))
    )
    return out


def sample_image(data, x, y):
    """Bilinear interpolation of an (H, W) array with reflecting boundaries.

    Args:
        data: array of shape (H, W).
        x, y: coordinates in index units, broadcastable to a common shape.
    """
    H, W = data.shape
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx = x - x0
    fy = y - y0
    xa = reflect_spatial(x0, W)
    xb = reflect_spatial(x0 + 1, W)
    ya = reflect_spatial(y0, H)
    yb = reflect_spatial(y0 + 1, H)
    return ((1 - fy) * ((1 - fx) * data[ya, xa] + fx * data[ya, xb])
            + fy * ((1 - fx) * data[yb, xa] + fx * data[yb, xb]))


@dataclass
class Image:
    """Planar grayscale image, data shape (H, W), indexed [y, x]."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ValueError(f"image data must be 2D, got shape {self.data.shape}")
        if self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ValueError(f"image dimensions must be positive, got {self.data.shape}")

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    def validate(self):
        if not np.all(np.isfinite(self.data)):
            raise ValueError("image contains non-finite values")
        return self


@dataclass
class Volume:
    """Orientation-lifted scalar field, data shape (K, H, W), indexed [k, y, x]."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3:
            raise ValueError(f"volume data must be 3D, got shape {self.data.shape}")
        if min(self.data.shape) < 1:
            raise ValueError(f"volume dimensions must be positive, got {self.data.shape}")

    @property
    def num_orientations(self):
        return self.data.shape[0]

    @property
    def height(self):
        return self.data.shape[1]

    @property
    def width(self):
        return self.data.shape[2]

    @property
    def dtheta(self):
        return 2.0 * np.pi / self.data.shape[0]

    def orientations(self):
        """Returns the orientation grid theta_k = 2 pi k / K as an array."""
        K = self.num_orientations
        return np.arange(K) * (2.0 * np.pi / K)

    def validate(self):
        if not np.all(np.isfinite(self.data)):
            raise ValueError("volume contains non-finite values")
        return self


@dataclass
class Mask:
    """Boolean evolution mask: True marks voxels the PDE may update.

    Either planar (H, W), broadcast over all orientations, or a full
    (K, H, W) field.
    """

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data).astype(bool)
        if self.data.ndim not in (2, 3):
            raise ValueError(f"mask must be 2D or 3D, got shape {self.data.shape}")

    def broadcast_to(self, volume):
        """Returns a (K, H, W) boolean array aligned with the given Volume."""
        K, H, W = volume.data.shape
        if self.data.ndim == 2:
            if self.data.shape != (H, W):
                raise ValueError(f"mask shape {self.data.shape} does not match image grid {(H, W)}")
            return np.broadcast_to(self.data, (K, H, W))
        if self.data.shape != (K, H, W):
            raise ValueError(f"mask shape {self.data.shape} does not match volume grid {(K, H, W)}")
        return self.data


@dataclass(frozen=True)
class DiagonalMetric:
    """Diagonal metric on the frame directions, coefficients (g11, g22, g33).

    g11 weighs the direction along the orientation, g22 the perpendicular
    spatial direction, g33 the angular direction. The dual coefficients
    (1/g11, 1/g22, 1/g33) weigh gradient components and Laplacian terms.
    """

    g11: float
    g22: float
    g33: float

    def __post_init__(self):
        for name in ("g11", "g22", "g33"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

    def dual(self):
        return (1.0 / self.g11, 1.0 / self.g22, 1.0 / self.g33)

    @classmethod
    def from_anisotropy(cls, xi, zeta=1.0):
        """Builds the standard parameterization g11 = xi^2, g22 = (xi/zeta)^2, g33 = 1.

        xi balances spatial against angular motion (stimulus length scale);
        zeta < 1 penalizes sideways spatial motion relative to motion along
        the orientation.
        """
        if not xi > 0 or not zeta > 0:
            raise ValueError(
                f"anisotropy scales must be positive, got xi={xi}, zeta={zeta}")
        return cls(xi * xi, (xi / zeta) ** 2, 1.0)


@dataclass
class FrameField:
    """Per-voxel stencil frame: three directions stored as offset plus step.

    For direction i, offsets[..., i, :] = (ox, oy, ok) is a unit-length vector
    in index units (pixels spatially, theta-steps angularly) and steps[..., i]
    is the physical arm length h_i, so the represented first-order operator is
    v -> (v(p + o_i) - v(p - o_i)) / (2 h_i). Shapes broadcast to
    (K, H, W, 3, 3) and (K, H, W, 3); the orientation-aligned invariant frame
    stores (K, 1, 1, 3, 3) and (1, 1, 1, 3).

    The triple scaled by (1/xi, 1/xi, 1) is orthonormal for the metric
    diag(xi^2, xi^2, 1) on physical components; orthonormality_residual
    measures the worst deviation.
    """

    offsets: np.ndarray
    steps: np.ndarray
    xi: float
    dtheta: float
    fallback_fraction: float = 0.0

    def physical_vectors(self):
        """Returns the raw frame vectors (c_x, c_y, c_theta), physical units."""
        phys = self.offsets * np.array([1.0, 1.0, self.dtheta])
        return phys / self.steps[..., None]

    def orthonormality_residual(self):
        """Max deviation of the xi-rescaled triple from orthonormality.

        Rescales direction i by s_i = (xi, xi, 1), applies M = diag(xi, xi, 1)
        to physical components and measures max |B_i . B_j - delta_ij|.
        """
        b = self.physical_vectors() / np.array([self.xi, self.xi, 1.0])[:, None]
        mb = b * np.array([self.xi, self.xi, 1.0])
        gram = np.einsum("...ic,...jc->...ij", mb, mb)
        return float(np.max(np.abs(gram - np.eye(3))))


@dataclass
class RdsParams:
    """Parameter bundle for the lifted diffusion-shock evolution.

    Args (as fields):
        metric_d: metric weighing the diffusion Laplacian.
        metric_m: metric weighing the morphological (shock) gradient norm.
        metric_g: metric inside the diffusion/shock switch gradient.
        metric_s: metric inside the dilation/erosion switch Laplacian.
        lam: Charbonnier contrast parameter of the diffusion/shock switch.
        sigma: spatial scale (pixels) of the smoothing inside the shock switch.
        rho: spatial scale of the outer smoothing of the shock switch.
        nu: spatial scale of the smoothing inside the diffusion/shock switch.
        shock_eps: sharpness of the sign-like shock sigmoid.
        use_gauge: align stencils to data-adapted gauge frames instead of the
            orientation-aligned invariant frame.
        xi: spatial-vs-angular balance used by metrics and gauge fitting.
        guidance_refresh: recompute switch fields every this many steps.
        frame_refresh: refit gauge frames every this many steps.
        gauge_sigma: spatial scale regularizing the second-order structure
            before gauge fitting.
        degeneracy_tol: relative singular-value gap below which gauge fitting
            falls back to the invariant frame.
    """

    metric_d: DiagonalMetric = field(default_factory=lambda: DiagonalMetric.from_anisotropy(0.1))
    metric_m: DiagonalMetric = field(default_factory=lambda: DiagonalMetric.from_anisotropy(0.1))
    metric_g: DiagonalMetric = field(default_factory=lambda: DiagonalMetric.from_anisotropy(0.1))
    metric_s: DiagonalMetric = field(default_factory=lambda: DiagonalMetric.from_anisotropy(0.1))
    lam: float = 0.02
    sigma: float = 1.0
    rho: float = 1.0
    nu: float = 1.0
    shock_eps: float = 1e-2
    use_gauge: bool = False
    xi: float = 0.1
    guidance_refresh: int = 1
    frame_refresh: int = 5
    gauge_sigma: float = 1.0
    degeneracy_tol: float = 0.05

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        for name in ("sigma", "rho", "nu"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.shock_eps <= 0:
            raise ValueError(f"shock_eps must be positive, got {self.shock_eps}")
        if self.guidance_refresh < 1 or self.frame_refresh < 1:
            raise ValueError("refresh cadences must be >= 1")

    @classmethod
    def with_anisotropy(cls, xi=0.1, zeta_d=1.0, zeta_m=1.0, **kwargs):
        """Builds all four metrics from (xi, zeta) in the standard way.

        The switch metrics are kept isotropic (zeta = 1); only the flow
        metrics take the tuned anisotropies zeta_d and zeta_m.
        """
        return cls(
            metric_d=DiagonalMetric.from_anisotropy(xi, zeta_d),
            metric_m=DiagonalMetric.from_anisotropy(xi, zeta_m),
            metric_g=DiagonalMetric.from_anisotropy(xi, 1.0),
            metric_s=DiagonalMetric.from_anisotropy(xi, 1.0),
            xi=xi,
            **kwargs,
        )


def trilinear_sample(v, x, y, k):
    """Samples a Volume at fractional (x, y, k); see sample_volume.

    Args:
        v: Volume.
        x, y, k: scalar or array coordinates in index units.
    """
    return sample_volume(v.data, x, y, k)
