"""
Orientation lifting of planar images and projection back.

Images are lifted by cross-correlating with a stack of rotated, conjugated
cake wavelets. The wavelets are built in the Fourier domain: orientation k
takes the angular wedge given by a degree-n B-spline in
(angle - theta_k - pi/2) / dtheta, so the wedges form a partition of unity
over orientations, times a radial low-pass window that rolls off near the
inflection point. The low-frequency block is split evenly over all
orientations, so a constant image lifts to the constant divided by K per
slice and summing the slices inverts the transform on the pass band.
"""

import os
from dataclasses import dataclass

import numpy as np
from scipy import fft as spfft
from scipy.special import factorial

from .core import Image, Volume


def _workers():
    n = os.environ.get("ORIENT_RDS_THREADS", "")
    return int(n) if n.strip() else None


def mod_offset(x, period, offset):
    """Reduces x modulo period into [offset, offset + period)."""
    return x - (x - offset) // period * period


def b_spline(n, x):
    """Centered cardinal B-spline of degree n, evaluated elementwise.

    Integer shifts of these form a partition of unity, which keeps the sum
    of the angular wedges identically one.
    """
    if n < 0 or n != int(n):
        raise ValueError(f"spline degree must be a non-negative integer, got {n}")
    if n == 0:
        return 1.0 * (-0.5 <= x) * (x < 0.5)
    lower = b_spline(n - 1, x + 0.5)
    upper = b_spline(n - 1, x - 0.5)
    return ((x + (n + 1) / 2) * lower + ((n + 1) / 2 - x) * upper) / n


def radial_window(size, order, inflection):
    """Smooth radial low-pass on the centered Fourier grid.

    A truncated exponential series in the squared radius: close to 1 up to
    the inflection point (as a fraction of the Nyquist radius), then rolls
    off smoothly.

    Args:
        size: grid size (pixels per side).
        order: truncation order of the series.
        inflection: roll-off location in (0, 1].
    """
    c = size // 2
    u = np.arange(size) - c
    r = 2.0 * np.hypot(u[None, :], u[:, None]) / size
    rho = np.finfo(np.float64).eps + r / np.sqrt(2 * inflection**2 / (1 + 2 * order))
    damp = np.exp(-(rho**2))
    s = np.zeros_like(rho)
    for m in range(order + 1):
        s += damp * rho ** (2 * m) / factorial(m)
    return s


@dataclass
class WaveletStack:
    """Stack of complex cake-wavelet kernels, one per orientation.

    kernels has shape (K, size, size) with the kernel center at
    [size // 2, size // 2]; slice k selects structures along
    theta_k = 2 pi k / K.
    """

    kernels: np.ndarray
    inflection: float
    angular_order: int
    radial_order: int

    @property
    def num_orientations(self):
        return self.kernels.shape[0]

    @property
    def size(self):
        return self.kernels.shape[1]


def build_cake_wavelets(num_orientations, size, angular_order=3, inflection=0.8,
                        radial_order=8, taper_sigma=None):
    """Builds the cake-wavelet stack for a given orientation count.

    Args:
        num_orientations: K, number of orientations over the full circle.
        size: spatial support in pixels, must be odd.
        angular_order: degree of the B-spline angular profile.
        inflection: radial roll-off location as a fraction of Nyquist.
        radial_order: truncation order of the radial window series.
        taper_sigma: standard deviation of the spatial Gaussian taper that
            suppresses the kernel tails; defaults to (size - 1) / 4.

    Returns:
        WaveletStack.
    """
    if size % 2 == 0:
        raise ValueError(f"kernel size must be odd, got {size}")
    if size < 9:
        raise ValueError(f"kernel size must be at least 9, got {size}")
    if num_orientations < 1:
        raise ValueError(f"need at least one orientation, got {num_orientations}")
    if taper_sigma is None:
        taper_sigma = (size - 1) / 4

    K = num_orientations
    dtheta = 2.0 * np.pi / K
    c = size // 2
    u = np.arange(size) - c
    phi = np.arctan2(u[:, None], u[None, :])
    window = radial_window(size, radial_order, inflection)

    wedges = np.empty((K, size, size))
    for k in range(K):
        x = mod_offset(phi - k * dtheta - np.pi / 2, 2.0 * np.pi, -np.pi) / dtheta
        wedges[k] = window * b_spline(angular_order, x)
    # All orientations share the low-frequency block evenly; a constant
    # image then lifts to the constant / K per slice.
    wedges[:, c - 2:c + 3, c - 2:c + 3] = 1.0 / K

    taper = np.exp(-(u[:, None] ** 2 + u[None, :] ** 2) / (2.0 * taper_sigma**2))
    kernels = np.empty((K, size, size), dtype=np.complex128)
    for k in range(K):
        spectrum = np.fft.ifftshift(wedges[k])
        kernels[k] = np.fft.fftshift(np.conj(np.fft.ifft2(spectrum))) * taper
    return WaveletStack(kernels=kernels, inflection=inflection,
                        angular_order=angular_order, radial_order=radial_order)


def lift(image, wavelets):
    """Orientation score of an image: cross-correlation per wavelet slice.

    Slice k holds the real part of
    sum_u conj(psi_k(u)) f(x + u), computed by zero-padded FFT correlation,
    so responses are exact linear correlations with zero extension.

    Args:
        image: Image, strictly larger than the kernel support.
        wavelets: WaveletStack.

    Returns:
        Volume of shape (K, H, W).
    """
    f = image.data
    H, W = f.shape
    size = wavelets.size
    if H < size or W < size:
        raise ValueError(
            f"image {H}x{W} is smaller than the kernel support {size}x{size}")
    c = size // 2
    py = spfft.next_fast_len(H + size - 1)
    px = spfft.next_fast_len(W + size - 1)
    fpad = np.zeros((py, px))
    fpad[:H, :W] = f
    fhat = spfft.fft2(fpad, workers=_workers())

    out = np.empty((wavelets.num_orientations, H, W))
    for k, kernel in enumerate(wavelets.kernels):
        kpad = np.zeros((py, px), dtype=np.complex128)
        kpad[:size, :size] = kernel
        kpad = np.roll(kpad, (-c, -c), axis=(0, 1))
        khat = spfft.fft2(kpad, workers=_workers())
        out[k] = spfft.ifft2(np.conj(khat) * fhat, workers=_workers())[:H, :W].real
    return Volume(out)


def project(volume):
    """Projects a lifted volume back to an image by summing orientations.

    With the even low-frequency split this inverts lift on the pass band;
    a constant volume c projects to c * K.
    """
    return Image(np.sum(volume.data, axis=0))
