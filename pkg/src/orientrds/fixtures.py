"""
Synthetic test images: crossing lines with an occluding hole, rings,
ridges, spirals, and a correlated-noise field.

All fixtures are deterministic analytic fields on the pixel grid
(x = column, y = row, angles measured from the x-axis toward increasing
y), with bright structures of Gaussian cross-section on a dark
background, valued in [0, 1].
"""

from dataclasses import dataclass

import numpy as np

from .core import Image, Mask, sample_image
from .metrics import correlated_noise


def _grid(size):
    c = (size - 1) / 2.0
    y, x = np.mgrid[0:size, 0:size].astype(float)
    return x - c, y - c, c


def _line_profile(dx, dy, angle, width):
    # Perpendicular distance to the line through the origin at `angle`.
    d = -np.sin(angle) * dx + np.cos(angle) * dy
    return np.exp(-d * d / (2.0 * width * width))


@dataclass(frozen=True)
class CrossingFixture:
    """Two straight lines through the center, occluded by a square hole.

    clean is the uncorrupted image, degraded has the hole zeroed, and
    mask is True exactly on the hole (the pixels an inpainting run may
    evolve). hole_half is the half-width of the hole in pixels, measured
    from the image center.
    """

    clean: Image
    degraded: Image
    mask: Mask
    angles: tuple
    width: float
    hole_half: float
    center: float


def crossing_fixture(size=64, angles=(np.pi / 6.0, -np.pi / 6.0),
                     width=3.0, hole_half=8.0):
    """Two lines crossing at the image center with an occluding hole.

    The default width keeps each line broad enough that an orientation
    lift at moderate angular resolution (K = 16) concentrates it in a
    narrow band of channels; much thinner lines spread across many
    channels and reconnect noticeably worse.

    Args:
        size: image side length in pixels.
        angles: line angles from the x-axis, radians.
        width: Gaussian cross-section scale in pixels.
        hole_half: half-width of the central square hole.

    Returns:
        CrossingFixture.
    """
    dx, dy, c = _grid(size)
    data = np.zeros((size, size))
    for a in angles:
        data += _line_profile(dx, dy, a, width)
    clean = np.clip(data, 0.0, 1.0)
    hole = (np.abs(dx) <= hole_half) & (np.abs(dy) <= hole_half)
    degraded = np.where(hole, 0.0, clean)
    return CrossingFixture(
        clean=Image(clean),
        degraded=Image(degraded),
        mask=Mask(hole),
        angles=tuple(float(a) for a in angles),
        width=float(width),
        hole_half=float(hole_half),
        center=c,
    )


def line_recovery_score(image, fixture):
    """How well the hole region continues the fixture's lines.

    Samples each line at sub-pixel points inside the hole and in an
    ambient band outside it, and compares the mean intensities. A score
    near 1 means the line runs through the hole at ambient brightness; 0
    means the hole stayed empty. The minimum over the lines is returned,
    so both branches of the crossing must be restored to score high.

    Args:
        image: Image to evaluate (same grid as the fixture).
        fixture: CrossingFixture.

    Returns:
        min over lines of mean(in-hole samples) / mean(ambient samples).
    """
    c = fixture.center
    scores = []
    for a in fixture.angles:
        ca, sa = np.cos(a), np.sin(a)
        t_exit = fixture.hole_half / max(abs(ca), abs(sa))
        t_in = np.linspace(-(t_exit - 2.0), t_exit - 2.0, 17)
        t_out = np.concatenate([np.linspace(t_exit + 3.0, t_exit + 11.0, 9),
                                -np.linspace(t_exit + 3.0, t_exit + 11.0, 9)])
        inner = sample_image(image.data, c + t_in * ca, c + t_in * sa)
        outer = sample_image(image.data, c + t_out * ca, c + t_out * sa)
        scores.append(float(inner.mean()) / max(float(outer.mean()), 1e-12))
    return min(scores)


def circle_fixture(size=64, radius=20.0, width=1.5):
    """Bright ring of the given radius centered in the image."""
    dx, dy, _ = _grid(size)
    d = np.hypot(dx, dy) - radius
    return Image(np.exp(-d * d / (2.0 * width * width)))


def ridge_fixture(size=64, angle=0.0, width=1.5):
    """Single bright line through the center at the given angle."""
    dx, dy, _ = _grid(size)
    return Image(_line_profile(dx, dy, angle, width))


def spiral_fixture(size=96, spacing=7.0, width=1.2, inner=2.0):
    """Two interleaved Archimedean spiral arms, bright on dark.

    The winding-to-winding gap of each arm is 2*spacing (the two arms
    interleave, so neighboring bright curves sit spacing apart), giving a
    dense pattern of curved, locally parallel lines.

    Args:
        size: image side length in pixels.
        spacing: radial gap between neighboring bright curves.
        width: Gaussian cross-section scale.
        inner: radius below which the pattern fades out.

    Returns:
        Image valued in [0, 1].
    """
    dx, dy, _ = _grid(size)
    r = np.hypot(dx, dy)
    phi = np.arctan2(dy, dx)
    b = spacing / np.pi  # radius gain per radian of one arm
    data = np.zeros((size, size))
    for offset in (0.0, np.pi):
        # Signed radial distance to the nearest winding of this arm.
        turns = (r / b - (phi + offset)) / (2.0 * np.pi)
        d = (turns - np.round(turns)) * 2.0 * np.pi * b
        data += np.exp(-d * d / (2.0 * width * width))
    fade = 1.0 - np.exp(-r * r / (2.0 * inner * inner))
    return Image(np.clip(data * fade, 0.0, 1.0))


def noise_fixture(size=96, sigma=1.0, rho=2.0, seed=0):
    """Correlated-noise field on a square grid (see metrics.correlated_noise)."""
    return correlated_noise((size, size), sigma, rho, seed)
