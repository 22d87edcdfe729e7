import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orientrds.core import DiagonalMetric, Volume
from orientrds.diffops import (
    StencilSpec,
    derivative_first,
    derivative_second,
    gaussian_regularize,
    gradient_norm_central,
    gradient_norm_upwind,
    invariant_frame,
    laplacian,
    perpendicular_laplacian,
)

SPATIAL_DUALS = DiagonalMetric(1.0, 1.0, np.inf)  # duals (1, 1, 0)
INNER = (slice(None), slice(2, -2), slice(2, -2))


def coordinate_volume(K=8, size=16, fn=lambda x, y: x):
    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    return Volume(np.broadcast_to(fn(xx, yy), (K, size, size)).copy())


def axis_aligned(K):
    # Orientations whose frame arms land on grid points.
    return [k for k in range(K) if (4 * k) % K == 0]


def test_invariant_frame_directions():
    v = Volume(np.zeros((8, 8, 8)))
    fr = invariant_frame(v)
    vecs = fr.offsets[:, 0, 0]
    np.testing.assert_allclose(vecs[0, 0], [1, 0, 0], atol=1e-15)
    np.testing.assert_allclose(vecs[0, 1], [0, 1, 0], atol=1e-15)
    np.testing.assert_allclose(vecs[0, 2], [0, 0, 1], atol=1e-15)
    np.testing.assert_allclose(vecs[2, 0], [0, 1, 0], atol=1e-15)  # theta=pi/2
    np.testing.assert_allclose(vecs[2, 1], [-1, 0, 0], atol=1e-15)
    assert fr.orthonormality_residual() < 1e-12
    assert fr.steps[0, 0, 0, 2] == pytest.approx(2 * np.pi / 8)


def test_stencil_spec_validation():
    with pytest.raises(ValueError):
        StencilSpec(0, "central-first")
    with pytest.raises(ValueError):
        StencilSpec(1, "sideways")


def test_first_derivative_of_x_is_cos_theta():
    v = coordinate_volume()
    fr = invariant_frame(v)
    d = derivative_first(v, fr, 1)
    theta = v.orientations()
    expected = np.cos(theta)[:, None, None]
    np.testing.assert_allclose(d.data[INNER],
                               np.broadcast_to(expected, d.data.shape)[INNER],
                               atol=1e-12)
    d2 = derivative_first(v, fr, 2)
    expected2 = -np.sin(theta)[:, None, None]
    np.testing.assert_allclose(d2.data[INNER],
                               np.broadcast_to(expected2, d2.data.shape)[INNER],
                               atol=1e-12)


def test_first_derivative_along_orientation_axis():
    K, size = 8, 8
    dtheta = 2 * np.pi / K
    data = np.empty((K, size, size))
    for k in range(K):
        data[k] = k * dtheta
    v = Volume(data)
    d = derivative_first(v, invariant_frame(v), 3)
    np.testing.assert_allclose(d.data[1:-1], 1.0, atol=1e-12)  # pre-wrap rows


def test_derivatives_annihilate_constants():
    v = Volume(np.full((6, 10, 10), 3.7))
    fr = invariant_frame(v)
    for i in (1, 2, 3):
        assert np.all(derivative_first(v, fr, i).data == 0.0)
        assert np.all(derivative_second(v, fr, i).data == 0.0)
    assert np.all(gradient_norm_central(v, fr, SPATIAL_DUALS).data == 0.0)
    for mode in ("dilation", "erosion"):
        assert np.all(gradient_norm_upwind(v, fr, SPATIAL_DUALS, mode).data == 0.0)


def test_second_derivative_of_paraboloid_axis_aligned():
    v = coordinate_volume(fn=lambda x, y: x * x + y * y)
    fr = invariant_frame(v)
    d = derivative_second(v, fr, 1)
    for k in axis_aligned(8):
        np.testing.assert_allclose(d.data[k][2:-2, 2:-2], 2.0, atol=1e-12)


def test_second_derivative_bilinear_bias_off_axis():
    # Diagonal arms sample off-grid; bilinear interpolation of a quadratic
    # adds f(1-f) per axis, so at theta = pi/4 the paraboloid stencil reads
    # 2 + 2*(fx(1-fx) + fy(1-fy)) = 2*sqrt(2) instead of 2. Pinned here so
    # the bias is a documented property of the scheme, not an accident.
    v = coordinate_volume(fn=lambda x, y: x * x + y * y)
    d = derivative_second(v, invariant_frame(v), 1)
    np.testing.assert_allclose(d.data[1][2:-2, 2:-2], 2.0 * np.sqrt(2.0),
                               atol=1e-12)


def test_second_derivative_of_linear_is_zero_all_orientations():
    v = coordinate_volume(fn=lambda x, y: 2.0 * x - 3.0 * y + 1.0)
    fr = invariant_frame(v)
    for i in (1, 2):
        np.testing.assert_allclose(derivative_second(v, fr, i).data[INNER],
                                   0.0, atol=1e-12)


def test_laplacian_of_paraboloid_axis_aligned():
    v = coordinate_volume(fn=lambda x, y: x * x + y * y)
    lap = laplacian(v, invariant_frame(v), SPATIAL_DUALS)
    for k in axis_aligned(8):
        np.testing.assert_allclose(lap.data[k][2:-2, 2:-2], 4.0, atol=1e-12)
    assert np.all(laplacian(Volume(np.full((8, 8, 8), 1.0)),
                            invariant_frame(Volume(np.zeros((8, 8, 8)))),
                            SPATIAL_DUALS).data == 0.0)


def test_perpendicular_laplacian_drops_direction_one():
    v = coordinate_volume(fn=lambda x, y: x * x + y * y)
    perp = perpendicular_laplacian(v, invariant_frame(v), SPATIAL_DUALS)
    for k in axis_aligned(8):
        np.testing.assert_allclose(perp.data[k][2:-2, 2:-2], 2.0, atol=1e-12)


def test_perpendicular_laplacian_vanishes_on_aligned_ridge():
    # Profile varying only along the k=0 frame direction: both
    # perpendicular arms see constant data.
    size = 16
    xx = np.arange(size, dtype=float)
    profile = np.exp(-((xx - 7.5) ** 2) / 8.0)
    v = Volume(np.broadcast_to(profile[None, None, :], (8, size, size)).copy())
    perp = perpendicular_laplacian(v, invariant_frame(v), SPATIAL_DUALS)
    np.testing.assert_allclose(perp.data[0][2:-2, 2:-2], 0.0, atol=1e-12)
    lap = laplacian(v, invariant_frame(v), SPATIAL_DUALS)
    assert np.abs(lap.data[0][2:-2, 2:-2]).max() > 0.01  # A1 term remains


def test_gradient_norms_on_ramp():
    v = coordinate_volume()
    fr = invariant_frame(v)
    central = gradient_norm_central(v, fr, SPATIAL_DUALS)
    np.testing.assert_allclose(central.data[INNER], 1.0, atol=1e-12)
    for mode in ("dilation", "erosion"):
        up = gradient_norm_upwind(v, fr, SPATIAL_DUALS, mode)
        np.testing.assert_allclose(up.data[INNER], 1.0, atol=1e-12)
    with pytest.raises(ValueError):
        gradient_norm_upwind(v, fr, SPATIAL_DUALS, "sideways")


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.5, 3.0))
def test_gradient_norm_scaling_homogeneity(seed, s):
    rng = np.random.default_rng(seed)
    data = rng.uniform(0, 1, (4, 8, 8))
    fr = invariant_frame(Volume(data))
    base = gradient_norm_central(Volume(data), fr, SPATIAL_DUALS)
    scaled = gradient_norm_central(Volume(s * data), fr, SPATIAL_DUALS)
    np.testing.assert_allclose(scaled.data, s * base.data, atol=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_upwind_norm_range_bounds(seed):
    # The bound behind the max-min proof: the dilation norm at p never
    # exceeds (max v - v(p)) times the morphological rate
    # sqrt(sum_i dual_i / h_i^2); erosion mirrors with the minimum.
    rng = np.random.default_rng(seed)
    data = rng.uniform(-1, 1, (6, 9, 9))
    v = Volume(data)
    fr = invariant_frame(v)
    metric = DiagonalMetric(0.01, 0.04, 1.0)
    dual = metric.dual()
    rate = np.sqrt((dual[0] + dual[1]) / 1.0 + dual[2] / v.dtheta**2)
    dil = gradient_norm_upwind(v, fr, metric, "dilation").data
    ero = gradient_norm_upwind(v, fr, metric, "erosion").data
    assert np.all(dil >= 0) and np.all(ero >= 0)
    assert np.all(dil <= (data.max() - data) * rate + 1e-12)
    assert np.all(ero <= (data - data.min()) * rate + 1e-12)


def quarter_turn(data, K):
    out = np.empty_like(data)
    for k in range(K):
        out[k] = np.rot90(data[(k - K // 4) % K], -1)
    return out


def test_laplacian_commutes_with_quarter_rotation():
    rng = np.random.default_rng(11)
    K = 8
    data = rng.uniform(0, 1, (K, 12, 12))
    from scipy import ndimage

    data = ndimage.gaussian_filter(data, (0, 1.0, 1.0), mode="reflect")
    v = Volume(data)
    fr = invariant_frame(v)
    metric = DiagonalMetric.from_anisotropy(0.1, 0.5)
    lap = laplacian(v, fr, metric).data
    rotated = Volume(quarter_turn(data, K))
    lap_rot = laplacian(rotated, fr, metric).data
    np.testing.assert_allclose(lap_rot, quarter_turn(lap, K), atol=1e-10)


def test_gaussian_regularize_identity_and_mass():
    rng = np.random.default_rng(2)
    v = Volume(rng.uniform(0, 1, (6, 20, 20)))
    out = gaussian_regularize(v, 0.0, 0.0)
    assert np.array_equal(out.data, v.data) and out.data is not v.data
    for sig in ((1.5, 0.0), (2.0, 1.0)):
        sm = gaussian_regularize(v, *sig)
        assert abs(sm.data.sum() - v.data.sum()) <= 1e-6 * abs(v.data.sum())
        assert sm.data.std() < v.data.std()


def test_gaussian_regularize_impulse_matches_separable_kernel():
    from scipy import ndimage

    data = np.zeros((5, 21, 21))
    data[2, 10, 10] = 1.0
    out = gaussian_regularize(Volume(data), 1.2, 0.8).data
    ref = ndimage.gaussian_filter1d(data, 1.2, axis=2, mode="reflect")
    ref = ndimage.gaussian_filter1d(ref, 1.2, axis=1, mode="reflect")
    ref = ndimage.gaussian_filter1d(ref, 0.8, axis=0, mode="wrap")
    np.testing.assert_allclose(out, ref, atol=1e-14)


def test_laplacian_richardson_quotient():
    # Quartic field on [-1, 1]^2, axis-aligned orientations (K = 4) so the
    # stencil is the classic central second difference; halving h must
    # divide the error by ~4.
    def field(n):
        h = 2.0 / (n - 1)
        yy, xx = np.mgrid[0:n, 0:n] * h - 1.0
        f = xx**4 + yy**4 + (xx * yy) ** 2
        true = 14.0 * (xx**2 + yy**2)
        return Volume(np.broadcast_to(f, (4, n, n)).copy()), true, h

    errs = []
    for n in (17, 33):
        v, true, h = field(n)
        lap = laplacian(v, invariant_frame(v), SPATIAL_DUALS).data[0] / h**2
        m = 2 if n == 17 else 4  # same physical margin at both resolutions
        errs.append(np.abs(lap - true)[m:-m, m:-m].max())
    quotient = errs[0] / errs[1]
    assert 3.5 <= quotient <= 4.5, f"Richardson quotient {quotient}"
