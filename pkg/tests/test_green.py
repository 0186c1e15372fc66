import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smallinc import fdiff
from smallinc.errors import KernelSingularityError
from smallinc.green import (
    apply_curl_green,
    apply_green,
    curl_dyadic_green,
    dyadic_green,
    grad_scalar_green,
    scalar_green,
)

coords = st.lists(st.floats(-5, 5), min_size=3, max_size=3)


def random_pairs(k, n=20, seed=0):
    """Pairs with separation in [0.5, 2] wavelengths."""
    rng = np.random.default_rng(seed)
    lam = 2 * np.pi / k
    y = rng.uniform(-1, 1, size=(n, 3))
    d = rng.normal(size=(n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return y + rng.uniform(0.5 * lam, 2 * lam, size=(n, 1)) * d, y


def curlcurl_residual(k, x, y):
    """Relative ||curl curl G - k^2 G|| per pair, 4th-order differences at h = 1e-3/k."""
    h = 1e-3 / k
    out = []
    for xi, yi in zip(x, y):
        G = lambda p: dyadic_green(p, yi, k)
        cc = fdiff.curl(lambda p: fdiff.curl(G, p, h), xi[None], h)[0]
        G0 = dyadic_green(xi, yi, k)
        out.append(np.linalg.norm(cc - k ** 2 * G0) / (k ** 2 * np.linalg.norm(G0)))
    return np.array(out)


def test_static_limit_values():
    assert scalar_green([1, 0, 0], [0, 0, 0], 0.0) == pytest.approx(1 / (4 * np.pi))
    r = 0.7
    assert scalar_green([0, r, 0], [0, 0, 0], 1e-9) == pytest.approx(1 / (4 * np.pi * r), rel=1e-9)


def test_helmholtz_laplacian():
    rng = np.random.default_rng(3)
    k = 1.7
    for _ in range(5):
        x, y = rng.normal(size=3), rng.normal(size=3)
        r = np.linalg.norm(x - y)
        lap = fdiff.laplacian(lambda p: scalar_green(p, y, k), x[None], 1e-4 * r)[0]
        g = scalar_green(x, y, k)
        assert abs(lap + k ** 2 * g) <= 1e-4 * abs(g)


def test_gradient_matches_differences():
    x, y, k = np.array([0.3, -1.2, 0.8]), np.array([0.1, 0.2, -0.4]), 2.1
    fd = fdiff.jacobian(lambda p: scalar_green(p, y, k), x[None], 1e-4)[0]
    np.testing.assert_allclose(grad_scalar_green(x, y, k), fd, rtol=1e-8)


@pytest.mark.parametrize("fn", [scalar_green, dyadic_green, curl_dyadic_green])
def test_coincident_points_raise(fn):
    with pytest.raises(KernelSingularityError, match="kernel singularity"):
        fn([1.0, 2.0, 3.0], [1.0, 2.0, 3.0], 1.0)
    with pytest.raises(KernelSingularityError):
        fn([0.0, 0.0, 0.0], [0.0, 0.0, 1e-10], 1.0)


def test_dyadic_needs_positive_k():
    with pytest.raises(ValueError):
        dyadic_green([1, 0, 0], [0, 0, 0], 0.0)


@settings(max_examples=50, deadline=None)
@given(coords, coords, st.floats(0.1, 5.0))
def test_reciprocity_and_symmetry(x, y, k):
    x, y = np.array(x), np.array(y)
    if np.linalg.norm(x - y) < 1e-3:
        return
    G = dyadic_green(x, y, k)
    assert np.linalg.norm(G - dyadic_green(y, x, k).T) <= 1e-12 * np.linalg.norm(G)
    assert np.linalg.norm(G - G.T) <= 1e-12 * np.linalg.norm(G)


@settings(max_examples=30, deadline=None)
@given(coords, coords, coords, st.floats(0.1, 3.0))
def test_translation_invariance(x, y, t, k):
    x, y, t = map(np.array, (x, y, t))
    if np.linalg.norm(x - y) < 1e-2:
        return
    G = dyadic_green(x, y, k)
    np.testing.assert_allclose(dyadic_green(x + t, y + t, k), G, rtol=1e-9, atol=1e-12 * np.abs(G).max())


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 10.0))
def test_homogeneity(s):
    x, y, k = np.array([0.4, 1.1, -0.3]), np.array([-0.5, 0.2, 0.7]), 1.3
    np.testing.assert_allclose(dyadic_green(s * x, s * y, k / s), dyadic_green(x, y, k) / s, rtol=1e-10)


def test_pde_residual_bound():
    x, y = random_pairs(1.3)
    assert curlcurl_residual(1.3, x, y).max() <= 1e-3


def test_curl_is_antisymmetric_and_primed():
    x, y, k = np.array([1.0, 0.5, -0.2]), np.array([0.0, 0.1, 0.3]), 1.4
    C = curl_dyadic_green(x, y, k)
    np.testing.assert_allclose(C, -C.T, atol=1e-15)
    # curl' G = -curl_x G, with curl_x taken column by column
    cx = fdiff.curl(lambda p: dyadic_green(p, y, k), x[None], 1e-4)[0]
    np.testing.assert_allclose(C, -cx, rtol=1e-6, atol=1e-8 * np.abs(C).max())


def test_curl_matches_primed_differences():
    x, y, k = np.array([0.2, -0.9, 1.1]), np.array([0.3, 0.4, -0.2]), 0.9
    fd = fdiff.curl(lambda q: dyadic_green(x, q, k), y[None], 1e-4 / k)[0]
    C = curl_dyadic_green(x, y, k)
    assert np.linalg.norm(fd - C) <= 1e-5 * np.linalg.norm(C)


def test_apply_helpers_match_matrices():
    rng = np.random.default_rng(2)
    x, y = rng.normal(size=(6, 3)), rng.normal(size=(6, 3)) + 3
    v = rng.normal(size=3) + 1j * rng.normal(size=3)
    k = 0.8
    np.testing.assert_allclose(apply_green(x, y, k, v), dyadic_green(x, y, k) @ v, rtol=1e-13)
    np.testing.assert_allclose(apply_curl_green(x, y, k, v), curl_dyadic_green(x, y, k) @ v, rtol=1e-13)


def radiation_defect(k, radii, v=np.array([0.3, -1.0, 0.5])):
    xhat = np.array([1.0, 2.0, -0.5]) / np.linalg.norm([1.0, 2.0, -0.5])
    xp = np.array([0.2, 0.1, -0.3])
    out = []
    for R in radii:
        x = R * xhat
        curlGv = np.cross(grad_scalar_green(x, xp, k), v)  # curl_x (G v)
        out.append(R * np.linalg.norm(curlGv - 1j * k * np.cross(xhat, dyadic_green(x, xp, k) @ v)))
    return np.array(out)


def test_radiation_condition_decay():
    k = 1.3
    q = radiation_defect(k, np.array([1e2, 1e3, 1e4]) / k)
    assert np.all(np.diff(q) < 0)
