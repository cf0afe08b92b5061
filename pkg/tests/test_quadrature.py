import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import roots_jacobi

from dinifreq.errors import DomainError
from dinifreq.quadrature import QuadOptions, gauss_jacobi, integrate_ball, integrate_rule, ray_clip
from dinifreq.regions import Disk, HalfPlane, WholePlane


def test_jacobi_moments_match_frozen_beta_values(oracles):
    for row in oracles["jacobi_moments"]:
        t, w = gauss_jacobi(row["alpha"], row["beta"], 12)
        assert abs(np.sum(w * t ** row["p"]) - row["value"]) <= 1e-13 * max(1, row["value"])


@given(st.floats(-0.9, 12.0), st.floats(-0.9, 3.0), st.integers(2, 30))
def test_nodes_agree_with_scipy(a, b, m):
    t, w = gauss_jacobi(a, b, m)
    x, v = roots_jacobi(m, a, b)  # weight (1-x)^a (1+x)^b on [-1, 1]
    np.testing.assert_allclose(t, (1 + x) / 2, atol=1e-12)
    np.testing.assert_allclose(w, v / 2 ** (a + b + 1), rtol=1e-9, atol=1e-300)


def test_invalid_exponent():
    with pytest.raises(DomainError):
        gauss_jacobi(-1.0, 0.0, 4)


def test_ray_clip_half_plane():
    rho, clipped = ray_clip(HalfPlane(), np.array([0.0, -0.1]), np.pi / 2, 0.5)
    assert clipped and abs(rho - 0.1) < 1e-12
    rho, clipped = ray_clip(HalfPlane(), np.array([0.0, -0.1]), -np.pi / 2, 0.5)
    assert not clipped and rho == 0.5


@pytest.mark.parametrize("alpha", [0.0, 1.0, 3.5])
def test_weighted_disk_area(alpha):
    # ∫_{B_r} (r^2 - |x|^2)^alpha = pi r^(2 alpha + 2) / (alpha + 1)
    r = 0.7
    val = integrate_ball(lambda p: np.ones(len(p)), WholePlane(), np.zeros(2), r, alpha)
    assert abs(val - np.pi * r ** (2 * alpha + 2) / (alpha + 1)) < 1e-12


def test_half_disk_is_half():
    full = integrate_ball(lambda p: 1 + p[:, 0] ** 2, WholePlane(), np.zeros(2), 0.4, 2.0)
    half = integrate_ball(lambda p: 1 + p[:, 0] ** 2, HalfPlane(), np.zeros(2), 0.4, 2.0)
    assert abs(half - full / 2) < 1e-13


def test_clipped_lens_area():
    # area of {x2 < 0} ∩ B_r((0, -d)) = r^2 acos(-d/r)... computed as circle minus cap
    r, d = 0.3, 0.1
    cap = r * r * np.arccos(d / r) - d * np.sqrt(r * r - d * d)
    val = integrate_ball(lambda p: np.ones(len(p)), HalfPlane(), np.array([0.0, -d]), r, 0.0)
    assert abs(val - (np.pi * r * r - cap)) < 1e-9


def test_refinement_is_stable():
    f = lambda p, s: np.cos(3 * p[:, 0]) * np.exp(p[:, 1])
    a = integrate_rule(f, Disk((0.2, 0.0), 1.0), np.array([0.9, 0.0]), 0.5, 1.5, QuadOptions())
    b = integrate_rule(f, Disk((0.2, 0.0), 1.0), np.array([0.9, 0.0]), 0.5, 1.5, QuadOptions(128, 48, 1e-12, 2048, 384))
    assert abs(a.value - b.value) <= 1e-9 * abs(b.value)
