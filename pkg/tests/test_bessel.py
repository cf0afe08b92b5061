import numpy as np
import pytest
from hypothesis import given, strategies as st

from dinifreq.bessel import bessel_zero, besselj, besselj_prime
from dinifreq.errors import DomainError


@pytest.mark.parametrize("kappa", [0, 1, 2, 5, 8, 12])
def test_series_matches_frozen_values(oracles, kappa):
    xs = np.array(oracles["bessel"]["x"])
    np.testing.assert_allclose(besselj(kappa, xs), oracles["bessel"]["J"][str(kappa)], atol=1e-12)


@pytest.mark.parametrize("kappa", range(13))
def test_zeros_match_frozen_table(oracles, kappa):
    got = [bessel_zero(kappa, m) for m in (1, 2, 3)]
    np.testing.assert_allclose(got, oracles["bessel"]["zeros"][str(kappa)], rtol=0, atol=1e-10)


def test_first_zero_exceeds_order():
    for k in range(1, 13):
        assert bessel_zero(k, 1) > k


def test_envelope_is_enforced():
    with pytest.raises(DomainError):
        bessel_zero(13, 1)
    with pytest.raises(DomainError):
        bessel_zero(2, 4)


@given(st.integers(1, 10), st.floats(0.1, 12.0))
def test_derivative_recurrence(k, x):
    # J_k' = (J_{k-1} - J_{k+1}) / 2
    lhs = besselj_prime(k, x)
    rhs = 0.5 * (besselj(k - 1, x) - besselj(k + 1, x))
    assert abs(lhs - rhs) < 1e-11
