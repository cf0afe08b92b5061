import numpy as np
import pytest
from hypothesis import given, strategies as st

from dinifreq.coefficients import identity_field, perturbed_identity
from dinifreq.errors import DomainError
from dinifreq.geometry import (DiniDomain, DiniModulus, chart_from_spec, dini_integral, flat_chart, fr3_cap,
                               generalized_star_margin, growth_k, lambda_of, log_power_chart, normal_at,
                               power_chart, star_shape_margin)

CHARTS = [flat_chart(), power_chart(0.5), power_chart(1.0), log_power_chart(1.0)]


def dyadic(domain, count=12):
    return [domain.R0_effective / 2**i for i in range(count)]


def test_ledger_arithmetic_matches_oracle(oracles):
    led = oracles["ledger"]
    assert growth_k(1.0) == led["k"]
    assert fr3_cap(1.0) == pytest.approx(led["cap_value"], rel=1e-15)


def test_dini_integrals(oracles):
    pw = dini_integral(DiniModulus("power", beta=0.5), 1e-12, 0.5)
    assert pw.limit == pytest.approx(oracles["dini"]["power_beta_0.5_upper_0.5"], rel=1e-14)
    lp = dini_integral(DiniModulus("log_power", delta=0.5, R0_cap=0.25), 1e-300, 0.25)
    assert lp.limit == pytest.approx(oracles["dini"]["log_power_delta_0.5_upper_0.25"], rel=1e-12)
    lp1 = dini_integral(DiniModulus("log_power", delta=1.0), 1e-8, 1.0)
    assert lp1.value == pytest.approx(oracles["dini"]["log_power_delta_1_eps_1e-8_upper_1"], rel=1e-8)


def test_slow_log_modulus_has_no_sampled_radius():
    # delta = 1/2 would need r near 1e-120 to meet the growth cap, below the 2^-200 sampling floor
    with pytest.raises(DomainError, match="no admissible effective radius"):
        DiniDomain.build(log_power_chart(0.5), 0.5)


def test_invalid_modulus():
    with pytest.raises(DomainError):
        DiniModulus("power", beta=1.5)
    with pytest.raises(DomainError):
        DiniModulus("custom", table=((0.1, 1.0), (0.2, 0.5)))


def test_chart_spec_roundtrip():
    for ch in CHARTS:
        again = chart_from_spec(ch.spec)
        xs = np.linspace(-0.1, 0.1, 11)
        np.testing.assert_allclose(again.phi(xs), ch.phi(xs))


def test_normal_examples():
    np.testing.assert_allclose(normal_at(flat_chart(), np.array([0.3])), [[0.0, 1.0]], atol=1e-15)
    np.testing.assert_allclose(normal_at(power_chart(1.0, R0=1.0), np.array([1.0])),
                               [[-2**-0.5, 2**-0.5]], atol=1e-15)


def test_flat_star_margin_is_four():
    d = DiniDomain.build(flat_chart(), 0.5)
    sm = star_shape_margin(d, d.R0_effective / 8)
    assert sm.lo == pytest.approx(4.0, abs=1e-12) and sm.hi == pytest.approx(4.0, abs=1e-12)


def test_normal_is_unit_outward():
    ch = power_chart(0.5)
    nu = normal_at(ch, np.linspace(-0.3, 0.3, 31))
    np.testing.assert_allclose(np.linalg.norm(nu, axis=1), 1.0, atol=1e-14)
    assert np.all(nu[:, 1] > 0)


@pytest.mark.parametrize("chart", CHARTS, ids=lambda c: c.name)
def test_effective_radius_respects_caps(chart):
    d = DiniDomain.build(chart, 0.5)
    assert lambda_of(d, d.R0_effective) <= fr3_cap(0.5)
    assert d.R0_effective > d.smallest_sampled_radius


def test_lambda_floor_and_range():
    d = DiniDomain.build(flat_chart(), 0.5)
    r = d.R0_effective
    assert lambda_of(d, r) == pytest.approx(np.sqrt(r))
    with pytest.raises(DomainError):
        lambda_of(d, 2 * r)


@given(st.integers(0, 30))
def test_lambda_is_nondecreasing(i):
    d = DiniDomain.build(power_chart(0.5), 0.5)
    r = d.R0_effective * 2.0**-i
    assert lambda_of(d, r / 2) <= lambda_of(d, r)


@pytest.mark.parametrize("chart", CHARTS, ids=lambda c: c.name)
@pytest.mark.parametrize("coeff", [identity_field(), perturbed_identity(0.1)], ids=["identity", "perturbed"])
def test_star_margins_at_dyadic_radii(chart, coeff):
    d = DiniDomain.build(chart, 0.5)
    for r in dyadic(d):
        sm = star_shape_margin(d, r)
        assert sm.passed and 0.5 <= sm.lo <= sm.hi <= 10
        vmin, ok = generalized_star_margin(d, coeff, r)
        assert ok, (r, vmin)
