import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dinifreq.analysis import (bracket, constants_ledger, dyadic_iteration, fit_c2, fit_monotonicity,
                               fit_small_sup_family, growth_step, order_vs_M_scan, radius_chain, small_sup_bound,
                               sup_norm, three_sphere_H, three_sphere_sup)
from dinifreq.analysis.ledger import check_chain
from dinifreq.analysis.monotonicity import violation
from dinifreq.analysis.three_sphere import c_star, fit_Cbar
from dinifreq.coefficients import constant_potential, identity_field, make_frame, perturbed_identity
from dinifreq.errors import DomainError, HypothesisViolation
from dinifreq.fields import catalog, fd_solve, push_entry
from dinifreq.functionals import frequency_trace
from dinifreq.geometry import DiniDomain, flat_chart, growth_k, power_chart

RADII = np.linspace(0.02, 0.3, 16)


def trace_of(name, **kw):
    e = catalog(name)
    return frequency_trace(e.u, e.coeff, e.potential, e.domain, e.anchor, RADII, **kw)


# monotonicity

def test_harmonic_frequency_needs_no_correction():
    rep = fit_monotonicity(trace_of("imz_kappa3"))
    assert rep.passed and rep.C1 == 0 and rep.C2 == 0


@pytest.mark.parametrize("kappa", [1, 4, 8])
def test_disk_eigen_monotone_with_fitted_constants(kappa):
    rep = fit_monotonicity(trace_of(f"disk_eigen_k{kappa}_m1"))
    assert rep.passed and 0 <= rep.C1 <= 1e3 and 0 <= rep.C2 <= 1e3 and rep.max_violation <= 1e-8


@settings(max_examples=6)
@given(st.floats(1e-2, 1e2))
def test_fitted_constants_scale_invariant(c):
    e = catalog("disk_eigen_k2_m1")
    a = fit_monotonicity(frequency_trace(e.u, e.coeff, e.potential, e.domain, e.anchor, RADII))
    b = fit_monotonicity(frequency_trace(e.u.scaled(c), e.coeff, e.potential, e.domain, e.anchor, RADII))
    assert a.C1 == b.C1 and b.C2 == pytest.approx(a.C2, rel=1e-6, abs=1e-9)


def test_violation_of_decreasing_sequence():
    r = np.linspace(0.1, 1, 5)
    assert violation(r, np.array([5.0, 4, 3, 2, 1]), 1.0, 0.0, 0.0) > 0
    assert violation(r, np.array([1.0, 1, 1, 1, 1]), 1.0, 0.0, 0.0) == 0


def test_too_few_radii():
    e = catalog("imz_kappa1")
    tr = frequency_trace(e.u, e.coeff, e.potential, e.domain, e.anchor, RADII[:5])
    with pytest.raises(DomainError):
        fit_monotonicity(tr)


# three-sphere

def test_sup_norm_of_homogeneous_is_power():
    e = catalog("imz_kappa3")
    for r in (0.1, 0.5):
        assert sup_norm(e.u, e.domain, e.anchor, r) == pytest.approx(r**3, rel=1e-4)


def test_c_star_matches_oracle(oracles):
    assert c_star(2) == pytest.approx(oracles["ledger"]["c_star_2d"], rel=1e-8)


@settings(max_examples=6)
@given(st.floats(0.01, 0.05), st.floats(1.2, 3.0), st.floats(1.1, 3.0))
def test_exponents_sum_to_one(r1, f2, f3):
    e = catalog("imz_kappa2")
    r2 = r1 * f2
    r3 = 2 * r2 * f3
    rep = three_sphere_H(e.u, e.coeff, e.potential, e.domain, e.anchor, r1, r2, r3)
    assert rep.exponent_sum == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("name", ["imz_kappa2", "disk_eigen_k2_m1", "diag_x2"])
def test_three_sphere_inequalities(name):
    e = catalog(name)
    if name == "diag_x2":
        e = push_entry(e, make_frame(e.coeff, e.anchor))
    h = three_sphere_H(e.u, e.coeff, e.potential, e.domain, e.anchor, 0.05, 0.1, 0.3)
    s = three_sphere_sup(e.u, e.coeff, e.potential, e.domain, e.anchor, 0.05, 0.1, 0.3)
    assert h.passed and s.passed
    assert h.constants["Cbar"] >= 1


def test_three_sphere_radius_order():
    e = catalog("imz_kappa1")
    with pytest.raises(DomainError):
        three_sphere_H(e.u, e.coeff, e.potential, e.domain, e.anchor, 0.05, 0.2, 0.3)


def test_fit_cbar_on_constant_frequency():
    tr = trace_of("imz_kappa2")
    assert fit_Cbar(tr, 0.0, 1.0) == pytest.approx(1.0, abs=1e-9)


# order

@pytest.mark.parametrize("kappa", [1, 2, 3, 5])
def test_dyadic_order_exact_for_homogeneous(kappa):
    e = catalog(f"imz_kappa{kappa}")
    est = dyadic_iteration(e.u, e.coeff, e.potential, e.domain, 0.5, 6, e.anchor)
    assert abs(est.fitted_order - kappa) <= 1e-6


def test_constant_has_order_zero():
    e = catalog("const_one")
    est = dyadic_iteration(e.u, e.coeff, e.potential, e.domain, 0.5, 6, e.anchor)
    assert abs(est.fitted_order) <= 1e-9


def test_order_needs_four_scales():
    e = catalog("imz_kappa1")
    with pytest.raises(DomainError):
        dyadic_iteration(e.u, e.coeff, e.potential, e.domain, 0.5, 2, e.anchor)


def test_default_outer_radius_needs_dini_domain():
    e = catalog("imz_kappa1")
    with pytest.raises(DomainError):
        dyadic_iteration(e.u, e.coeff, e.potential, e.domain, None, 6, e.anchor)


def test_scan_reports_ratio_for_first_eigenfunction(oracles):
    scan = order_vs_M_scan([catalog("disk_eigen_k1_m1")])
    j = oracles["bessel"]["zeros"]["1"][0]
    assert scan["rows"][0].ratio == pytest.approx(1 / (1 + j), abs=0.05 / (1 + j))
    assert scan["rows"][0].ratio == pytest.approx(0.207, abs=1e-3)


def test_harmonic_family_ratio_grows():
    scan = order_vs_M_scan([catalog(f"imz_kappa{k}") for k in (1, 2, 3)], r0=0.5)
    ratios = [r.ratio for r in scan["rows"]]
    np.testing.assert_allclose(ratios, [0.5, 1.0, 1.5], atol=1e-6)
    assert not scan["bounded_by_one"]


# small sup

@pytest.mark.parametrize("kappa", [1, 2, 3])
def test_small_sup_of_homogeneous(kappa):
    e = catalog(f"imz_kappa{kappa}")
    res = small_sup_bound(e.u, e.domain, 0.4)
    assert res.normalizer == pytest.approx(1.0, rel=1e-4)
    assert res.epsilon == pytest.approx(0.1**kappa, rel=1e-3)


def test_small_sup_of_constant():
    e = catalog("const_one")
    assert small_sup_bound(e.u, e.domain, 0.4).epsilon == 1.0


def test_small_sup_family_fit_covers_every_case():
    eps, sq = [], []
    for k in range(1, 6):
        e = catalog(f"disk_eigen_k{k}_m1")
        eps.append(small_sup_bound(e.u, e.domain, 0.4).epsilon)
        sq.append(np.sqrt(e.M))
    fit = fit_small_sup_family(eps, sq)
    bound = fit["L1"] * np.exp(-fit["L2"] * (np.array(sq) + 1))
    assert np.all(np.array(eps) >= bound * (1 - 1e-12)) and fit["L2"] > 0


def test_small_sup_rejects_zero():
    e = catalog("const_one")
    with pytest.raises(DomainError):
        small_sup_bound(e.u.scaled(0.0), e.domain, 0.4)


# ledger and growth

def test_ledger_reproduces_k_and_cap(oracles):
    led = constants_ledger(2, 1.0, 1.0)
    assert led.k == oracles["ledger"]["k"] and led.K2 == oracles["ledger"]["K2"]
    assert led.Lambda_cap == pytest.approx(oracles["ledger"]["cap_value"], rel=1e-15)
    assert led.f_zero == 1.0 and led.passed


def test_bracket_limit_is_one():
    assert bracket(0.0, 1.0, 80.0) == 1.0


@given(st.floats(0.5, 3.0))
def test_bracket_bounded_by_exponential(K1):
    k = growth_k(K1)
    c2, y, f = fit_c2(K1, k)
    assert np.all(f >= 0) and np.all(f <= np.exp(c2 * y) * (1 + 1e-12))


def test_chain_check_detects_oversized_oscillation():
    K1 = 0.5
    k = growth_k(K1)
    ch = radius_chain(1e-3, 0.01, K1, k)
    assert not all(check_chain(ch, K1, k).values())


def test_ledger_rejects_bad_ellipticity():
    with pytest.raises(DomainError):
        constants_ledger(2, 1.5, 1.0)


def test_growth_flat_homogeneous_exact():
    d = DiniDomain.build(flat_chart(), 0.5)
    e = catalog("imz_kappa2")
    rep = growth_step(e.u, e.coeff, e.potential, d, d.R0_effective)
    assert rep.lhs == pytest.approx(8 * np.log(2), rel=1e-9)
    assert rep.passed and rep.factor >= 1
    assert all(rep.intermediates["checks"].values())


def test_growth_requires_normalized_anchor():
    d = DiniDomain.build(flat_chart(), 0.5)
    e = catalog("diag_x2")
    with pytest.raises(HypothesisViolation):
        growth_step(e.u, e.coeff, e.potential, d, d.R0_effective)


@pytest.mark.parametrize("coeff", [identity_field(), perturbed_identity(0.1)], ids=["identity", "perturbed"])
def test_growth_on_fd_solution(coeff):
    d = DiniDomain.build(power_chart(0.5), 0.5)
    R = d.R0_effective
    L = 1.25 * R
    u = fd_solve(d, coeff, constant_potential(0.0), data=lambda x: -x[..., 1] * (1 - x[..., 0] / R), h=L / 32,
                 window=(L, L))
    rep = growth_step(u, coeff, u.potential, d, R)
    assert rep.passed and not rep.masked
    est = dyadic_iteration(u, coeff, u.potential, d, None, 4)
    assert est.K0 is not None and np.isfinite(est.K0)
