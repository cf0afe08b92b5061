import numpy as np
import pytest
from hypothesis import given, strategies as st

from dinifreq.coefficients import make_frame
from dinifreq.errors import DomainError, HypothesisViolation
from dinifreq.fields import CLOSED_FORM_NAMES, catalog, push_entry
from dinifreq.functionals import (alt_energy, energy, energy_variation_check, fit_variation_constants,
                                  frequency_trace, height, height_variation_residual, moments)

RADII = np.geomspace(0.02, 0.4, 16)


def normalized(name):
    e = catalog(name)
    if np.abs(e.coeff.matrix(e.anchor) - np.eye(2)).max() > 1e-12:
        e = push_entry(e, make_frame(e.coeff, e.anchor))
    return e


def test_height_matches_frozen_beta_values(oracles):
    for case in oracles["homogeneous"]["cases"]:
        e = catalog(f"imz_kappa{case['kappa']}")
        for r, H in case["H"].items():
            got = height(e.u, e.coeff, e.domain, e.anchor, float(r), case["alpha_value"])
            assert got == pytest.approx(H, rel=1e-11)


def test_disk_eigen_height_matches_frozen_values(oracles):
    for row in oracles["disk_eigen_H"]:
        e = catalog(f"disk_eigen_k{row['kappa']}_m1")
        got = height(e.u, e.coeff, e.domain, e.anchor, row["r"], row["alpha"])
        assert got == pytest.approx(row["H"], rel=1e-9)


@pytest.mark.parametrize("kappa", [1, 2, 3, 5])
def test_homogeneous_frequency_is_constant(oracles, kappa):
    for case in oracles["homogeneous"]["cases"]:
        if case["kappa"] != kappa:
            continue
        e = catalog(f"imz_kappa{kappa}")
        tr = frequency_trace(e.u, e.coeff, e.potential, e.domain, e.anchor, RADII, case["alpha_value"])
        assert np.max(np.abs(tr.N / case["N"] - 1)) <= 1e-8


@pytest.mark.parametrize("name", CLOSED_FORM_NAMES)
def test_alternative_energy_identity(name):
    e = normalized(name)
    for r in (0.05, 0.2):
        I = energy(e.u, e.coeff, e.potential, e.domain, e.anchor, r, 2.0)
        alt = alt_energy(e.u, e.coeff, e.domain, e.anchor, r, 2.0)
        assert abs(I - alt) <= 1e-8 * max(abs(I), abs(alt), 1e-300)


@pytest.mark.parametrize("name", ["imz_kappa2", "disk_eigen_k1_m1", "expsin"])
def test_height_variation_residual_is_second_order(name):
    e = catalog(name)
    r = 0.2
    res = [abs(height_variation_residual(e.u, e.coeff, e.potential, e.domain, e.anchor, r, dr=d, richardson=False))
           for d in (r * 0.02, r * 0.01)]
    assert res[1] <= res[0] / 3.5 or res[1] < 1e-9


@given(st.floats(1e-3, 1e3))
def test_frequency_is_scale_invariant(c):
    e = catalog("disk_eigen_k2_m1")
    a = frequency_trace(e.u, e.coeff, e.potential, e.domain, e.anchor, [0.1, 0.3])
    b = frequency_trace(e.u.scaled(c), e.coeff, e.potential, e.domain, e.anchor, [0.1, 0.3])
    np.testing.assert_allclose(a.N, b.N, rtol=1e-10)


def test_unnormalized_center_is_rejected():
    e = catalog("diag_x2")
    with pytest.raises(HypothesisViolation):
        height(e.u, e.coeff, e.domain, e.anchor, 0.1, 1.0)


def test_radii_must_be_positive():
    e = catalog("imz_kappa1")
    with pytest.raises(DomainError):
        frequency_trace(e.u, e.coeff, e.potential, e.domain, e.anchor, [0.0, 0.1])


def test_constant_has_zero_frequency_for_negative_alpha():
    e = catalog("const_one")
    tr = frequency_trace(e.u, e.coeff, e.potential, e.domain, e.anchor, [0.1, 0.2], alpha=-0.5)
    assert np.all(tr.N == 0.0) and np.all(tr.valid)
    assert tr.H[0] == pytest.approx(np.pi * 0.1 ** 1 / 0.5, rel=1e-12)


def test_energy_variation_exact_for_harmonic_homogeneous():
    e = catalog("imz_kappa2")
    rep = energy_variation_check(e.u, e.coeff, e.potential, e.domain, e.anchor, 0.2)
    assert abs(rep.slack) < 1e-8


def test_energy_variation_constants_fit():
    e = catalog("disk_eigen_k1_m1")
    reps = [energy_variation_check(e.u, e.coeff, e.potential, e.domain, e.anchor, r) for r in (0.05, 0.1, 0.2, 0.3)]
    O1, C = fit_variation_constants(reps)
    assert 0 <= O1 <= 10 and 0 <= C <= 10
    for rep in reps:
        rep.O1, rep.C = O1, C
        assert rep.slack >= -1e-9


def test_moments_report_quadrature():
    e = catalog("imz_kappa1")
    m = moments(e.u, e.coeff, e.potential, e.domain, e.anchor, 0.1, 1.0)
    assert m.quad["converged"] and m.H > 0
