"""The nine acceptance criteria at their stated tolerances; each test records one PASS/FAIL line."""

import time

import numpy as np

from dinifreq.analysis import (constants_ledger, dyadic_iteration, fit_monotonicity, growth_step, order_vs_M_scan,
                               three_sphere_H, three_sphere_sup)
from dinifreq.analysis.order import eigen_r0
from dinifreq.coefficients import (constant_field, constant_potential, identity_field, make_frame,
                                   perturbed_identity, push_matrix, sampled_ball_inclusions)
from dinifreq.fields import CLOSED_FORM_NAMES, catalog, convergence_study, fd_solve, push_entry
from dinifreq.functionals import alt_energy, energy, frequency_trace, height_variation_residual
from dinifreq.geometry import (DiniDomain, custom_chart, flat_chart, generalized_star_margin, growth_k,
                               log_power_chart, power_chart, star_shape_margin)
from dinifreq.quadrature import QuadOptions

EIGEN_FAMILY = [f"disk_eigen_k{k}_m1" for k in range(1, 9)]
IDENTITY_CASES = ["imz_kappa1", "imz_kappa2", "imz_kappa3", "imz_kappa5", "disk_eigen_k1_m1", "disk_eigen_k2_m1",
                  "expsin", "const_one"]
TRIPLES = ((0.05, 0.1, 0.3), (0.02, 0.06, 0.25))
FINE = QuadOptions(128, 48, 1e-11, 2048, 384)


def normalized(name):
    e = catalog(name)
    if np.abs(e.coeff.matrix(e.anchor) - np.eye(2)).max() > 1e-12:
        e = push_entry(e, make_frame(e.coeff, e.anchor))
    return e


def coefficient_catalog():
    return {"identity": identity_field(), "perturbed": perturbed_identity(0.1),
            "affine_scalar": catalog("affine_x2").coeff, "diag_affine": catalog("diag_x2").coeff,
            "constant": constant_field([[2.0, 1.0], [1.0, 2.0]])}


def chart_catalog():
    return [flat_chart(), power_chart(0.5), power_chart(1.0), log_power_chart(1.0),
            custom_chart([(1e-6, 1e-4), (1e-3, 1e-2), (0.1, 0.2), (0.5, 0.5)], 0.5)]


def test_criterion_1_frequency_oracle(acceptance):
    start = time.perf_counter()
    radii = np.geomspace(0.01, 0.5, 16)
    worst = 0.0
    for kappa in (1, 2, 3, 5):
        e = catalog(f"imz_kappa{kappa}")
        for alpha in (1.0, 2.0, np.sqrt(10.0)):
            tr = frequency_trace(e.u, e.coeff, e.potential, e.domain, e.anchor, radii, alpha)
            worst = max(worst, float(np.max(np.abs(tr.N / (2 * (alpha + 1) * kappa) - 1))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-8 and elapsed < 5.0
    assert acceptance(1, ok, f"max rel error {worst:.2e} (<= 1e-8), runtime {elapsed:.2f} s (< 5 s)")


def test_criterion_2_exact_identities(acceptance):
    worst = 0.0
    for name in CLOSED_FORM_NAMES:
        e = normalized(name)
        for r in (0.05, 0.15, 0.3):
            I = energy(e.u, e.coeff, e.potential, e.domain, e.anchor, r, 2.0)
            alt = alt_energy(e.u, e.coeff, e.domain, e.anchor, r, 2.0)
            worst = max(worst, abs(I - alt) / max(abs(I), abs(alt), 1e-300))
    rates = []
    for name in IDENTITY_CASES:
        e = catalog(name)
        r = 0.2
        res = [abs(height_variation_residual(e.u, e.coeff, e.potential, e.domain, e.anchor, r, dr=r * f,
                                             richardson=False)) for f in (0.02, 0.01)]
        rates.append(np.inf if res[1] < 1e-10 else np.log2(res[0] / res[1]))
    rate = float(np.min(rates))
    ok = worst <= 1e-8 and rate >= 1.8
    assert acceptance(2, ok, f"alt_energy vs energy max rel diff {worst:.2e} (<= 1e-8); "
                             f"residual rate in dr >= {rate:.2f} (expect 2)")


def _stable(a, b):
    return abs(a - b) <= 0.2 * max(abs(a), abs(b)) + 1e-12


def test_criterion_3_monotonicity(acceptance):
    radii = np.linspace(0.02, 0.3, 16)
    bad = []
    worst = -np.inf
    for name in list(CLOSED_FORM_NAMES) + EIGEN_FAMILY:
        e = normalized(name)
        base = fit_monotonicity(frequency_trace(e.u, e.coeff, e.potential, e.domain, e.anchor, radii))
        fine = fit_monotonicity(frequency_trace(e.u, e.coeff, e.potential, e.domain, e.anchor, radii, quad=FINE))
        worst = max(worst, base.max_violation)
        in_box = 0 <= base.C1 <= 1e3 and 0 <= base.C2 <= 1e3
        if not (base.passed and in_box and base.max_violation <= 1e-8 and _stable(base.C1, fine.C1)
                and _stable(base.C2, fine.C2)):
            bad.append(name)
    ok = not bad
    assert acceptance(3, ok, f"{len(CLOSED_FORM_NAMES) + len(EIGEN_FAMILY)} cases, max violation {worst:.1e}, "
                             f"constants stable under refinement; failing: {bad or 'none'}")


def test_criterion_4_three_sphere(acceptance):
    bad = []
    sums = []
    for name in CLOSED_FORM_NAMES:
        e = normalized(name)
        for r1, r2, r3 in TRIPLES:
            h = three_sphere_H(e.u, e.coeff, e.potential, e.domain, e.anchor, r1, r2, r3)
            s = three_sphere_sup(e.u, e.coeff, e.potential, e.domain, e.anchor, r1, r2, r3)
            sums += [h.exponent_sum, s.exponent_sum]
            if not (h.passed and s.passed):
                bad.append((name, (r1, r2, r3)))
    dev = float(np.max(np.abs(np.array(sums) - 1)))
    ok = not bad and dev <= 1e-15
    assert acceptance(4, ok, f"H and sup versions on {len(CLOSED_FORM_NAMES)} cases x 2 triples; "
                             f"exponent-sum deviation {dev:.1e}; failing: {bad or 'none'}")


def test_criterion_5_vanishing_order(acceptance):
    homog = 0.0
    for kappa in (1, 2, 3, 5):
        e = catalog(f"imz_kappa{kappa}")
        est = dyadic_iteration(e.u, e.coeff, e.potential, e.domain, 0.5, 6, e.anchor)
        homog = max(homog, abs(est.fitted_order - kappa))
    fam = [catalog(n) for n in EIGEN_FAMILY]
    eig = 0.0
    for e in fam:
        est = dyadic_iteration(e.u, e.coeff, e.potential, e.domain, eigen_r0(e), 6, e.anchor)
        eig = max(eig, abs(est.fitted_order - e.kappa))
    scan = order_vs_M_scan(fam)
    ok = homog <= 1e-6 and eig <= 0.05 and scan["max_ratio"] <= 1
    assert acceptance(5, ok, f"Im z^k order error {homog:.1e} (<= 1e-6); eigen order error {eig:.1e} (<= 0.05); "
                             f"max order/(1+sqrt M) {scan['max_ratio']:.3f} (<= 1)")


def test_criterion_6_geometry(acceptance):
    coeffs = coefficient_catalog()
    checked, bad = 0, []
    lo_hi = [np.inf, -np.inf]
    for chart in chart_catalog():
        d = DiniDomain.build(chart, 0.5)
        r = d.R0_effective
        while r >= 4 * d.smallest_sampled_radius:
            sm = star_shape_margin(d, r)
            lo_hi = [min(lo_hi[0], sm.lo), max(lo_hi[1], sm.hi)]
            if not sm.passed:
                bad.append((chart.name, r, "star"))
            for cname, c in coeffs.items():
                vmin, passed = generalized_star_margin(d, c, r)
                checked += 1
                if not passed:
                    bad.append((chart.name, r, cname))
            r /= 2
    ok = not bad
    assert acceptance(6, ok, f"star margin range [{lo_hi[0]:.3f}, {lo_hi[1]:.3f}] within [1/2, 10]; "
                             f"{checked} generalized checks; failing: {bad[:3] or 'none'}")


def test_criterion_7_ledger(acceptance):
    bad = []
    for lam in (1.0, 0.9, 0.75):
        for K in (0.0, 0.5, 1.0):
            led = constants_ledger(2, lam, K, strict=False)
            if not led.passed:
                bad.append((lam, K))
    led = constants_ledger(2, 1.0, 1.0)
    k_ok = growth_k(1.0) == 80 and led.k == 80
    cap_ok = abs(led.Lambda_cap - 1 / 5144) <= 1e-18
    ok = not bad and k_ok and cap_ok
    assert acceptance(7, ok, f"9 (lambda, K) pairs, failing {bad or 'none'}; k = {led.k:g} at K1 = 1; "
                             f"cap = 1/{1 / led.Lambda_cap:.0f}")


def test_criterion_8_solver(acceptance):
    flat = DiniDomain.build(flat_chart(), 0.5)
    curved = DiniDomain.build(power_chart(1.0), 0.5)
    window = (0.5, 0.5)
    affine = catalog("affine_x2")
    studies = {
        "imz2": convergence_study(flat, identity_field(), constant_potential(0.0),
                                  lambda x: -2 * x[..., 0] * x[..., 1], window),
        "diag_x1x2": convergence_study(flat, constant_field(np.diag([2.0, 1.0])), constant_potential(0.0),
                                       lambda x: x[..., 0] * x[..., 1], window),
        "expsin": convergence_study(flat, identity_field(), constant_potential(-3.0),
                                    lambda x: np.exp(x[..., 0]) * np.sin(-2 * x[..., 1]), window),
        "affine_expsin": convergence_study(
            flat, affine.coeff, constant_potential(0.0), lambda x: np.exp(x[..., 0]) * np.sin(-2 * x[..., 1]), window,
            source=lambda x: (-2.9 - 0.3 * x[..., 0]) * np.exp(x[..., 0]) * np.sin(-2 * x[..., 1])),
        "curved": convergence_study(
            curved, identity_field(), constant_potential(0.0),
            lambda x: (x[..., 0] ** 2 / 2 - x[..., 1]) * np.exp(x[..., 0]), window,
            source=lambda x: (1 + 2 * x[..., 0] + x[..., 0] ** 2 / 2 - x[..., 1]) * np.exp(x[..., 0])),
    }
    orders = {k: v.observed_order for k, v in studies.items()}
    measured = min(v for v in orders.values() if np.isfinite(v))
    d = DiniDomain.build(power_chart(0.5), 0.5)
    R = d.R0_effective
    L = 1.25 * R
    growth = []
    for coeff in (identity_field(), perturbed_identity(0.1)):
        u = fd_solve(d, coeff, constant_potential(0.0), data=lambda x: -x[..., 1] * (1 - x[..., 0] / R),
                     h=L / 32, window=(L, L))
        growth.append(growth_step(u, coeff, u.potential, d, R).passed)
    ok = measured >= 1.8 and all(growth)
    exact = [k for k, v in orders.items() if not np.isfinite(v)]
    assert acceptance(8, ok, f"min observed order {measured:.3f} (>= 1.8); reproduced to roundoff: {exact}; "
                             f"growth step on FD beta=0.5 chart: {growth}")


def test_criterion_9_transforms(acceptance):
    rng = np.random.default_rng(0)
    worst_rt = worst_id = 0.0
    incl = True
    for name, c in coefficient_catalog().items():
        z0 = rng.uniform(-0.3, 0.3, 2)
        f = make_frame(c, z0)
        x = rng.uniform(-5, 5, (10_000, 2))
        worst_rt = max(worst_rt, float(np.max(np.linalg.norm(f.inverse(f.forward(x)) - x, axis=1)
                                              / (1 + np.linalg.norm(x, axis=1)))))
        worst_id = max(worst_id, float(np.abs(push_matrix(c, f).matrix(np.zeros(2)) - np.eye(2)).max()))
        incl &= sampled_ball_inclusions(f, c.lam, trials=1000, rng=rng)["passed"]
    ok = worst_rt <= 1e-12 and worst_id <= 1e-12 and incl
    assert acceptance(9, ok, f"roundtrip {worst_rt:.1e}, |A_z0(0) - I| {worst_id:.1e} (both <= 1e-12); "
                             f"ball inclusions on 1000 random (p, r) per field: {incl}")
