"""Regenerate tests/data/oracles.json from symbolic and arbitrary-precision computations.

Nothing here imports dinifreq, so the frozen numbers are independent of the code under test.
"""

import json
from pathlib import Path

import mpmath as mp
import sympy as sp

mp.mp.dps = 40
OUT = Path(__file__).resolve().parents[1] / "tests" / "data" / "oracles.json"
ALPHAS = {"1": 1, "2": 2, "sqrt10": sp.sqrt(10)}
KAPPAS = (1, 2, 3, 5)
RADII = (0.05, 0.1, 0.2, 0.4)


def homogeneous_half_disk():
    """H, I, N for u = Im z^k on a half disk with weights (r^2 - s^2)^a and (r^2 - s^2)^(a+1)."""
    k, a, r = sp.symbols("kappa alpha r", positive=True)
    H = sp.pi / 4 * sp.beta(k + 1, a + 1) * r ** (2 * k + 2 * a + 2)
    I = sp.pi / 2 * k**2 * sp.beta(k, a + 2) * r ** (2 * k + 2 * a + 2)
    N = sp.simplify(sp.expand_func(I / H))
    out = {"N_symbolic": str(N), "cases": []}
    for kappa in KAPPAS:
        for label, alpha in ALPHAS.items():
            row = {"kappa": kappa, "alpha": label, "alpha_value": float(alpha),
                   "N": float(N.subs({k: kappa, a: alpha})),
                   "H": {str(rr): float(H.subs({k: kappa, a: alpha, r: sp.Rational(str(rr))}).evalf(30))
                         for rr in RADII}}
            out["cases"].append(row)
    return out


def bessel():
    zeros = {str(kappa): [float(mp.besseljzero(kappa, m)) for m in (1, 2, 3)] for kappa in range(13)}
    xs = [0.0, 0.5, 1.0, 3.7, 7.5, 11.0, 14.0]
    values = {str(kappa): [float(mp.besselj(kappa, x)) for x in xs] for kappa in (0, 1, 2, 5, 8, 12)}
    return {"zeros": zeros, "x": xs, "J": values}


def disk_eigen_heights():
    """H(r) = pi * int_0^r J_k(j s)^2 (r^2 - s^2)^a s ds with a = j (so alpha = sqrt M)."""
    rows = []
    for kappa in (1, 2, 4):
        j = mp.besseljzero(kappa, 1)
        for rr in (0.1, 0.3):
            val = mp.pi * mp.quad(lambda s: mp.besselj(kappa, j * s) ** 2 * (rr**2 - s**2) ** j * s, [0, rr])
            rows.append({"kappa": kappa, "r": rr, "alpha": float(j), "H": float(val)})
    return rows


def jacobi_moments():
    """int_0^1 (1-t)^a t^b t^p dt for the pairs the radial rule must integrate exactly."""
    rows = []
    for a, b in ((0.0, 0.0), (1.0, 0.0), (3.1622776601683795, 0.0), (-0.5, 0.5), (7.5, 1.0)):
        for p in (0, 1, 3, 7):
            rows.append({"alpha": a, "beta": b, "p": p, "value": float(mp.beta(p + b + 1, a + 1))})
    return rows


def ledger_arithmetic():
    K1 = sp.Integer(1)
    K2 = 1 + K1
    k = 8 * K2 * (4 + 1 / K1)
    cap = sp.Min(1 / (24 * K1 + 64 * k), sp.Rational(1, 1000))
    cstar = mp.findroot(lambda t: mp.diff(lambda s: mp.log(1 + s) / mp.sqrt(s), t), 4)
    return {"K1": 1, "K2": int(K2), "k": int(k), "cap": str(cap), "cap_value": float(cap),
            "c_star_2d": float(mp.log(1 + cstar) / mp.sqrt(cstar)), "c_star_argmax": float(cstar)}


def dini_integrals():
    d = 0.5
    # substitute L = log(2e/r): the integrand becomes L^-(1+d) on [log(8e), inf)
    lp = mp.quad(lambda L: L ** (-(1 + d)), [mp.log(8 * mp.e), mp.inf])
    # delta = 1, eps = 1e-8, upper = 1, same substitution
    lp1 = mp.quad(lambda L: L**-2, [mp.log(2 * mp.e), mp.log(2 * mp.e / mp.mpf("1e-8"))])
    return {"power_beta_0.5_upper_0.5": float(2 * mp.sqrt(0.5)),
            "log_power_delta_1_eps_1e-8_upper_1": float(lp1),
            "log_power_delta_0.5_upper_0.25": float(lp)}


def main():
    blob = {"homogeneous": homogeneous_half_disk(), "bessel": bessel(), "disk_eigen_H": disk_eigen_heights(),
            "jacobi_moments": jacobi_moments(), "ledger": ledger_arithmetic(), "dini": dini_integrals()}
    OUT.write_text(json.dumps(blob, indent=1, sort_keys=True) + "\n")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
