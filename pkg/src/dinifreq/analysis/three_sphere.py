"""Three-sphere inequalities for the height and for sup norms, with every constant fitted and reported."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from ..errors import DomainError, NumericalError
from ..functionals import (default_alpha, frequency_trace, height, height_variation_residual, plain_height)
from ..quadrature import QuadOptions
from .monotonicity import fit_monotonicity

WINDOW_RADII = 16
SUP_START = 100
SUP_MAX = 1600
SUP_TOL = 1e-4


@dataclass
class ThreeSphereReport:
    radii: tuple
    alpha_exp: float
    beta_exp: float
    lhs: float
    rhs: float
    constants: dict
    passed: bool
    witnesses: dict = field(default_factory=dict)

    @property
    def exponent_sum(self) -> float:
        s = self.alpha_exp + self.beta_exp
        return self.beta_exp / s + self.alpha_exp / s


def _check_order(r1, r2, r3):
    if not (0 < r1 < r2 < 2 * r2 < r3):
        raise DomainError("radii must satisfy 0 < r1 < r2 < 2 r2 < r3")


def fit_Cbar(trace, C2: float, M: float) -> float:
    """Smallest Cbar >= 1 with N(r) <= Cbar (N(s) + C2 M) for all sampled r < s."""
    N = trace.N[trace.valid]
    den = N + C2 * M
    best = 1.0
    for i in range(len(N) - 1):
        d = den[i + 1:]
        pos = d > 0
        if np.any(~pos & (N[i] > 0)) or np.any((d < 0) & (N[i] >= 0)):
            raise NumericalError("N(s) + C2 M must be positive where N(r) > 0 to fit Cbar")
        if np.any(pos):
            best = max(best, float(np.max(N[i] / d[pos])))
    return best


def c_star(n: int = 2) -> float:
    """sup_x (n/2) log(1 + x) / sqrt(x): the least C* with (1 + x)^{n/2} <= exp(C* sqrt x)."""
    res = minimize_scalar(lambda t: -0.5 * n * np.log1p(t * t) / t, bounds=(1e-6, 50.0), method="bounded",
                          options={"xatol": 1e-12})
    return float(-res.fun)


def sup_norm(u, region, z0, r, start=SUP_START, max_m=SUP_MAX, tol=SUP_TOL):
    """sup |u| over region ∩ B_r(z0) on polar grids (>= 1e4 points), doubled until stable."""
    z0 = np.asarray(z0, dtype=float)
    prev, m = None, start
    while True:
        s = np.linspace(0, r, m + 1)[1:] * (1 - 1e-12)
        th = np.linspace(0, 2 * np.pi, 4 * m, endpoint=False)
        pts = z0 + (s[:, None, None] * np.stack([np.cos(th), np.sin(th)], -1)[None]).reshape(-1, 2)
        pts = pts[region.contains(pts)]
        if len(pts) == 0:
            raise DomainError("no sample points inside the region")
        cur = float(np.max(np.abs(u(pts))))
        if prev is not None and abs(cur - prev) <= tol * max(cur, 1e-300):
            return cur
        if 2 * m > max_m:
            return cur
        prev, m = cur, 2 * m


def _window(u, coeff, V, domain, z0, r_lo, r_hi, alpha, quad, waive):
    radii = np.geomspace(r_lo, r_hi, WINDOW_RADII)
    tr = frequency_trace(u, coeff, V, domain, z0, radii, alpha, quad, waive)
    if not np.all(tr.valid) or np.any(tr.H <= 0):
        raise DomainError("height vanishes on the window; the inequality is vacuous")
    mono = fit_monotonicity(tr, V.M)
    C2 = mono.C2
    Cbar = fit_Cbar(tr, C2, V.M)
    return tr, mono, Cbar


def three_sphere_H(u, coeff, V, domain, z0, r1, r2, r3, alpha=None, quad: QuadOptions | None = None,
                   waive_normalization=False, residual_radii: int = 6) -> ThreeSphereReport:
    """Check H(2r2) <= e^C (r3/2r2)^{C' sqrt M} H(r3)^theta H(r1)^{1-theta} with fitted Cbar, C2 and O(1) bound.

    Passing means the log-inequality holds with the budget the fitted pieces imply:
    C <= C_O [a0 (2r2 - r1) + b0 (r3 - 2r2)] / (a0 + b0) and the M-term C' C2 M a0 b0 / ((alpha+1)(a0+b0)).
    """
    _check_order(r1, r2, r3)
    alpha = default_alpha(V.M) if alpha is None else float(alpha)
    z0 = np.asarray(z0, dtype=float)
    tr, mono, Cbar = _window(u, coeff, V, domain, z0, r1, r3, alpha, quad, waive_normalization)
    a0 = np.log(r3 / (2 * r2))
    b0 = Cbar**2 * np.log(2 * r2 / r1)
    theta = b0 / (a0 + b0)
    Cp = (Cbar + 1) / Cbar
    H1, H2, H3 = (height(u, coeff, domain, z0, s, alpha, quad, waive_normalization) for s in (r1, 2 * r2, r3))
    combo = theta * np.log(H3) + (1 - theta) * np.log(H1)
    sqrtM = np.sqrt(V.M)
    rhs_unbudgeted = combo + Cp * sqrtM * a0
    C_needed = max(0.0, float(np.log(H2) - rhs_unbudgeted))
    res_r = np.geomspace(r1, r3, residual_radii)
    C_O = max(abs(height_variation_residual(u, coeff, V, domain, z0, s, alpha, quad=quad,
                                            waive_normalization=waive_normalization)) for s in res_r)
    budget = C_O * (a0 * (2 * r2 - r1) + b0 * (r3 - 2 * r2)) / (a0 + b0)
    m_term = Cp * mono.C2 * V.M * a0 * b0 / ((alpha + 1) * (a0 + b0))
    slack = 1.05 * budget + 1e-6
    lhs = float(np.log(H2))
    rhs = float(combo + m_term + slack)
    consts = {"Cbar": Cbar, "C2": mono.C2, "C1": mono.C1, "C_prime": Cp, "C": C_needed, "C_O": C_O,
              "budget": budget}
    return ThreeSphereReport((r1, r2, r3), float(a0), float(b0), lhs, rhs, consts, bool(lhs <= rhs),
                             {"H(r1)": H1, "H(2r2)": H2, "H(r3)": H3, "log_rhs_unbudgeted": float(rhs_unbudgeted)})


def bridge_constant(u, coeff, V, domain, z0, pairs, waive=False, quad=None, n=2):
    """Fitted C in sup_{B_r} |u| <= C (1 + |V|)^{n/2} (rho - r)^{-n/2} h(rho)^{1/2} over the given (r, rho) pairs."""
    Vinf = V.M
    best = 0.0
    for r, rho in pairs:
        sup = sup_norm(u, domain, z0, r)
        hr = plain_height(u, coeff, domain, z0, rho, quad, waive)
        if hr <= 0:
            continue
        best = max(best, sup * (rho - r) ** (n / 2) / ((1 + Vinf) ** (n / 2) * np.sqrt(hr)))
    return float(best)


def three_sphere_sup(u, coeff, V, domain, z0, r1, r2, r3, alpha=None, quad: QuadOptions | None = None,
                     waive_normalization=False) -> ThreeSphereReport:
    """Sup-norm three-sphere inequality with the predicted constant chained from fitted pieces."""
    _check_order(r1, r2, r3)
    n = coeff.n
    alpha = default_alpha(V.M) if alpha is None else float(alpha)
    z0 = np.asarray(z0, dtype=float)
    rho = (r2 + r3) / 3
    tr, mono, Cbar = _window(u, coeff, V, domain, z0, r1, r3, alpha, quad, waive_normalization)
    a1 = np.log(r3 / (2 * rho))
    b1 = Cbar**2 * np.log(2 * rho / r1)
    theta = b1 / (a1 + b1)
    Cpp = (Cbar + 1) / Cbar + 2
    sqrtM = np.sqrt(V.M)
    # h-version at (r1, rho, r3): fitted exponent constant
    h1, hrho, h3 = (plain_height(u, coeff, domain, z0, s, quad, waive_normalization) for s in (r1, rho, r3))
    C_h = max(0.0, float(np.log(hrho) - (Cpp * sqrtM * a1 + theta * np.log(h3) + (1 - theta) * np.log(h1))))
    pairs = [(r2, rho), (r1, (r1 + r2) / 2), (rho, (rho + r3) / 2)]
    C_bridge = bridge_constant(u, coeff, V, domain, z0, pairs, waive_normalization, quad, n)
    omega = np.pi if n == 2 else 4 * np.pi / 3
    cstar = c_star(n)
    C_pred = C_bridge * 3 ** (n / 2) * np.sqrt(omega / coeff.lam) * np.exp(C_h / 2)
    s1, s2, s3 = (sup_norm(u, domain, z0, s) for s in (r1, r2, r3))
    shape = (np.exp(cstar * sqrtM) * (r3 / (r3 - 2 * r2)) ** (n / 2) * (r3 / (2 * rho)) ** (Cpp * sqrtM)
             * s3**theta * s1 ** (1 - theta))
    rhs = C_pred * shape
    consts = {"Cbar": Cbar, "C2": mono.C2, "C_doubleprime": Cpp, "C_star": cstar, "C_h": C_h,
              "C_bridge": C_bridge, "C_pred": float(C_pred), "C_needed": float(s2 / shape) if shape > 0 else np.inf}
    return ThreeSphereReport((r1, r2, r3), float(a1), float(b1), float(s2), float(rhs), consts,
                             bool(s2 <= rhs * (1 + 1e-9)), {"sup(r1)": s1, "sup(r2)": s2, "sup(r3)": s3, "rho": rho})
