"""Vanishing-order estimation from dyadic samples of G, family scans against sqrt(M), and the small-sup witness."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError
from ..functionals import default_alpha, plain_G
from ..quadrature import QuadOptions
from .ledger import fit_c2, k0_estimate
from ..geometry import growth_k
from .three_sphere import sup_norm

G_UNDERFLOW = 1e-290
MIN_SCALES = 4


@dataclass
class OrderEstimate:
    anchor: np.ndarray
    radii: np.ndarray
    G: np.ndarray
    slope: float
    intercept: float
    residual: float
    fitted_order: float
    alpha: float
    M: float
    log_ratios: np.ndarray
    Cbar: float
    predicted_bound: float
    passed: bool
    K0: float | None = None
    extra: dict = field(default_factory=dict)


def dyadic_iteration(u, coeff, V, domain, r0: float | None = None, q_max: int = 6, z0=None, alpha=None,
                     quad: QuadOptions | None = None, C_bound: float = 1.0) -> OrderEstimate:
    """G at r0 / 2^q, least-squares slope of log G against log radius, order = (slope - n - 2 alpha) / 2.

    ``r0`` defaults to R0_effective / 4 for Dini domains.  ``C_bound`` is the constant in the
    predicted bound C (1 + sqrt M) that the fitted order is compared with.
    """
    if r0 is None:
        if not hasattr(domain, "R0_effective"):
            raise DomainError("r0 is required for domains without an effective radius")
        r0 = domain.R0_effective / 4
    z0 = np.zeros(coeff.n) if z0 is None else np.asarray(z0, dtype=float)
    alpha = default_alpha(V.M) if alpha is None else float(alpha)
    radii, G = [], []
    for q in range(q_max + 1):
        s = r0 / 2**q
        g = plain_G(u, domain, z0, s, alpha, quad)
        if g <= G_UNDERFLOW:
            break
        radii.append(s)
        G.append(g)
    if len(G) < MIN_SCALES:
        raise DomainError(f"only {len(G)} usable scales; need {MIN_SCALES}")
    radii, G = np.array(radii), np.array(G)
    X = np.log(radii)
    Y = np.log(G)
    slope, intercept = np.polyfit(X, Y, 1)
    resid = float(np.sqrt(np.mean((Y - (slope * X + intercept)) ** 2)))
    n = coeff.n
    order = (slope - n - 2 * alpha) / 2
    ratios = Y[:-1] - Y[1:]
    sqrtM = np.sqrt(V.M)
    Cbar = float(np.max(ratios) / sqrtM)
    bound = C_bound * (1 + sqrtM)
    K0 = None
    if hasattr(domain, "R0_effective") and getattr(domain, "K1", None):
        K1 = domain.K1
        c2, _, _ = fit_c2(K1, growth_k(K1))
        K0, _ = k0_estimate(domain, c2, domain.R0_effective / 4)
    return OrderEstimate(z0, radii, G, float(slope), float(intercept), resid, float(order), alpha, V.M, ratios, Cbar,
                         float(bound), bool(order <= bound), K0)


@dataclass
class ScanRow:
    name: str
    kappa: int | None
    M: float
    sqrtM: float
    fitted_order: float
    ratio: float


def field_r0(u) -> float:
    """Outer radius for closed-form fields: keeps j * r small so the leading power dominates eigenfunctions."""
    j = getattr(u, "meta", {}).get("j")
    return 0.25 / j if j else 0.1


def eigen_r0(entry) -> float:
    return field_r0(entry.u)


def order_vs_M_scan(family, q_max: int = 6, r0=None, quad=None) -> dict:
    rows = []
    for e in family:
        rr = r0 if r0 is not None else eigen_r0(e)
        est = dyadic_iteration(e.u, e.coeff, e.potential, e.domain, rr, q_max, e.anchor, quad=quad)
        sq = float(np.sqrt(e.M))
        rows.append(ScanRow(e.name, e.kappa, float(e.M), sq, est.fitted_order, est.fitted_order / (1 + sq)))
    ratios = np.array([r.ratio for r in rows])
    return {"rows": rows, "max_ratio": float(ratios.max()), "bounded_by_one": bool(np.all(ratios <= 1.0))}


@dataclass
class SmallSup:
    epsilon: float
    normalizer: float
    r0: float


def small_sup_bound(u, domain, r0: float, x0=None) -> SmallSup:
    """sup of u / sup_{B_1}|u| over Omega ∩ B_{r0/4}(x0)."""
    x0 = np.zeros(2) if x0 is None else np.asarray(x0, dtype=float)
    norm = sup_norm(u, domain, x0, 1.0)
    if norm <= 0:
        raise DomainError("u vanishes on the unit ball; normalization is impossible")
    eps = sup_norm(u, domain, x0, r0 / 4) / norm
    return SmallSup(float(eps), float(norm), float(r0))


def fit_small_sup_family(eps, sqrtM) -> dict:
    """Fit log eps >= log L1 - L2 (sqrt M + 1): least-squares slope, then lower the intercept to cover every case."""
    x = np.asarray(sqrtM, dtype=float) + 1
    y = np.log(np.asarray(eps, dtype=float))
    if len(x) >= 2 and np.ptp(x) > 0:
        slope, icpt = np.polyfit(x, y, 1)
    else:
        slope, icpt = 0.0, float(y.mean())
    L2 = max(0.0, -float(slope))
    logL1 = float(np.min(y + L2 * x))
    return {"L1": float(np.exp(logL1)), "L2": L2, "slope": float(slope)}
