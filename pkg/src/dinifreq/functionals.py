"""Weighted height, energy and frequency of a solution over Omega ∩ B_r(z0), plus first-variation checks.

All integrals share one polar rule with weight (r^2 - |x - z0|^2)^alpha; the energy
densities carry one extra factor of that base, which is smooth, so a single pass
yields every functional at a radius.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .coefficients import CoefficientField, Potential, mu
from .errors import DomainError, HypothesisViolation
from .quadrature import QuadOptions, integrate_rule
from .regions import Disk, Region, TransformedRegion, WholePlane

GRID_TOL = 1e-3
H_FLOOR = 1e-300


def default_alpha(M: float) -> float:
    return float(np.sqrt(max(1.0, M)))


def _opts_for(u, quad: QuadOptions | None) -> QuadOptions:
    quad = quad or QuadOptions()
    if getattr(u, "kind", "closed_form") == "grid" and quad.tol < GRID_TOL:
        return QuadOptions(quad.angular, quad.radial, GRID_TOL, min(quad.max_angular, 256), min(quad.max_radial, 48))
    return quad


def _check_normalized(coeff: CoefficientField, z0, waive: bool):
    if waive:
        return
    Az = coeff.matrix(np.asarray(z0, dtype=float))
    if np.abs(Az - np.eye(coeff.n)).max() > 1e-12:
        raise HypothesisViolation("functionals need A(z0) = I; apply a normalization frame first")


@dataclass
class Moments:
    """Every integral at a single radius together with the quadrature that produced it."""

    H: float
    I: float
    alt: float
    radial_flux: float
    quad: dict


def moments(u, coeff: CoefficientField, V: Potential, domain: Region, z0, r: float, alpha: float,
            quad: QuadOptions | None = None, waive_normalization: bool = False) -> Moments:
    z0 = np.asarray(z0, dtype=float)
    _check_normalized(coeff, z0, waive_normalization)
    opts = _opts_for(u, quad)

    def dens(p, s):
        val = u(p)
        g = u.grad(p)
        Ag = np.einsum("nij,nj->ni", coeff.matrix(p), g)
        m = mu(coeff, z0, p)
        d = p - z0
        w = r * r - np.einsum("ni,ni->n", d, d)
        dAd = np.einsum("ni,ni->n", d, Ag)
        zu = dAd / m
        return np.stack([val * val * m,
                         (np.einsum("ni,ni->n", g, Ag) + V(p) * val * val) * w,
                         2 * (alpha + 1) * val * dAd,
                         zu * zu * m], axis=-1)

    res = integrate_rule(dens, domain, z0, r, alpha, opts)
    v = np.atleast_1d(res.value)
    meta = {"angular": res.angular, "radial": res.radial, "converged": res.converged,
            "rel_change": res.rel_change, "tol": opts.tol}
    return Moments(float(v[0]), float(v[1]), float(v[2]), float(v[3]), meta)


def height(u, coeff, domain, z0, r, alpha, quad=None, waive_normalization=False) -> float:
    z0 = np.asarray(z0, dtype=float)
    _check_normalized(coeff, z0, waive_normalization)
    res = integrate_rule(lambda p, s: u(p) ** 2 * mu(coeff, z0, p), domain, z0, r, alpha, _opts_for(u, quad))
    return float(res.value)


def energy(u, coeff, V, domain, z0, r, alpha, quad=None, waive_normalization=False) -> float:
    return moments(u, coeff, V, domain, z0, r, alpha, quad, waive_normalization).I


def alt_energy(u, coeff, domain, z0, r, alpha, quad=None, waive_normalization=False) -> float:
    """2(alpha+1) ∫ u <A Du, x - z0> w^alpha; equals the energy when u solves the equation and vanishes on the boundary."""
    z0 = np.asarray(z0, dtype=float)
    _check_normalized(coeff, z0, waive_normalization)

    def dens(p, s):
        Ag = np.einsum("nij,nj->ni", coeff.matrix(p), u.grad(p))
        return 2 * (alpha + 1) * u(p) * np.einsum("ni,ni->n", p - z0, Ag)

    return float(integrate_rule(dens, domain, z0, r, alpha, _opts_for(u, quad)).value)


def plain_height(u, coeff, domain, z0, r, quad=None, waive_normalization=False) -> float:
    """Unweighted ∫ u^2 mu over Omega ∩ B_r(z0)."""
    return height(u, coeff, domain, z0, r, 0.0, quad, waive_normalization)


def plain_G(u, domain, z0, s, alpha, quad=None) -> float:
    """∫ u^2 (s^2 - |x - z0|^2)^alpha without the conformal factor."""
    res = integrate_rule(lambda p, _: u(p) ** 2, domain, np.asarray(z0, dtype=float), s, alpha, _opts_for(u, quad))
    return float(res.value)


@dataclass
class FrequencyTrace:
    z0: np.ndarray
    radii: np.ndarray
    H: np.ndarray
    I: np.ndarray
    N: np.ndarray
    alpha: float
    valid: np.ndarray
    quad: list = field(default_factory=list)
    framed: bool = False
    M: float = 1.0

    def adjusted(self, C1: float, C2: float, M: float | None = None) -> np.ndarray:
        M = self.M if M is None else M
        return np.exp(C1 * self.radii) * (self.N + C2 * M * self.radii**2)

    def to_rows(self):
        return [(float(r), float(h), float(i), float(n), bool(v))
                for r, h, i, n, v in zip(self.radii, self.H, self.I, self.N, self.valid)]


def _check_radii(domain, radii):
    R = getattr(domain, "R0_effective", None)
    if R is not None and np.any(radii > R * (1 + 1e-12)):
        raise DomainError(f"radii must not exceed R0_effective = {R:.3e}")


def frequency_trace(u, coeff, V, domain, z0, radii, alpha=None, quad=None, waive_normalization=False,
                    framed=False) -> FrequencyTrace:
    radii = np.sort(np.asarray(radii, dtype=float))
    if np.any(radii <= 0):
        raise DomainError("radii must be positive")
    _check_radii(domain, radii)
    alpha = default_alpha(V.M) if alpha is None else float(alpha)
    Hs, Is, meta = [], [], []
    for r in radii:
        m = moments(u, coeff, V, domain, z0, r, alpha, quad, waive_normalization)
        Hs.append(m.H)
        Is.append(m.I)
        meta.append(m.quad)
    H, I = np.array(Hs), np.array(Is)
    # relative floor: H should scale like r^(2 alpha + 2) at worst polynomially; an absolute floor guards underflow
    valid = H > H_FLOOR
    with np.errstate(divide="ignore", invalid="ignore"):
        N = np.where(valid, I / np.where(valid, H, 1.0), np.nan)
    return FrequencyTrace(np.asarray(z0, dtype=float), radii, H, I, N, alpha, valid, meta, framed, V.M)


def variation_step(r: float, tol: float) -> float:
    return r * max(1e-4, 2 * tol ** (1 / 3))


def _central(fun, r, dr):
    return (fun(r + dr) - fun(r - dr)) / (2 * dr)


def height_variation_residual(u, coeff, V, domain, z0, r, alpha=None, dr=None, quad=None, richardson=True,
                              waive_normalization=False) -> float:
    """(H'(r) - (2 alpha + n) H / r - I / ((alpha + 1) r)) / H(r) with H' from central differences."""
    alpha = default_alpha(V.M) if alpha is None else float(alpha)
    quad = _opts_for(u, quad)
    dr = variation_step(r, quad.tol) if dr is None else dr
    n = coeff.n
    Hf = lambda s: height(u, coeff, domain, z0, s, alpha, quad, waive_normalization)
    m = moments(u, coeff, V, domain, z0, r, alpha, quad, waive_normalization)
    if m.H <= H_FLOOR:
        raise DomainError("height vanishes; the residual is undefined")
    d1 = _central(Hf, r, dr)
    if richardson:
        d1 = (4 * _central(Hf, r, dr / 2) - d1) / 3
    return (d1 - (2 * alpha + n) * m.H / r - m.I / ((alpha + 1) * r)) / m.H


@dataclass
class EnergyVariation:
    r: float
    dI: float
    base_rhs: float
    I: float
    H: float
    flux_term: float
    scale: float
    O1: float
    C: float
    M: float

    @property
    def slack(self) -> float:
        """LHS - RHS normalized by the size of the terms."""
        rhs = self.base_rhs - self.O1 * abs(self.I) - self.C * self.M * self.r * self.H
        return (self.dI - rhs) / self.scale


def star_condition(domain: Region, coeff: CoefficientField, z0, r: float, samples: int = 257) -> float:
    """Minimum of <A(x)(x - z0), nu(x)> over boundary samples in B_r(z0); nonnegative means star-shaped."""
    z0 = np.asarray(z0, dtype=float)
    if isinstance(domain, WholePlane):
        return np.inf
    base, frame = domain, None
    if isinstance(domain, TransformedRegion):
        base, frame = domain.base, domain.frame
    x0 = z0 if frame is None else frame.inverse(z0)
    reach = r if frame is None else r / np.sqrt(frame.lambda_z0)
    if isinstance(base, Disk):
        th = np.linspace(0, 2 * np.pi, 4 * samples, endpoint=False)
        nu = np.stack([np.cos(th), np.sin(th)], -1)
        pts = base.center + base.radius * nu
    elif hasattr(base, "phi"):
        xp = np.linspace(x0[0] - reach, x0[0] + reach, samples)
        R = getattr(getattr(base, "chart", None), "R0", None)
        if R is not None:
            xp = xp[np.abs(xp) <= R]
        dp = base.dphi(xp)
        pts = np.stack([xp, base.phi(xp)], -1)
        nu = np.stack([-dp, np.ones_like(dp)], -1) / np.sqrt(1 + dp * dp)[:, None]
    else:
        raise DomainError(f"no boundary description for region {base.name!r}")
    if frame is not None:
        pts = frame.forward(pts)
        nu = nu @ frame.S.T
        nu = nu / np.linalg.norm(nu, axis=-1, keepdims=True)
    keep = np.linalg.norm(pts - z0, axis=-1) < r
    if not np.any(keep):
        return np.inf
    pts, nu = pts[keep], nu[keep]
    Ad = np.einsum("nij,nj->ni", coeff.matrix(pts), pts - z0)
    return float(np.einsum("ni,ni->n", Ad, nu).min())


def energy_variation_check(u, coeff, V, domain, z0, r, alpha=None, dr=None, quad=None, O1=0.0, C=0.0,
                           richardson=True, waive_normalization=False) -> EnergyVariation:
    """Compare I'(r) with ((2a+n)/r) I + (4(a+1)/r) ∫ (Z.Du)^2 mu w^a, less the O(1) I and C M r H allowances."""
    alpha = default_alpha(V.M) if alpha is None else float(alpha)
    quad = _opts_for(u, quad)
    margin = star_condition(domain, coeff, z0, r)
    if margin < -1e-12 * r:
        raise HypothesisViolation(f"hypothesis violated: star-shape margin {margin:.3e} < 0")
    dr = variation_step(r, quad.tol) if dr is None else dr
    n = coeff.n
    m = moments(u, coeff, V, domain, z0, r, alpha, quad, waive_normalization)
    if m.H <= H_FLOOR:
        raise DomainError("degenerate field: the height vanishes")
    If = lambda s: moments(u, coeff, V, domain, z0, s, alpha, quad, waive_normalization).I
    dI = _central(If, r, dr)
    if richardson:
        dI = (4 * _central(If, r, dr / 2) - dI) / 3
    base = (2 * alpha + n) / r * m.I + 4 * (alpha + 1) / r * m.radial_flux
    scale = abs(dI) + abs(base) + abs(m.I) / r + V.M * r * m.H + 1e-300
    return EnergyVariation(r, dI, base, m.I, m.H, m.radial_flux, scale, O1, C, V.M)


def fit_variation_constants(reports: list[EnergyVariation]) -> tuple[float, float]:
    """Smallest O1 + C (both >= 0) making every normalized slack nonnegative."""
    if not reports:
        raise DomainError("no reports to fit")
    base = np.array([(e.dI - e.base_rhs) / e.scale for e in reports])
    if np.all(base >= 0):
        return 0.0, 0.0
    a1 = np.array([abs(e.I) / e.scale for e in reports])
    a2 = np.array([e.M * e.r * e.H / e.scale for e in reports])
    res = linprog([1.0, 1.0], A_ub=-np.stack([a1, a2], -1), b_ub=base, bounds=[(0, None), (0, None)],
                  method="highs")
    if not res.success:
        raise DomainError(f"no admissible constants: {res.message}")
    return float(res.x[0]), float(res.x[1])
