"""Boundary charts with Dini-continuous normals, the oscillation majorant and star-shape checks.

All charts are planar: the domain near the origin is ``{x_2 < phi(x_1)}`` with
``phi(0) = phi'(0) = 0``.  The normal oscillation majorant is built once from a
fixed, dense boundary sample and then read off by binary search.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from .errors import DomainError
from .regions import Region

SLOPE_FACTOR_CAP = 1.5          # sup sqrt(1 + phi'^2) allowed on the chart
OSCILLATION_CAP = 1e-3          # strict upper bound on the majorant at R0
EDGE_CLIP = 0.95                # boundary sampling stays inside this fraction of the chart
SAMPLES_PER_SIDE = 256          # per dyadic scale and per side of the origin
N_SCALES = 200
SAMPLING_MARGIN = 2.0**-24      # R0_effective must sit this far above the smallest sample


@dataclass(frozen=True)
class DiniModulus:
    """Nondecreasing modulus psi with a finite Dini integral near zero.

    ``power``: psi(r) = scale * r**beta.  ``log_power``: psi(r) = log(2e/r)**-(1+delta).
    ``custom``: table of (r, psi) pairs, linear in log r, linear to zero below the table.
    """

    kind: str
    beta: float | None = None
    delta: float | None = None
    table: tuple = ()
    R0_cap: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if self.kind == "power":
            if self.beta is None or not (0.0 < self.beta <= 1.0):
                raise DomainError(f"power modulus needs beta in (0, 1], got {self.beta}")
        elif self.kind == "log_power":
            if self.delta is None or self.delta <= 0.0:
                raise DomainError(f"log_power modulus needs delta > 0, got {self.delta}")
            if self.R0_cap >= 2.0 * np.e:
                raise DomainError("log_power modulus is only defined below 2e")
        elif self.kind == "custom":
            tab = np.asarray(self.table, dtype=float)
            if tab.ndim != 2 or tab.shape[1] != 2 or len(tab) < 2:
                raise DomainError("custom modulus needs a table of at least two (r, psi) rows")
            if np.any(np.diff(tab[:, 0]) <= 0) or np.any(tab[:, 0] <= 0):
                raise DomainError("custom modulus radii must be positive and increasing")
            if np.any(np.diff(tab[:, 1]) < 0) or np.any(tab[:, 1] < 0):
                raise DomainError("custom modulus values must be nonnegative and nondecreasing")
        else:
            raise DomainError(f"unknown modulus kind {self.kind!r}")

    def psi(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "power":
            return self.scale * np.power(np.maximum(r, 0.0), self.beta)
        if self.kind == "log_power":
            with np.errstate(divide="ignore"):
                L = np.log(2.0 * np.e / np.maximum(r, 1e-300))
            return np.where(r > 0, L ** (-(1.0 + self.delta)), 0.0)
        tab = np.asarray(self.table, dtype=float)
        rs, ps = tab[:, 0], tab[:, 1]
        out = np.interp(np.log(np.maximum(r, 1e-300)), np.log(rs), ps)
        below = r < rs[0]
        return np.where(below, ps[0] * np.maximum(r, 0.0) / rs[0], out)


@dataclass(frozen=True)
class DiniIntegral:
    value: float
    limit: float


def dini_integral(modulus: DiniModulus, eps: float, upper: float) -> DiniIntegral:
    """Integral of psi(r)/r over [eps, upper] together with its eps -> 0 limit."""
    if not (0.0 < eps < upper):
        raise DomainError(f"need 0 < eps < upper, got eps={eps}, upper={upper}")
    if modulus.kind == "power":
        b = modulus.beta
        lim = modulus.scale * upper**b / b
        return DiniIntegral(modulus.scale * (upper**b - eps**b) / b, lim)
    if modulus.kind == "log_power":
        d = modulus.delta
        L = lambda r: np.log(2.0 * np.e / r)
        lim = L(upper) ** (-d) / d
        return DiniIntegral(float(lim - L(eps) ** (-d) / d), float(lim))
    return DiniIntegral(_custom_integral(modulus, eps, upper), _custom_integral(modulus, 0.0, upper))


def _custom_integral(modulus, lo, hi):
    tab = np.asarray(modulus.table, dtype=float)
    rs, ps = tab[:, 0], tab[:, 1]
    total = 0.0
    # below the table psi/r is constant
    if lo < rs[0]:
        total += ps[0] / rs[0] * (min(hi, rs[0]) - lo)
    a, b = max(lo, rs[0]), min(hi, rs[-1])
    if a < b:
        # psi is linear in log r between knots, so the trapezoid rule in log r is exact
        knots = np.unique(np.concatenate([[a, b], rs[(rs > a) & (rs < b)]]))
        pk = modulus.psi(knots)
        total += float(np.sum(0.5 * (pk[1:] + pk[:-1]) * np.diff(np.log(knots))))
    if hi > rs[-1]:
        total += ps[-1] * np.log(hi / max(lo, rs[-1]))
    return float(total)


def _upper_gamma(s, x):
    """Upper incomplete gamma for real s (possibly negative), x > 0."""
    if s > 0:
        return special.gammaincc(s, x) * special.gamma(s)
    if s == 0:
        return special.exp1(x)
    # Gamma(s, x) = (Gamma(s+1, x) - x**s e^-x) / s
    return (_upper_gamma(s + 1.0, x) - np.power(x, s) * np.exp(-x)) / s


@dataclass(frozen=True)
class BoundaryChart:
    phi: Callable
    dphi: Callable
    modulus: DiniModulus
    R0: float
    name: str = "chart"
    spec: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if abs(float(self.phi(np.array(0.0)))) > 1e-15 or abs(float(self.dphi(np.array(0.0)))) > 1e-15:
            raise DomainError("chart must satisfy phi(0) = 0 and phi'(0) = 0")
        xs = np.linspace(-self.R0, self.R0, 4001)
        factor = np.sqrt(1.0 + self.dphi(xs) ** 2).max()
        if factor > SLOPE_FACTOR_CAP + 1e-12:
            raise DomainError(f"chart slope too large: sup sqrt(1+phi'^2) = {factor:.4f} > 3/2")


def flat_chart(R0: float = 0.5) -> BoundaryChart:
    mod = DiniModulus("power", beta=1.0, R0_cap=R0)
    return BoundaryChart(np.zeros_like, np.zeros_like, mod, R0, "flat", {"kind": "flat", "R0": R0})


def power_chart(beta: float, R0: float = 0.5, coef: float | None = None) -> BoundaryChart:
    """phi = coef |x|^(1+beta).  The default coefficient makes psi(r) = r^beta sharp."""
    if coef is None:
        coef = 2.0 ** (beta - 1.0) / (1.0 + beta)
    # opposite-side pairs give |phi'(a) - phi'(b)| <= coef (1+beta) 2^(1-beta) |a-b|^beta
    scale = coef * (1.0 + beta) * 2.0 ** (1.0 - beta)
    mod = DiniModulus("power", beta=beta, R0_cap=R0, scale=scale)
    phi = lambda x: coef * np.abs(np.asarray(x, dtype=float)) ** (1.0 + beta)
    dphi = lambda x: coef * (1.0 + beta) * np.sign(x) * np.abs(np.asarray(x, dtype=float)) ** beta
    spec = {"kind": "power", "beta": beta, "R0": R0, "coef": coef}
    return BoundaryChart(phi, dphi, mod, R0, f"power{beta:g}", spec)


def log_power_chart(delta: float, R0: float = 0.25) -> BoundaryChart:
    """phi' = sgn(x) psi(|x|)/2 with the log-power modulus; phi from an incomplete gamma."""
    mod = DiniModulus("log_power", delta=delta, R0_cap=R0)

    def dphi(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * np.sign(x) * mod.psi(np.abs(x))

    def phi(x):
        t = np.abs(np.asarray(x, dtype=float))
        flat = t.reshape(-1)
        out = np.zeros_like(flat)
        pos = flat > 0
        if np.any(pos):
            out[pos] = np.e * _upper_gamma(-delta, np.log(2.0 * np.e / flat[pos]))
        return out.reshape(t.shape)

    spec = {"kind": "log_power", "delta": delta, "R0": R0}
    return BoundaryChart(phi, dphi, mod, R0, f"logpow{delta:g}", spec)


def custom_chart(table, R0: float) -> BoundaryChart:
    """phi' = sgn(x) psi(|x|)/2 for a tabulated modulus; phi by cumulative quadrature.

    Below the first tabulated radius r_0 the modulus is linear, so phi = psi_0 x^2 / (4 r_0) there exactly.
    """
    mod = DiniModulus("custom", table=tuple(map(tuple, table)), R0_cap=R0)
    r_first, psi_first = float(table[0][0]), float(table[0][1])
    grid = np.geomspace(r_first, max(1.2 * R0, 2 * r_first), 20000)
    g = 0.5 * mod.psi(grid)
    cum = 0.25 * psi_first * r_first + np.concatenate(
        [[0.0], np.cumsum(0.5 * (g[1:] + g[:-1]) * np.diff(grid))])

    def dphi(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * np.sign(x) * mod.psi(np.abs(x))

    def phi(x):
        t = np.abs(np.asarray(x, dtype=float))
        return np.where(t < r_first, 0.25 * psi_first / r_first * t * t, np.interp(t, grid, cum))

    spec = {"kind": "custom", "table": [list(map(float, row)) for row in table], "R0": R0}
    return BoundaryChart(phi, dphi, mod, R0, "custom", spec)


def chart_from_spec(spec: dict) -> BoundaryChart:
    kind = spec.get("kind")
    R0 = float(spec.get("R0", 0.5))
    if kind == "flat":
        return flat_chart(R0)
    if kind == "power":
        return power_chart(float(spec["beta"]), R0, spec.get("coef"))
    if kind == "log_power":
        return log_power_chart(float(spec["delta"]), float(spec.get("R0", 0.25)))
    if kind == "custom":
        return custom_chart(spec["table"], R0)
    raise DomainError(f"unknown chart kind {kind!r}")


def normal_at(chart: BoundaryChart, xprime) -> np.ndarray:
    """Outward unit normal at (x', phi(x')); vectorized over x'."""
    xp = np.asarray(xprime, dtype=float)
    if np.any(np.abs(xp) > chart.R0 * (1 + 1e-12)):
        raise DomainError(f"point outside the chart |x'| <= {chart.R0}")
    g = chart.dphi(xp)
    s = np.sqrt(1.0 + g * g)
    return np.stack([-g / s, 1.0 / s], axis=-1)


def fr3_cap(K1: float) -> float:
    k = growth_k(K1)
    return min(1.0 / (24.0 * K1 + 64.0 * k), OSCILLATION_CAP)


def growth_k(K1: float) -> float:
    K2 = 1.0 + K1
    return 8.0 * K2 * (K2 / K1 + 3.0)


@dataclass
class DiniDomain(Region):
    """A chart together with its sampled oscillation majorant and the effective radius."""

    chart: BoundaryChart
    K1: float | None
    R0_effective: float
    binding: str
    sample_radius: np.ndarray      # |x| of boundary samples, ascending
    sample_dev: np.ndarray         # normal oscillation over samples with |x| <= radius
    sample_xprime: np.ndarray
    name: str = "dini"

    @classmethod
    def build(cls, chart: BoundaryChart, K1: float | None = 0.5) -> "DiniDomain":
        top = EDGE_CLIP * chart.R0
        i = np.arange(SAMPLES_PER_SIDE)
        scales = top * 2.0 ** -np.arange(N_SCALES)
        mags = (scales[:, None] * (1.0 - i[None, :] / (2.0 * SAMPLES_PER_SIDE))).ravel()
        xp = np.concatenate([mags, -mags, [0.0]])
        ang = np.arctan(chart.dphi(xp))
        rad = np.hypot(xp, chart.phi(xp))
        order = np.argsort(rad, kind="stable")
        rad, ang, xp = rad[order], ang[order], xp[order]
        spread = np.maximum.accumulate(ang) - np.minimum.accumulate(ang)
        dev = 2.0 * np.sin(0.5 * spread)
        dom = cls(chart, K1, np.nan, "", rad, dev, xp)
        cap = OSCILLATION_CAP if K1 is None else fr3_cap(K1)
        binding = "oscillation<1/1000" if (K1 is None or cap >= OSCILLATION_CAP) else "fr3"
        j = 0
        while True:
            r = 2.0 ** -j
            if r <= top:
                lam = dom._lambda(r)
                if lam < OSCILLATION_CAP and lam <= cap:
                    break
            j += 1
            if 2.0 ** -j < rad[1] / SAMPLING_MARGIN:
                raise DomainError("no admissible effective radius within the sampled range")
        dom.R0_effective = r
        dom.binding = binding
        return dom

    def _lambda(self, r):
        r = np.asarray(r, dtype=float)
        idx = np.searchsorted(self.sample_radius, r, side="left") - 1
        dev = np.where(idx >= 0, self.sample_dev[np.clip(idx, 0, None)], 0.0)
        return np.maximum(dev, np.sqrt(r))

    def oscillation(self, r):
        """Sampled normal oscillation over boundary points with |x| < r (no floor)."""
        r = np.asarray(r, dtype=float)
        idx = np.searchsorted(self.sample_radius, r, side="left") - 1
        return np.where(idx >= 0, self.sample_dev[np.clip(idx, 0, None)], 0.0)

    def level(self, x):
        x = np.asarray(x, dtype=float)
        return x[..., 1] - self.chart.phi(x[..., 0])

    def phi(self, xp):
        return self.chart.phi(xp)

    def dphi(self, xp):
        return self.chart.dphi(xp)

    @property
    def smallest_sampled_radius(self):
        return float(self.sample_radius[1])


def lambda_of(domain: DiniDomain, r, strict: bool = True):
    """Normal-oscillation majorant max(sampled oscillation, sqrt r).

    ``strict=False`` admits radii up to the sampled range instead of R0_effective.
    """
    r_arr = np.asarray(r, dtype=float)
    hi = domain.R0_effective if strict else EDGE_CLIP * domain.chart.R0
    if np.any(r_arr <= 0) or np.any(r_arr > hi * (1 + 1e-12)):
        raise DomainError(f"radius outside (0, {hi:g}]")
    out = domain._lambda(r_arr)
    return float(out) if out.ndim == 0 else out


def interior_anchor(domain: DiniDomain, r: float) -> np.ndarray:
    a = 4.0 * lambda_of(domain, r) * r
    return np.array([0.0, -a])


@dataclass(frozen=True)
class StarMargin:
    lo: float
    hi: float
    passed: bool


def _boundary_points(domain, r, samples):
    chart = domain.chart
    xp = np.linspace(-r, r, samples)
    pts = np.stack([xp, chart.phi(xp)], axis=-1)
    keep = np.linalg.norm(pts, axis=-1) < r
    if not np.any(keep):
        raise DomainError("no boundary samples inside the ball")
    return xp[keep], pts[keep]


def star_shape_margin(domain: DiniDomain, r: float, samples: int = 257) -> StarMargin:
    """Range of <x - y0, nu(x)> / (r Lambda(r)) over boundary points in B_r."""
    if samples < 16:
        raise DomainError("need at least 16 samples")
    lam = lambda_of(domain, r)
    y0 = interior_anchor(domain, r)
    xp, pts = _boundary_points(domain, r, samples)
    nu = normal_at(domain.chart, xp)
    vals = np.einsum("ij,ij->i", pts - y0, nu) / (r * lam)
    lo, hi = float(vals.min()), float(vals.max())
    return StarMargin(lo, hi, lo >= 0.5 and hi <= 10.0)


def generalized_star_margin(domain: DiniDomain, coeff, r: float, samples: int = 257):
    """Minimum of <A_{y0}(y) y, N~(y)> over transformed boundary points in B_{sqrt(lam)(r-a)}.

    With y = T(x) and N~ = A(y0)^{1/2} nu(x) the product equals <A(x) A(y0)^{-1} (x - y0), nu(x)>.
    Returns (min value, pass flag).  The product has units of length, so the flag tolerates -1e-12 r.
    """
    from .coefficients import make_frame

    if samples < 16:
        raise DomainError("need at least 16 samples")
    y0 = interior_anchor(domain, r)
    a = -y0[1]
    frame = make_frame(coeff, y0)
    radius = np.sqrt(coeff.lam) * (r - a)
    # preimage of B_radius lies in B_{radius / sqrt(lam_y0)}(y0)
    reach = radius / np.sqrt(frame.lambda_z0) + a
    xp = np.linspace(-reach, reach, samples)
    xp = xp[np.abs(xp) <= domain.chart.R0]
    pts = np.stack([xp, domain.chart.phi(xp)], axis=-1)
    y = frame.forward(pts)
    keep = np.linalg.norm(y, axis=-1) < radius
    if not np.any(keep):
        raise DomainError("no boundary samples inside the transformed window")
    x, yk = pts[keep], y[keep]
    nu = normal_at(domain.chart, xp[keep])
    Ay = np.einsum("ij,njk,kl->nil", frame.Sinv, coeff.matrix(x), frame.Sinv)
    Ntil = nu @ frame.S.T
    vals = np.einsum("nij,nj,ni->n", Ay, yk, Ntil)
    vmin = float(vals.min())
    return vmin, vmin >= -1e-12 * r
