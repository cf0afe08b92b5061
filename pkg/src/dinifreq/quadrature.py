"""Polar quadrature for integrals over Omega ∩ B_r(z0) with weight (r^2 - |x - z0|^2)^alpha.

Each ray from the center is cut into the sub-intervals lying inside the region.
An interval that reaches the sphere |x - z0| = r carries the degenerate factor
(r - s)^alpha, which a Gauss-Jacobi rule absorbs exactly; intervals that stop at
the boundary of the region see a smooth weight and use Gauss-Legendre.  The
angular direction is split at the angles where the ray structure changes and
each piece gets composite Gauss-Legendre panels.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import betaln

from .errors import DomainError, NumericalError

PANEL = 8
FINE_ANGLES = 1024
MAX_CROSSINGS = 4
BISECT_STEPS = 56


@lru_cache(maxsize=256)
def gauss_jacobi(alpha: float, beta_exp: float, m: int):
    """Nodes and weights on (0, 1) for the weight (1 - t)^alpha t^beta_exp (Golub-Welsch)."""
    a, b = float(alpha), float(beta_exp)
    if a <= -1 or b <= -1:
        raise DomainError("exponents must exceed -1")
    if m < 1:
        raise DomainError("need at least one node")
    k = np.arange(m, dtype=float)
    s = 2 * k + a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        diag = (b * b - a * a) / (s * (s + 2))
    if abs(a + b) < 1e-14:
        diag[0] = (b - a) / (a + b + 2)
    kk = np.arange(1, m, dtype=float)
    ss = 2 * kk + a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        off2 = 4 * kk * (kk + a) * (kk + b) * (kk + a + b) / (ss**2 * (ss + 1) * (ss - 1))
    if m > 1:
        off2[0] = 4 * (1 + a) * (1 + b) / ((2 + a + b) ** 2 * (3 + a + b))
    if np.any(~np.isfinite(off2)) or np.any(off2 < 0) or np.any(~np.isfinite(diag)):
        raise NumericalError("Jacobi recurrence breakdown")
    x, V = eigh_tridiagonal(diag, np.sqrt(off2))
    w = np.exp(betaln(a + 1, b + 1)) * V[0, :] ** 2
    # eigenvalues ascend in x on [-1, 1]; map to t = (1 + x)/2
    return (1 + x) / 2, w


@lru_cache(maxsize=64)
def gauss_legendre(m: int):
    x, w = np.polynomial.legendre.leggauss(m)
    return (1 + x) / 2, w / 2


def _directions(thetas):
    return np.stack([np.cos(thetas), np.sin(thetas)], axis=-1)


def _ray_samples(r):
    lin = np.linspace(0.0, r, 129)[1:]
    geo = np.geomspace(1e-9 * r, r / 128, 24)
    return np.unique(np.concatenate([geo, lin]))


def ray_intervals(region, z0, thetas, r):
    """Inside-intervals of each ray, shape (T, 3) for starts and ends (NaN when absent)."""
    z0 = np.asarray(z0, dtype=float)
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    s = _ray_samples(r)
    d = _directions(thetas)
    lev = region.level(z0 + s[None, :, None] * d[:, None, :])
    inside = lev < 0
    change = inside[:, 1:] != inside[:, :-1]
    nchg = change.sum(axis=1)
    if np.any(nchg > MAX_CROSSINGS):
        bad = thetas[np.argmax(nchg > MAX_CROSSINGS)]
        raise NumericalError(f"more than {MAX_CROSSINGS} boundary crossings on the ray at angle {bad:.6f}")
    T = len(thetas)
    bnd = np.full((T, 2 + MAX_CROSSINGS), np.nan)
    off = inside[:, 0].astype(int)
    bnd[off == 1, 0] = 0.0
    if np.any(change):
        ti, ki = np.nonzero(change)
        lo, hi = s[ki].copy(), s[ki + 1].copy()
        lo_in = inside[ti, ki]
        dd = d[ti]
        for _ in range(BISECT_STEPS):
            mid = 0.5 * (lo + hi)
            mid_in = region.level(z0 + mid[:, None] * dd) < 0
            same = mid_in == lo_in
            lo = np.where(same, mid, lo)
            hi = np.where(same, hi, mid)
        rank = np.cumsum(change, axis=1)[ti, ki] - 1
        bnd[ti, off[ti] + rank] = 0.5 * (lo + hi)
    cnt = off + nchg
    last_in = inside[:, -1]
    bnd[np.nonzero(last_in)[0], cnt[last_in]] = r
    starts, ends = bnd[:, 0::2], bnd[:, 1::2]
    return starts, ends


def ray_clip(region, z0, theta, r):
    """First exit distance along the ray and whether the ray leaves the region before r."""
    starts, ends = ray_intervals(region, z0, np.atleast_1d(theta), r)
    st, en = starts[:, 0], ends[:, 0]
    rho = np.where(st == 0.0, en, 0.0)
    rho = np.where(np.isnan(rho), 0.0, rho)
    clipped = rho < r
    if np.ndim(theta) == 0:
        return float(rho[0]), bool(clipped[0])
    return rho, clipped


def _signature(starts, ends, r):
    valid = ~np.isnan(starts)
    n = valid.sum(axis=1)
    first0 = np.where(valid[:, 0], starts[:, 0] == 0.0, False)
    last_idx = np.clip(n - 1, 0, None)
    last_end = ends[np.arange(len(n)), last_idx]
    full = np.where(n > 0, last_end >= r, False)
    return n * 4 + 2 * first0 + full


def angular_breakpoints(region, z0, r, fine: int = FINE_ANGLES):
    """Angles in [0, 2pi) where the ray structure changes, plus region-supplied special angles."""
    th = np.linspace(0.0, 2 * np.pi, fine, endpoint=False)
    sig = _signature(*ray_intervals(region, z0, th, r), r)
    nxt = np.roll(sig, -1)
    idx = np.nonzero(sig != nxt)[0]
    pts = list(np.mod(np.asarray(region.special_angles(z0, r), dtype=float), 2 * np.pi))
    if len(idx):
        lo = th[idx].copy()
        hi = lo + 2 * np.pi / fine
        slo = sig[idx]
        for _ in range(52):
            mid = 0.5 * (lo + hi)
            smid = _signature(*ray_intervals(region, z0, mid, r), r)
            same = smid == slo
            lo = np.where(same, mid, lo)
            hi = np.where(same, hi, mid)
        pts.extend(np.mod(0.5 * (lo + hi), 2 * np.pi))
    pts = np.sort(np.asarray(pts, dtype=float))
    if len(pts) > 1:
        keep = np.concatenate([[True], np.diff(pts) > 1e-13])
        pts = pts[keep]
        if pts[-1] - pts[0] > 2 * np.pi - 1e-13:
            pts = pts[:-1]
    return pts


@dataclass
class BallQuadrature:
    z0: np.ndarray
    r: float
    alpha: float
    angular_count: int
    radial_count: int
    thetas: np.ndarray
    rho_max: np.ndarray
    clipped: np.ndarray
    points: np.ndarray
    weights: np.ndarray
    dist: np.ndarray

    def integrate(self, values):
        values = np.asarray(values, dtype=float)
        return np.tensordot(self.weights, values, axes=(0, 0))


def ball_rule(region, z0, r, alpha, angular=64, radial=24, breakpoints=None) -> BallQuadrature:
    z0 = np.asarray(z0, dtype=float)
    if alpha <= -1:
        raise DomainError("alpha must exceed -1")
    if r <= 0:
        raise DomainError("radius must be positive")
    if breakpoints is None:
        breakpoints = angular_breakpoints(region, z0, r)
    bp = np.asarray(breakpoints, dtype=float)
    if len(bp) == 0:
        bp = np.array([0.0])
    edges = np.concatenate([bp, [bp[0] + 2 * np.pi]])
    lengths = np.diff(edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    active = _signature(*ray_intervals(region, z0, mids, r), r) > 0
    total_panels = max(1, angular // PANEL)
    act_len = lengths[active].sum()
    gx, gw = gauss_legendre(PANEL)
    th_list, tw_list = [], []
    for a0, L, on in zip(edges[:-1], lengths, active):
        if not on:
            continue
        npan = max(1, int(round(total_panels * L / act_len)))
        pe = a0 + L * np.arange(npan + 1) / npan
        for p0, p1 in zip(pe[:-1], pe[1:]):
            th_list.append(p0 + (p1 - p0) * gx)
            tw_list.append((p1 - p0) * gw)
    if not th_list:
        empty = np.zeros((0, 2))
        return BallQuadrature(z0, r, alpha, angular, radial, np.zeros(0), np.zeros(0), np.zeros(0, bool),
                              empty, np.zeros(0), np.zeros(0))
    thetas = np.concatenate(th_list)
    tw = np.concatenate(tw_list)
    starts, ends = ray_intervals(region, z0, thetas, r)
    valid = ~np.isnan(starts)
    ray_idx, col = np.nonzero(valid)
    a = starts[ray_idx, col]
    b = ends[ray_idx, col]
    full = b >= r
    jx, jw = gauss_jacobi(float(alpha), 0.0, radial)
    lx, lw = gauss_legendre(radial)
    # full intervals: s = a + (r - a) t, (r^2 - s^2)^alpha = (r - a)^alpha (1 - t)^alpha (r + s)^alpha
    s_full = a[:, None] + (r - a)[:, None] * jx[None, :]
    with np.errstate(divide="ignore"):
        logw_full = ((alpha + 1) * np.log(np.maximum(r - a, 1e-300))[:, None]
                     + alpha * np.log(r + s_full) + np.log(s_full) + np.log(jw)[None, :])
    w_full = np.exp(logw_full)
    s_cl = a[:, None] + (b - a)[:, None] * lx[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        w_cl = (b - a)[:, None] * lw[None, :] * np.power(np.maximum(r * r - s_cl * s_cl, 0.0), alpha) * s_cl
    s_all = np.where(full[:, None], s_full, s_cl)
    w_all = np.where(full[:, None], w_full, w_cl) * tw[ray_idx][:, None]
    d = _directions(thetas)[ray_idx]
    pts = z0 + s_all[..., None] * d[:, None, :]
    rho = np.where(starts[:, 0] == 0.0, ends[:, 0], 0.0)
    rho = np.where(np.isnan(rho), 0.0, rho)
    return BallQuadrature(z0, float(r), float(alpha), angular, radial, thetas, rho, rho < r,
                          pts.reshape(-1, 2), w_all.reshape(-1), s_all.reshape(-1))


@dataclass(frozen=True)
class QuadOptions:
    angular: int = 64
    radial: int = 24
    tol: float = 1e-9
    max_angular: int = 1024
    max_radial: int = 192


@dataclass
class QuadResult:
    value: np.ndarray | float
    abs_value: np.ndarray | float
    angular: int
    radial: int
    converged: bool
    rel_change: float


def integrate_rule(f, region, z0, r, alpha, opts: QuadOptions = QuadOptions()) -> QuadResult:
    """Integrate f(points, dist) with doubling refinement; f may return stacked columns."""
    bp = angular_breakpoints(region, np.asarray(z0, dtype=float), r)
    A, R = opts.angular, opts.radial
    prev = None
    while True:
        rule = ball_rule(region, z0, r, alpha, A, R, bp)
        if len(rule.weights) == 0:
            vals = np.asarray(f(np.zeros((1, 2)) + np.asarray(z0, dtype=float), np.zeros(1)))
            zero = np.zeros(vals.shape[1:])
            return QuadResult(zero if zero.ndim else 0.0, zero if zero.ndim else 0.0, A, R, True, 0.0)
        vals = np.asarray(f(rule.points, rule.dist), dtype=float)
        cur = rule.integrate(vals)
        cur_abs = rule.integrate(np.abs(vals))
        if prev is not None:
            denom = np.maximum(np.abs(cur_abs), 1e-300)
            change = float(np.max(np.abs(cur - prev) / denom))
            done = change <= opts.tol
            if done or 2 * A > opts.max_angular or 2 * R > opts.max_radial:
                return QuadResult(cur if np.ndim(cur) else float(cur), cur_abs if np.ndim(cur_abs) else float(cur_abs),
                                  A, R, bool(done), change)
        prev = cur
        A, R = 2 * A, 2 * R


def integrate_ball(f, domain, z0, r, alpha, angular=64, radial=24, tol=1e-9,
                   max_angular=1024, max_radial=192):
    """Integral of f over domain ∩ B_r(z0) against (r^2 - |x - z0|^2)^alpha.

    ``f`` maps points of shape (N, 2) to values of shape (N,) or (N, k).
    """
    opts = QuadOptions(angular, radial, tol, max_angular, max_radial)
    res = integrate_rule(lambda p, s: f(p), domain, z0, r, alpha, opts)
    return res.value
