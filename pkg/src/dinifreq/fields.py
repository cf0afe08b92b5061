"""Solution fields: closed-form catalog entries and their pushed-forward versions.

Every field is vectorized over points of shape ``(..., 2)``.  The half-plane
entries live in the chart orientation ``{x_2 < 0}`` and vanish on ``x_2 = 0``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .bessel import MAX_ORDER, MAX_ZERO_INDEX, bessel_zero, series_coefficients
from .coefficients import (CoefficientField, NormalizationFrame, Potential, affine_field,
                           constant_potential, identity_field, push_matrix, push_potential)
from .errors import DomainError
from .regions import Disk, HalfPlane, Region, TransformedRegion, WholePlane


@dataclass
class SolutionField:
    eval_fn: Callable
    grad_fn: Callable
    domain: Region
    potential: Potential
    coeff: CoefficientField
    kind: str = "closed_form"
    hess_fn: Callable | None = None
    name: str = "u"
    meta: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.eval_fn(np.asarray(x, dtype=float))

    def grad(self, x):
        return self.grad_fn(np.asarray(x, dtype=float))

    def hess(self, x, h: float = 1e-5):
        x = np.asarray(x, dtype=float)
        if self.hess_fn is not None:
            return self.hess_fn(x)
        cols = []
        for k in range(x.shape[-1]):
            e = np.zeros(x.shape[-1])
            e[k] = h
            cols.append((self.grad(x + e) - self.grad(x - e)) / (2 * h))
        H = np.stack(cols, axis=-1)
        return 0.5 * (H + np.swapaxes(H, -1, -2))

    def scaled(self, c: float) -> "SolutionField":
        h = self.hess_fn
        return replace(self, eval_fn=lambda x: c * self.eval_fn(x), grad_fn=lambda x: c * self.grad_fn(x),
                       hess_fn=None if h is None else (lambda x: c * h(x)), name=f"{c:g}*{self.name}")


@dataclass
class CatalogEntry:
    name: str
    u: SolutionField
    coeff: CoefficientField
    potential: Potential
    kappa: int | None
    anchor: np.ndarray
    anchor_kind: str
    dimension: int = 2

    @property
    def M(self) -> float:
        return self.potential.M

    @property
    def domain(self) -> Region:
        return self.u.domain


def _cplx(x):
    return x[..., 0] + 1j * x[..., 1]


def _imz_parts(x, kappa):
    """Im z^k, its gradient and Hessian."""
    z = _cplx(x)
    P = np.imag(z**kappa)
    if kappa == 0:
        zero = np.zeros(x.shape[:-1])
        return P, np.zeros(x.shape), np.zeros(x.shape + (2,))
    w = kappa * z ** (kappa - 1)
    g = np.stack([np.imag(w), np.real(w)], axis=-1)
    if kappa == 1:
        H = np.zeros(x.shape + (2,))
    else:
        q = kappa * (kappa - 1) * z ** (kappa - 2)
        a, b = np.imag(q), np.real(q)
        H = np.stack([np.stack([a, b], -1), np.stack([b, -a], -1)], -2)
    return P, g, H


def catalog_homogeneous(kappa: int) -> CatalogEntry:
    """u = Im((x1 - i x2)^kappa) = -Im z^kappa on {x2 < 0}; vanishing order kappa at 0."""
    if kappa < 1:
        raise DomainError("kappa must be a positive integer")
    u = SolutionField(lambda x: -_imz_parts(x, kappa)[0],
                      lambda x: -_imz_parts(x, kappa)[1],
                      HalfPlane(), constant_potential(0.0), identity_field(),
                      hess_fn=lambda x: -_imz_parts(x, kappa)[2], name=f"imz_kappa{kappa}")
    return CatalogEntry(u.name, u, u.coeff, u.potential, kappa, np.zeros(2), "boundary")


def catalog_disk_eigen(kappa: int, m: int) -> CatalogEntry:
    """Dirichlet eigenfunction J_k(j s) sin(k theta) of the unit disk, written as a polynomial series.

    For kappa = 0 the angular factor is 1 (the radial mode).
    """
    if not (0 <= kappa <= MAX_ORDER and 1 <= m <= MAX_ZERO_INDEX):
        raise DomainError(f"(kappa, m) = ({kappa}, {m}) outside the envelope kappa <= 12, m <= 3")
    j = bessel_zero(kappa, m)
    c = series_coefficients(kappa, j)
    dc = c[1:] * np.arange(1, len(c))
    ddc = dc[1:] * np.arange(1, len(dc))

    def radial(x, coefs):
        rho2 = x[..., 0] ** 2 + x[..., 1] ** 2
        out = np.zeros_like(rho2)
        for ck in coefs[::-1]:
            out = out * rho2 + ck
        return out

    def angular(x):
        if kappa == 0:
            return np.ones(x.shape[:-1]), np.zeros(x.shape), np.zeros(x.shape + (2,))
        return _imz_parts(x, kappa)

    def ev(x):
        return radial(x, c) * angular(x)[0]

    def gr(x):
        P, gP, _ = angular(x)
        return (2 * radial(x, dc) * P)[..., None] * x + radial(x, c)[..., None] * gP

    def he(x):
        P, gP, HP = angular(x)
        S, S1, S2 = radial(x, c), radial(x, dc), radial(x, ddc)
        xx = np.einsum("...i,...j->...ij", x, x)
        xg = np.einsum("...i,...j->...ij", x, gP)
        I = np.eye(2)
        return ((4 * S2 * P)[..., None, None] * xx + (2 * S1 * P)[..., None, None] * I
                + (2 * S1)[..., None, None] * (xg + np.swapaxes(xg, -1, -2)) + S[..., None, None] * HP)

    V = constant_potential(-j * j)
    name = f"disk_eigen_k{kappa}_m{m}"
    u = SolutionField(ev, gr, Disk(), V, identity_field(), hess_fn=he, name=name, meta={"j": j})
    return CatalogEntry(name, u, u.coeff, V, kappa, np.zeros(2), "interior")


def catalog_expsin(xi: float = 1.0, omega: float = 2.0) -> CatalogEntry:
    """u = e^{xi x1} sin(-omega x2) on {x2 < 0}: Laplacian equals (xi^2 - omega^2) u."""
    def ev(x):
        return np.exp(xi * x[..., 0]) * np.sin(-omega * x[..., 1])

    def gr(x):
        e = np.exp(xi * x[..., 0])
        return np.stack([xi * e * np.sin(-omega * x[..., 1]), -omega * e * np.cos(-omega * x[..., 1])], -1)

    Vc = xi * xi - omega * omega
    V = constant_potential(Vc)
    u = SolutionField(ev, gr, HalfPlane(), V, identity_field(), name="expsin")
    return CatalogEntry("expsin", u, u.coeff, V, 1, np.zeros(2), "boundary")


def _scalar_affine(slope=0.1):
    return affine_field(np.eye(2), np.stack([slope * np.eye(2), np.zeros((2, 2))]), 1.0, "affine_scalar")


def catalog_affine_x2() -> CatalogEntry:
    """A = (1 + 0.1 x1) I and u = -x2."""
    u = SolutionField(lambda x: -x[..., 1],
                      lambda x: np.stack([np.zeros(x.shape[:-1]), -np.ones(x.shape[:-1])], -1),
                      HalfPlane(), constant_potential(0.0), _scalar_affine(),
                      hess_fn=lambda x: np.zeros(x.shape + (2,)), name="affine_x2")
    return CatalogEntry(u.name, u, u.coeff, u.potential, 1, np.zeros(2), "boundary")


def catalog_affine_x2log() -> CatalogEntry:
    """A = (1 + 0.1 x1) I and u = -10 x2 log(1 + 0.1 x1); order two at the origin."""
    def ev(x):
        return -10.0 * x[..., 1] * np.log1p(0.1 * x[..., 0])

    def gr(x):
        return np.stack([-x[..., 1] / (1 + 0.1 * x[..., 0]), -10.0 * np.log1p(0.1 * x[..., 0])], -1)

    u = SolutionField(ev, gr, HalfPlane(), constant_potential(0.0), _scalar_affine(), name="affine_x2log")
    return CatalogEntry(u.name, u, u.coeff, u.potential, 2, np.zeros(2), "boundary")


def catalog_diag_x2() -> CatalogEntry:
    """A = diag(2 + 0.1 x1, 1 + 0.1 x1), u = -x2.  A(0) is not the identity."""
    slopes = np.stack([0.1 * np.eye(2), np.zeros((2, 2))])
    coeff = affine_field(np.diag([2.0, 1.0]), slopes, 1.0, "diag_affine")
    u = SolutionField(lambda x: -x[..., 1],
                      lambda x: np.stack([np.zeros(x.shape[:-1]), -np.ones(x.shape[:-1])], -1),
                      HalfPlane(), constant_potential(0.0), coeff,
                      hess_fn=lambda x: np.zeros(x.shape + (2,)), name="diag_x2")
    return CatalogEntry(u.name, u, coeff, u.potential, 1, np.zeros(2), "boundary")


def catalog_const_one() -> CatalogEntry:
    u = SolutionField(lambda x: np.ones(x.shape[:-1]), lambda x: np.zeros(x.shape),
                      WholePlane(), constant_potential(0.0), identity_field(),
                      hess_fn=lambda x: np.zeros(x.shape + (2,)), name="const_one")
    return CatalogEntry(u.name, u, u.coeff, u.potential, 0, np.zeros(2), "interior")


def catalog_bumps(seed: int = 0, count: int = 6) -> CatalogEntry:
    """A sum of random Gaussian bumps.  Not a solution of any equation in the catalog."""
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-0.5, 0.5, size=(count, 2))
    amps = rng.uniform(-1.0, 1.0, size=count)
    widths = rng.uniform(0.05, 0.2, size=count)

    def ev(x):
        d2 = ((x[..., None, :] - centers) ** 2).sum(-1)
        return (amps * np.exp(-d2 / widths**2)).sum(-1)

    def gr(x):
        d = x[..., None, :] - centers
        e = amps * np.exp(-(d**2).sum(-1) / widths**2)
        return (-2 * e[..., None] * d / widths[:, None] ** 2).sum(-2)

    u = SolutionField(ev, gr, WholePlane(), constant_potential(0.0), identity_field(), name=f"bumps{seed}")
    return CatalogEntry(u.name, u, u.coeff, u.potential, None, np.zeros(2), "interior")


CLOSED_FORM_NAMES = ("imz_kappa1", "imz_kappa2", "imz_kappa3", "imz_kappa5", "disk_eigen_k1_m1",
                     "disk_eigen_k2_m1", "expsin", "affine_x2", "affine_x2log", "diag_x2", "const_one")


def catalog(name: str) -> CatalogEntry:
    m = re.fullmatch(r"imz_kappa(\d+)", name)
    if m:
        return catalog_homogeneous(int(m.group(1)))
    m = re.fullmatch(r"disk_eigen_k(\d+)_m(\d+)", name)
    if m:
        return catalog_disk_eigen(int(m.group(1)), int(m.group(2)))
    m = re.fullmatch(r"bumps(\d*)", name)
    if m:
        return catalog_bumps(int(m.group(1) or 0))
    table = {"expsin": catalog_expsin, "affine_x2": catalog_affine_x2, "affine_x2log": catalog_affine_x2log,
             "diag_x2": catalog_diag_x2, "const_one": catalog_const_one}
    if name not in table:
        raise DomainError(f"unknown catalog entry {name!r}")
    return table[name]()


def push_field(u: SolutionField, frame: NormalizationFrame) -> SolutionField:
    """Compose with the inverse frame map; gradients pick up the factor A(z0)^{1/2}."""
    S = frame.S
    h = u.hess_fn
    return SolutionField(
        lambda y: u(frame.inverse(y)),
        lambda y: u.grad(frame.inverse(y)) @ S.T,
        TransformedRegion(u.domain, frame),
        push_potential(u.potential, frame, u.coeff.lam),
        push_matrix(u.coeff, frame),
        kind=u.kind,
        hess_fn=None if h is None else (lambda y: S @ h(frame.inverse(y)) @ S),
        name=f"{u.name}@frame",
        meta={**u.meta, "frame_z0": frame.z0.tolist()},
    )


def push_entry(entry: CatalogEntry, frame: NormalizationFrame) -> CatalogEntry:
    pu = push_field(entry.u, frame)
    return CatalogEntry(pu.name, pu, pu.coeff, pu.potential, entry.kappa, frame.forward(entry.anchor),
                        entry.anchor_kind)


def pde_residual(u: SolutionField, x, h: float = 1e-4, source: Callable | None = None):
    """div(A grad u) - V u (- source) by central differences of the flux A grad u."""
    x = np.asarray(x, dtype=float)
    total = 0.0
    for k in range(x.shape[-1]):
        e = np.zeros(x.shape[-1])
        e[k] = h
        fp = np.einsum("...ij,...j->...i", u.coeff.matrix(x + e), u.grad(x + e))[..., k]
        fm = np.einsum("...ij,...j->...i", u.coeff.matrix(x - e), u.grad(x - e))[..., k]
        total = total + (fp - fm) / (2 * h)
    res = total - u.potential(x) * u(x)
    if source is not None:
        res = res - source(x)
    return res


from .fdsolve import ConvergenceStudy, GridField, convergence_study, fd_solve, read_grid_field, write_grid_field  # noqa: E402,F401
