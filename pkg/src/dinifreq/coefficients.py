"""Coefficient matrices, potentials and the affine normalization at a point.

A ``CoefficientField`` wraps a vectorized matrix function ``x -> A(x)`` (shape
``(..., n, n)``) together with its ellipticity and Lipschitz constants.  The
normalization frame at ``z0`` maps ``x`` to ``A(z0)^{-1/2}(x - z0)`` so that the
pushed matrix equals the identity at the origin.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError

FD_STEP = 1e-5


def sqrt_spd(Mx) -> np.ndarray:
    """Symmetric positive-definite square root.

    Closed form in 2x2: R = (M + sI) / sqrt(tr M + 2s), s = sqrt(det M).
    Larger sizes use cyclic Jacobi rotations.
    """
    Mx = np.asarray(Mx, dtype=float)
    n = Mx.shape[0]
    if Mx.shape != (n, n):
        raise DomainError("square matrix required")
    scale = max(np.abs(Mx).max(), 1e-300)
    if np.abs(Mx - Mx.T).max() > 1e-12 * scale:
        raise DomainError("matrix is not symmetric")
    if n == 1:
        if Mx[0, 0] <= 0:
            raise DomainError(f"matrix not positive definite: smallest eigenvalue {Mx[0, 0]:.3e}")
        return np.sqrt(Mx)
    if n == 2:
        a, b, d = Mx[0, 0], 0.5 * (Mx[0, 1] + Mx[1, 0]), Mx[1, 1]
        tr, det = a + d, a * d - b * b
        disc = np.hypot(0.5 * (a - d), b)
        lmin = 0.5 * tr - disc
        if lmin <= 0:
            raise DomainError(f"matrix not positive definite: smallest eigenvalue {lmin:.3e}")
        s = np.sqrt(det)
        return (np.array([[a, b], [b, d]]) + s * np.eye(2)) / np.sqrt(tr + 2.0 * s)
    evals, V = _jacobi_eigh(0.5 * (Mx + Mx.T))
    if evals.min() <= 0:
        raise DomainError(f"matrix not positive definite: smallest eigenvalue {evals.min():.3e}")
    return (V * np.sqrt(evals)) @ V.T


def _jacobi_eigh(S, sweeps=50):
    S = S.copy()
    n = S.shape[0]
    V = np.eye(n)
    for _ in range(sweeps):
        off = np.sqrt(np.sum(np.tril(S, -1) ** 2))
        if off <= 1e-15 * np.abs(S).max():
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if S[p, q] == 0.0:
                    continue
                theta = 0.5 * (S[q, q] - S[p, p]) / S[p, q]
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                sn = t * c
                J = np.eye(n)
                J[p, p] = J[q, q] = c
                J[p, q], J[q, p] = sn, -sn
                S = J.T @ S @ J
                V = V @ J
    return np.diag(S).copy(), V


def local_ellipticity(Mx) -> float:
    """Largest lam with lam <= eigenvalues <= 1/lam."""
    ev = np.linalg.eigvalsh(np.asarray(Mx, dtype=float))
    return float(min(ev.min(), 1.0 / ev.max(), 1.0))


@dataclass(frozen=True)
class CoefficientField:
    A: Callable
    lam: float
    K: float
    n: int = 2
    name: str = "coefficient"
    spec: dict = field(default_factory=dict, compare=False)

    def matrix(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.asarray(self.A(x), dtype=float)
        return np.broadcast_to(out, x.shape[:-1] + (self.n, self.n))

    def derivative(self, x, h: float | None = None) -> np.ndarray:
        """Central-difference partials, shape (..., k, n, n) with k the derivative index."""
        x = np.asarray(x, dtype=float)
        if h is None:
            h = FD_STEP * max(1.0, float(np.abs(x).max()) if x.size else 1.0)
        parts = []
        for k in range(self.n):
            e = np.zeros(self.n)
            e[k] = h
            parts.append((self.matrix(x + e) - self.matrix(x - e)) / (2 * h))
        return np.stack(parts, axis=-3)


def identity_field(n: int = 2) -> CoefficientField:
    I = np.eye(n)
    return CoefficientField(lambda x: np.broadcast_to(I, np.shape(x)[:-1] + (n, n)), 1.0, 0.0, n,
                            "identity", {"kind": "identity"})


def constant_field(Mx, name="constant") -> CoefficientField:
    Mx = np.asarray(Mx, dtype=float)
    sqrt_spd(Mx)
    n = Mx.shape[0]
    return CoefficientField(lambda x: np.broadcast_to(Mx, np.shape(x)[:-1] + (n, n)),
                            local_ellipticity(Mx), 0.0, n, name,
                            {"kind": "diag" if np.allclose(Mx, np.diag(np.diag(Mx))) else "constant",
                             "params": {"matrix": Mx.tolist()}})


def affine_field(base, slopes, window: float = 1.0, name="affine", lam=None, K=None) -> CoefficientField:
    """A(x) = base + sum_k x_k slopes[k]; constants computed over the disk of radius ``window``.

    The smallest eigenvalue is concave and the largest convex in x, so both
    extremes over the disk are attained on its boundary circle.
    """
    base = np.asarray(base, dtype=float)
    slopes = np.asarray(slopes, dtype=float)
    n = base.shape[0]
    if slopes.shape != (n, n, n):
        raise DomainError("slopes must have shape (n, n, n)")

    def A(x):
        x = np.asarray(x, dtype=float)
        return base + np.einsum("...k,kij->...ij", x, slopes)

    if n != 2:
        raise DomainError("affine fields are planar")
    th = np.linspace(0, 2 * np.pi, 20001)
    circ = window * np.stack([np.cos(th), np.sin(th)], axis=-1)
    ev = np.linalg.eigvalsh(A(circ))
    lam_c = float(min(ev[:, 0].min(), 1.0 / ev[:, -1].max(), 1.0)) * (1 - 1e-6)
    dirs = np.stack([np.cos(th), np.sin(th)], axis=-1)
    K_c = float(np.linalg.norm(np.einsum("tk,kij->tij", dirs, slopes), ord=2, axis=(1, 2)).max()) * (1 + 1e-6)
    if lam_c <= 0:
        raise DomainError("affine field loses ellipticity inside its window")
    lam = lam_c if lam is None else lam
    K = K_c if K is None else K
    if lam > lam_c * (1 + 1e-9) or K < K_c * (1 - 1e-9):
        raise DomainError("declared constants are not valid for this field")
    spec = {"kind": "affine_perturbation",
            "params": {"base": base.tolist(), "slopes": slopes.tolist(), "window": window},
            "lambda": lam, "K": K}
    return CoefficientField(A, lam, K, n, name, spec)


def perturbed_identity(eps: float = 0.1, E=((1.0, 0.5), (0.5, -1.0)), window: float = 1.0):
    """I + eps * x_1 * E with a symmetric direction E."""
    E = np.asarray(E, dtype=float)
    return affine_field(np.eye(2), eps * np.stack([E, np.zeros((2, 2))]), window, "perturbed_identity")


def coefficient_from_spec(spec: dict) -> CoefficientField:
    kind = spec.get("kind")
    params = spec.get("params", {}) or {}
    if kind == "identity":
        return identity_field()
    if kind == "diag":
        d = params.get("diag", params.get("values"))
        if d is None and "matrix" in params:
            return constant_field(params["matrix"], "diag")
        return constant_field(np.diag(np.asarray(d, dtype=float)), "diag")
    if kind == "affine_perturbation":
        if "eps" in params:
            return perturbed_identity(params["eps"], params.get("E", ((1.0, 0.5), (0.5, -1.0))),
                                      params.get("window", 1.0))
        return affine_field(params["base"], params["slopes"], params.get("window", 1.0),
                            lam=spec.get("lambda"), K=spec.get("K"))
    raise DomainError(f"unknown coefficient kind {kind!r}")


@dataclass(frozen=True)
class Potential:
    V: Callable
    grad: Callable
    M: float
    name: str = "potential"

    def __post_init__(self):
        if self.M < 1.0:
            raise DomainError("the bound M must be at least 1")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(np.asarray(self.V(x), dtype=float), x.shape[:-1])


def constant_potential(c: float = 0.0) -> Potential:
    return Potential(lambda x: np.full(np.shape(x)[:-1], float(c)),
                     lambda x: np.zeros(np.shape(x)),
                     max(1.0, abs(c)), f"const{c:g}")


@dataclass(frozen=True)
class NormalizationFrame:
    z0: np.ndarray
    S: np.ndarray
    Sinv: np.ndarray
    lambda_z0: float

    def forward(self, x):
        return (np.asarray(x, dtype=float) - self.z0) @ self.Sinv.T

    def inverse(self, y):
        return self.z0 + np.asarray(y, dtype=float) @ self.S.T

    @property
    def jacobian(self) -> float:
        return float(np.linalg.det(self.Sinv))

    @property
    def is_identity(self) -> bool:
        return bool(np.all(self.z0 == 0) and np.array_equal(self.S, np.eye(len(self.z0))))


def make_frame(coeff: CoefficientField, z0) -> NormalizationFrame:
    z0 = np.asarray(z0, dtype=float)
    Az = coeff.matrix(z0)
    if np.array_equal(Az, np.eye(coeff.n)):
        S = Sinv = np.eye(coeff.n)
    else:
        S = sqrt_spd(Az)
        Sinv = np.linalg.inv(S)
        Sinv = 0.5 * (Sinv + Sinv.T)
    return NormalizationFrame(z0, S, Sinv, local_ellipticity(Az))


def push_matrix(coeff: CoefficientField, frame: NormalizationFrame) -> CoefficientField:
    """y -> A^{-1/2}(z0) A(z0 + A^{1/2}(z0) y) A^{-1/2}(z0), pinned to I at y = 0."""
    Sinv = frame.Sinv
    n = coeff.n
    I = np.eye(n)

    def A(y):
        y = np.asarray(y, dtype=float)
        out = Sinv @ coeff.matrix(frame.inverse(y)) @ Sinv
        out = 0.5 * (out + np.swapaxes(out, -1, -2))
        at0 = np.all(y == 0.0, axis=-1)
        if np.any(at0):
            out = np.array(out, copy=True)
            out[at0] = I
        return out

    spec = {"kind": "pushed", "base": coeff.spec, "z0": frame.z0.tolist()}
    return CoefficientField(A, coeff.lam**2, coeff.lam**-1.5 * coeff.K, n, f"{coeff.name}@frame", spec)


def pushed_potential_factor(lam: float) -> float:
    return max(1.0, lam**-0.5)


def push_potential(V: Potential, frame: NormalizationFrame, lam: float) -> Potential:
    S = frame.S
    return Potential(lambda y: V(frame.inverse(y)),
                     lambda y: np.asarray(V.grad(frame.inverse(y))) @ S.T,
                     pushed_potential_factor(lam) * V.M, f"{V.name}@frame")


def sampled_ball_inclusions(frame: NormalizationFrame, lam: float, trials: int = 1000, samples: int = 64,
                            rng=None, scale: float = 1.0) -> dict:
    """Sample B_{sqrt(lam) r}(T p) ⊂ T(B_r(p)) ⊂ B_{r/sqrt(lam)}(T p) over random (p, r).

    Inner points are pulled back and must land in B_r(p); points of B_r(p) are pushed forward
    and must land in the outer ball.  Returns counts of failures for each inclusion.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    n = len(frame.z0)
    sl = np.sqrt(lam)
    inner_fail = outer_fail = 0
    for _ in range(trials):
        p = frame.z0 + rng.uniform(-scale, scale, n)
        r = rng.uniform(1e-3, 1.0) * scale
        d = rng.normal(size=(samples, n))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        rad = rng.uniform(0, 1, (samples, 1)) ** (1 / n)
        d = np.concatenate([d, d * rad])
        Tp = frame.forward(p)
        back = frame.inverse(Tp + sl * r * d)
        inner_fail += int(np.sum(np.linalg.norm(back - p, axis=1) > r * (1 + 1e-12)))
        fwd = frame.forward(p + r * d)
        outer_fail += int(np.sum(np.linalg.norm(fwd - Tp, axis=1) > r / sl * (1 + 1e-12)))
    return {"trials": trials, "inner_failures": inner_fail, "outer_failures": outer_fail,
            "passed": inner_fail == 0 and outer_fail == 0}


def _is_identity_at(coeff, z0, tol=1e-12):
    return np.abs(coeff.matrix(np.asarray(z0, dtype=float)) - np.eye(coeff.n)).max() <= tol


def mu(coeff: CoefficientField, z0, x) -> np.ndarray:
    """<A(x)(x - z0), x - z0> / |x - z0|^2; equals 1 at the center only in a normalized frame."""
    z0 = np.asarray(z0, dtype=float)
    x = np.asarray(x, dtype=float)
    d = x - z0
    d2 = np.einsum("...i,...i->...", d, d)
    at_center = d2 == 0.0
    if np.any(at_center) and not _is_identity_at(coeff, z0):
        raise DomainError("mu at the center is only defined after normalization (A(z0) = I)")
    Ad = np.einsum("...ij,...j->...i", coeff.matrix(x), d)
    with np.errstate(invalid="ignore", divide="ignore"):
        val = np.einsum("...i,...i->...", Ad, d) / d2
    return np.where(at_center, 1.0, val)


def Zfield(coeff: CoefficientField, z0, x) -> np.ndarray:
    """A(x)(x - z0) / mu(x); satisfies <Z, x - z0> = |x - z0|^2."""
    z0 = np.asarray(z0, dtype=float)
    x = np.asarray(x, dtype=float)
    Ad = np.einsum("...ij,...j->...i", coeff.matrix(x), x - z0)
    return Ad / mu(coeff, z0, x)[..., None]


def divergence_Z(coeff: CoefficientField, z0, x, h: float | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if h is None:
        h = FD_STEP * max(1e-300, float(np.linalg.norm(x - np.asarray(z0), axis=-1).max()))
    total = 0.0
    for k in range(coeff.n):
        e = np.zeros(coeff.n)
        e[k] = h
        total = total + (Zfield(coeff, z0, x + e)[..., k] - Zfield(coeff, z0, x - e)[..., k]) / (2 * h)
    return total
