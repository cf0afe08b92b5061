"""Finite differences for div(A grad u) = V u (+ source) in boundary-fitted strip coordinates.

The window {|x_1| <= L, -D <= x_2 - phi(x_1) <= 0} is mapped to a rectangle by
(x_1, t = x_2 - phi(x_1)).  This map has unit Jacobian, so the equation keeps
divergence form with the matrix J A J^T, J = [[1, 0], [-phi', 1]].  The top
side t = 0 is the zero-Dirichlet portion of the boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .coefficients import CoefficientField, Potential
from .errors import DomainError, NumericalError
from .fields import SolutionField


@dataclass
class GridField:
    """Nodal values on the strip grid; rows are t levels, columns x_1 positions."""

    x1: np.ndarray
    t: np.ndarray
    h: float
    values: np.ndarray
    phi: object
    dphi: object
    chart_spec: dict = field(default_factory=dict)
    residual_history: list = field(default_factory=list)

    def __post_init__(self):
        self._gt, self._gx = np.gradient(self.values, self.h, self.h, edge_order=2)

    def _locate(self, x):
        x = np.asarray(x, dtype=float)
        xi = x[..., 0]
        t = x[..., 1] - self.phi(xi)
        fx = (xi - self.x1[0]) / self.h
        ft = (t - self.t[0]) / self.h
        nx, nt = len(self.x1) - 1, len(self.t) - 1
        eps = 1e-9
        if np.any(fx < -eps) or np.any(fx > nx + eps) or np.any(ft < -eps) or np.any(ft > nt + eps):
            raise DomainError("evaluation point outside the solver window")
        i = np.clip(np.floor(fx).astype(int), 0, nx - 1)
        j = np.clip(np.floor(ft).astype(int), 0, nt - 1)
        return i, j, np.clip(fx - i, 0, 1), np.clip(ft - j, 0, 1), xi

    @staticmethod
    def _bilinear(arr, i, j, a, b):
        return ((1 - a) * (1 - b) * arr[j, i] + a * (1 - b) * arr[j, i + 1]
                + (1 - a) * b * arr[j + 1, i] + a * b * arr[j + 1, i + 1])

    def __call__(self, x):
        i, j, a, b, _ = self._locate(x)
        return self._bilinear(self.values, i, j, a, b)

    def grad(self, x):
        i, j, a, b, xi = self._locate(x)
        ux = self._bilinear(self._gx, i, j, a, b)
        ut = self._bilinear(self._gt, i, j, a, b)
        return np.stack([ux - self.dphi(xi) * ut, ut], axis=-1)

    def as_solution(self, domain, coeff, potential, name="fd") -> SolutionField:
        return SolutionField(self.__call__, self.grad, domain, potential, coeff, kind="grid", name=name,
                             meta={"h": self.h, "grid": self})


def pcg(A, b, tol=1e-10, maxiter=None):
    """Jacobi-preconditioned conjugate gradients with residual history and curvature checks."""
    n = len(b)
    maxiter = 10 * n if maxiter is None else maxiter
    dinv = 1.0 / A.diagonal()
    x = np.zeros(n)
    r = b.copy()
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return x, [0.0]
    z = dinv * r
    p = z.copy()
    rz = r @ z
    hist = [1.0]
    for _ in range(maxiter):
        Ap = A @ p
        curv = p @ Ap
        if curv <= 0:
            raise NumericalError("discrete operator is indefinite (potential too large for this window); "
                                 "use a smaller window", hist)
        step = rz / curv
        x += step * p
        r -= step * Ap
        rel = np.linalg.norm(r) / bnorm
        hist.append(rel)
        if rel <= tol:
            return x, hist
        z = dinv * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise NumericalError(f"conjugate gradients did not reach {tol:g} in {maxiter} iterations", hist)


def fd_solve(domain, coeff: CoefficientField, V: Potential, gamma: str = "graph", data=None, h: float = None,
             window=None, source=None, tol: float = 1e-10) -> SolutionField:
    """Solve on the strip window with u = 0 on the graph and u = data elsewhere on the window boundary.

    ``window = (L, D)`` defaults to (R0_effective, R0_effective) for Dini domains;
    ``source`` adds a right-hand side f in div(A grad u) = V u + f.
    """
    if gamma != "graph":
        raise DomainError("only the chart graph is supported as the zero-Dirichlet portion")
    if window is None:
        R = getattr(domain, "R0_effective", None)
        if R is None:
            raise DomainError("window is required when the domain has no effective radius")
        window = (R, R)
    L, D = map(float, window)
    if h is None:
        h = L / 32
    if h > L / 32 * (1 + 1e-12):
        raise DomainError("spacing must satisfy h <= L/32")
    nx, ny = 2 * L / h, D / h
    if abs(nx - round(nx)) > 1e-6 or abs(ny - round(ny)) > 1e-6:
        raise DomainError("window sides must be integer multiples of h")
    nx, ny = int(round(nx)), int(round(ny))
    data = data if data is not None else (lambda x: np.zeros(x.shape[:-1]))
    x1 = -L + h * np.arange(nx + 1)
    t = -D + h * np.arange(ny + 1)
    X1, T = np.meshgrid(x1, t)
    PHI = domain.phi(X1)
    DPHI = domain.dphi(X1)
    P = np.stack([X1, T + PHI], axis=-1)
    Am = coeff.matrix(P)
    a11 = Am[..., 0, 0]
    a12 = Am[..., 0, 1] - DPHI * Am[..., 0, 0]
    a22 = Am[..., 1, 1] - 2 * DPHI * Am[..., 0, 1] + DPHI**2 * Am[..., 0, 0]
    Vn = V(P)

    known = np.zeros((ny + 1, nx + 1))
    known[0, :] = data(P[0, :])
    known[:, 0] = data(P[:, 0])
    known[:, -1] = data(P[:, -1])
    known[-1, :] = 0.0

    hm = lambda p, q: 2 * p * q / (p + q)
    ii, jj = np.meshgrid(np.arange(1, nx), np.arange(1, ny))
    ii, jj = ii.ravel(), jj.ravel()
    nint = len(ii)
    index = -np.ones((ny + 1, nx + 1), dtype=int)
    index[jj, ii] = np.arange(nint)
    e = hm(a11[jj, ii], a11[jj, ii + 1])
    w = hm(a11[jj, ii], a11[jj, ii - 1])
    n_ = hm(a22[jj, ii], a22[jj + 1, ii])
    s_ = hm(a22[jj, ii], a22[jj - 1, ii])
    diag = e + w + n_ + s_ + h * h * Vn[jj, ii]
    ne = -(a12[jj, ii + 1] + a12[jj + 1, ii]) / 4
    se = (a12[jj, ii + 1] + a12[jj - 1, ii]) / 4
    nw = (a12[jj, ii - 1] + a12[jj + 1, ii]) / 4
    sw = -(a12[jj, ii - 1] + a12[jj - 1, ii]) / 4
    stencil = [(0, 0, diag), (1, 0, -e), (-1, 0, -w), (0, 1, -n_), (0, -1, -s_),
               (1, 1, ne), (1, -1, se), (-1, 1, nw), (-1, -1, sw)]
    rhs = np.zeros(nint)
    if source is not None:
        rhs -= h * h * source(P[jj, ii])
    rows, cols, vals = [], [], []
    for di, dj, c in stencil:
        nb = index[jj + dj, ii + di]
        inner = nb >= 0
        rows.append(np.arange(nint)[inner])
        cols.append(nb[inner])
        vals.append(c[inner])
        rhs[~inner] -= c[~inner] * known[jj + dj, ii + di][~inner]
    Amat = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nint, nint))
    sol, hist = pcg(Amat, rhs, tol)
    U = known.copy()
    U[jj, ii] = sol
    spec = getattr(getattr(domain, "chart", None), "spec", {"kind": "flat"})
    grid = GridField(x1, t, h, U, domain.phi, domain.dphi, dict(spec), hist)
    return grid.as_solution(domain, coeff, V)


def write_grid_field(path, grid: GridField, extra: dict | None = None):
    header = {"nx": len(grid.x1) - 1, "ny": len(grid.t) - 1, "h": grid.h,
              "origin": [float(grid.x1[0]), float(grid.t[0])], "coordinates": "strip",
              "chart": grid.chart_spec}
    if extra:
        header.update(extra)
    with open(path, "w") as fh:
        json.dump({"header": header, "values": grid.values.ravel().tolist()}, fh)


def read_grid_field(path) -> GridField:
    from .geometry import chart_from_spec

    with open(path) as fh:
        blob = json.load(fh)
    hd = blob["header"]
    nx, ny, h = hd["nx"], hd["ny"], hd["h"]
    vals = np.asarray(blob["values"], dtype=float).reshape(ny + 1, nx + 1)
    chart = chart_from_spec(hd.get("chart") or {"kind": "flat"})
    x1 = hd["origin"][0] + h * np.arange(nx + 1)
    t = hd["origin"][1] + h * np.arange(ny + 1)
    return GridField(x1, t, h, vals, chart.phi, chart.dphi, hd.get("chart", {}))


EXACT_FLOOR = 1e-9


@dataclass
class ConvergenceStudy:
    h: np.ndarray
    errors: np.ndarray
    orders: np.ndarray

    @property
    def exact(self) -> bool:
        """Scheme reproduces the solution to roundoff, so no order is measurable."""
        return bool(np.all(self.errors <= EXACT_FLOOR))

    @property
    def observed_order(self) -> float:
        return float("inf") if self.exact else float(np.min(self.orders))


def convergence_study(domain, coeff: CoefficientField, V: Potential, exact, window, levels=(32, 64, 128),
                      source=None) -> ConvergenceStudy:
    """Max nodal error against ``exact`` for h = L / levels; orders from successive error ratios."""
    L, D = window
    hs, errs = [], []
    for n in levels:
        h = L / n
        u = fd_solve(domain, coeff, V, data=exact, h=h, window=window, source=source)
        g = u.meta["grid"]
        X1, T = np.meshgrid(g.x1, g.t)
        P = np.stack([X1, T + g.phi(X1)], axis=-1)
        hs.append(h)
        errs.append(float(np.max(np.abs(g.values - exact(P)))))
    hs, errs = np.array(hs), np.array(errs)
    with np.errstate(divide="ignore", invalid="ignore"):
        orders = np.log(errs[:-1] / errs[1:]) / np.log(hs[:-1] / hs[1:])
    return ConvergenceStudy(hs, errs, orders)
