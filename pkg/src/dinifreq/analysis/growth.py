"""One step of the boundary growth inequality log G(r/2)/G(r/4) <= C sqrt(M) r + e^{C1 r} f(Lambda) log G(r)/G(r/2)."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..coefficients import make_frame, mu
from ..errors import DomainError, HypothesisViolation
from ..fields import push_field
from ..functionals import H_FLOOR, default_alpha, plain_G
from ..geometry import growth_k, interior_anchor, lambda_of
from ..quadrature import QuadOptions, integrate_rule
from .ledger import bracket, lipschitz_after_normalization, radius_chain


@dataclass
class GrowthReport:
    r: float
    Lambda: float
    lhs: float
    rhs: float
    factor: float
    G: dict
    passed: bool
    masked: bool
    intermediates: dict = field(default_factory=dict)


def _weighted(u_fn, region, center, radius, weight, quad):
    """∫_{region ∩ B_radius(center)} u^2 * weight(x), weight smooth and nonnegative on the ball."""
    res = integrate_rule(lambda p, s: u_fn(p) ** 2 * weight(p), region, center, radius, 0.0, quad)
    return float(res.value)


def _intermediates(u, coeff, domain, r, alpha, K1, k, quad):
    """Shifted functionals of the proof with their sandwich checks (logged, not part of the verdict)."""
    Lam = lambda_of(domain, r)
    ch = radius_chain(r, Lam, K1, k)
    y0 = interior_anchor(domain, r)
    frame = make_frame(coeff, y0)
    pu = push_field(u, frame)
    pc = pu.coeff
    preg = pu.domain
    pp = frame.forward(np.zeros(2))
    zero = np.zeros(2)

    def L(s):
        return float(integrate_rule(lambda y, _: pu(y) ** 2 * mu(pc, zero, y), preg, pp, s, alpha, quad).value)

    def Hc(s):
        return float(integrate_rule(lambda y, _: pu(y) ** 2 * mu(pc, zero, y), preg, zero, s, alpha, quad).value)

    def shifted(s, outer):
        return _weighted(pu, preg, pp, s, lambda y: np.maximum(outer**2 - ((y - pp) ** 2).sum(-1), 0) ** alpha, quad)

    J = abs(frame.jacobian)

    def Gi(s, outer):
        return _weighted(u, domain, zero, s,
                         lambda x: np.maximum(outer**2 - ((frame.forward(x) - pp) ** 2).sum(-1), 0) ** alpha, quad)

    ka = k * ch.a
    out = {"a": ch.a, "p_prime": pp.tolist(), "chain": ch.__dict__.copy()}
    vals = {
        "L(r2')": L(ch.r2p), "H(r2)": Hc(ch.r2), "L(r1')": L(ch.r1p), "H(r1)": Hc(ch.r1),
        "H(r3)": Hc(ch.r3), "L(r3')": L(ch.r3p),
        "H1(r1')": shifted(ch.r1p, ch.r1ppp), "H2(r2''')": shifted(ch.r2ppp, ch.r2p), "H3(r3')": shifted(ch.r3p, ch.r3ppp),
        "G1(r1'')": Gi(ch.r1pp, ch.r1ppp), "G2(r/2+ka/3)": Gi(r / 2 + ka / 3, ch.r2p), "G3(r3'')": Gi(ch.r3pp, ch.r3ppp),
        "G(r/4-ka/6)": plain_G(u, domain, zero, r / 4 - ka / 6, alpha, quad),
        "G(r/2+ka/3)": plain_G(u, domain, zero, r / 2 + ka / 3, alpha, quad),
        "G(r-ka/6)": plain_G(u, domain, zero, r - ka / 6, alpha, quad),
    }
    rel = 1e-6 if quad.tol < 1e-3 else 1e-2
    le = lambda x, y: x <= y * (1 + rel) + 1e-300
    checks = {
        "L(r2')<=H(r2)": le(vals["L(r2')"], vals["H(r2)"]),
        "L(r1')>=H(r1)": le(vals["H(r1)"], vals["L(r1')"]),
        "H(r3)<=L(r3')": le(vals["H(r3)"], vals["L(r3')"]),
        "H1<=J*G1": le(vals["H1(r1')"], J * vals["G1(r1'')"]),
        "H2>=J*G2": le(J * vals["G2(r/2+ka/3)"], vals["H2(r2''')"]),
        "H3<=J*G3": le(vals["H3(r3')"], J * vals["G3(r3'')"]),
        "cv5": le(vals["G1(r1'')"], vals["G(r/4-ka/6)"]),
        "cv6": le(vals["G(r/2+ka/3)"], vals["G2(r/2+ka/3)"]),
        "cv7": le(vals["G3(r3'')"], vals["G(r-ka/6)"]),
    }
    th = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    ring = np.concatenate([s * np.stack([np.cos(th), np.sin(th)], -1) for s in r * np.linspace(0.05, 1, 20)])
    C5 = float(np.max(np.abs(mu(pc, zero, ring) - 1)) / r)
    out.update({"values": vals, "checks": checks, "jacobian": J, "C5": C5})
    return out


def growth_step(u, coeff, V, domain, r: float, C: float = 0.0, C1: float = 0.0, alpha: float | None = None,
                K1: float | None = None, quad: QuadOptions | None = None, tol: float | None = None,
                intermediates: bool = True) -> GrowthReport:
    if not hasattr(domain, "R0_effective"):
        raise DomainError("growth_step needs a Dini domain")
    if r > domain.R0_effective * (1 + 1e-12):
        raise DomainError("r must not exceed R0_effective")
    if np.abs(coeff.matrix(np.zeros(2)) - np.eye(coeff.n)).max() > 1e-12:
        raise HypothesisViolation("growth_step needs A(0) = I at the boundary anchor")
    grid = getattr(u, "kind", "") == "grid"
    quad = quad or QuadOptions(tol=1e-3 if grid else 1e-9)
    tol = tol if tol is not None else (1e-3 if grid else 1e-9)
    alpha = default_alpha(V.M) if alpha is None else alpha
    K1 = lipschitz_after_normalization(coeff.lam, coeff.K) if K1 is None else K1
    k = growth_k(K1)
    Lam = lambda_of(domain, r)
    zero = np.zeros(2)
    G = {s: plain_G(u, domain, zero, s * r, alpha, quad) for s in (0.25, 0.5, 1.0)}
    if min(G.values()) <= H_FLOOR:
        return GrowthReport(r, Lam, np.nan, np.nan, np.nan, G, False, True)
    factor = float(bracket(Lam, K1, k))
    lhs = float(np.log(G[0.5] / G[0.25]))
    rhs = float(C * np.sqrt(V.M) * r + np.exp(C1 * r) * factor * np.log(G[1.0] / G[0.5]))
    passed = lhs <= rhs + tol * (abs(lhs) + abs(rhs))
    inter = _intermediates(u, coeff, domain, r, alpha, K1, k, quad) if intermediates else {}
    return GrowthReport(r, Lam, lhs, rhs, factor, G, bool(passed), False, inter)
