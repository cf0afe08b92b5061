"""Formula-derived constants of the growth argument and numerical checks of its radius chains."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import DomainError, HypothesisViolation
from ..geometry import (DiniDomain, OSCILLATION_CAP, flat_chart, fr3_cap, growth_k, lambda_of)

K1_FLOOR = 0.5
CHAIN_SAMPLES = 16
RS_BOUNDS = (2.0, 2056.0, 75.0 / 72.0, 2.0)


def lipschitz_after_normalization(lam: float, K: float) -> float:
    """K1 used in the growth lemma: the pushed Lipschitz constant, floored so that k stays finite."""
    return max(lam**-1.5 * K, K1_FLOOR)


@dataclass
class RadiusChain:
    r: float
    Lambda: float
    a: float
    lam1: float
    lam2: float
    r1: float
    r2: float
    r3: float
    r1p: float
    r2p: float
    r3p: float
    r1pp: float
    r2pp: float
    r3pp: float
    r1ppp: float
    r2ppp: float
    r3ppp: float


def radius_chain(r: float, Lambda: float, K1: float, k: float | None = None) -> RadiusChain:
    k = growth_k(K1) if k is None else k
    a = 4 * Lambda * r
    l1, l2 = 1 - K1 * a, 1 + K1 * a
    return RadiusChain(
        r, Lambda, a, l1, l2,
        (r / 4 - k * a) / l2, (r / 2 + k * a) / l1, (r - k * a) / l2,
        (r / 4 - k * a / 2) / l2, (r / 2 + k * a / 2) / l1, (r - k * a / 2) / l2,
        r / 4 - k * a / 2, r / 2 + k * a / 2, r - k * a / 2,
        r / 4 - k * a / 3, (r / 2 + k * a / 3) / l1, r - k * a / 3,
    )


def bracket(y, K1: float, k: float):
    """Ratio of logarithms multiplying log G(r)/G(r/2) in the growth inequality, as a function of Lambda."""
    y = np.asarray(y, dtype=float)
    num = np.log((1 + 4 * K1 * y) * (2 + 16 * k * y) / ((1 - 4 * K1 * y) * (1 - 16 * k * y)))
    den = np.log((1 - 4 * K1 * y) * (2 - 8 * k * y) / ((1 + 4 * K1 * y) * (1 + 8 * k * y)))
    return num / den


def bracket_domain(K1: float, k: float) -> float:
    return min(1 / (24 * K1), 1 / (64 * k))


def fit_c2(K1: float, k: float, samples: int = 4097):
    """c2 = max |f'| on [0, C~] by central differences on a dense grid; returns (c2, grid, f)."""
    top = bracket_domain(K1, k)
    y = np.linspace(0.0, top, samples)
    f = bracket(y, K1, k)
    df = np.gradient(f, y, edge_order=2)
    return float(np.max(np.abs(df))), y, f


def _unit_symmetric(rng, count):
    """Symmetric 2x2 matrices with eigenvalues in {-1, 0, 1} and random eigenvectors, plus fixed extremes."""
    out = [np.eye(2), -np.eye(2), np.diag([1.0, -1.0]), np.diag([-1.0, 1.0]), np.array([[0, 1.0], [1.0, 0]])]
    for th in rng.uniform(0, np.pi, count):
        c, s = np.cos(th), np.sin(th)
        R = np.array([[c, -s], [s, c]])
        for ev in ([1, -1], [1, 1], [-1, -1], [1, 0], [0, -1]):
            out.append(R @ np.diag(ev) @ R.T)
    return out


def _disk_points(rng, radius, center=(0.0, 0.0), count=400):
    th = np.linspace(0, 2 * np.pi, count, endpoint=False)
    rim = np.stack([np.cos(th), np.sin(th)], -1) * radius * (1 - 1e-12)
    rr = radius * np.sqrt(rng.uniform(0, 1, count))
    tt = rng.uniform(0, 2 * np.pi, count)
    inner = np.stack([rr * np.cos(tt), rr * np.sin(tt)], -1)
    return np.asarray(center) + np.concatenate([rim, inner, [[0.0, 0.0]]])


def check_chain(ch: RadiusChain, K1: float, k: float, rng=None) -> dict:
    """Verify every ordering, ratio bound, weight comparison and inclusion at one radius.

    The frame matrix S = A(y0)^{1/2} is sampled with eigenvalues in [1 - K1 a, 1 + K1 a];
    then T(x) = p' + S^{-1} x with p' = S^{-1}(0, a).
    """
    rng = np.random.default_rng(0) if rng is None else rng
    a, r = ch.a, ch.r
    res = {}
    res["orderings"] = 0 < ch.r1 < ch.r2 < ch.r3 < ch.lam1 * (r - a)
    r21, r32 = ch.r2 / ch.r1, ch.r3 / ch.r2
    res["rs"] = (RS_BOUNDS[0] <= r21 <= RS_BOUNDS[1] * (1 + K1)) and (RS_BOUNDS[2] <= r32 <= RS_BOUNDS[3])
    res["primes_order"] = ch.r1p <= ch.r1ppp and ch.r2p >= ch.r2ppp and ch.r3p <= ch.r3ppp
    eps = 1e-12 * r * r
    ok = {n: True for n in ("A1", "A2", "A3", "incl", "cv5", "cv6", "cv7", "cont3", "weights")}
    ka = k * a
    for Q in _unit_symmetric(rng, 6):
        S = np.eye(2) + K1 * a * Q
        Si = np.linalg.inv(S)
        B = Si - np.eye(2)
        pp = Si @ np.array([0.0, a])
        y = _disk_points(rng, ch.r2p, pp)
        ok["A1"] &= bool(np.all(ch.r2p**2 - ((y - pp) ** 2).sum(-1) <= ch.r2**2 - (y**2).sum(-1) + eps))
        ok["incl"] &= bool(np.all(np.linalg.norm(y, axis=-1) <= ch.r2 * (1 + 1e-12)))
        y = _disk_points(rng, ch.r1)
        ok["A2"] &= bool(np.all(ch.r1**2 - (y**2).sum(-1) <= ch.r1p**2 - ((y - pp) ** 2).sum(-1) + eps))
        ok["incl"] &= bool(np.all(np.linalg.norm(y - pp, axis=-1) <= ch.r1p * (1 + 1e-12)))
        y = _disk_points(rng, ch.r3)
        ok["A3"] &= bool(np.all(ch.r3**2 - (y**2).sum(-1) <= ch.r3p**2 - ((y - pp) ** 2).sum(-1) + eps))
        ok["incl"] &= bool(np.all(np.linalg.norm(y - pp, axis=-1) <= ch.r3p * (1 + 1e-12)))
        IB = np.eye(2) + B
        x = _disk_points(rng, ch.r1pp)
        Tx = ((x @ IB.T) ** 2).sum(-1)
        ok["cv5"] &= bool(np.all(ch.r1ppp**2 - Tx <= (r / 4 - ka / 6) ** 2 - (x**2).sum(-1) + eps))
        ok["weights"] &= bool(np.all(ch.r1ppp**2 - Tx >= -eps))
        s2 = r / 2 + ka / 3
        x = _disk_points(rng, s2)
        Tx = ((x @ IB.T) ** 2).sum(-1)
        ok["cv6"] &= bool(np.all(ch.r2p**2 - Tx >= s2**2 - (x**2).sum(-1) - eps))
        ok["cont3"] &= bool(np.all(np.sqrt(Tx) <= ch.r2ppp * (1 + 1e-12)))
        x = _disk_points(rng, ch.r3pp)
        Tx = ((x @ IB.T) ** 2).sum(-1)
        ok["cv7"] &= bool(np.all(ch.r3ppp**2 - Tx <= (r - ka / 6) ** 2 - (x**2).sum(-1) + eps))
        ok["weights"] &= bool(np.all(ch.r3ppp**2 - Tx >= -eps))
        # preimages of the primed balls around p' under T
        for rad, cap in ((ch.r1p, ch.r1pp), (ch.r3p, ch.r3pp)):
            y = _disk_points(rng, rad, pp) - pp
            ok["cont3"] &= bool(np.all(np.linalg.norm(y @ S.T, axis=-1) <= cap * (1 + 1e-12)))
    res.update(ok)
    return res


@dataclass
class ConstantsLedger:
    n: int
    lam: float
    K: float
    K1: float
    K2: float
    k: float
    Lambda_cap: float
    R0_effective: float
    binding: str
    c1: float
    c2_rs: float
    c3: float
    c4: float
    c2: float
    C_tilde: float
    f_zero: float
    f_max: float
    K0: float
    K0_tail: float
    chains: list = field(default_factory=list)
    chain_checks: list = field(default_factory=list)
    fitted: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(all(v for v in c.values()) for c in self.chain_checks)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["chains"] = [asdict(c) if not isinstance(c, dict) else c for c in self.chains]
        d["pass"] = self.passed
        return d


def k0_estimate(domain, c2: float, r0: float, scales: int = 60) -> tuple[float, float]:
    """exp(c2 * sum Lambda(r0 / 2^i)) with the unsampled tail bounded by a geometric series."""
    vals, i = [], 0
    floor = domain.smallest_sampled_radius if hasattr(domain, "smallest_sampled_radius") else 0.0
    while i < scales and r0 / 2**i >= floor:
        vals.append(float(lambda_of(domain, r0 / 2**i)))
        i += 1
    vals = np.asarray(vals)
    ratio = vals[-1] / vals[-2] if len(vals) > 1 and vals[-2] > 0 else 2**-0.5
    ratio = min(max(ratio, 2**-0.5), 1 - 1e-12)
    tail = vals[-1] * ratio / (1 - ratio)
    return float(np.exp(c2 * (vals.sum() + tail))), float(tail)


def constants_ledger(n: int = 2, lam: float = 1.0, K: float = 1.0, domain: DiniDomain | None = None,
                     samples: int = CHAIN_SAMPLES, seed: int = 0, strict: bool = True) -> ConstantsLedger:
    if not (0 < lam <= 1) or K < 0:
        raise DomainError("need 0 < lambda <= 1 and K >= 0")
    K1 = lipschitz_after_normalization(lam, K)
    K2 = 1 + K1
    k = growth_k(K1)
    cap = fr3_cap(K1)
    if domain is None or getattr(domain, "K1", None) != K1:
        domain = DiniDomain.build(domain.chart if domain is not None else flat_chart(), K1)
    R0 = domain.R0_effective
    if lambda_of(domain, R0) > cap * (1 + 1e-12):
        raise HypothesisViolation("Lambda(R0) exceeds the growth-lemma cap")
    c2, ys, fs = fit_c2(K1, k)
    f_ok = abs(fs[0] - 1) < 1e-12 and np.all(fs >= 0) and np.all(fs <= np.exp(c2 * ys) * (1 + 1e-12))
    K0, tail = k0_estimate(domain, c2, R0 / 4)
    rng = np.random.default_rng(seed)
    radii = np.geomspace(R0 * 1e-3, R0, samples)
    radii = np.maximum(radii, domain.smallest_sampled_radius * 2)
    chains, checks = [], []
    for r in radii:
        ch = radius_chain(float(r), float(lambda_of(domain, r)), K1, k)
        chains.append(ch)
        checks.append(check_chain(ch, K1, k, rng))
    checks.append({"f(0)=1 and 0<=f<=exp(c2 y)": bool(f_ok)})
    ledger = ConstantsLedger(
        n, lam, K, K1, K2, k, cap, R0, domain.binding, 2.0, 2056.0 * (1 + K1), 75 / 72, 2.0, c2,
        bracket_domain(K1, k), float(fs[0]), float(fs.max()), K0, tail, chains, checks,
        provenance={"K1": "formula (floored at 1/2)", "K2": "formula", "k": "formula", "Lambda_cap": "formula",
                    "R0_effective": "derived from sampled Lambda", "c1..c4": "formula",
                    "c2": "fitted (max slope)", "K0": "fitted (sampled Lambda + geometric tail)"})
    if strict and not ledger.passed:
        failing = [name for c in checks for name, v in c.items() if not v]
        raise HypothesisViolation(f"radius-chain check failed: {sorted(set(failing))}")
    return ledger
