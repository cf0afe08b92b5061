"""Fit the smallest constants (C1, C2) making e^{C1 r}(N(r) + C2 M r^2) nondecreasing on a trace."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from ..functionals import FrequencyTrace

C_MAX = 1e3
C1_GRID = np.concatenate([[0.0], np.logspace(-3, 3, 61)])
CLOSED_SLACK = 1e-8
GRID_SLACK = 1e-4


@dataclass
class MonotonicityReport:
    trace: FrequencyTrace
    M: float
    C1: float
    C2: float
    max_violation: float
    passed: bool
    slack: float

    def constants(self) -> dict:
        return {"C1": self.C1, "C2": self.C2, "max_violation": self.max_violation, "pass": self.passed}


def violation(radii, N, M, C1, C2) -> float:
    """Largest relative decrease of the adjusted frequency between consecutive radii (<= 0 when monotone)."""
    F = np.exp(C1 * radii) * (N + C2 * M * radii**2)
    drop = F[:-1] - F[1:]
    scale = np.maximum(np.maximum(np.abs(F[:-1]), np.abs(F[1:])), 1e-300)
    return float(np.max(drop / scale))


def _min_C2(radii, N, M, C1, slack):
    if violation(radii, N, M, C1, 0.0) <= slack:
        return 0.0
    if violation(radii, N, M, C1, C_MAX) > slack:
        return None
    lo, hi = 0.0, C_MAX
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if violation(radii, N, M, C1, mid) <= slack:
            hi = mid
        else:
            lo = mid
    return hi


def fit_monotonicity(trace: FrequencyTrace, M: float | None = None, slack: float | None = None) -> MonotonicityReport:
    M = trace.M if M is None else M
    mask = trace.valid & np.isfinite(trace.N)
    if mask.sum() < 8:
        raise DomainError("need at least 8 valid radii to fit monotonicity constants")
    r, N = trace.radii[mask], trace.N[mask]
    if slack is None:
        slack = GRID_SLACK if any(q.get("tol", 0) >= 1e-3 for q in trace.quad) else CLOSED_SLACK
    best = None
    for C1 in C1_GRID:
        C2 = _min_C2(r, N, M, C1, slack)
        if C2 is not None and (best is None or C1 + C2 < best[0] + best[1]):
            best = (float(C1), C2)
    if best is None:
        # nothing in the box works; report the least-bad corner honestly
        worst = violation(r, N, M, C_MAX, C_MAX)
        return MonotonicityReport(trace, M, C_MAX, C_MAX, worst, False, slack)
    C1, C2 = best
    return MonotonicityReport(trace, M, C1, C2, violation(r, N, M, C1, C2), True, slack)
