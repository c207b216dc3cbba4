"""Verdicts for numerical theorem checks.

A check compares bracketed quantities (:class:`NormEstimate`).  It fails
only when the brackets themselves disagree with the claim: either a
certified bound is violated, or both brackets are tight (within the gap
gate) and still disagree.  Loose brackets give INCONCLUSIVE.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .opnorm import NormEstimate

EQ_TOL = 5e-5
GAP_GATE = 1e-3


class Verdict(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class CheckResult:
    check: str
    verdict: Verdict
    lhs: float
    rhs: float
    tolerance: float
    estimates: dict = field(default_factory=dict)  # name -> NormEstimate
    details: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict, repr=False)  # solver objects, not serialized

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "verdict": self.verdict.value,
            "lhs": float(self.lhs),
            "rhs": float(self.rhs),
            "tolerance": float(self.tolerance),
            "estimates": {k: v.to_dict() for k, v in self.estimates.items()},
            "details": self.details,
        }


def _scale(*ests):
    return max([1.0] + [abs(e.upper) for e in ests if np.isfinite(e.upper)])


def _gap(e: NormEstimate, scale):
    return (e.upper - e.lower) / scale


def max_estimate(ests) -> NormEstimate:
    """Bracket for max_k x_k from brackets of the x_k."""
    ests = list(ests)
    b = max(range(len(ests)), key=lambda k: ests[k].lower)
    return NormEstimate(
        lower=max(e.lower for e in ests),
        upper=max(e.upper for e in ests),
        witness=ests[b].witness,
        method=ests[b].method,
        iterations=sum(e.iterations for e in ests),
        certified_upper=max(e.certified_upper for e in ests),
        hits=ests[b].hits,
        converged=all(e.converged for e in ests),
    )


def product_estimate(ests) -> NormEstimate:
    """Bracket for a product of nonnegative quantities."""
    ests = list(ests)
    lo = float(np.prod([e.lower for e in ests]))
    up = float(np.prod([e.upper for e in ests]))
    cu = float(np.prod([e.certified_upper for e in ests]))
    return NormEstimate(lo, up, ests[0].witness, "product", 0, cu, min(e.hits for e in ests),
                        all(e.converged for e in ests))


def equality_verdict(a: NormEstimate, b: NormEstimate, tol=EQ_TOL, gate=GAP_GATE) -> Verdict:
    s = _scale(a, b)
    if a.lower > b.certified_upper + tol * s or b.lower > a.certified_upper + tol * s:
        return Verdict.FAIL
    if max(_gap(a, s), _gap(b, s)) > gate:
        return Verdict.INCONCLUSIVE
    return Verdict.PASS if abs(a.lower - b.lower) <= tol * s else Verdict.FAIL


def inequality_verdict(lhs: NormEstimate, rhs: NormEstimate, tol=EQ_TOL, gate=GAP_GATE) -> Verdict:
    """Verdict for the claim lhs <= rhs."""
    s = _scale(lhs, rhs)
    if lhs.lower <= rhs.upper + tol * s:
        return Verdict.PASS
    if lhs.lower > rhs.certified_upper + tol * s:
        return Verdict.FAIL
    return Verdict.FAIL if _gap(rhs, s) <= gate else Verdict.INCONCLUSIVE


def difference_verdict(x: NormEstimate, y: NormEstimate, low, high, gate=GAP_GATE) -> Verdict:
    """Verdict for low <= x - y <= high, judged on the lower bounds."""
    s = _scale(x, y)
    d = x.lower - y.lower
    if low <= d <= high:
        return Verdict.PASS
    if d < low:
        # y looks too large compared to x
        if y.lower - x.certified_upper > -low:
            return Verdict.FAIL
        return Verdict.FAIL if _gap(x, s) <= gate else Verdict.INCONCLUSIVE
    if x.lower - y.certified_upper > high:
        return Verdict.FAIL
    return Verdict.FAIL if _gap(y, s) <= gate else Verdict.INCONCLUSIVE


def bound_verdict(value: float, limit: float, tol) -> Verdict:
    """Exact scalar comparison value <= limit + tol (no solver involved)."""
    return Verdict.PASS if value <= limit + tol else Verdict.FAIL
