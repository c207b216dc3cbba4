"""Serializable check records and their standalone replay.

A record stores every quantity of a check as its bracket plus small
expression trees ("nodes") that recompute the lower and upper ends from
stored witnesses: a ratio ||A w|| / ||w|| at a fixed w, an exact pairing,
a sum of realization atoms, the Fourier oracle.  Replay evaluates the
nodes without any search and re-applies the suite's verdict rule.
"""
from __future__ import annotations

import numpy as np

from .groups import FiniteGroup, group_from_spec
from .opnorm import NormEstimate, evaluate_witness, plain_geometry
from .representation import AmplifiedRep, _complex_list, _from_complex_list, rep_from_spec
from .rng import canonical_json

REPLAY_RTOL = 1e-8


class ReplayMismatch(RuntimeError):
    """A recomputed value or verdict differs from the stored one."""


class WitnessMissing(KeyError):
    """The record lacks the data needed to recompute a quantity."""


def clist(a):
    return _complex_list(np.asarray(a, dtype=np.complex128))


def carray(v):
    if v is None or (isinstance(v, list) and not v):
        return np.zeros(0, np.complex128)
    return _from_complex_list(v)


def fnum(x):
    """JSON-safe float: infinities become None."""
    x = float(x)
    return x if np.isfinite(x) else None


def unnum(x, default=np.inf):
    return default if x is None else float(x)


# --- node constructors ------------------------------------------------------

def pf_node(rep, arr, witness):
    """||rep^(n)(arr) w|| / ||w||."""
    arr = np.asarray(arr, dtype=np.complex128)
    if arr.ndim == 1:
        arr = arr.reshape(1, 1, -1)
    return {"kind": "pf", "rep": rep.spec, "array": clist(arr), "witness": clist(witness)}


def scalar_node(M, p_in, p_out, witness):
    return {"kind": "scalar", "matrix": clist(np.atleast_2d(M)), "p_in": fnum(p_in), "p_out": fnum(p_out),
            "witness": clist(witness)}


def compression_node(F, U, p, witness):
    """Ratio for the scalar matrix S[(s,i),(t,j)] = <f_st, u_ij> at a fixed alpha."""
    return {"kind": "compression", "F": clist(F), "U": clist(U), "p": fnum(p), "witness": clist(witness)}


def pairing_node(F, values):
    return {"kind": "pairing", "F": clist(F), "values": clist(values)}


def over_node(num, den_node, den_lower, den_upper):
    """num / den_upper, where den_node must reproduce den_lower."""
    return {"kind": "over", "num": num, "den": den_node, "den_lower": fnum(den_lower),
            "den_upper": fnum(den_upper)}


def atoms_node(values, reps, terms):
    return {"kind": "atoms", "values": clist(values), "reps": [r.spec for r in reps],
            "terms": [{"coef": [float(np.real(t.coef)), float(np.imag(t.coef))], "rep": int(t.rep_index),
                       "a": clist(t.a), "w": clist(t.w)} for t in terms]}


def realization_node(real):
    return {"kind": "realization", "rep": real.rep.spec, "xi": clist(real.xi.coords), "eta": clist(real.eta.w)}


def oracle_node(values):
    return {"kind": "fourier", "values": clist(values)}


def closed_form_node(M, p):
    return {"kind": "closed_form", "matrix": clist(np.atleast_2d(M)), "p": fnum(p)}


def const_node(x):
    return {"kind": "const", "value": fnum(x)}


def max_node(*parts):
    return {"kind": "max", "parts": list(parts)}


def min_node(*parts):
    return {"kind": "min", "parts": list(parts)}


def quantity(est: NormEstimate, lower=None, upper=None) -> dict:
    """Bracket of ``est`` with optional replay nodes for its two ends."""
    q = {"lower": fnum(est.lower), "upper": fnum(est.upper), "certified_upper": fnum(est.certified_upper),
         "method": est.method}
    if lower is not None:
        q["replay_lower"] = lower
    if upper is not None:
        q["replay_upper"] = upper
    return q


def estimate_from(q: dict, lower=None, upper=None) -> NormEstimate:
    return NormEstimate(unnum(q["lower"]) if lower is None else lower,
                        unnum(q["upper"]) if upper is None else upper,
                        np.zeros(0, np.complex128), q.get("method", ""), 0,
                        unnum(q.get("certified_upper")))


# --- evaluation -------------------------------------------------------------

class ReplayContext:
    def __init__(self, group: FiniteGroup, p: float):
        self.group = group
        self.p = p
        self._reps = {}

    @classmethod
    def from_setting(cls, setting: dict):
        return cls(group_from_spec(setting["group"]), float(setting["p"]))

    def rep(self, spec):
        key = canonical_json(spec)
        if key not in self._reps:
            self._reps[key] = rep_from_spec(self.group, self.p, spec)
        return self._reps[key]


def _need(node, key):
    if key not in node:
        raise WitnessMissing(f"{node.get('kind', '?')} node lacks {key!r}")
    return node[key]


def evaluate(node, ctx: ReplayContext) -> float:
    kind = _need(node, "kind")
    if kind == "const":
        return unnum(node["value"])
    if kind in ("max", "min"):
        vals = [evaluate(n, ctx) for n in node["parts"]]
        return max(vals) if kind == "max" else min(vals)
    if kind == "pf":
        w = carray(_need(node, "witness"))
        if not w.size:
            raise WitnessMissing("empty witness")
        rep = ctx.rep(node["rep"])
        arr = carray(node["array"])
        amp = AmplifiedRep(rep, arr.shape[0])
        return evaluate_witness(amp(arr), amp.space, witness=w)
    if kind == "scalar":
        w = carray(_need(node, "witness"))
        M = carray(node["matrix"])
        n, m = M.shape
        if not np.any(w):
            return 0.0
        return evaluate_witness(M, plain_geometry(m, unnum(node["p_in"])),
                                plain_geometry(n, unnum(node["p_out"])), witness=w)
    if kind == "compression":
        from .bp import _compression

        w = carray(_need(node, "witness"))
        S = _compression(carray(node["F"]), carray(node["U"]))
        if not np.any(w):
            return 0.0
        g = plain_geometry(S.shape[0], unnum(node["p"]))
        return evaluate_witness(S, g, g, witness=w)
    if kind == "pairing":
        F = carray(_need(node, "F")).reshape(-1)
        return float(abs(np.sum(F * carray(node["values"]).reshape(-1))))
    if kind == "over":
        den = evaluate(node["den"], ctx)
        _check("denominator", den, unnum(node["den_lower"]))
        up = unnum(node["den_upper"])
        return evaluate(node["num"], ctx) / up if up > 0 else 0.0
    if kind == "atoms":
        return _atoms_bound(node, ctx)
    if kind == "realization":
        from .spaces import lp_norm

        rep = ctx.rep(node["rep"])
        xi, eta = carray(node["xi"]), carray(node["eta"])
        return float(rep.space.norms(xi)) * float(lp_norm(eta, rep.space.p_dual))
    if kind == "fourier":
        from .bp import BpElement, fourier_oracle_p2

        return fourier_oracle_p2(BpElement(ctx.group, carray(node["values"])))
    if kind == "closed_form":
        M = carray(node["matrix"])
        p = unnum(node["p"])
        if p == 2:
            return float(np.linalg.norm(M, 2))
        if p == 1:
            return float(np.abs(M).sum(axis=0).max())
        if np.isinf(p):
            return float(np.abs(M).sum(axis=1).max())
        raise ValueError(f"no closed form for p={p}")
    raise ValueError(f"unknown replay node {kind!r}")


def _atoms_bound(node, ctx):
    """sum |coef| ||a|| ||w||, after checking that the atoms add up to u."""
    from .bp import _atom
    from .spaces import lp_norm

    reps = [ctx.rep(s) for s in node["reps"]]
    u = carray(node["values"]).reshape(-1)
    total = np.zeros_like(u)
    bound = 0.0
    for t in _need(node, "terms"):
        rep = reps[t["rep"]]
        a, w = carray(t["a"]), carray(t["w"])
        c = complex(t["coef"][0], t["coef"][1])
        total = total + c * _atom(rep, 1, a, w).reshape(-1)
        bound += abs(c) * float(rep.space.norms(a)) * float(lp_norm(w, rep.space.p_dual))
    err = np.abs(total - u).max(initial=0.0)
    if err > 1e-8 * max(1.0, np.abs(u).max(initial=0.0)):
        raise ReplayMismatch(f"realization atoms miss u by {err:.3e}")
    return bound


def _check(what, new, old, rtol=REPLAY_RTOL):
    if np.isinf(new) and np.isinf(old):
        return
    if not abs(new - old) <= rtol * max(1.0, abs(old)):
        raise ReplayMismatch(f"{what}: stored {old!r}, recomputed {new!r}")


def replay_quantities(record: dict) -> dict:
    """Recompute every replayable end; returns name -> NormEstimate."""
    if "estimates" not in record or "setting" not in record:
        raise WitnessMissing("record has no estimates")
    ctx = ReplayContext.from_setting(record["setting"])
    out = {}
    for name, q in record["estimates"].items():
        lo = up = None
        if "replay_lower" in q:
            lo = evaluate(q["replay_lower"], ctx)
            _check(f"{name}.lower", lo, unnum(q["lower"]))
        if "replay_upper" in q:
            up = evaluate(q["replay_upper"], ctx)
            _check(f"{name}.upper", up, unnum(q["upper"]))
        if lo is None and up is None:
            raise WitnessMissing(f"estimate {name!r} has no witness")
        out[name] = estimate_from(q, lo, up)
    return out
