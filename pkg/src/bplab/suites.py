"""Named check suites.

Each suite turns a setting (group, exponent, base representation) into a
list of JSON instances drawn from keyed random streams, evaluates one
instance into a record, and re-judges a replayed record.  Instances carry
all random data explicitly, so a record can be recomputed on its own.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .bp import (
    BpElement,
    Functional,
    bp_norm_lower,
    cb_functional_check,
    cb_verdict,
    duality_contractivity_check,
    duality_verdict,
    fourier_oracle_p2,
)
from .checks import (
    CheckResult,
    Verdict,
    difference_verdict,
    equality_verdict,
    inequality_verdict,
    max_estimate,
    product_estimate,
)
from .groups import GroupFunction, group_from_spec
from .opnorm import NormEstimate, mixed_scalar_norm, opnorm_boyd, opnorm_bruteforce
from .pseudofunctions import (
    amplified_isometry_check,
    axiom_check_dinf,
    axiom_check_mp,
    block_diag_array,
    build_universal_family,
    compress_array,
    pi_isometry_gap,
    random_probe,
    restriction_pcb_check,
)
from .records import (
    atoms_node,
    carray,
    clist,
    closed_form_node,
    compression_node,
    const_node,
    fnum,
    max_node,
    min_node,
    oracle_node,
    over_node,
    pairing_node,
    pf_node,
    quantity,
    realization_node,
    scalar_node,
    unnum,
)
from .representation import cyclic_subrep, rep_from_spec
from .rng import canonical_json, instance_hash, stream
from .spaces import DualVector, QSLpSpace, SpaceVector

EQ_TOL = 5e-5
DUALITY_TOL = 1e-4
ORACLE_TOL = 1e-3
AGREE_RTOL = 1e-4
CLOSED_FORM_TOL = 1e-10


class Context:
    """Everything a suite needs for one (group, p) setting."""

    def __init__(self, config, index: int):
        self.config = config
        gspec, p = config.settings()[index]
        self.index = index
        self.group_spec = gspec
        self.p = p
        self.group = group_from_spec(gspec)
        self.budget = config.budget
        self.seed = config.seed
        self.setting = {"group": gspec, "p": p}
        self.label = f"{self.group.name or 'G'}/p={p:g}"
        self._families = {}

    @cached_property
    def rep(self):
        return rep_from_spec(self.group, self.p, self.config.representation, self.budget)

    @cached_property
    def probes(self):
        pr = self.config.probes
        if isinstance(pr, int):
            return [random_probe(self.group, self.seed, self.label, i) for i in range(pr)]
        out = []
        for v in pr:
            c = np.asarray(v, dtype=float)
            c = c[..., 0] + 1j * c[..., 1] if c.ndim == 2 else c.astype(complex)
            out.append(GroupFunction(self.group, c))
        return out

    def family(self, r_max=None):
        r = self.config.r_max if r_max is None else int(r_max)
        if r not in self._families:
            self._families[r] = build_universal_family(self.rep, self.probes, r, seed=self.seed,
                                                       budget=self.budget)
        return self._families[r]

    def rng(self, *keys):
        return stream(self.seed, self.label, *keys)

    def cyclic_pieces(self, random_vectors):
        """Cyclic subrepresentations extracted from the base: the family blocks,
        the orbit of the constant vector, and orbits of a few random vectors."""
        subs = [blk for blk in self.family().blocks]
        vecs = [np.ones(self.rep.dim, np.complex128)]
        rng = self.rng("cyclic-vectors")
        for _ in range(random_vectors):
            vecs.append(rng.standard_normal(self.rep.dim) + 1j * rng.standard_normal(self.rep.dim))
        for v in vecs:
            sub = cyclic_subrep(self.rep, v)
            if not any(_same_span(sub.inclusion, s.inclusion) for s in subs):
                subs.append(sub)
        return subs


def _same_span(Q1, Q2, tol=1e-8):
    if Q1.shape[1] != Q2.shape[1]:
        return False
    return np.abs(Q1 @ np.conj(Q1.T) - Q2 @ np.conj(Q2.T)).max() <= tol


def _cnormal(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _det(d):
    """Plain JSON form of a details dict."""
    return json.loads(canonical_json(d))


@dataclass(frozen=True)
class Suite:
    name: str
    description: str
    defaults: dict
    instances: Callable  # (ctx, params) -> list of dicts
    evaluate: Callable  # (ctx, params, inst) -> (CheckResult, estimates)
    verdict: Callable  # (estimates, record) -> Verdict
    global_: bool = False  # runs once, on the first setting only


SUITES: dict = {}


def register(suite: Suite):
    SUITES[suite.name] = suite
    return suite


def _family_block_node(family, arr, est):
    k, part = family.best_block_witness(arr, est)
    if k is None:
        return const_node(0.0)
    return pf_node(family.blocks[k].rep, arr, part)


def _pf_q(rep, arr, est):
    return quantity(est, pf_node(rep, arr, est.witness) if est.lower > 0 else const_node(est.lower))


# --- D_inf ------------------------------------------------------------------

def _dinf_instances(ctx, prm):
    out = []
    for i in range(prm["instances"]):
        rng = ctx.rng("dinf", i)
        n, m = (int(rng.integers(1, prm["max_size"] + 1)) for _ in range(2))
        out.append({"index": i, "U": clist(_cnormal(rng, n, n, ctx.group.order)),
                    "V": clist(_cnormal(rng, m, m, ctx.group.order))})
    return out


def _dinf_eval(ctx, prm, inst):
    U, V = carray(inst["U"]), carray(inst["V"])
    res = axiom_check_dinf(ctx.rep, U, V, budget=ctx.budget, seed=inst["index"], tol=EQ_TOL)
    e = res.estimates
    ests = {"sum": _pf_q(ctx.rep, block_diag_array(U, V), e["sum"]),
            "first": _pf_q(ctx.rep, U, e["first"]), "second": _pf_q(ctx.rep, V, e["second"])}
    return res, ests


def _dinf_verdict(e, rec):
    return equality_verdict(e["sum"], max_estimate([e["first"], e["second"]]), rec["tolerance"])


register(Suite("dinf", "||U (+) V|| = max(||U||, ||V||) on random block pairs",
               {"instances": 5, "max_size": 2}, _dinf_instances, _dinf_eval, _dinf_verdict))


# --- M_p --------------------------------------------------------------------

def _mp_instances(ctx, prm):
    out = []
    for i in range(prm["instances"]):
        rng = ctx.rng("mp", i)
        m = int(rng.integers(1, prm["max_size"] + 1))
        n = int(rng.integers(1, prm["max_size"] + 1))
        out.append({"index": i, "U": clist(_cnormal(rng, m, m, ctx.group.order)),
                    "alpha": clist(_cnormal(rng, n, m)), "beta": clist(_cnormal(rng, m, n))})
    return out


def _mp_eval(ctx, prm, inst):
    U, a, b = carray(inst["U"]), carray(inst["alpha"]), carray(inst["beta"])
    res = axiom_check_mp(ctx.rep, U, a, b, budget=ctx.budget, seed=inst["index"], tol=EQ_TOL)
    e = res.estimates
    p = ctx.p
    ests = {"compressed": _pf_q(ctx.rep, compress_array(a, U, b), e["compressed"]),
            "alpha": quantity(e["alpha"], scalar_node(a, p, p, e["alpha"].witness)),
            "middle": _pf_q(ctx.rep, U, e["middle"]),
            "beta": quantity(e["beta"], scalar_node(b, p, p, e["beta"].witness))}
    return res, ests


def _mp_verdict(e, rec):
    return inequality_verdict(e["compressed"], product_estimate([e["alpha"], e["middle"], e["beta"]]),
                              rec["tolerance"])


register(Suite("mp", "||alpha U beta|| <= ||alpha|| ||U|| ||beta|| on random triples",
               {"instances": 5, "max_size": 2}, _mp_instances, _mp_eval, _mp_verdict))


# --- restriction monotonicity -----------------------------------------------

def _mono_instances(ctx, prm):
    out = []
    subs = ctx.cyclic_pieces(prm["random_vectors"])
    for s, sub in enumerate(subs):
        sizes = [1] * prm["instances"]
        for n in range(2, prm["n_max"] + 1):
            sizes += [n] * prm["matrix_instances"]
        for i, n in enumerate(sizes):
            rng = ctx.rng("monotonicity", s, i)
            out.append({"index": i, "piece": s, "xi": clist(sub.xi),
                        "F": clist(_cnormal(rng, n, n, ctx.group.order))})
    return out


def _mono_eval(ctx, prm, inst):
    sub = cyclic_subrep(ctx.rep, carray(inst["xi"]))
    F = carray(inst["F"])
    res = restriction_pcb_check(ctx.rep, sub, [F], budget=ctx.budget, seed=inst["index"], tol=EQ_TOL)[0]
    e = res.estimates
    ests = {"sub": _pf_q(sub.rep, F, e["sub"]), "ambient": _pf_q(ctx.rep, F, e["ambient"])}
    return res, ests


def _mono_verdict(e, rec):
    return inequality_verdict(e["sub"], e["ambient"], rec["tolerance"])


register(Suite("monotonicity", "||rho^(n)(F)|| <= ||pi^(n)(F)|| for cyclic subrepresentations rho",
               {"instances": 5, "matrix_instances": 1, "n_max": 3, "random_vectors": 1},
               _mono_instances, _mono_eval, _mono_verdict))


# --- universal family gaps --------------------------------------------------

def _r_values(ctx, prm):
    return list(prm["r_values"]) if prm["r_values"] else [ctx.config.r_max]


def _gap_instances(ctx, prm):
    out = []
    for r in _r_values(ctx, prm):
        for j, g in enumerate(ctx.probes):
            out.append({"index": len(out), "r_max": r, "probe": j, "f": clist(g.coeffs)})
        for i in range(prm["extra_tests"]):
            rng = ctx.rng("gap-extra", r, i)
            out.append({"index": len(out), "r_max": r, "probe": None,
                        "f": clist(_cnormal(rng, ctx.group.order))})
    return out


def _gap_estimates(family, res, arr):
    e = res.estimates
    return {"pi": _pf_q(family.base, arr, e["pi"]),
            "Pi": quantity(e["Pi"], _family_block_node(family, arr, e["Pi"]))}


def _gap_eval(ctx, prm, inst):
    fam = ctx.family(inst["r_max"])
    f = GroupFunction(ctx.group, carray(inst["f"]))
    res = pi_isometry_gap(fam, [f], budget=ctx.budget, seed=inst["index"], tol=EQ_TOL)[0]
    return res, _gap_estimates(fam, res, f.coeffs.reshape(1, 1, -1))


def _gap_verdict(e, rec):
    lo, hi = rec["details"]["bracket"]
    low = -rec["tolerance"] * max(1.0, e["pi"].upper)
    return difference_verdict(e["pi"], e["Pi"], low, unnum(hi))


register(Suite("universal_gap", "0 <= ||pi(f)|| - ||Pi(f)|| <= 1/r_max on the probes",
               {"r_values": [], "extra_tests": 0}, _gap_instances, _gap_eval, _gap_verdict))


def _amp_instances(ctx, prm):
    out = []
    G = ctx.group.order
    k = len(ctx.probes)
    for r in _r_values(ctx, prm):
        for i in range(k):
            for j in range(k):
                gi, gj = ctx.probes[i].coeffs, ctx.probes[j].coeffs
                diag = np.zeros((2, 2, G), np.complex128)
                diag[0, 0], diag[1, 1] = gi, gj
                swap = np.zeros((2, 2, G), np.complex128)
                swap[0, 1], swap[1, 0] = gi, gj
                for kind, F in (("diag", diag), ("swap", swap)):
                    out.append({"index": len(out), "r_max": r, "kind": kind, "probes": [i, j],
                                "adequate": True, "F": clist(F)})
        for t in range(prm["random_arrays"]):
            rng = ctx.rng("amplified", r, t)
            out.append({"index": len(out), "r_max": r, "kind": "random", "probes": None, "adequate": False,
                        "F": clist(_cnormal(rng, 2, 2, G))})
    return out


def _amp_eval(ctx, prm, inst):
    fam = ctx.family(inst["r_max"])
    F = carray(inst["F"])
    res = amplified_isometry_check(fam, F, adequate=inst["adequate"], budget=ctx.budget,
                                   seed=inst["index"], tol=EQ_TOL)
    return res, _gap_estimates(fam, res, F)


register(Suite("amplified_isometry", "the same gap bracket for 2 x 2 arrays built from probes",
               {"r_values": [], "random_arrays": 1}, _amp_instances, _amp_eval, _gap_verdict))


# --- B_p brackets -----------------------------------------------------------

def _bracket_q(br, values, est=None):
    """Quantity for a B_p bracket: lower from its witness f, upper from its atoms."""
    est = est or NormEstimate(br.lower, br.upper, np.zeros(0), "cutting_plane", 0, br.upper)
    if br.unbounded:
        return quantity(est, const_node(np.inf), const_node(np.inf))
    if br.upper == 0:
        return quantity(est, const_node(0.0), const_node(0.0))
    den = br.denominator
    F = br.witness.coeffs.reshape(1, 1, -1)
    lower = over_node(pairing_node(F, values), pf_node(br.reps[br.den_block], F, den.witness),
                      den.lower, den.upper)
    upper = atoms_node(values, br.reps, br.terms) if br.terms else None
    return quantity(est, lower, upper)


def _duality_instances(ctx, prm):
    out = []
    E = ctx.rep.space
    for i in range(prm["instances"]):
        rng = ctx.rng("duality", i)
        xi = _cnormal(rng, E.dim)
        eta = DualVector(E, _cnormal(rng, E.ambient_dim)).w  # projected onto the annihilator of N
        out.append({"index": i, "kind": "realization", "xi": clist(xi), "eta": clist(eta)})
    for i in range(prm["matrix_instances"]):
        rng = ctx.rng("duality-matrix", i)
        out.append({"index": prm["instances"] + i, "kind": "matrix",
                    "W": clist(_cnormal(rng, E.dim, E.dim))})
    return out


def _duality_eval(ctx, prm, inst):
    rep = ctx.rep
    if inst["kind"] == "realization":
        xi = SpaceVector(rep.space, carray(inst["xi"]))
        eta = DualVector(rep.space, carray(inst["eta"]))
        phi = Functional.from_realization(rep, xi, eta)
    else:
        phi = Functional(rep, carray(inst["W"]))
    res = duality_contractivity_check(rep, [phi], ctx.family(), budget=ctx.budget, seed=inst["index"],
                                      tol=DUALITY_TOL)[0]
    lhs, on_pi, u = res.artifacts["u"], res.artifacts["on_pi"], res.artifacts["element"]
    q_u = _bracket_q(lhs, u.values, res.estimates["u"])
    pi_q = _bracket_q(on_pi, u.values)
    up = pi_q.get("replay_upper")
    if inst["kind"] == "realization":
        from .bp import Realization

        rn = realization_node(Realization(rep, xi, eta))
        up = min_node(up, rn) if up is not None else rn
    q_phi = quantity(res.estimates["phi"], pi_q.get("replay_lower"), up)
    return res, {"u": q_u, "phi": q_phi}


def _duality_verdict(e, rec):
    return duality_verdict(e["u"], e["phi"], rec["tolerance"])


register(Suite("duality", "||u||_{B_p} <= ||phi|| for u reconstructed from functionals on PF_{p,pi}",
               {"instances": 3, "matrix_instances": 1}, _duality_instances, _duality_eval, _duality_verdict))


def _cb_instances(ctx, prm):
    out = []
    for i in range(prm["instances"]):
        rng = ctx.rng("cb", i)
        out.append({"index": i, "u": clist(_cnormal(rng, ctx.group.order))})
    return out


def _cb_eval(ctx, prm, inst):
    u = BpElement(ctx.group, carray(inst["u"]))
    res = cb_functional_check(ctx.family(), u, prm["n_max"], budget=ctx.budget, seed=inst["index"])
    e = res.estimates
    one, mat = res.artifacts.get("u_1"), res.artifacts.get("u_n")
    if one is None:
        return res, {"u_n": quantity(e["u_n"], const_node(0.0)), "u_1": quantity(e["u_1"], const_node(0.0))}
    q1 = _bracket_q(one, u.values, e["u_1"])
    parts = [q1["replay_lower"]]
    if mat.scalar is not None:
        F = mat.F
        parts.append(over_node(compression_node(F, u.values.reshape(1, 1, -1), ctx.p, mat.scalar.witness),
                               pf_node(mat.reps[mat.den_block], F, mat.denominator.witness),
                               mat.denominator.lower, mat.denominator.upper))
    return res, {"u_n": quantity(e["u_n"], max_node(*parts)), "u_1": q1}


def _cb_verdict(e, rec):
    return cb_verdict(e["u_n"], e["u_1"], rec["tolerance"], rec["tolerance"])


register(Suite("cb_functional", "||u_n|| = ||u_1|| for the matrix levels of a functional",
               {"instances": 2, "n_max": 3}, _cb_instances, _cb_eval, _cb_verdict))


def _p2_instances(ctx, prm):
    if ctx.p != 2 or not ctx.group.is_abelian:
        return []
    G = ctx.group
    out = [{"index": 0, "kind": "one", "u": clist(BpElement.constant(G).values)},
           {"index": 1, "kind": "delta", "u": clist(BpElement.delta(G).values)}]
    for i in range(prm["instances"]):
        rng = ctx.rng("p2", i)
        out.append({"index": 2 + i, "kind": "random", "u": clist(rng.standard_normal(G.order))})
    return out


def _p2_eval(ctx, prm, inst):
    u = BpElement(ctx.group, carray(inst["u"]))
    br = bp_norm_lower(ctx.family(), u, budget=ctx.budget, seed=inst["index"])
    exact = fourier_oracle_p2(u)
    est = NormEstimate(br.lower, br.upper, br.witness.coeffs, "cutting_plane/lp_realization", 0, br.upper)
    oracle = NormEstimate(exact, exact, np.zeros(0), "fourier", 0, exact)
    ests = {"bracket": _bracket_q(br, u.values, est),
            "oracle": quantity(oracle, oracle_node(u.values), oracle_node(u.values))}
    verdict = _p2_rule(est, oracle, ORACLE_TOL)
    res = CheckResult("p2_oracle", verdict, br.lower, exact, ORACLE_TOL, {"bracket": est, "oracle": oracle},
                      {"kind": inst["kind"], "upper": br.upper, "gap": br.gap})
    return res, ests


def _p2_rule(br, oracle, tol):
    if br.lower > br.upper + 1e-9 * max(1.0, br.upper):
        return Verdict.FAIL
    x = oracle.lower
    return Verdict.PASS if br.lower - tol <= x <= br.upper + tol else Verdict.FAIL


def _p2_verdict(e, rec):
    return _p2_rule(e["bracket"], e["oracle"], rec["tolerance"])


register(Suite("p2_oracle", "at p = 2 on abelian groups the B_p bracket contains the Fourier l_1 norm",
               {"instances": 1}, _p2_instances, _p2_eval, _p2_verdict))


# --- solver oracle ----------------------------------------------------------

def _oracle_instances(ctx, prm):
    out = []
    for d in prm["dims"]:
        for p in prm["exponents"]:
            for i in range(prm["instances"]):
                rng = ctx.rng("solver-oracle", d, p, i)
                out.append({"index": len(out), "kind": "agree", "p": p, "A": clist(_cnormal(rng, d, d))})
        for p in prm["closed_form_exponents"]:
            for i in range(prm["closed_form_instances"]):
                rng = ctx.rng("closed-form", d, p, i)
                out.append({"index": len(out), "kind": "closed", "p": p, "A": clist(_cnormal(rng, d, d))})
    return out


def _exponent(p):
    return np.inf if p in ("inf", None) else float(p)


def _oracle_eval(ctx, prm, inst):
    A = carray(inst["A"])
    p = _exponent(inst["p"])
    d = A.shape[0]
    if inst["kind"] == "agree":
        E = QSLpSpace.plain(d, p)
        b = opnorm_boyd(A, E, seed=inst["index"], budget=ctx.budget)
        bf = opnorm_bruteforce(A, E, resolution=ctx.budget.resolution, max_points=ctx.budget.max_points,
                               budget=ctx.budget)
        ests = {"boyd": quantity(b, scalar_node(A, p, p, b.witness)),
                "bruteforce": quantity(bf, scalar_node(A, p, p, bf.witness))}
        rel = abs(b.lower - bf.lower) / max(bf.lower, 1e-300)
        res = CheckResult("solver_oracle", _agree_rule(b, bf, AGREE_RTOL), b.lower, bf.lower, AGREE_RTOL,
                          {"boyd": b, "bruteforce": bf}, {"kind": "agree", "relative_gap": rel})
        return res, ests
    est = mixed_scalar_norm(A, p, p, budget=ctx.budget)
    exact = closed_form_node(A, p)
    from .records import ReplayContext, evaluate

    val = evaluate(exact, ReplayContext(ctx.group, ctx.p))
    indep = NormEstimate(val, val, np.zeros(0), "formula", 0, val)
    ests = {"closed": quantity(est, scalar_node(A, p, p, est.witness)),
            "formula": quantity(indep, exact, exact)}
    res = CheckResult("solver_oracle", _closed_rule(est, indep, CLOSED_FORM_TOL), est.lower, val,
                      CLOSED_FORM_TOL, {"closed": est, "formula": indep}, {"kind": "closed"})
    return res, ests


def _agree_rule(a, b, rtol):
    return Verdict.PASS if abs(a.lower - b.lower) <= rtol * max(b.lower, 1e-300) else Verdict.FAIL


def _closed_rule(est, indep, tol):
    s = max(1.0, indep.lower)
    ok = abs(est.lower - indep.lower) <= tol * s and abs(est.upper - indep.upper) <= tol * s
    return Verdict.PASS if ok else Verdict.FAIL


def _oracle_verdict(e, rec):
    if "boyd" in e:
        return _agree_rule(e["boyd"], e["bruteforce"], rec["tolerance"])
    return _closed_rule(e["closed"], e["formula"], rec["tolerance"])


register(Suite("solver_oracle", "power iteration against grid search, closed forms against formulas",
               {"instances": 5, "dims": [2, 3], "exponents": [1.5, 2.0, 2.5, 3.0],
                "closed_form_exponents": [1.0, 2.0, "inf"], "closed_form_instances": 2},
               _oracle_instances, _oracle_eval, _oracle_verdict, global_=True))


# --- records ----------------------------------------------------------------

def make_record(suite: Suite, ctx: Context, inst: dict, res: CheckResult, ests: dict) -> dict:
    key = {"suite": suite.name, "setting": ctx.setting, "instance": inst}
    return {
        "suite": suite.name,
        "check": f"{suite.name}:{ctx.label}:{inst['index']}",
        "instance": instance_hash(key),
        "setting": ctx.setting,
        "input": _det(inst),
        "verdict": res.verdict.value,
        "lhs": fnum(res.lhs),
        "rhs": fnum(res.rhs),
        "tolerance": float(res.tolerance),
        "estimates": _det(ests),
        "details": _det(res.details),
    }


def evaluate_instance(suite: Suite, ctx: Context, params: dict, inst: dict) -> dict:
    res, ests = suite.evaluate(ctx, params, inst)
    return make_record(suite, ctx, inst, res, ests)
