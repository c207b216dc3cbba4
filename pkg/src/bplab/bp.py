"""Coefficient functions u(x) = <pi(x) xi, eta> and their B_p norms.

The norm of u is bracketed from both sides.  Lower bounds come from the
duality with pseudofunctions: any f gives |<f, u>| / ||Pi(f)|| <= ||u||
(relative to the representations that define the ball).  Upper bounds come
from realizations u = sum_k <pi_k(x) xi_k, eta_k>, which bound the norm by
sum_k ||xi_k|| ||eta_k||.

Both sides meet in one cutting-plane linear program.  The unit ball
{F : ||Pi^(n)(F)|| <= 1} is the intersection of the half-spaces
Re(e^{i theta} <F, v>) <= 1 over atoms v(x) = <pi(x) a, b> with
||a|| ||b|| <= 1.  Finitely many atoms give an outer polytope, so the LP
value is an upper bound, and the LP multipliers are exactly a realization
of u by those atoms.  New atoms come from the norming vectors of Pi(F) at
the current LP optimum.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import combinations_with_replacement

import numpy as np
from scipy.optimize import linprog, minimize

from .checks import CheckResult, Verdict, inequality_verdict, max_estimate
from .groups import FiniteGroup, GroupFunction, GroupMismatch
from .opnorm import DEFAULT_BUDGET, NormEstimate, SolverBudget, mixed_scalar_norm, opnorm
from .pseudofunctions import UniversalFamily
from .representation import AmplifiedRep, Representation, direct_sum_rep
from .rng import stream
from .spaces import (
    DualVector,
    SpaceMismatch,
    SpaceVector,
    annihilator,
    dual_norm,
    duality_map,
    lp_norm,
    norming_functional,
    quotient_norm_batch,
)

REALIZATION_TOL = 1e-10
PAIRING_TOL = 1e-9
CB_TOL = 1e-3
BASIS_PHASES = 8
SEPARATION_BUDGET = SolverBudget(starts=3, maxiter=30, tol=1e-9, polish=1)


class Infeasible(ValueError):
    """u is not a coefficient function of any candidate representation."""


class NotAbelian(ValueError):
    pass


# --- elements ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Realization:
    """u(x) = <rep(x) xi, eta>."""

    rep: Representation
    xi: SpaceVector
    eta: DualVector

    def coefficients(self) -> np.ndarray:
        E = self.rep.space
        return np.einsum("m,mk,xkl,l->x", self.eta.w, E.R, self.rep.matrices, self.xi.coords)

    def bound(self) -> float:
        """||xi|| ||eta||, both evaluated from above."""
        return float(self.xi.norm()) * dual_norm(self.eta)


@dataclass(frozen=True, eq=False)
class BpElement:
    group: FiniteGroup
    values: np.ndarray = field(repr=False)
    realization: Realization | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=np.complex128).reshape(-1)
        if v.shape[0] != self.group.order:
            raise ValueError(f"expected {self.group.order} values, got {v.shape[0]}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.realization is not None:
            if self.realization.rep.group != self.group:
                raise GroupMismatch("realization lives on a different group")
            err = np.abs(self.realization.coefficients() - v).max()
            if err > REALIZATION_TOL * max(1.0, np.abs(v).max()):
                raise ValueError(f"values disagree with the realization (error {err:.2e})")

    @classmethod
    def constant(cls, group, c=1.0):
        return cls(group, np.full(group.order, c, np.complex128))

    @classmethod
    def delta(cls, group, x=None):
        v = np.zeros(group.order, np.complex128)
        v[group.identity if x is None else x] = 1.0
        return cls(group, v)

    def __mul__(self, other):
        if isinstance(other, BpElement):
            if other.group != self.group:
                raise GroupMismatch("pointwise product across groups")
            return BpElement(self.group, self.values * other.values)
        return BpElement(self.group, self.values * complex(other))

    __rmul__ = __mul__

    def __add__(self, other):
        if other.group != self.group:
            raise GroupMismatch("sum across groups")
        return BpElement(self.group, self.values + other.values)

    def to_function(self) -> GroupFunction:
        return GroupFunction(self.group, self.values)


def coefficient_function(rep: Representation, xi: SpaceVector, eta: DualVector) -> BpElement:
    if not (rep.space.same_as(xi.space) and rep.space.same_as(eta.space)):
        raise SpaceMismatch("xi, eta and the representation must share one space")
    real = Realization(rep, xi, eta)
    return BpElement(rep.group, real.coefficients(), real)


def pairing(family, f: GroupFunction, u: BpElement) -> complex:
    """<pi(f), u> = sum_x f(x) u(x).

    When ``u`` carries a realization on the representation ``family`` the
    value is also computed as <pi(f) xi, eta> and both must agree.
    """
    if f.group != u.group:
        raise GroupMismatch("function and coefficient function on different groups")
    rep = family.base if isinstance(family, UniversalFamily) else family
    if rep is not None and rep.group != u.group:
        raise GroupMismatch("representation on a different group")
    value = complex(np.sum(f.coeffs * u.values))
    real = u.realization
    if real is not None and real.rep is rep:
        direct = complex(np.sum(real.eta.w * (rep.space.R @ (rep.lift_matrix(f.coeffs) @ real.xi.coords))))
        if abs(direct - value) > PAIRING_TOL * max(1.0, abs(value)):
            raise AssertionError(f"pairing mismatch: {value} vs {direct}")
    return value


# --- the unit ball of PF at matrix level n ----------------------------------

def _ball_reps(family, include_base=True):
    """Representations whose max norm defines the ball.

    Every block of a universal family is a restriction of the base, so with
    the base included the base alone determines ||Pi(f)||.
    """
    if isinstance(family, UniversalFamily):
        if include_base:
            return [family.base]
        return [blk.rep for blk in family.blocks]
    if isinstance(family, Representation):
        return [family]
    reps = list(family)
    if not reps:
        raise ValueError("need at least one representation")
    return reps


def _atom(rep, n, a, w):
    """V[s, t, x] = <rep(x) a_t, w_s> for a in E^(n) coords, w in the ambient of E^(n)."""
    E = rep.space
    d, m = E.dim, E.ambient_dim
    return np.einsum("sm,mk,xkl,tl->stx", w.reshape(n, m), E.R, rep.matrices, a.reshape(n, d))


@dataclass(frozen=True)
class AtomTerm:
    """coef * <rep_k(x) a_t, w_s>, with ||a|| ||w|| <= 1."""

    coef: complex
    rep_index: int
    a: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)


@dataclass
class DualSolve:
    lower: float
    upper: float
    F: np.ndarray = field(repr=False)  # witness array (n, n, |G|)
    denominator: NormEstimate | None
    terms: list = field(default_factory=list, repr=False)
    rounds: int = 0
    unbounded: bool = False
    den_block: int = 0  # ball representation attaining the denominator


class FamilyBall:
    """Polyhedral outer model of {F : max_k ||pi_k^(n)(F)|| <= 1}.

    Cuts only depend on the ball, so one instance can serve many
    objectives (the alternations of the matrix-level searches).
    """

    def __init__(self, reps, n: int = 1, *, seed: int = 0):
        self.reps = list(reps)
        self.n = int(n)
        self.group = self.reps[0].group
        self.p = self.reps[0].p
        self.seed = seed
        self.shape = (self.n, self.n, self.group.order)
        self._rows, self._phase, self._terms = [], [], []
        self._warm = [None] * len(self.reps)
        self.last_block = 0
        basis = []
        for k, rep in enumerate(self.reps):
            for a, w in self._basis_pairs(rep):
                basis.append((k, a, w, _atom(rep, self.n, a, w).reshape(-1)))
        V = np.array([b[3] for b in basis])
        _, s, vh = np.linalg.svd(V, full_matrices=False)
        rank = int(np.sum(s > 1e-10 * s[0]))
        self.Q = vh[:rank]  # orthonormal rows spanning all atoms
        self.P = np.conj(self.Q)  # F = y @ P
        self._basis = basis
        self._basis_g = np.array([self.P @ b[3] for b in basis]).T
        for k, a, w, v in basis:
            g = self.P @ v
            for j in range(BASIS_PHASES):
                self._add(g, 2 * np.pi * j / BASIS_PHASES, AtomTerm(1.0, k, a, w))

    def _basis_pairs(self, rep):
        E = rep.space
        n, d, m = self.n, E.dim, E.ambient_dim
        W = annihilator(E.N) if E.N.shape[1] else np.eye(m, dtype=np.complex128)
        W = W / lp_norm(W.T, E.p_dual)[None, :]
        En = AmplifiedRep(rep, n).space
        for t in range(n):
            for i in range(d):
                a = np.zeros(n * d, np.complex128)
                a[t * d + i] = 1.0
                a = a / En.norms(a)
                for s in range(n):
                    for j in range(W.shape[1]):
                        w = np.zeros(n * m, np.complex128)
                        w[s * m : (s + 1) * m] = W[:, j]
                        yield a, w

    @property
    def dim(self):
        return self.Q.shape[0]

    def _add(self, g, theta, term):
        h = np.exp(1j * theta) * g
        self._rows.append(np.concatenate([h.real, -h.imag]))
        self._phase.append(theta)
        self._terms.append(term)

    def reduce(self, W):
        """Reduced coordinates of W and its distance to the span of the atoms."""
        Wf = np.asarray(W, dtype=np.complex128).reshape(-1)
        g = self.P @ Wf
        resid = Wf - g @ self.Q
        return g, resid

    def lift(self, y):
        return (y @ self.P).reshape(self.shape)

    def separate(self, F, budget=SEPARATION_BUDGET):
        """Cheap norm of each block at F and a norming atom per block."""
        out = []
        for k, rep in enumerate(self.reps):
            amp = AmplifiedRep(rep, self.n)
            A = amp(F)
            warm = self._warm[k] if self._warm[k] is not None else np.ones(A.shape[1], np.complex128)
            est = opnorm(A, amp.space, budget=budget, seed=self.seed + k, extra_starts=warm)
            a = np.asarray(est.witness, np.complex128)
            self._warm[k] = a
            y = A @ a
            if est.lower <= 0 or not np.any(y):
                out.append((k, est, None, None))
                continue
            a = a / amp.space.norms(a)
            w = norming_functional(SpaceVector(amp.space, y)).w
            w = w / max(lp_norm(w, rep.space.p_dual), 1e-300)
            out.append((k, est, a, w))
        return out

    def certified_norm(self, F, budget=DEFAULT_BUDGET, with_atoms=False):
        ests, atoms = [], []
        for k, rep in enumerate(self.reps):
            amp = AmplifiedRep(rep, self.n)
            est = amp.norm(F, budget=budget, seed=self.seed + k, extra_starts=self._warm[k])
            ests.append(est)
            if with_atoms and est.lower > 0:
                a = np.asarray(est.witness, np.complex128)
                y = amp(F) @ a
                a = a / amp.space.norms(a)
                w = norming_functional(SpaceVector(amp.space, y)).w
                atoms.append((k, a, w / max(lp_norm(w, rep.space.p_dual), 1e-300)))
        est = max_estimate(ests)
        self.last_block = max(range(len(ests)), key=lambda k: ests[k].lower)
        return (est, atoms) if with_atoms else est

    def _lp(self, gu, center=None, radius=None):
        A = np.array(self._rows)
        c = -np.concatenate([gu.real, -gu.imag])
        if center is None:
            bounds = (None, None)
        else:
            x0 = np.concatenate([center.real, center.imag])
            x0 = x0 / max(1.0, float(np.max(A @ x0)))  # cuts added since may exclude it
            bounds = np.stack([x0 - radius, x0 + radius], axis=1)
        res = linprog(c, A_ub=A, b_ub=np.ones(len(A)), bounds=bounds, method="highs")
        if res.status != 0 and center is not None:
            return None
        if res.status != 0:
            raise RuntimeError(f"cutting-plane LP failed: {res.message}")
        r = self.dim
        y = res.x[:r] + 1j * res.x[r:]
        lam = np.maximum(-res.ineqlin.marginals, 0.0)
        return y, -res.fun, lam

    def _certified_upper(self, gu, lam):
        """sum(lam) plus a basis expansion of whatever the multipliers miss."""
        H = np.array(self._rows)
        r = self.dim
        h = H[:, :r] - 1j * H[:, r:]  # e^{i theta} g per row
        resid = gu - lam @ h
        mu, *_ = np.linalg.lstsq(self._basis_g, resid, rcond=None)
        leftover = np.abs(self._basis_g @ mu - resid).max(initial=0.0)
        extra = float(np.abs(mu).sum()) if leftover <= 1e-9 * max(1.0, np.abs(gu).max()) else np.inf
        terms = [replace(self._terms[i], coef=lam[i] * np.exp(1j * self._phase[i]) * self._terms[i].coef)
                 for i in np.nonzero(lam > 0)[0]]
        terms += [AtomTerm(mu[j], self._basis[j][0], self._basis[j][1], self._basis[j][2])
                  for j in np.nonzero(np.abs(mu) > 0)[0]]
        return float(lam.sum()) + extra, terms

    def _probe(self, y, W):
        """Ratio at y (with the cheap block norms) and the cuts y violates."""
        F = self.lift(y)
        sep = self.separate(F)
        den = max(est.lower for _, est, _, _ in sep)
        num = abs(np.sum(F * W))
        cuts = []
        for k, est, a, w in sep:
            if a is None:
                continue
            g = self.P @ _atom(self.reps[k], self.n, a, w).reshape(-1)
            z = y @ g
            if abs(z) > 1 + 1e-12:
                cuts.append((g, -np.angle(z), AtomTerm(1.0, k, a, w)))
        return (num / den if den > 0 else 0.0), max(den, 1e-300), cuts

    def solve(self, W, *, max_rounds=150, rtol=1e-6, budget=DEFAULT_BUDGET) -> DualSolve:
        """sup |<F, W>| over the ball: certified bracket and witness F."""
        W = np.asarray(W, dtype=np.complex128).reshape(self.shape)
        gu, resid = self.reduce(W)
        scale = max(1.0, float(np.abs(W).max()))
        if np.abs(resid).max() > 1e-9 * scale:
            # W does not vanish on the kernel of Pi: unbounded functional
            F = np.conj(resid).reshape(self.shape)
            return DualSolve(np.inf, np.inf, F, None, unbounded=True)
        if not np.any(np.abs(gu) > 1e-15 * scale):
            return DualSolve(0.0, 0.0, np.zeros(self.shape, np.complex128), None)
        # Kelley steps give the global bound; box steps around the best point
        # (a trust region in the reduced coordinates) give fast lower bounds.
        # Cheap block norms drive the loop; before stopping, the best point is
        # re-evaluated with the full budget and its atoms join the cuts.
        best, best_y = -1.0, None
        radius = 1.0
        rounds = 0
        while True:
            y, val, lam = self._lp(gu)
            cand = [y]
            if best_y is not None:
                yb = self._lp(gu, best_y, radius)
                if yb is not None:
                    cand.append(yb[0])
            improved = False
            cuts = []
            for yc in cand:
                ratio, den, new = self._probe(yc, W)
                cuts += new
                if ratio > best * (1 + 1e-12):
                    best, best_y, improved = ratio, yc / den, True
            radius = min(radius * 2, 1.0) if improved else max(radius / 4, 1e-8)
            done = val <= best * (1 + rtol) + 1e-12 * scale
            if done or not cuts:
                F = self.lift(best_y)
                den, atoms = self.certified_norm(F, budget=budget, with_atoms=True)
                lower = abs(np.sum(F * W)) / den.upper if den.upper > 0 else 0.0
                for k, a, w in atoms:
                    g = self.P @ _atom(self.reps[k], self.n, a, w).reshape(-1)
                    z = best_y @ g
                    if abs(z) > 1 + 1e-12:
                        cuts.append((g, -np.angle(z), AtomTerm(1.0, k, a, w)))
                best = lower
                best_y = best_y * (den.lower / den.upper) if den.upper > 0 else best_y
                if val <= lower * (1 + rtol) + 1e-12 * scale or not cuts:
                    break
            if rounds >= max_rounds:
                F = self.lift(best_y)
                den = self.certified_norm(F, budget=budget)
                lower = abs(np.sum(F * W)) / den.upper if den.upper > 0 else 0.0
                break
            rounds += 1
            for g, theta, term in cuts:
                self._add(g, theta, term)
        upper, terms = self._certified_upper(gu, lam)
        return DualSolve(lower, upper, self.lift(best_y), den, terms, rounds, den_block=self.last_block)


# --- B_p norm brackets ------------------------------------------------------

@dataclass
class BpNormBracket:
    lower: float
    upper: float
    witness: GroupFunction | None = None  # f certifying the lower bound
    terms: list = field(default_factory=list, repr=False)  # atoms realizing the upper bound
    realization: Realization | None = None
    unbounded: bool = False
    lower_method: str = "cutting_plane"
    upper_method: str = "lp_realization"
    details: dict = field(default_factory=dict)
    denominator: NormEstimate | None = field(default=None, repr=False)  # ||Pi(f)|| at the witness
    den_block: int = 0
    reps: list = field(default_factory=list, repr=False)  # representations defining the ball

    @property
    def gap(self):
        return self.upper - self.lower

    def nonempty(self, tol=1e-9) -> bool:
        return self.lower <= self.upper + tol * max(1.0, abs(self.upper))

    def contains(self, x, tol=0.0) -> bool:
        return self.lower - tol <= x <= self.upper + tol

    def estimate(self) -> NormEstimate:
        w = self.witness.coeffs if self.witness is not None else np.zeros(0, complex)
        return NormEstimate(self.lower, self.upper, w, f"{self.lower_method}/{self.upper_method}", 0,
                            self.upper, 1, True)

    def to_dict(self) -> dict:
        w = [] if self.witness is None else [[float(z.real), float(z.imag)] for z in self.witness.coeffs]
        return {"lower": float(self.lower), "upper": float(self.upper), "unbounded": self.unbounded,
                "lower_method": self.lower_method, "upper_method": self.upper_method,
                "witness": w, "realization_terms": len(self.terms), "details": self.details}


def _values(u, group=None):
    if isinstance(u, BpElement):
        return u.values
    return np.asarray(u, dtype=np.complex128).reshape(-1)


def bp_norm_lower(family, u: BpElement, *, budget: SolverBudget = DEFAULT_BUDGET, seed: int = 0,
                  include_base: bool = True, max_rounds: int = 150) -> BpNormBracket:
    """Dual norm sup |<f, u>| / ||Pi(f)|| over the family ball.

    The lower end is certified by the returned f.  The upper end is the LP
    value, realized by the returned atoms.  If u does not vanish on the
    kernel of Pi the supremum is infinite and ``unbounded`` is set.
    """
    reps = _ball_reps(family, include_base)
    G = reps[0].group
    if isinstance(u, BpElement) and u.group != G:
        raise GroupMismatch("u and the family live on different groups")
    ball = FamilyBall(reps, 1, seed=seed)
    sol = ball.solve(_values(u).reshape(1, 1, -1), budget=budget, max_rounds=max_rounds)
    f = GroupFunction(G, sol.F[0, 0])
    det = {"rounds": sol.rounds, "reps": [r.label for r in reps]}
    if sol.denominator is not None:
        det["denominator"] = sol.denominator.to_dict()
    return BpNormBracket(sol.lower, sol.upper, f, sol.terms, None, sol.unbounded, details=det,
                         denominator=sol.denominator, den_block=sol.den_block, reps=reps)


def _best_eta(rep, xi, u, p_dual):
    """min ||w||_{p'} over ambient w realizing u with this xi (None if impossible)."""
    E = rep.space
    P = np.einsum("mk,xkl,l->xm", E.R, rep.matrices, xi)
    B = np.concatenate([P, E.N.T], axis=0)
    c = np.concatenate([u, np.zeros(E.N.shape[1], np.complex128)])
    w0, *_ = np.linalg.lstsq(B, c, rcond=None)
    if np.abs(B @ w0 - c).max() > 1e-9 * max(1.0, np.abs(u).max()):
        return None, np.inf
    Z = annihilator(B.T)
    if Z.shape[1]:
        res = quotient_norm_batch(w0[None, :], Z, p_dual)
        w = w0 + Z @ res.z[0]
    else:
        w = w0
    return w, float(lp_norm(w, p_dual))


def _search_realization(rep, u, starts, seed, maxiter):
    E = rep.space
    d = E.dim

    def unpack(x):
        return x[:d] + 1j * x[d:]

    def obj(x):
        xi = unpack(x)
        nx = E.norms(xi)
        if nx <= 1e-12:
            return 1e6
        _, q = _best_eta(rep, xi / nx, u, E.p_dual)
        return q if np.isfinite(q) else 1e6

    best = (np.inf, None, None)
    for x0 in starts:
        x0 = np.concatenate([x0.real, x0.imag])
        if obj(x0) >= 1e6:
            continue
        res = minimize(obj, x0, method="L-BFGS-B", options={"maxiter": maxiter})
        for x in (res.x, x0):
            xi = unpack(x)
            xi = xi / E.norms(xi)
            w, q = _best_eta(rep, xi, u, E.p_dual)
            if w is not None and q < best[0]:
                best = (q, xi, w)
    return best


def bp_norm_upper(u: BpElement, family, *, starts: int = 3, seed: int = 0, max_pieces: int = 3,
                  max_candidates: int = 12, maxiter: int = 60):
    """Smallest ||xi|| ||eta|| found over candidate representations.

    Candidates are the given representations and their l_p direct sums of up
    to ``max_pieces`` pieces.  For a fixed xi the constraints are linear in
    eta, so only xi is searched.  Returns (upper, Realization).
    """
    reps = _ball_reps(family, include_base=False) if isinstance(family, UniversalFamily) else list(
        [family] if isinstance(family, Representation) else family)
    vals = _values(u)
    if not np.any(vals):
        rep = reps[0]
        z = SpaceVector(rep.space, np.zeros(rep.dim))
        return 0.0, Realization(rep, z, DualVector(rep.space, np.zeros(rep.space.ambient_dim)))
    combos = []
    for k in range(1, max_pieces + 1):
        combos += list(combinations_with_replacement(range(len(reps)), k))
    combos = combos[:max_candidates]
    best = (np.inf, None, None, None)
    for ci, combo in enumerate(combos):
        rep = reps[combo[0]] if len(combo) == 1 else direct_sum_rep([reps[i] for i in combo])
        rng = stream(seed, "realization", ci)
        st = [np.ones(rep.dim, np.complex128)]
        st += [rng.standard_normal(rep.dim) + 1j * rng.standard_normal(rep.dim) for _ in range(starts - 1)]
        real = u.realization if isinstance(u, BpElement) else None
        if real is not None and real.rep.space.same_as(rep.space) and np.allclose(real.rep.matrices, rep.matrices):
            st.insert(0, real.xi.coords)
        q, xi, w = _search_realization(rep, vals, st, seed, maxiter)
        if q < best[0]:
            best = (q, rep, xi, w)
    q, rep, xi, w = best
    if rep is None:
        raise Infeasible("u is not a coefficient function of any candidate representation")
    real = Realization(rep, SpaceVector(rep.space, xi), DualVector(rep.space, w))
    err = np.abs(real.coefficients() - vals).max()
    if err > 1e-8 * max(1.0, np.abs(vals).max()):
        raise Infeasible(f"best realization misses u by {err:.2e}")
    return real.bound(), real


def bp_bracket(family, u: BpElement, *, budget: SolverBudget = DEFAULT_BUDGET, seed: int = 0,
               search: bool = False) -> BpNormBracket:
    """bp_norm_lower with the upper end tightened by a realization search."""
    br = bp_norm_lower(family, u, budget=budget, seed=seed)
    if search and not br.unbounded:
        try:
            up, real = bp_norm_upper(u, _ball_reps(family), seed=seed)
        except Infeasible:
            return br
        if up < br.upper:
            br = replace(br, upper=up, realization=real, upper_method="realization_search")
    return br


def fourier_oracle_p2(u: BpElement) -> float:
    """sum_chi |u^(chi)| with u^(chi) = |G|^-1 sum_x u(x) conj(chi(x))."""
    G = u.group
    if not G.is_abelian:
        raise NotAbelian(f"{G.name or 'group'} is not abelian")
    chars = character_table(G)
    coef = (np.conj(chars) @ u.values) / G.order
    return float(np.abs(coef).sum())


def character_table(G: FiniteGroup) -> np.ndarray:
    """Characters of a finite abelian group (rows) by joint diagonalization of the regular rep."""
    if not G.is_abelian:
        raise NotAbelian("character table needs an abelian group")
    n = G.order
    L = np.zeros((n, n, n))
    for g in range(n):
        L[g, G.mul_table[g], np.arange(n)] = 1.0
    # a generic element of the group algebra has simple eigenvalues
    c = stream(0, "characters", n).standard_normal(n)
    _, V = np.linalg.eig(np.tensordot(c, L, axes=1))
    # each eigenvector v satisfies lambda(g) v = chi(g) v
    chars = np.einsum("ia,gij,ja->ag", np.conj(V), L, V) / np.sum(np.abs(V) ** 2, axis=0)[:, None]
    chars = chars / chars[:, [G.identity]]
    order = np.lexsort(np.round(np.angle(chars) % (2 * np.pi), 9).T[::-1])
    return chars[order]


# --- matrix levels ----------------------------------------------------------

def _element_array(U, group):
    """(m, m, |G|) values from an m x m nested list of BpElements or an array."""
    if isinstance(U, BpElement):
        return U.values.reshape(1, 1, -1)
    if isinstance(U, np.ndarray) and U.dtype != object:
        arr = np.asarray(U, dtype=np.complex128)
        if arr.ndim == 1:
            arr = arr.reshape(1, 1, -1)
    else:
        rows = [list(r) for r in U]
        arr = np.array([[_values(x) for x in r] for r in rows], dtype=np.complex128)
    if arr.ndim != 3 or arr.shape[0] != arr.shape[1] or arr.shape[2] != group.order:
        raise ValueError(f"expected an m x m array of functions on {group.order} points")
    return arr


def _compression(F, U):
    """S[(s,i),(t,j)] = <f_st, u_ij>."""
    n, m = F.shape[0], U.shape[0]
    return np.einsum("stx,ijx->sitj", F, U).reshape(n * m, n * m)


@dataclass
class MatrixNormEstimate:
    lower: float
    n: int
    F: np.ndarray = field(repr=False)
    alpha: np.ndarray = field(repr=False)
    beta: np.ndarray = field(repr=False)
    per_level: list = field(default_factory=list)
    scalar: NormEstimate | None = field(default=None, repr=False)  # ||S(F)|| with witness alpha
    denominator: NormEstimate | None = field(default=None, repr=False)
    den_block: int = 0
    reps: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {"lower": float(self.lower), "n": int(self.n), "per_level": [float(v) for v in self.per_level]}


def _certified_value(ball, F, U, p, budget):
    """||S(F)||_{p->p} / ||Pi^(n)(F)|| from below, with the maximizing alpha, beta."""
    S = _compression(F, U)
    est = mixed_scalar_norm(S, p, p, budget=budget)
    den = ball.certified_norm(F, budget=budget)
    alpha = np.asarray(est.witness, np.complex128)
    alpha = alpha / max(lp_norm(alpha, p), 1e-300)
    beta = duality_map(S @ alpha, p)
    val = est.lower / den.upper if den.upper > 0 else 0.0
    return val, alpha, beta, (est, den, ball.last_block)


def _alternate(ball, U, p, alpha, beta, rounds, budget, max_rounds):
    """Alternate a dual-norm solve in F with an l_p operator norm in (alpha, beta)."""
    n, m = ball.n, U.shape[0]
    best = (-1.0, None, alpha, beta, None)
    for _ in range(rounds):
        W = np.einsum("si,tj,ijx->stx", beta.reshape(n, m), alpha.reshape(n, m), U)
        sol = ball.solve(W, budget=budget, max_rounds=max_rounds)
        if sol.unbounded:
            return (np.inf, sol.F, alpha, beta, None)
        if sol.lower <= 0:
            break
        val, alpha, beta, cert = _certified_value(ball, sol.F, U, p, budget)
        if val <= best[0] * (1 + 1e-9):
            break
        best = (val, sol.F, alpha, beta, cert)
    return best


def _pad(F, alpha, beta, n, m):
    k = F.shape[0]
    G = np.zeros((n, n, F.shape[2]), np.complex128)
    G[:k, :k] = F
    a = np.zeros(n * m, np.complex128)
    b = np.zeros(n * m, np.complex128)
    a[: k * m] = alpha
    b[: k * m] = beta
    return G, a, b


def bp_matrix_norm(family, U, n_max: int = 2, *, budget: SolverBudget = DEFAULT_BUDGET, seed: int = 0,
                   rounds: int = 2, random_starts: int = 2, include_base: bool = True,
                   max_rounds: int = 25) -> MatrixNormEstimate:
    """Lower bound for the matrix norm of U = [u_ij] in M_m(B_p).

    The norm is sup over n, arrays F in the unit ball of M_n(PF) and unit
    alpha in l_p^{nm}, beta in l_{p'}^{nm} of |sum beta_si <f_st, u_ij> alpha_tj|.
    For each n <= n_max the search alternates between (alpha, beta) (an
    l_p operator norm) and F (a dual norm over the ball).  The best point of
    level n - 1, padded with zeros, is carried to level n, so the estimates
    are nondecreasing in n.
    """
    reps = _ball_reps(family, include_base)
    G = reps[0].group
    U = _element_array(U, G)
    m = U.shape[0]
    p = reps[0].p
    q = p / (p - 1)
    if not np.any(U):
        z = np.zeros(m, np.complex128)
        return MatrixNormEstimate(0.0, 1, np.zeros((1, 1, G.order), np.complex128), z, z, [0.0] * n_max)
    best = None
    per_level = []
    for n in range(1, n_max + 1):
        ball = FamilyBall(reps, n, seed=seed + n)
        results = []
        if best is not None:
            F, a, b = _pad(best.F, best.alpha, best.beta, n, m)
            val, _, _, cert = _certified_value(ball, F, U, p, budget)
            results.append((val, F, a, b, cert))
        starts = []
        if n == 1:
            for j in range(m):
                e = np.zeros(m, np.complex128)
                e[j] = 1.0
                starts.append((e, e.copy()))
        if n > 1 or m > 1:
            rng = stream(seed, "bp-matrix", n)
            for _ in range(random_starts):
                a = rng.standard_normal(n * m) + 1j * rng.standard_normal(n * m)
                b = rng.standard_normal(n * m) + 1j * rng.standard_normal(n * m)
                starts.append((a / lp_norm(a, p), b / lp_norm(b, q)))
        for a, b in starts:
            r = _alternate(ball, U, p, a, b, rounds, budget, max_rounds)
            if r[1] is not None:
                results.append(r)
        val, F, a, b, cert = max(results, key=lambda r: r[0])
        per_level.append(float(val))
        if best is None or val > best.lower:
            est, den, blk = cert if cert is not None else (None, None, 0)
            best = MatrixNormEstimate(float(val), n, F, a, b, scalar=est, denominator=den, den_block=blk,
                                      reps=reps)
    best.per_level = per_level
    return best


def cb_functional_check(family, u: BpElement, n_max: int = 3, *, budget: SolverBudget = DEFAULT_BUDGET,
                        seed: int = 0, tol: float = CB_TOL, gate: float = CB_TOL) -> CheckResult:
    """||u_n|| = ||u_1|| for the scalar matrices [<f_st, u>] up to level n_max.

    ||u_1|| is bracketed by the cutting plane; the level-n search can only
    bound ||u_n|| from below, and ||u_n|| >= ||u_1|| holds by embedding.  So
    the claim fails when the level-n bound beats the certified upper end of
    ||u_1||, passes when it does not and the ||u_1|| bracket is tight, and is
    inconclusive otherwise.
    """
    one = bp_norm_lower(family, u, budget=budget, seed=seed)
    if one.unbounded:
        return CheckResult("cb_functional", Verdict.FAIL, np.inf, np.inf, tol, {},
                           {"reason": "u does not vanish on the kernel of Pi"})
    a1 = NormEstimate(one.lower, one.upper, one.witness.coeffs, "cutting_plane", 0, one.upper)
    if one.upper == 0:
        an = NormEstimate(0.0, 0.0, np.zeros(0, complex), "zero", 0, 0.0)
        return CheckResult("cb_functional", Verdict.PASS, 0.0, 0.0, tol, {"u_n": an, "u_1": a1},
                           {"n_max": n_max, "best_n": 1, "per_level": [0.0] * n_max})
    mat = bp_matrix_norm(family, u, n_max, budget=budget, seed=seed)
    lower_n = max(mat.lower, one.lower)
    an = NormEstimate(lower_n, np.inf, mat.F.reshape(-1), "alternation", 0, np.inf)
    return CheckResult("cb_functional", cb_verdict(an, a1, tol, gate), lower_n, one.lower, tol,
                       {"u_n": an, "u_1": a1},
                       {"n_max": n_max, "best_n": mat.n, "per_level": mat.per_level,
                        "u_1_upper": one.upper},
                       {"u_1": one, "u_n": mat})


def cb_verdict(an: NormEstimate, a1: NormEstimate, tol=CB_TOL, gate=CB_TOL) -> Verdict:
    """||u_n|| <= ||u_1||, inconclusive while the ||u_1|| bracket is loose."""
    verdict = inequality_verdict(an, a1, tol=tol)
    if verdict is Verdict.PASS and a1.upper - a1.lower > gate * max(1.0, a1.upper):
        verdict = Verdict.INCONCLUSIVE
    return verdict


# --- duality ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Functional:
    """phi(T) = sum_ij T_ij W_ij on operators acting on the coordinates of rep.space.

    ``bound`` is an optional certified upper bound for ||phi|| on PF_{p,pi}
    (for instance ||xi|| ||eta|| when phi comes from a realization).
    """

    rep: Representation
    W: np.ndarray = field(repr=False)
    bound: float | None = None

    @classmethod
    def from_realization(cls, rep, xi: SpaceVector, eta: DualVector):
        h = eta.on_coords()
        return cls(rep, np.outer(h, xi.coords), float(xi.norm()) * dual_norm(eta))

    def __call__(self, T):
        return complex(np.sum(np.asarray(T) * self.W))


def functional_to_u(phi: Functional):
    """Solve <pi(f), phi> = sum_x f(x) u(x) over L_1(G) modulo N_pi.

    Returns (u, ambiguity) with u the minimal-norm solution and ambiguity
    the dimension of N_pi, on which the system is silent.
    """
    rep = phi.rep
    G = rep.group
    L = rep.matrices.reshape(G.order, -1).T
    _, s, vh = np.linalg.svd(L, full_matrices=True)
    rank = int(np.sum(s > 1e-9 * s[0]))
    C = np.conj(vh[:rank])  # complement of N_pi = conj(vh[rank:])
    b = np.array([phi(rep.lift_matrix(c)) for c in C])
    u, *_ = np.linalg.lstsq(C, b, rcond=None)
    return BpElement(G, u), G.order - rank


def duality_contractivity_check(rep: Representation, functionals, family=None, *,
                                budget: SolverBudget = DEFAULT_BUDGET, seed: int = 0,
                                tol: float = 1e-4) -> list:
    """||u||_{B_p} <= ||phi|| for functionals phi on PF_{p,pi}.

    The lower end of ||u|| comes from the dual norm over ``family`` (by
    default the representation itself).  ||phi|| is bounded from above by
    the given bound, and otherwise by the realization found by the cutting
    plane on {pi}.
    """
    family = rep if family is None else family
    out = []
    for t, phi in enumerate(functionals):
        u, amb = functional_to_u(phi)
        direct = np.array([phi(rep.matrices[x]) for x in range(rep.group.order)])
        lhs = bp_norm_lower(family, u, budget=budget, seed=seed + t)
        on_pi = bp_norm_lower(rep, u, budget=budget, seed=seed + t)
        phi_up = on_pi.upper if phi.bound is None else min(on_pi.upper, phi.bound)
        rhs = NormEstimate(on_pi.lower, phi_up, on_pi.witness.coeffs, "functional", 0, phi_up)
        lhs_est = lhs.estimate()
        out.append(CheckResult("duality", duality_verdict(lhs_est, rhs, tol), lhs.lower, phi_up, tol,
                               {"u": lhs_est, "phi": rhs},
                               {"ambiguity_dim": amb, "bracket": [lhs.lower, lhs.upper],
                                "reconstruction_error": float(np.abs(direct - u.values).max())},
                               {"u": lhs, "on_pi": on_pi, "element": u, "functional": phi}))
    return out


def duality_verdict(lhs: NormEstimate, rhs: NormEstimate, tol=1e-4) -> Verdict:
    """||u|| <= ||phi||, and the bracket for ||u|| must be nonempty."""
    if lhs.lower > lhs.upper + tol * max(1.0, abs(lhs.upper)):
        return Verdict.FAIL
    return inequality_verdict(lhs, rhs, tol)
