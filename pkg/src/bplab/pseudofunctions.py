"""Pseudofunction norms ||f||_pi = ||pi(f)||, their matrix levels, and the
finite universal family Pi built from cyclic subrepresentations.

Matrix norms are operator norms of [pi(f_ij)] on E^(n).  The universal
family follows the witness construction: for every probe g and depth
r <= r_max it keeps the cyclic subrepresentation generated by a unit vector
xi with ||pi(g) xi|| > ||pi(g)|| - 1/r.  Norms under Pi are computed block
by block, since a block diagonal operator on an l_p direct sum has the
largest block norm.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .checks import (
    EQ_TOL,
    CheckResult,
    Verdict,
    difference_verdict,
    equality_verdict,
    inequality_verdict,
    max_estimate,
    product_estimate,
)
from .groups import GroupFunction, GroupMismatch
from .opnorm import DEFAULT_BUDGET, NormEstimate, SolverBudget, mixed_scalar_norm, multistart_optima
from .representation import (
    CyclicSubrep,
    Representation,
    ShapeMismatch,
    amplify_rep,
    as_function_array,
    cyclic_subrep,
    direct_sum_rep,
    lift,
)
from .rng import stream

TRUNCATION_SLACK = 1e-3


class WitnessGap(RuntimeError):
    pass


def _array(rep, F):
    if isinstance(F, GroupFunction):
        if F.group != rep.group:
            raise GroupMismatch("function and representation live on different groups")
        return F.coeffs.reshape(1, 1, -1)
    return as_function_array(F, rep.group)


@dataclass(frozen=True, eq=False)
class PFElement:
    """f + N_pi in PF_{p,pi}(G), carried by a representative f."""

    rep: Representation
    f: GroupFunction
    matrix: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.matrix is None:
            object.__setattr__(self, "matrix", lift(self.rep, self.f).matrix)

    def norm(self, *, budget=DEFAULT_BUDGET, seed=0) -> NormEstimate:
        return pf_norm(self.rep, self.f, budget=budget, seed=seed)


def pf_norm(rep: Representation, f: GroupFunction, *, budget: SolverBudget = DEFAULT_BUDGET,
            seed: int = 0, extra_starts=None) -> NormEstimate:
    return matrix_pf_norm(rep, f, budget=budget, seed=seed, extra_starts=extra_starts)


def matrix_pf_norm(rep: Representation, F, *, budget: SolverBudget = DEFAULT_BUDGET, seed: int = 0,
                   extra_starts=None) -> NormEstimate:
    """||[pi(f_ij)]|| on E^(n); a single GroupFunction is the case n = 1."""
    arr = _array(rep, F)
    return amplify_rep(rep, arr.shape[0]).norm(arr, budget=budget, seed=seed, extra_starts=extra_starts)


def pf_norm_sup_cyclic(rep: Representation, f: GroupFunction, vectors, *,
                       budget: SolverBudget = DEFAULT_BUDGET, seed: int = 0) -> NormEstimate:
    """max over the cyclic subrepresentations generated by ``vectors`` of ||rho(f)||."""
    ests = []
    for k, v in enumerate(np.atleast_2d(vectors)):
        if not np.any(v):
            continue
        sub = cyclic_subrep(rep, v)
        start = np.conj(sub.inclusion.T) @ v
        ests.append(pf_norm(sub.rep, f, budget=budget, seed=seed + k, extra_starts=start))
    return max_estimate(ests)


def null_ideal(rep: Representation, tol: float = 1e-9) -> np.ndarray:
    """Rows spanning N_pi = {f : pi(f) = 0}."""
    L = rep.matrices.reshape(rep.group.order, -1).T
    u, s, vh = np.linalg.svd(L, full_matrices=True)
    rank = int(np.sum(s > tol * max(s[0], 1e-300))) if len(s) else 0
    return np.conj(vh[rank:])


# --- axioms -----------------------------------------------------------------

def block_diag_array(U, V):
    n, m = U.shape[0], V.shape[0]
    W = np.zeros((n + m, n + m, U.shape[2]), np.complex128)
    W[:n, :n] = U
    W[n:, n:] = V
    return W


def _embed(w, offset_blocks, n_total, d):
    x = np.zeros(n_total * d, np.complex128)
    x[offset_blocks * d : offset_blocks * d + len(w)] = w
    return x


def axiom_check_dinf(rep: Representation, U, V, *, budget=DEFAULT_BUDGET, seed=0, tol=EQ_TOL) -> CheckResult:
    """||U (+) V|| = max(||U||, ||V||) at matrix level n + m."""
    U, V = _array(rep, U), _array(rep, V)
    n, m, d = U.shape[0], V.shape[0], rep.dim
    W = block_diag_array(U, V)
    eu = matrix_pf_norm(rep, U, budget=budget, seed=seed)
    ev = matrix_pf_norm(rep, V, budget=budget, seed=seed + 1)
    ew = matrix_pf_norm(rep, W, budget=budget, seed=seed + 2)
    refined = []
    best = max_estimate([eu, ev])
    if ew.lower < best.lower - tol * max(1.0, best.upper):
        starts = np.stack([_embed(eu.witness, 0, n + m, d), _embed(ev.witness, n, n + m, d)])
        ew = matrix_pf_norm(rep, W, budget=budget, seed=seed + 2, extra_starts=starts)
        refined.append("sum")
    if ew.lower > best.lower + tol * max(1.0, ew.upper):
        wu, wv = ew.witness[: n * d], ew.witness[n * d :]
        if np.any(wu):
            eu = matrix_pf_norm(rep, U, budget=budget, seed=seed, extra_starts=wu)
        if np.any(wv):
            ev = matrix_pf_norm(rep, V, budget=budget, seed=seed + 1, extra_starts=wv)
        best = max_estimate([eu, ev])
        refined.append("blocks")
    verdict = equality_verdict(ew, best, tol)
    return CheckResult("dinf", verdict, ew.lower, best.lower, tol,
                       {"sum": ew, "first": eu, "second": ev},
                       {"sizes": [n, m], "refined": refined})


def compress_array(alpha, U, beta):
    """The n x n function array alpha U beta."""
    return np.einsum("it,tjx,jk->ikx", np.asarray(alpha, complex), U, np.asarray(beta, complex))


def axiom_check_mp(rep: Representation, U, alpha, beta, *, budget=DEFAULT_BUDGET, seed=0, tol=EQ_TOL) -> CheckResult:
    """||alpha U beta|| <= ||alpha|| ||U|| ||beta|| with l_p operator norms of the scalars."""
    U = _array(rep, U)
    alpha = np.atleast_2d(np.asarray(alpha, complex))
    beta = np.atleast_2d(np.asarray(beta, complex))
    m = U.shape[0]
    if alpha.shape[1] != m or beta.shape[0] != m or alpha.shape[0] != beta.shape[1]:
        raise ShapeMismatch("alpha must be n x m and beta m x n")
    p = rep.p
    C = compress_array(alpha, U, beta)
    lhs = matrix_pf_norm(rep, C, budget=budget, seed=seed)
    ea = mixed_scalar_norm(alpha, p, p, budget=budget, seed=seed)
    eb = mixed_scalar_norm(beta, p, p, budget=budget, seed=seed)
    eu = matrix_pf_norm(rep, U, budget=budget, seed=seed + 1)
    rhs = product_estimate([ea, eu, eb])
    refined = []
    if lhs.lower > rhs.upper + tol * max(1.0, rhs.upper):
        d = rep.dim
        x = np.kron(beta, np.eye(d)) @ lhs.witness
        if np.any(x):
            eu = matrix_pf_norm(rep, U, budget=budget, seed=seed + 1, extra_starts=x)
            rhs = product_estimate([ea, eu, eb])
            refined.append("middle")
    verdict = inequality_verdict(lhs, rhs, tol)
    return CheckResult("mp", verdict, lhs.lower, rhs.upper, tol,
                       {"compressed": lhs, "alpha": ea, "middle": eu, "beta": eb},
                       {"shape": [int(alpha.shape[0]), m], "refined": refined})


# --- universal family -------------------------------------------------------

@dataclass(frozen=True)
class Piece:
    probe: int
    r: int
    xi: np.ndarray = field(repr=False)  # unit vector in the base coordinates
    value: float  # certified ||pi(g) xi||
    threshold: float  # ||pi(g)|| - 1/r with the solver's estimate of ||pi(g)||
    block: int

    @property
    def deficit(self) -> float:
        return max(0.0, self.threshold - self.value)

    @property
    def flagged(self) -> bool:
        return not self.value > self.threshold


def _same_subspace(Q1, Q2, tol=1e-8):
    if Q1.shape[1] != Q2.shape[1]:
        return False
    return np.abs(Q1 @ np.conj(Q1.T) - Q2 @ np.conj(Q2.T)).max() <= tol


class UniversalFamily:
    """Pi = (+)_{g, r} pi_{g,r} over finitely many probes and depths r <= r_max."""

    def __init__(self, base: Representation, probes, r_max: int, pieces, blocks, probe_norms):
        self.base = base
        self.probes = list(probes)
        self.r_max = int(r_max)
        self.pieces = list(pieces)
        self.blocks = list(blocks)
        self.probe_norms = list(probe_norms)

    @property
    def group(self):
        return self.base.group

    @property
    def p(self):
        return self.base.p

    def __repr__(self):
        return (f"<UniversalFamily over {self.base!r}: {len(self.probes)} probes, r_max={self.r_max}, "
                f"{len(self.pieces)} pieces in {len(self.blocks)} distinct blocks>")

    @property
    def max_deficit(self) -> float:
        return max([pc.deficit for pc in self.pieces], default=0.0)

    def deficit_for(self, probe: int) -> float:
        return max([pc.deficit for pc in self.pieces if pc.probe == probe and pc.r == self.r_max],
                   default=0.0)

    def block_starts(self, k: int) -> np.ndarray:
        """The construction vectors xi lying in block k, in block coordinates."""
        Q = self.blocks[k].inclusion
        xs = [np.conj(Q.T) @ pc.xi for pc in self.pieces if pc.block == k]
        return np.array(xs) if xs else np.zeros((0, Q.shape[1]), complex)

    def block_norms(self, F, *, budget=DEFAULT_BUDGET, seed=0):
        arr = _array(self.base, F)
        n = arr.shape[0]
        ests = []
        for k, blk in enumerate(self.blocks):
            xs = self.block_starts(k)
            starts = [np.kron(np.eye(n)[j], x) for x in xs for j in range(n)]
            st = np.array(starts) if starts else None
            ests.append(matrix_pf_norm(blk.rep, arr, budget=budget, seed=seed + k, extra_starts=st))
        return ests

    def norm(self, F, *, budget=DEFAULT_BUDGET, seed=0) -> NormEstimate:
        """||Pi^(n)(F)|| as the largest block norm; witness laid out block by block."""
        arr = _array(self.base, F)
        n = arr.shape[0]
        ests = self.block_norms(arr, budget=budget, seed=seed)
        best = max_estimate(ests)
        b = max(range(len(ests)), key=lambda k: ests[k].lower)
        dims = [n * blk.rep.dim for blk in self.blocks]
        w = np.zeros(sum(dims), np.complex128)
        off = sum(dims[:b])
        w[off : off + dims[b]] = ests[b].witness
        return replace(best, witness=w)

    def best_block_witness(self, F, est: NormEstimate):
        """(block index, witness in E_k^(n)) recovered from a family witness."""
        n = _array(self.base, F).shape[0]
        off = 0
        for k, blk in enumerate(self.blocks):
            size = n * blk.rep.dim
            part = est.witness[off : off + size]
            if np.any(part):
                return k, part
            off += size
        return None, None

    def lift_to_base(self, k: int, x, n: int):
        """Block-k witness of E_k^(n) mapped into E^(n) of the base."""
        return np.kron(np.eye(n), self.blocks[k].inclusion) @ x

    def assembled(self) -> Representation:
        """The direct sum over all pieces, one block per (probe, r)."""
        return direct_sum_rep([self.blocks[pc.block].rep for pc in self.pieces])

    def permuted(self, order) -> "UniversalFamily":
        order = list(order)
        blocks = [self.blocks[k] for k in order]
        where = {k: i for i, k in enumerate(order)}
        pieces = [replace(pc, block=where[pc.block]) for pc in self.pieces]
        return UniversalFamily(self.base, self.probes, self.r_max, pieces, blocks, self.probe_norms)

    def with_blocks(self, extra) -> "UniversalFamily":
        """Family with extra cyclic subrepresentations of the base appended."""
        return UniversalFamily(self.base, self.probes, self.r_max, self.pieces,
                               self.blocks + list(extra), self.probe_norms)

    def contains(self, other: "UniversalFamily") -> bool:
        """Every block of ``other`` lies inside some block of this family (same base)."""
        if other.base is not self.base and other.base.spec != self.base.spec:
            return False
        for ob in other.blocks:
            if not any(_subspace_in(ob.inclusion, b.inclusion) for b in self.blocks):
                return False
        return True


def _subspace_in(Q_small, Q_big, tol=1e-8):
    if Q_small.shape[1] > Q_big.shape[1]:
        return False
    P = Q_big @ np.conj(Q_big.T)
    return np.abs(P @ Q_small - Q_small).max() <= tol


def build_universal_family(rep: Representation, probes, r_max: int, *, seed: int = 0,
                           budget: SolverBudget = DEFAULT_BUDGET, strict: bool = False) -> UniversalFamily:
    """Truncated universal family for ``probes`` and depths 1..r_max.

    For depth r the piece uses the first local optimum (in start order) of
    the multistart search for ||pi(g)|| whose value beats ||pi(g)|| - 1/r.
    If none does the best one is used and the piece is flagged with its
    deficit (``strict`` raises :class:`WitnessGap` instead).
    """
    probes = list(probes)
    if not probes:
        raise ValueError("need at least one probe function")
    if r_max < 1:
        raise ValueError("r_max must be at least 1")
    pieces, blocks, norms = [], [], []
    for i, g in enumerate(probes):
        if g.group != rep.group:
            raise GroupMismatch("probe on a different group")
        M = lift(rep, g).matrix
        ext = rep.ambient_lift(g.coeffs) if rep.ambient is not None else None
        est, vals, X = multistart_optima(M, rep.space, budget=budget, seed=seed + i, extension=ext)
        norms.append(est)
        for r in range(1, r_max + 1):
            thr = est.lower - 1.0 / r
            ok = np.nonzero(vals > thr)[0]
            j = int(ok[0]) if len(ok) else int(np.argmax(vals))
            if not len(ok) and strict:
                raise WitnessGap(f"probe {i}, r={r}: best value {vals[j]:.6g} <= {thr:.6g}")
            xi = X[j]
            sub = cyclic_subrep(rep, xi)
            k = next((b for b, blk in enumerate(blocks) if _same_subspace(blk.inclusion, sub.inclusion)), None)
            if k is None:
                blocks.append(sub)
                k = len(blocks) - 1
            value = float(rep.space.norm_lower((M @ xi)[None, :])[0] / rep.space.norms(xi))
            pieces.append(Piece(i, r, xi, value, thr, k))
    return UniversalFamily(rep, probes, r_max, pieces, blocks, norms)


# --- isometry checks --------------------------------------------------------

def _refine_base(rep, family, arr, x_est, y_est, budget, seed):
    """Re-run the base norm from the family witness mapped into E^(n)."""
    n = arr.shape[0]
    k, part = family.best_block_witness(arr, y_est)
    if k is None:
        return x_est
    start = family.lift_to_base(k, part, n)
    return matrix_pf_norm(rep, arr, budget=budget, seed=seed, extra_starts=start)


def pi_isometry_gap(family: UniversalFamily, test_functions, *, budget=DEFAULT_BUDGET, seed=0,
                    tol=EQ_TOL) -> list:
    """Gap ||pi(f)|| - ||Pi(f)|| per test function, judged against its bracket.

    For probes the bracket is [-tol, 1/r_max + slack + deficit]; for other
    functions only the lower end applies.
    """
    out = []
    for t, f in enumerate(test_functions):
        probe = _probe_index(family, f)
        out.append(_gap_check(family, f.coeffs.reshape(1, 1, -1), probe is not None,
                              family.deficit_for(probe) if probe is not None else 0.0,
                              budget, seed + 7919 * t, tol, "universal_gap",
                              {"probe": probe}))
    return out


def _probe_index(family, f):
    for i, g in enumerate(family.probes):
        if np.allclose(g.coeffs, f.coeffs, atol=1e-14):
            return i
    return None


def _gap_check(family, arr, adequate, deficit, budget, seed, tol, name, details):
    base = family.base
    x = matrix_pf_norm(base, arr, budget=budget, seed=seed)
    y = family.norm(arr, budget=budget, seed=seed)
    refined = []
    if y.lower > x.lower + tol * max(1.0, x.upper):
        x = _refine_base(base, family, arr, x, y, budget, seed)
        refined.append("base")
    high = 1.0 / family.r_max + TRUNCATION_SLACK + deficit if adequate else np.inf
    verdict = difference_verdict(x, y, -tol * max(1.0, x.upper), high)
    det = dict(details)
    det.update({"gap": x.lower - y.lower, "bracket": [-tol, None if np.isinf(high) else high],
                "r_max": family.r_max, "refined": refined})
    return CheckResult(name, verdict, x.lower, y.lower, tol, {"pi": x, "Pi": y}, det)


def amplified_isometry_check(family: UniversalFamily, F, *, adequate: bool = True, budget=DEFAULT_BUDGET,
                             seed=0, tol=EQ_TOL) -> CheckResult:
    """Compare ||[pi(f_ij)]|| with ||[Pi(f_ij)]||.

    Pi never exceeds pi (each block is a restriction).  When the array is
    built from probes (``adequate``) the gap is also at most 1/r_max.
    """
    arr = _array(family.base, F)
    deficit = family.max_deficit if adequate else 0.0
    return _gap_check(family, arr, adequate, deficit, budget, seed, tol, "amplified_isometry",
                      {"n": int(arr.shape[0])})


def restriction_pcb_check(rep_big: Representation, sub: CyclicSubrep, arrays, *, budget=DEFAULT_BUDGET,
                          seed=0, tol=EQ_TOL) -> list:
    """||[rho(f_ij)]|| <= ||[pi(f_ij)]|| for a subrepresentation rho of pi."""
    out = []
    for t, F in enumerate(arrays):
        arr = _array(rep_big, F)
        n = arr.shape[0]
        s = seed + 7919 * t
        lhs = matrix_pf_norm(sub.rep, arr, budget=budget, seed=s)
        rhs = matrix_pf_norm(rep_big, arr, budget=budget, seed=s + 1)
        refined = []
        if lhs.lower > rhs.lower + tol * max(1.0, rhs.upper):
            start = np.kron(np.eye(n), sub.inclusion) @ lhs.witness
            rhs = matrix_pf_norm(rep_big, arr, budget=budget, seed=s + 1, extra_starts=start)
            refined.append("ambient")
        verdict = inequality_verdict(lhs, rhs, tol)
        out.append(CheckResult("monotonicity", verdict, lhs.lower, rhs.upper, tol,
                               {"sub": lhs, "ambient": rhs},
                               {"n": n, "sub_dim": sub.rep.dim, "refined": refined}))
    return out


def universal_independence_check(famA: UniversalFamily, famB: UniversalFamily, arrays, *,
                                 budget=DEFAULT_BUDGET, seed=0, tol=EQ_TOL) -> list:
    """Matrix norms under two truncated families.

    With mutual block containment the norms must agree (equality rule);
    otherwise agreement is expected only up to the truncation terms and a
    larger difference is reported as INCONCLUSIVE.
    """
    mutual = famA.contains(famB) and famB.contains(famA)
    trunc = 1.0 / famA.r_max + 1.0 / famB.r_max + famA.max_deficit + famB.max_deficit
    out = []
    for t, F in enumerate(arrays):
        arr = _array(famA.base, F)
        a = famA.norm(arr, budget=budget, seed=seed + t)
        b = famB.norm(arr, budget=budget, seed=seed + t)
        if mutual:
            verdict = equality_verdict(a, b, tol)
            allowed = tol
        else:
            allowed = trunc + tol
            verdict = Verdict.PASS if abs(a.lower - b.lower) <= allowed * max(1.0, a.upper, b.upper) else Verdict.INCONCLUSIVE
        out.append(CheckResult("independence", verdict, a.lower, b.lower, allowed, {"A": a, "B": b},
                               {"mutual_containment": mutual, "truncation": trunc}))
    return out


def random_probe(group, seed, *keys, real=False):
    """Probe function with unit l_1 norm from a keyed stream."""
    rng = stream(seed, "probe", *keys)
    c = rng.standard_normal(group.order)
    if not real:
        c = c + 1j * rng.standard_normal(group.order)
    return GroupFunction(group, c / np.abs(c).sum())
