"""Operator norms between represented QSL_p spaces.

Every estimate is a bracket.  ``lower`` is recomputed from an explicit
witness vector (dual certificate for quotient codomains), so it is always a
valid lower bound.  ``certified_upper`` is a proven bound (closed form,
interpolation, grid covering or an l_2 comparison); ``upper`` is the
tightest reported upper value and equals ``lower`` when a multistart search
hit the same best value from several independent starts.  That consensus is
heuristic, and ``upper_certified`` says which case applies.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .rng import stream
from .spaces import (
    QSLpSpace,
    SpaceVector,
    annihilator,
    conjugate_exponent,
    duality_map,
    lp_norm,
    quotient_norm_batch,
    ExponentMismatch,
)


class DimensionTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class SolverBudget:
    starts: int = 32
    maxiter: int = 500
    tol: float = 1e-13
    brute_force_dim: int = 4  # largest real sphere dimension sent to the grid
    resolution: int = 400
    max_points: int = 20_000
    polish: int = 6
    min_hits: int = 2

    @classmethod
    def from_dict(cls, d):
        known = {k: d[k] for k in cls.__dataclass_fields__ if k in d}
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown solver budget keys: {sorted(unknown)}")
        return cls(**known)


DEFAULT_BUDGET = SolverBudget()


@dataclass(frozen=True)
class NormEstimate:
    lower: float
    upper: float
    witness: np.ndarray = field(repr=False)
    method: str
    iterations: int = 0
    certified_upper: float = np.inf
    hits: int = 1
    converged: bool = True

    @property
    def upper_certified(self) -> bool:
        return self.upper >= self.certified_upper

    @property
    def gap(self) -> float:
        return self.upper - self.lower

    def scaled(self, s: float) -> "NormEstimate":
        s = abs(float(s))
        return replace(self, lower=self.lower * s, upper=self.upper * s,
                       certified_upper=self.certified_upper * s)

    def witness_vector(self, space: QSLpSpace) -> SpaceVector:
        return SpaceVector(space, self.witness)

    def to_dict(self) -> dict:
        w = np.asarray(self.witness, dtype=np.complex128).reshape(-1)
        return {
            "lower": float(self.lower),
            "upper": float(self.upper),
            "certified_upper": _finite(self.certified_upper),
            "method": self.method,
            "iterations": int(self.iterations),
            "hits": int(self.hits),
            "converged": bool(self.converged),
            "witness": [[float(z.real), float(z.imag)] for z in w],
        }


def _finite(x):
    return float(x) if np.isfinite(x) else None


# --- norm geometries -------------------------------------------------------

class _Geometry:
    """Norm, norming functionals and dual maximizers on coordinate vectors."""

    def __init__(self, space: QSLpSpace | None = None, dim=None, p=None):
        if space is not None:
            self.space = space
            self.dim = space.dim
            self.p = space.p
            self.plain = space.is_plain
            self.R, self.N = space.R, space.N
            self.lo, self.hi = space.l2_equivalence()
        else:
            self.space = None
            self.dim = int(dim)
            self.p = float(p)
            self.plain = True
            self.lo = float(self.dim ** min(0.0, 1 / self.p - 0.5))
            self.hi = float(self.dim ** max(0.0, 1 / self.p - 0.5))
        self.q = conjugate_exponent(self.p)
        if not self.plain:
            S = np.concatenate([self.R, self.N], axis=1)
            self.pinvS = np.linalg.pinv(S)
            self.Z = annihilator(S)
            j = self.N.shape[1]
            if j:
                Nc = np.conj(self.N)
                self.proj = Nc @ np.linalg.solve(self.N.T @ Nc, self.N.T)

    @property
    def is_quotient(self):
        return not self.plain and self.N.shape[1] > 0

    def norm(self, c):
        if self.plain:
            return lp_norm(c, self.p)
        return self.space.norms(c, details=True).value

    def norm_lower(self, c):
        if self.plain:
            return lp_norm(c, self.p)
        return self.space.norm_lower(c)

    def norming(self, y):
        """Functionals h (rows) of dual norm <= 1 with y . h close to ||y||."""
        if self.plain:
            return duality_map(y, self.p)
        a = y @ self.R.T
        if self.is_quotient:
            res = quotient_norm_batch(a, self.N, self.p)
            a = a + res.z @ self.N.T
        w = duality_map(a, self.p)
        if self.is_quotient:
            w = w - w @ self.proj.T
            wn = lp_norm(w, self.q)
            w = w / np.where(wn > 0, wn, 1.0)[:, None]
        return w @ self.R

    def maximize(self, h):
        """Coordinates c of norm <= 1 maximizing Re(c . h), row by row."""
        if self.plain:
            return duality_map(h, self.q)
        k = self.N.shape[1]
        rhs = np.concatenate([h, np.zeros((h.shape[0], k), h.dtype)], axis=1)
        z = rhs @ self.pinvS
        if self.Z.shape[1]:
            res = quotient_norm_batch(z, self.Z, self.q)
            z = z + res.z @ self.Z.T
        x = duality_map(z, self.q)
        return (x @ self.pinvS.T)[:, : self.dim]


def _geometry(space, p=None, dim=None):
    if isinstance(space, _Geometry):
        return space
    if space is None:
        return _Geometry(dim=dim, p=p)
    return _Geometry(space)


# --- certified upper bounds -------------------------------------------------

def riesz_thorin_upper(A, p) -> float:
    """Interpolation bound for ||A||_{p->p} from the exact 1, 2 and inf norms.

    Returns the smallest of ||A||_1^{1/p} ||A||_inf^{1-1/p} and the bound from
    the pair (1, 2) or (2, inf) that brackets p.
    """
    A = np.atleast_2d(np.asarray(A, dtype=np.complex128))
    p = float(p)
    a = np.abs(A)
    n1 = a.sum(axis=0).max(initial=0.0)
    ninf = a.sum(axis=1).max(initial=0.0)
    if p == 1:
        return float(n1)
    if np.isinf(p):
        return float(ninf)
    n2 = np.linalg.norm(A, 2) if A.size else 0.0
    best = n1 ** (1 / p) * ninf ** (1 - 1 / p)
    if p <= 2:
        theta = 2 * (1 - 1 / p)
        best = min(best, n1 ** (1 - theta) * n2**theta)
    else:
        theta = 1 - 2 / p
        best = min(best, n2 ** (1 - theta) * ninf**theta)
    return float(best)


def _holder_column_bound(A, p_in, p_out):
    cols = lp_norm(A.T, p_out)  # one entry per column
    return float(lp_norm(cols, conjugate_exponent(p_in)))


def _l2_comparison_bound(A, dom, cod):
    s = np.linalg.norm(A, 2) if A.size else 0.0
    return float(cod.hi * s / dom.lo)


def _extension_bound(A, dom, cod, extension):
    """Bound ||A|| by the ambient norm of an operator T that induces A."""
    T = np.asarray(extension, dtype=np.complex128)
    if dom.plain and cod.plain or dom.space is None or cod.space is None:
        raise ValueError("an extension is only meaningful for subspace or quotient spaces")
    E, F = dom.space, cod.space
    if E.p != F.p:
        raise ExponentMismatch("extension bound needs equal exponents")
    if T.shape != (F.ambient_dim, E.ambient_dim):
        raise ValueError("extension has the wrong shape")
    D = T @ E.R - F.R @ A
    if F.N.shape[1]:
        D = D - F.N @ np.linalg.lstsq(F.N, D, rcond=None)[0]
        M = T @ E.N
        if M.size:
            M = M - F.N @ np.linalg.lstsq(F.N, M, rcond=None)[0]
            if np.abs(M).max(initial=0) > 1e-9 * max(1.0, np.abs(T).max()):
                raise ValueError("extension does not map the null subspace into the null subspace")
    elif E.N.shape[1] and np.abs(T @ E.N).max() > 1e-9 * max(1.0, np.abs(T).max()):
        raise ValueError("extension does not annihilate the null subspace")
    scale = max(1.0, np.abs(T).max()) * max(1.0, np.abs(E.R).max())
    defect = np.abs(D).max(initial=0)
    if defect <= 1e-9 * scale:
        return riesz_thorin_upper(T, E.p)
    if E.N.shape[1] == 0 and F.N.shape[1] == 0 and defect <= 1e-6 * scale:
        # subspaces invariant only up to rounding: ||A c|| <= ||T|| ||c|| + ||D c||_p
        kappa = F.ambient_dim ** max(0.0, 1 / F.p - 0.5)
        return riesz_thorin_upper(T, E.p) + kappa * float(np.linalg.norm(D, 2)) / dom.lo
    raise ValueError("extension does not induce the given operator")


def _certified_upper(A, dom, cod, extension=None):
    if dom.plain and cod.plain:
        if dom.p == cod.p:
            return riesz_thorin_upper(A, dom.p)
        return min(_holder_column_bound(A, dom.p, cod.p), _l2_comparison_bound(A, dom, cod))
    best = _l2_comparison_bound(A, dom, cod)
    if extension is not None:
        best = min(best, _extension_bound(A, dom, cod, extension))
    return best


# --- closed forms -----------------------------------------------------------

def _p2_factor(geom):
    """Matrix M with ||c|| = ||M c||_2 for a p = 2 geometry."""
    if geom.plain:
        return np.eye(geom.dim, dtype=np.complex128)
    M = geom.R
    if geom.is_quotient:
        M = M - geom.N @ np.linalg.lstsq(geom.N, M, rcond=None)[0]
    return M


def _closed_form(A, dom, cod):
    d_in = A.shape[1]
    if A.size == 0 or not np.any(A):
        w = np.zeros(d_in, np.complex128)
        if d_in:
            w[0] = 1.0
        return 0.0, w, "closed_form"
    if d_in == 1:
        w = np.ones(1, np.complex128)
        return None, w, "closed_form"
    if dom.p == 2 and cod.p == 2:
        Me, Mf = _p2_factor(dom), _p2_factor(cod)
        Q, T = np.linalg.qr(Me)
        Tinv = np.linalg.inv(T)
        u, s, vh = np.linalg.svd(Mf @ A @ Tinv)
        return float(s[0]), Tinv @ np.conj(vh[0]), "svd"
    if not (dom.plain and cod.plain):
        return None
    p_in, p_out = dom.p, cod.p
    if p_in == 1:
        cols = lp_norm(A.T, p_out)
        j = int(np.argmax(cols))
        w = np.zeros(d_in, np.complex128)
        w[j] = 1.0
        return float(cols[j]), w, "closed_form"
    if np.isinf(p_out):
        rows = lp_norm(A, conjugate_exponent(p_in))
        i = int(np.argmax(rows))
        return float(rows[i]), duality_map(A[i], conjugate_exponent(p_in)), "closed_form"
    if p_in == p_out and A.shape[0] == d_in and np.count_nonzero(A - np.diag(np.diag(A))) == 0:
        d = np.abs(np.diag(A))
        j = int(np.argmax(d))
        w = np.zeros(d_in, np.complex128)
        w[j] = 1.0
        return float(d[j]), w, "closed_form"
    return None


# --- ascent -----------------------------------------------------------------

def _ratios(A, dom, cod, X, certified=False):
    Y = X @ A.T
    num = cod.norm_lower(Y) if certified else cod.norm(Y)
    den = dom.norm(X)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)


def _ascent(A, dom, cod, X, maxiter, tol):
    """Nonlinear power iteration c <- argmax_{||c||<=1} Re c.(A^T phi(Ac)).

    phi is a norming functional of Ac in the codomain; each step can only
    increase ||Ac|| / ||c||.  Rows are iterated until the ratio stalls.
    """
    X = np.array(X, dtype=np.complex128)
    vals = _ratios(A, dom, cod, X)
    active = np.ones(len(X), bool)
    it = 0
    for it in range(1, maxiter + 1):
        idx = np.nonzero(active)[0]
        if len(idx) == 0:
            break
        H = cod.norming(X[idx] @ A.T)
        G = H @ A
        dead = lp_norm(G, np.inf) == 0
        Xn = dom.maximize(np.where(dead[:, None], 1.0, G))
        Xn[dead] = X[idx][dead]
        nv = _ratios(A, dom, cod, Xn)
        better = nv >= vals[idx]
        X[idx[better]] = Xn[better]
        gain = np.where(better, nv - vals[idx], 0.0)
        vals[idx[better]] = nv[better]
        stall = (gain <= tol * np.maximum(vals[idx], 1e-300)) | dead
        active[idx[stall]] = False
    return X, vals, it


def _polish(A, dom, cod, X, k=3, maxiter=200):
    """Quasi-Newton refinement of the k best rows of X (subspace geometries only).

    Power iteration converges linearly and slowly when the top of the
    spectrum is clustered; L-BFGS on log ||A c|| - log ||c|| finishes the job.
    """
    if dom.is_quotient or cod.is_quotient:
        return X
    Rd = np.eye(dom.dim) if dom.plain else dom.R
    Rc = np.eye(cod.dim) if cod.plain else cod.R
    B = Rc @ A
    d = A.shape[1]

    def fun(v):
        c = v[:d] + 1j * v[d:]
        x, y = Rd @ c, B @ c
        nx, ny = lp_norm(x, dom.p), lp_norm(y, cod.p)
        if nx == 0 or ny == 0:
            return 0.0, np.zeros_like(v)
        g = (B.T @ duality_map(y, cod.p)) / ny - (Rd.T @ duality_map(x, dom.p)) / nx
        return -np.log(ny / nx), -np.concatenate([g.real, -g.imag])

    vals = _ratios(A, dom, cod, X)
    out = X.copy()
    for i in np.argsort(-vals, kind="stable")[:k]:
        v0 = np.concatenate([X[i].real, X[i].imag])
        res = minimize(fun, v0, jac=True, method="L-BFGS-B", options={"maxiter": maxiter, "gtol": 1e-12, "ftol": 1e-15})
        c = res.x[:d] + 1j * res.x[d:]
        if _ratios(A, dom, cod, c[None, :])[0] > vals[i]:
            out[i] = c
    return out


def _finish(A, dom, cod, X, iters, method, certified_upper, min_hits, hit_tol=1e-7):
    est, _, _ = _finish_all(A, dom, cod, X, iters, method, certified_upper, min_hits, hit_tol)
    return est


def _finish_all(A, dom, cod, X, iters, method, certified_upper, min_hits, hit_tol=1e-7):
    cert = _ratios(A, dom, cod, X, certified=True)
    b = int(np.argmax(cert))
    lower = float(cert[b])
    hits = int(np.sum(cert >= lower * (1 - hit_tol)))
    w = X[b] / max(float(dom.norm(X[b][None, :])[0]), 1e-300)
    lower = float(_ratios(A, dom, cod, w[None, :], certified=True)[0])
    certified_upper = max(certified_upper, lower)
    upper = lower if hits >= min_hits else certified_upper
    est = NormEstimate(lower, upper, w, method, iters, certified_upper, hits, True)
    return est, cert, X


def _random_starts(rng, k, d):
    return rng.standard_normal((k, d)) + 1j * rng.standard_normal((k, d))


def _boyd(A, dom, cod, budget, seed, extra_starts, certified_upper, keep=False):
    d = A.shape[1]
    rng = stream(seed, "boyd", list(A.shape))
    starts = [np.ones((1, d), np.complex128), _random_starts(rng, max(budget.starts - 1, 0), d)]
    if extra_starts is not None:
        starts.append(np.atleast_2d(np.asarray(extra_starts, dtype=np.complex128)))
    X0 = np.concatenate(starts, axis=0)
    X, _, it = _ascent(A, dom, cod, X0, budget.maxiter, budget.tol)
    if all(1 < g.p < np.inf for g in (dom, cod)):
        X = _polish(A, dom, cod, X, k=min(3, budget.polish))
    est, cert, X = _finish_all(A, dom, cod, X, it, "boyd_multistart", certified_upper, budget.min_hits)
    est = replace(est, converged=it < budget.maxiter)
    if keep:
        return est, cert, X / np.maximum(dom.norm(X), 1e-300)[:, None]
    return est


def multistart_optima(A, domain, codomain=None, *, budget: SolverBudget = DEFAULT_BUDGET,
                      seed: int = 0, extra_starts=None, extension=None):
    """Multistart power iteration keeping every start.

    Returns the estimate, the certified ratio reached from each start (in
    start order) and the corresponding unit-norm local optima.
    """
    A, dom, cod = _prepare(A, domain, codomain)
    cu = _certified_upper(A, dom, cod, extension)
    return _boyd(A, dom, cod, budget, seed, extra_starts, cu, keep=True)


# --- brute force ------------------------------------------------------------

def _sphere_grid(d, res):
    """Unit l_2 vectors with x_0 >= 0 (phase fixed) on a product angle grid.

    Returns the points and a bound on the l_2 distance from any unit vector
    (after a global phase) to the nearest grid point.
    """
    mags = np.linspace(0.0, np.pi / 2, res)
    phases = np.arange(res) * (2 * np.pi / res)
    axes = [mags] * (d - 1) + [phases] * (d - 1)
    grids = np.meshgrid(*axes, indexing="ij")
    th = [g.reshape(-1) for g in grids[: d - 1]]
    ph = [g.reshape(-1) for g in grids[d - 1 :]]
    npts = th[0].shape[0] if th else 1
    r = np.ones((npts, d))
    s = np.ones(npts)
    for k in range(d - 1):
        r[:, k] = s * np.cos(th[k])
        s = s * np.sin(th[k])
    r[:, d - 1] = s
    X = r.astype(np.complex128)
    for k in range(d - 1):
        X[:, k + 1] *= np.exp(1j * ph[k])
    delta = (d - 1) * (np.pi / (4 * (res - 1)) + np.pi / res)
    return X, delta


def _bruteforce(A, dom, cod, budget, certified_upper, resolution=None):
    d = A.shape[1]
    sphere_dim = 2 * d - 2
    if sphere_dim > 6:
        raise DimensionTooLarge(f"search sphere has real dimension {sphere_dim} > 6")
    res = int(resolution or budget.resolution)
    if sphere_dim:
        res = max(3, min(res, int(np.floor(budget.max_points ** (1.0 / sphere_dim)))))
    X, delta = _sphere_grid(d, res)
    vals = np.empty(len(X))
    chunk = 20000
    for s in range(0, len(X), chunk):
        # numerator primal (upper), denominator certified from below
        Y = X[s : s + chunk] @ A.T
        vals[s : s + chunk] = cod.norm(Y) / dom.norm_lower(X[s : s + chunk])
    top = np.argsort(-vals, kind="stable")[: max(budget.polish, 1)]
    rho = dom.hi * delta / dom.lo
    grid_max = float(vals.max())
    if rho < 1:
        certified_upper = min(certified_upper, grid_max * (1 + rho) / (1 - rho))
    Xp, _, it = _ascent(A, dom, cod, X[top], budget.maxiter, budget.tol)
    est = _finish(A, dom, cod, np.concatenate([X[top], Xp]), it, "brute_force",
                  certified_upper, 1)
    # the dense grid stands in for multistart consensus
    return replace(est, upper=max(est.lower, min(est.upper, est.certified_upper)))


# --- public entry points ----------------------------------------------------

def _prepare(A, domain, codomain):
    A = np.atleast_2d(np.asarray(A, dtype=np.complex128))
    dom = _geometry(domain)
    cod = _geometry(codomain if codomain is not None else domain)
    if A.shape != (cod.dim, dom.dim):
        raise ValueError(f"operator shape {A.shape} does not match spaces ({cod.dim}, {dom.dim})")
    return A, dom, cod


def _exact(A, dom, cod, cf):
    value, w, method = cf
    if value is None:
        # one-dimensional domain: the ratio at the only direction
        lo = float(_ratios(A, dom, cod, w[None, :], certified=True)[0])
        hi = float(cod.norm(w[None, :] @ A.T)[0] / dom.norm_lower(w[None, :])[0])
        hi = max(hi, lo)
        return NormEstimate(lo, hi, w, method, 0, hi, 1, True)
    lo = float(_ratios(A, dom, cod, w[None, :], certified=True)[0]) if value > 0 else 0.0
    up = max(value, lo)
    return NormEstimate(lo, up, w, method, 0, up, 1, True)


def opnorm(A, domain, codomain=None, *, budget: SolverBudget = DEFAULT_BUDGET, seed: int = 0,
           extra_starts=None, extension=None) -> NormEstimate:
    """Estimate sup ||A c|| / ||c|| for A acting on quotient coordinates.

    Dispatch: closed forms (p = 2 through an SVD, p = 1 / inf, diagonal, one
    dimensional domain), then the grid search when the real search sphere is
    small, otherwise multistart power iteration.  ``extension`` is an optional
    ambient operator inducing ``A``; its interpolation bound is used as a
    certified upper bound.
    """
    A, dom, cod = _prepare(A, domain, codomain)
    cf = _closed_form(A, dom, cod)
    if cf is not None:
        return _exact(A, dom, cod, cf)
    cu = _certified_upper(A, dom, cod, extension)
    if 2 * A.shape[1] - 2 <= budget.brute_force_dim and extra_starts is None:
        return _bruteforce(A, dom, cod, budget, cu)
    return _boyd(A, dom, cod, budget, seed, extra_starts, cu)


def opnorm_boyd(A, domain, codomain=None, *, starts: int | None = None, seed: int = 0,
                budget: SolverBudget = DEFAULT_BUDGET, extra_starts=None, extension=None) -> NormEstimate:
    A, dom, cod = _prepare(A, domain, codomain)
    if starts is not None:
        budget = replace(budget, starts=int(starts))
    cu = _certified_upper(A, dom, cod, extension)
    return _boyd(A, dom, cod, budget, seed, extra_starts, cu)


def opnorm_bruteforce(A, domain, codomain=None, resolution: int = 400, *,
                      max_points: int = 200_000, budget: SolverBudget = DEFAULT_BUDGET) -> NormEstimate:
    """Grid search over the unit sphere (phase removed) plus local polish.

    The grid has ``resolution`` steps per angle, capped at ``max_points``
    points in total.  The certified upper bound covers the whole sphere.
    """
    A, dom, cod = _prepare(A, domain, codomain)
    budget = replace(budget, max_points=int(max_points))
    cu = _certified_upper(A, dom, cod)
    return _bruteforce(A, dom, cod, budget, cu, resolution=resolution)


def directsum_opnorm(blocks, *, budget: SolverBudget = DEFAULT_BUDGET, seed: int = 0) -> NormEstimate:
    """Norm of a block diagonal operator as the largest block norm.

    ``blocks`` holds pairs (A_k, E_k) with A_k acting on E_k.  The witness is
    the best block witness placed in its slot of the direct sum coordinates.
    """
    blocks = list(blocks)
    if not blocks:
        raise ValueError("need at least one block")
    p = blocks[0][1].p
    for _, E in blocks:
        if E.p != p:
            raise ExponentMismatch(f"exponents differ: {p} vs {E.p}")
    ests = [opnorm(A, E, budget=budget, seed=seed) for A, E in blocks]
    b = max(range(len(ests)), key=lambda k: ests[k].lower)
    dims = [E.dim for _, E in blocks]
    w = np.zeros(sum(dims), np.complex128)
    off = sum(dims[:b])
    w[off : off + dims[b]] = ests[b].witness
    return NormEstimate(
        lower=ests[b].lower,
        upper=max(e.upper for e in ests),
        witness=w,
        method=ests[b].method,
        iterations=sum(e.iterations for e in ests),
        certified_upper=max(e.certified_upper for e in ests),
        hits=ests[b].hits,
        converged=all(e.converged for e in ests),
    )


def mixed_scalar_norm(M, p_in, p_out, *, budget: SolverBudget = DEFAULT_BUDGET, seed: int = 0) -> NormEstimate:
    """Norm of a scalar matrix as a map l_{p_in}^m -> l_{p_out}^n, p in [1, inf]."""
    M = np.atleast_2d(np.asarray(M, dtype=np.complex128))
    n, m = M.shape
    for p in (p_in, p_out):
        if not (1 <= p <= np.inf):
            raise ValueError("exponents must lie in [1, inf]")
    dom = _Geometry(dim=m, p=p_in)
    cod = _Geometry(dim=n, p=p_out)
    cf = _closed_form(M, dom, cod)
    if cf is not None:
        return _exact(M, dom, cod, cf)
    cu = _certified_upper(M, dom, cod)
    if 2 * m - 2 <= budget.brute_force_dim:
        return _bruteforce(M, dom, cod, budget, cu)
    return _boyd(M, dom, cod, budget, seed, None, cu)


def plain_geometry(dim, p):
    """Norm geometry of l_p^dim for any p in [1, inf] (used by the oracle suite)."""
    return _Geometry(dim=dim, p=p)


def evaluate_witness(A, domain, codomain=None, witness=None) -> float:
    """Certified ratio ||A w|| / ||w|| at a stored witness (no search)."""
    A, dom, cod = _prepare(A, domain, codomain)
    w = np.asarray(witness, dtype=np.complex128).reshape(1, -1)
    return float(_ratios(A, dom, cod, w, certified=True)[0])
