"""Finite-dimensional QSL_p spaces: quotients of subspaces of l_p^m.

A space is stored as a pair of ambient matrices

    R : m x d   representatives of a basis of the quotient,
    N : m x j   basis of the subspace that is factored out,

so the subspace is span(R) + span(N) and the quotient has dimension d.
Vectors carry d quotient coordinates ``c``; their norm is

    ||c|| = min_z || R c + N z ||_p .

Pairings with the dual are bilinear (no conjugation), matching
<pi(x) xi, eta> for eta in E*.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla
from scipy.optimize import minimize

SPAN_TOL = 1e-10
QNORM_TOL = 1e-9
QNORM_MAXITER = 10000


class ExponentMismatch(ValueError):
    pass


class SpaceMismatch(ValueError):
    pass


class NonConvergenceWarning(RuntimeWarning):
    pass


def conjugate_exponent(p: float) -> float:
    if p == 1:
        return np.inf
    if np.isinf(p):
        return 1.0
    return p / (p - 1.0)


def lp_norm(x, p, axis=-1):
    a = np.abs(np.asarray(x))
    if np.isinf(p):
        return a.max(axis=axis, initial=0.0)
    if p == 1:
        return a.sum(axis=axis)
    if p == 2:
        return np.sqrt((a * a).sum(axis=axis))
    # scale first so large/small entries do not overflow in a**p
    m = a.max(axis=axis, keepdims=True, initial=0.0)
    safe = np.where(m > 0, m, 1.0)
    return np.squeeze(m, axis=axis) * ((a / safe) ** p).sum(axis=axis) ** (1.0 / p)


def duality_map(x, p, axis=-1):
    """Norming functional of ``x`` in l_p under the bilinear pairing.

    Returns w with sum(x*w) = ||x||_p and ||w||_{p'} = 1 (zero for x = 0).
    """
    x = np.asarray(x)
    nrm = lp_norm(x, p, axis=axis)
    nrm_k = np.expand_dims(nrm, axis)
    safe = np.where(nrm_k > 0, nrm_k, 1.0)
    y = x / safe
    a = np.abs(y)
    if np.isinf(p):
        # put all mass on one maximal entry
        idx = np.argmax(a, axis=axis)
        w = np.zeros_like(y)
        ph = np.take_along_axis(np.conj(y), np.expand_dims(idx, axis), axis)
        phase = np.where(np.abs(ph) > 0, ph / np.where(np.abs(ph) > 0, np.abs(ph), 1), 0)
        np.put_along_axis(w, np.expand_dims(idx, axis), phase, axis)
        return np.where(nrm_k > 0, w, 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(a > 0, np.conj(y) * a ** (p - 2), 0.0)
    return np.where(nrm_k > 0, w, 0)


def orth_complement(A, n=None, tol=SPAN_TOL):
    """Orthonormal basis of the orthogonal complement of range(A) in C^n."""
    A = np.asarray(A, dtype=np.complex128)
    n = A.shape[0] if n is None else n
    if A.size == 0:
        return np.eye(n, dtype=np.complex128)
    u, s, _ = np.linalg.svd(A, full_matrices=True)
    rank = int(np.sum(s > tol * max(1.0, s[0] if len(s) else 0.0)))
    return u[:, rank:]


def annihilator(A, tol=SPAN_TOL):
    """Basis of {w : A^T w = 0}, the bilinear annihilator of range(A)."""
    A = np.asarray(A, dtype=np.complex128)
    # u^H conj(A) = 0  <=>  u^T A = 0
    return orth_complement(np.conj(A), tol=tol)


@dataclass
class QuotientNorm:
    """Result of min_z ||a + N z||_p with a duality certificate."""

    value: np.ndarray  # primal value (an upper bound)
    lower: np.ndarray  # dual value (a certified lower bound)
    z: np.ndarray
    iterations: int
    converged: np.ndarray

    @property
    def gap(self):
        return self.value - self.lower


def _dual_lower(a, r, N, p, proj):
    """Lower bound |<a, w>| / ||w||_{p'} with w the projected norming functional of r."""
    w = duality_map(r, p)
    if proj is not None:
        w = w - (w @ proj.T)
    q = conjugate_exponent(p)
    wn = lp_norm(w, q)
    pair = np.abs(np.sum(a * w, axis=-1))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(wn > 0, pair / np.where(wn > 0, wn, 1.0), 0.0)


def quotient_norm_batch(a, N, p, tol=QNORM_TOL, maxiter=QNORM_MAXITER) -> QuotientNorm:
    """Distance in l_p^m from each row of ``a`` to span(N).

    Damped Newton on the smoothed objective sum (|r|^2 + eps^2)^(p/2), i.e.
    IRLS weights plus the exact radial curvature term, with eps continuation
    and backtracking. Rows that miss the duality-gap tolerance are polished
    with L-BFGS. Values are primal
    (upper) bounds, ``lower`` are dual certificates.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.complex128))
    B, m = a.shape
    N = np.asarray(N, dtype=np.complex128).reshape(m, -1)
    j = N.shape[1]
    if j == 0:
        v = lp_norm(a, p)
        return QuotientNorm(v, v.copy(), np.zeros((B, 0), complex), 0, np.ones(B, bool))

    # projector onto range(conj N) along its orthogonal complement
    Nc = np.conj(N)
    proj = Nc @ np.linalg.solve(N.T @ Nc, N.T)  # proj @ w removes the part that pairs with N

    if p == 2:
        z = -np.linalg.solve(np.conj(N.T) @ N, np.conj(N.T) @ a.T).T
        r = a + z @ N.T
        v = lp_norm(r, 2)
        return QuotientNorm(v, _dual_lower(a, r, N, 2, proj), z, 1, np.ones(B, bool))

    scale = np.maximum(lp_norm(a, np.inf), 1e-300)
    a_s = a / scale[:, None]
    z = -np.linalg.lstsq(N, a_s.T, rcond=None)[0].T  # l2 start
    eps = np.full(B, 0.1)
    converged = np.zeros(B, bool)
    # real Jacobian of r = a + N z with respect to (Re z, Im z)
    J = np.concatenate([N, 1j * N], axis=1)  # m x 2j
    Jr, Ji = J.real, J.imag
    eye = np.eye(2 * j)
    it = 0

    def smooth(rr, e):
        return ((np.abs(rr) ** 2 + e[:, None] ** 2) ** (p / 2)).sum(axis=1)

    for it in range(1, maxiter + 1):
        idx = np.nonzero(~converged)[0]
        if len(idx) == 0:
            break
        e = eps[idx]
        r = a_s[idx] + z[idx] @ N.T
        x, y = r.real, r.imag
        u = x * x + y * y + e[:, None] ** 2
        w1 = p * u ** (p / 2 - 1)
        w2 = p * (p - 2) * u ** (p / 2 - 2)
        # per-entry 2x2 curvature blocks pulled back through the Jacobian
        gx, gy = w1 * x, w1 * y
        grad = gx @ Jr + gy @ Ji
        hxx = w1 + w2 * x * x
        hyy = w1 + w2 * y * y
        hxy = w2 * x * y
        H = (np.einsum("bm,mk,ml->bkl", hxx, Jr, Jr) + np.einsum("bm,mk,ml->bkl", hyy, Ji, Ji)
             + np.einsum("bm,mk,ml->bkl", hxy, Jr, Ji) + np.einsum("bm,mk,ml->bkl", hxy, Ji, Jr))
        H = H + 1e-12 * np.abs(np.trace(H, axis1=1, axis2=2))[:, None, None] * eye
        d = -np.linalg.solve(H, grad[..., None])[..., 0]
        dz = d[:, :j] + 1j * d[:, j:]
        f0 = smooth(r, e)
        t = np.ones(len(idx))
        zc = z[idx]
        for _ in range(40):
            f1 = smooth(a_s[idx] + (zc + t[:, None] * dz) @ N.T, e)
            bad = f1 > f0 + 1e-4 * t * np.sum(grad * d, axis=1)
            if not bad.any():
                break
            t = np.where(bad, 0.5 * t, t)
        z[idx] = zc + t[:, None] * dz
        dec = -np.sum(grad * d, axis=1)  # Newton decrement squared
        small = dec <= 1e-10 * f0
        eps[idx[small]] = np.maximum(e[small] * 0.1, 1e-300)
        if it % 3 == 0 or small.any():
            rr = a_s[idx] + z[idx] @ N.T
            val = lp_norm(rr, p)
            lo = _dual_lower(a_s[idx], rr, N, p, proj)
            done = val - lo <= tol * np.maximum(val, 1e-300)
            done |= (eps[idx] <= 1e-300)
            converged[idx[done]] = True
    z = z * scale[:, None]
    r = a + z @ N.T
    val = lp_norm(r, p)
    lower = _dual_lower(a, r, N, p, proj)
    converged = (val - lower) <= tol * np.maximum(val, 1e-300)
    if not converged.all():
        for b in np.nonzero(~converged)[0]:
            zb, vb = _polish_quotient(a[b], N, p, z[b])
            if vb < val[b]:
                z[b] = zb
                r[b] = a[b] + N @ zb
                val[b] = vb
        lower = _dual_lower(a, r, N, p, proj)
        # tiny absolute gaps are accepted for near-zero cosets
        converged = (val - lower) <= tol * np.maximum(val, 1.0)
    return QuotientNorm(val, np.minimum(lower, val), z, it, converged)


def _polish_quotient(a, N, p, z0):
    j = N.shape[1]
    NH = np.conj(N.T)
    scale = max(float(lp_norm(a, np.inf)), 1e-300)
    a = a / scale

    def fun(x):
        z = x[:j] + 1j * x[j:]
        r = a + N @ z
        ar = np.abs(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            g = p * (NH @ np.where(ar > 0, r * ar ** (p - 2), 0))
        return (ar ** p).sum(), np.concatenate([g.real, g.imag])

    z0 = z0 / scale
    x0 = np.concatenate([z0.real, z0.imag])
    res = minimize(fun, x0, jac=True, method="L-BFGS-B",
                   options={"maxiter": 5000, "gtol": 1e-15, "ftol": 1e-16})
    z = (res.x[:j] + 1j * res.x[j:]) * scale
    return z, float(lp_norm(a * scale + N @ z, p))


class QSLpSpace:
    """A represented quotient of a subspace of l_p^m.

    Build from a subspace basis ``S`` (m x k, independent columns) and a null
    basis ``N`` (m x j, columns inside span(S)); or use :meth:`plain` for l_p^n.
    """

    def __init__(self, ambient_dim, p, subspace_basis=None, null_basis=None):
        m = int(ambient_dim)
        if m < 1:
            raise ValueError("ambient dimension must be positive")
        p = float(p)
        if not (1.0 < p < np.inf):
            raise ValueError("p must lie in (1, inf)")
        S = np.eye(m, dtype=np.complex128) if subspace_basis is None else np.asarray(subspace_basis, dtype=np.complex128).reshape(m, -1)
        N = np.zeros((m, 0), np.complex128) if null_basis is None else np.asarray(null_basis, dtype=np.complex128).reshape(m, -1)
        k, j = S.shape[1], N.shape[1]
        sv = np.linalg.svd(S, compute_uv=False)
        if k == 0 or np.sum(sv > SPAN_TOL * sv[0]) < k:
            raise ValueError("subspace basis columns must be linearly independent")
        if j > k:
            raise ValueError("null basis larger than subspace")
        if j:
            C, *_ = np.linalg.lstsq(S, N, rcond=None)
            resid = np.abs(S @ C - N).max()
            if resid > SPAN_TOL * max(1.0, np.abs(N).max()):
                raise ValueError(f"null basis is not inside the subspace (residual {resid:.2e})")
            if np.linalg.matrix_rank(C, tol=SPAN_TOL * max(1.0, np.abs(C).max())) < j:
                raise ValueError("null basis columns must be linearly independent")
            W = orth_complement(C, k)
        else:
            W = np.eye(k, dtype=np.complex128)
        self._init(m, p, S @ W, N, S, W)

    def _init(self, m, p, R, N, S, W):
        self.ambient_dim = m
        self.p = p
        self.p_dual = conjugate_exponent(p)
        self.R = R
        self.N = N
        self.S = S
        self.W = W
        for arr in (R, N, S, W):
            arr.setflags(write=False)
        self.is_plain = N.shape[1] == 0 and R.shape == (m, m) and np.array_equal(R, np.eye(m))
        self._lo = None

    @classmethod
    def plain(cls, n, p):
        return cls(n, p)

    @classmethod
    def from_representatives(cls, R, N, p):
        """Space with quotient coordinates given directly by ``R`` (modulo span(N))."""
        R = np.asarray(R, dtype=np.complex128)
        m = R.shape[0]
        N = np.zeros((m, 0), np.complex128) if N is None else np.asarray(N, dtype=np.complex128).reshape(m, -1)
        S = np.concatenate([R, N], axis=1)
        sv = np.linalg.svd(S, compute_uv=False)
        if np.sum(sv > SPAN_TOL * sv[0]) < S.shape[1]:
            raise ValueError("representatives and null basis must be independent")
        self = cls.__new__(cls)
        W = np.eye(S.shape[1], R.shape[1], dtype=np.complex128)
        self._init(m, float(p), R, N, S, W)
        return self

    @property
    def dim(self):
        return self.R.shape[1]

    @property
    def is_subspace(self):
        return self.N.shape[1] == 0

    def __repr__(self):
        kind = "l_p" if self.is_plain else ("SL_p" if self.is_subspace else "QSL_p")
        return f"<QSLpSpace {kind} p={self.p:g} dim={self.dim} ambient={self.ambient_dim}>"

    def same_as(self, other) -> bool:
        return (
            self is other
            or (
                self.p == other.p
                and self.ambient_dim == other.ambient_dim
                and self.R.shape == other.R.shape
                and self.N.shape == other.N.shape
                and np.allclose(self.R, other.R, atol=1e-12)
                and np.allclose(self.N, other.N, atol=1e-12)
            )
        )

    def ambient(self, coords):
        """Representative in l_p^m of the coset with quotient coordinates ``coords``."""
        return np.asarray(coords) @ self.R.T

    def coords_from_subspace(self, k_coords):
        """Quotient coordinates of the coset of S @ k_coords."""
        return np.asarray(k_coords, dtype=np.complex128) @ np.conj(self.W)

    def norms(self, coords, details=False):
        """Norms of a batch of coordinate rows (or a single vector)."""
        c = np.asarray(coords, dtype=np.complex128)
        single = c.ndim == 1
        c = np.atleast_2d(c)
        a = c @ self.R.T
        if self.is_subspace:
            v = lp_norm(a, self.p)
            res = QuotientNorm(v, v, np.zeros((len(v), 0), complex), 0, np.ones(len(v), bool))
        else:
            res = quotient_norm_batch(a, self.N, self.p)
            if not res.converged.all():
                warnings.warn(
                    f"quotient norm did not reach gap {QNORM_TOL:g} for "
                    f"{int((~res.converged).sum())} vector(s)",
                    NonConvergenceWarning,
                    stacklevel=2,
                )
        if details:
            return res
        return res.value[0] if single else res.value

    def norm_lower(self, coords):
        """Certified lower bounds (dual certificates) for a batch of coordinates."""
        c = np.atleast_2d(np.asarray(coords, dtype=np.complex128))
        if self.is_subspace:
            return lp_norm(c @ self.R.T, self.p)
        return quotient_norm_batch(c @ self.R.T, self.N, self.p).lower

    def l2_equivalence(self):
        """Constants lo, hi with lo*||c||_2 <= ||c|| <= hi*||c||_2 (certified)."""
        if self._lo is None:
            m, p = self.ambient_dim, self.p
            up = m ** max(0.0, 1 / p - 0.5)
            down = m ** min(0.0, 1 / p - 0.5)
            hi = up * np.linalg.norm(self.R, 2)
            if self.is_subspace:
                M = self.R
            else:
                M = self.R - self.N @ np.linalg.lstsq(self.N, self.R, rcond=None)[0]
            lo = down * np.linalg.svd(M, compute_uv=False).min()
            self._lo = (float(lo), float(hi))
        return self._lo

    def dual_null(self):
        """Basis of the annihilator of the subspace, the null part of E* as a quotient of l_{p'}^m."""
        return annihilator(self.S)


@dataclass(frozen=True, eq=False)
class SpaceVector:
    space: QSLpSpace
    coords: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coords, dtype=np.complex128).reshape(-1)
        if c.shape[0] != self.space.dim:
            raise ValueError(f"expected {self.space.dim} coordinates, got {c.shape[0]}")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @classmethod
    def from_subspace_coords(cls, space, k_coords):
        return cls(space, space.coords_from_subspace(k_coords))

    def ambient(self):
        return self.space.ambient(self.coords)

    def norm(self):
        return vector_norm(self)

    def __add__(self, other):
        if not self.space.same_as(other.space):
            raise SpaceMismatch("vectors in different spaces")
        return SpaceVector(self.space, self.coords + other.coords)

    def __mul__(self, s):
        return SpaceVector(self.space, self.coords * complex(s))

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class DualVector:
    """A functional on ``space`` given by an ambient vector in l_{p'}^m that kills span(N)."""

    space: QSLpSpace
    w: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.array(self.w, dtype=np.complex128).reshape(-1)
        if w.shape[0] != self.space.ambient_dim:
            raise ValueError(f"expected {self.space.ambient_dim} ambient entries, got {w.shape[0]}")
        N = self.space.N
        if N.shape[1]:
            leak = np.abs(w @ N).max()
            if leak > 1e-9 * max(1.0, np.abs(w).max() * np.abs(N).max()):
                raise ValueError(f"functional does not annihilate the null subspace ({leak:.2e})")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)

    @property
    def p_dual(self):
        return self.space.p_dual

    def norm(self):
        return dual_norm(self)

    def on_coords(self):
        """The functional in quotient coordinates: <c, w> = c @ on_coords()."""
        return self.space.R.T @ self.w


def vector_norm(v: SpaceVector, details=False):
    return v.space.norms(v.coords, details=details)


def dual_norm(w: DualVector) -> float:
    """Norm of the functional on the quotient: distance of w to the annihilator of the subspace in l_{p'}."""
    Z = w.space.dual_null()
    return float(quotient_norm_batch(w.w[None, :], Z, w.space.p_dual).value[0])


def dual_pair(v: SpaceVector, w: DualVector) -> complex:
    if not v.space.same_as(w.space):
        raise SpaceMismatch("vector and functional live on different spaces")
    return complex(np.sum(v.ambient() * w.w))


def norming_functional(v: SpaceVector) -> DualVector:
    """A functional of dual norm <= 1 attaining <v, w> = ||v|| (up to solver tolerance)."""
    E = v.space
    a = v.ambient()
    if E.is_subspace:
        return DualVector(E, duality_map(a, E.p))
    res = quotient_norm_batch(a[None, :], E.N, E.p)
    r = a + E.N @ res.z[0]
    w = duality_map(r, E.p)
    Nc = np.conj(E.N)
    w = w - Nc @ np.linalg.solve(E.N.T @ Nc, E.N.T @ w)
    wn = lp_norm(w, E.p_dual)
    if wn > 0:
        w = w / wn
    pair = np.sum(a * w)
    if abs(pair) > 0:
        w = w * (abs(pair) / pair)
    return DualVector(E, w)


def direct_sum_space(spaces) -> QSLpSpace:
    spaces = list(spaces)
    if not spaces:
        raise ValueError("need at least one space")
    p = spaces[0].p
    for E in spaces[1:]:
        if E.p != p:
            raise ExponentMismatch(f"exponents differ: {p} vs {E.p}")
    if all(E.is_plain for E in spaces):
        return QSLpSpace.plain(sum(E.ambient_dim for E in spaces), p)
    R = sla.block_diag(*[E.R for E in spaces])
    m = R.shape[0]
    cols = []
    off = 0
    for E in spaces:
        if E.N.shape[1]:
            blk = np.zeros((m, E.N.shape[1]), np.complex128)
            blk[off : off + E.ambient_dim] = E.N
            cols.append(blk)
        off += E.ambient_dim
    N = np.concatenate(cols, axis=1) if cols else np.zeros((m, 0), np.complex128)
    return QSLpSpace.from_representatives(R, N, p)


def amplify_space(E: QSLpSpace, n: int) -> QSLpSpace:
    """E^{(n)}: the n-fold l_p direct sum, coordinates laid out block by block."""
    if n < 1:
        raise ValueError("n must be positive")
    if n == 1:
        return E
    return direct_sum_space([E] * n)


def split_coords(space_list, coords):
    out = []
    off = 0
    for E in space_list:
        out.append(np.asarray(coords)[..., off : off + E.dim])
        off += E.dim
    return out


def subspace_of(E: QSLpSpace, Q) -> QSLpSpace:
    """The subspace of E spanned by the coordinate columns of ``Q`` (d x d')."""
    Q = np.asarray(Q, dtype=np.complex128)
    return QSLpSpace.from_representatives(E.R @ Q, E.N, E.p)
