"""Representations of finite groups by invertible isometries of QSL_p spaces.

A representation stores one matrix per group element acting on the
quotient coordinates of its space.  When the space sits inside a plain
l_p^m (subspaces, restrictions of permutation representations) the matrices
of an ambient operator inducing each pi(x) are kept as well; they give
certified interpolation bounds for lifted operators.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .groups import FiniteGroup, GroupFunction, GroupMismatch
from .opnorm import DEFAULT_BUDGET, NormEstimate, SolverBudget, opnorm
from .rng import stream
from .spaces import (
    QSLpSpace,
    SpaceVector,
    ExponentMismatch,
    amplify_space,
    direct_sum_space,
    subspace_of,
)

HOM_TOL = 1e-9
ISOMETRY_TOL = 1e-8
RANK_TOL = 1e-9
EXHAUSTIVE_HOM_ORDER = 16


class NotARepresentation(ValueError):
    pass


class NotIsometric(NotARepresentation):
    pass


class ZeroVector(ValueError):
    pass


class ShapeMismatch(ValueError):
    pass


def _is_monomial_unimodular(M, tol=1e-12):
    a = np.abs(M)
    nz = a > tol
    return (
        np.all(nz.sum(axis=0) == 1)
        and np.all(nz.sum(axis=1) == 1)
        and np.allclose(a[nz], 1.0, atol=tol)
    )


class Representation:
    """pi: G -> isometries of ``space``; ``matrices[x]`` acts on quotient coordinates."""

    def __init__(self, group: FiniteGroup, space: QSLpSpace, matrices, *, ambient=None,
                 label: str = "", spec: dict | None = None, certificate: str | None = None,
                 check: bool = True, budget: SolverBudget = DEFAULT_BUDGET):
        M = np.array(matrices, dtype=np.complex128)
        d = space.dim
        if M.shape != (group.order, d, d):
            raise NotARepresentation(
                f"expected {group.order} matrices of shape {(d, d)}, got {M.shape}"
            )
        M.setflags(write=False)
        self.group = group
        self.space = space
        self.matrices = M
        if ambient is not None:
            T = np.array(ambient, dtype=np.complex128)
            m = space.ambient_dim
            if T.shape != (group.order, m, m):
                raise NotARepresentation("ambient matrices have the wrong shape")
            T.setflags(write=False)
            ambient = T
        self.ambient = ambient
        self.label = label
        self.spec = spec
        if check:
            self._check_homomorphism()
            if certificate is None:
                certificate = self._certify_isometry(budget)
        self.certificate = certificate

    @property
    def p(self):
        return self.space.p

    @property
    def dim(self):
        return self.space.dim

    def __repr__(self):
        name = self.label or "Representation"
        return f"<{name} of {self.group!r} on {self.space!r}>"

    def _check_homomorphism(self):
        G, M = self.group, self.matrices
        scale = max(1.0, float(np.abs(M).max()))
        if not np.allclose(M[G.identity], np.eye(self.dim), atol=HOM_TOL * scale):
            raise NotARepresentation("identity element is not represented by the identity")
        if G.order <= EXHAUSTIVE_HOM_ORDER:
            pairs = np.array([(g, h) for g in range(G.order) for h in range(G.order)])
        else:
            pairs = stream(0, "hom-check", G.order).integers(0, G.order, size=(2000, 2))
        g, h = pairs.T
        prod = M[g] @ M[h]
        err = np.abs(prod - M[G.mul_table[g, h]]).max(axis=(1, 2))
        bad = np.nonzero(err > HOM_TOL * scale * scale)[0]
        if len(bad):
            a, b = (int(v) for v in pairs[bad[0]])
            raise NotARepresentation(f"pi({a})pi({b}) != pi({a}*{b}) (error {err[bad[0]]:.2e})")
        inv = M[G.inverse_table]
        eye = np.eye(self.dim)
        if np.abs(M @ inv - eye).max() > HOM_TOL * scale * scale:
            raise NotARepresentation("pi(x^-1) is not the inverse of pi(x)")

    def _certify_isometry(self, budget):
        if self.space.is_plain and all(_is_monomial_unimodular(m) for m in self.matrices):
            return "monomial"
        for g in range(self.group.order):
            est = opnorm(self.matrices[g], self.space, budget=budget, seed=g,
                         extension=None if self.ambient is None else self.ambient[g])
            if est.lower > 1 + ISOMETRY_TOL:
                raise NotIsometric(f"pi({g}) has norm at least {est.lower:.10g} > 1")
            if est.upper > 1 + ISOMETRY_TOL:
                raise NotIsometric(
                    f"could not confirm ||pi({g})|| <= 1 (bracket [{est.lower:.6g}, {est.upper:.6g}])"
                )
        return "opnorm"

    def lift_matrix(self, coeffs):
        """sum_x f(x) pi(x) for a coefficient vector (or a stack of them)."""
        c = np.asarray(coeffs, dtype=np.complex128)
        return np.tensordot(c, self.matrices, axes=([-1], [0]))

    def ambient_lift(self, coeffs):
        if self.ambient is None:
            if self.space.is_plain:
                return self.lift_matrix(coeffs)
            return None
        return np.tensordot(np.asarray(coeffs, dtype=np.complex128), self.ambient, axes=([-1], [0]))

    def ambient_matrices(self):
        """Matrices on l_p^m that induce each pi(x), or None when unknown."""
        if self.ambient is not None:
            return self.ambient
        if self.space.is_plain:
            return self.matrices
        return None

    def opnorm_of(self, A, *, budget=DEFAULT_BUDGET, seed=0, extra_starts=None, extension=None):
        return opnorm(A, self.space, budget=budget, seed=seed,
                      extra_starts=extra_starts, extension=extension)


@dataclass(frozen=True, eq=False)
class LiftedOperator:
    rep: Representation
    f: GroupFunction
    matrix: np.ndarray = field(repr=False)

    def norm(self, *, budget=DEFAULT_BUDGET, seed=0) -> NormEstimate:
        ext = self.rep.ambient_lift(self.f.coeffs) if self.rep.ambient is not None else None
        return self.rep.opnorm_of(self.matrix, budget=budget, seed=seed, extension=ext)


def lift(rep: Representation, f: GroupFunction) -> LiftedOperator:
    if f.group != rep.group:
        raise GroupMismatch("function and representation live on different groups")
    M = rep.lift_matrix(f.coeffs)
    M.setflags(write=False)
    return LiftedOperator(rep, f, M)


# --- constructors -----------------------------------------------------------

def left_regular(group: FiniteGroup, p) -> Representation:
    n = group.order
    M = np.zeros((n, n, n), np.complex128)
    g = np.repeat(np.arange(n), n)
    x = np.tile(np.arange(n), n)
    M[g, group.mul_table[g, x], x] = 1.0  # lambda(g) delta_x = delta_{gx}
    return Representation(group, QSLpSpace.plain(n, p), M, label="regular",
                          spec={"kind": "regular"}, certificate="monomial", check=False)


def trivial_rep(group: FiniteGroup, p) -> Representation:
    M = np.ones((group.order, 1, 1), np.complex128)
    return Representation(group, QSLpSpace.plain(1, p), M, label="trivial",
                          spec={"kind": "trivial"}, certificate="monomial", check=False)


def permutation_rep(group: FiniteGroup, action, p) -> Representation:
    from .groups import permutation_action_check

    act = permutation_action_check(group, action)
    k = act.shape[1]
    M = np.zeros((group.order, k, k), np.complex128)
    for g in range(group.order):
        M[g, act[g], np.arange(k)] = 1.0
    return Representation(group, QSLpSpace.plain(k, p), M, label="permutation",
                          spec={"kind": "permutation", "action": act.tolist()},
                          certificate="monomial", check=True)


def explicit_rep(group: FiniteGroup, space: QSLpSpace, matrices, *, budget=DEFAULT_BUDGET,
                 label="explicit") -> Representation:
    """User supplied matrices; homomorphism and isometry are verified."""
    spec = {"kind": "explicit", "matrices": _complex_list(matrices), "space": space_spec(space)}
    return Representation(group, space, matrices, label=label, spec=spec, budget=budget)


def direct_sum_rep(reps) -> Representation:
    reps = list(reps)
    if not reps:
        raise ValueError("need at least one representation")
    G = reps[0].group
    for r in reps[1:]:
        if r.group != G:
            raise GroupMismatch("representations of different groups")
        if r.p != reps[0].p:
            raise ExponentMismatch("representations on spaces with different exponents")
    space = direct_sum_space([r.space for r in reps])
    M = np.stack([sla.block_diag(*[r.matrices[g] for r in reps]) for g in range(G.order)])
    amb = None
    if not space.is_plain:
        blocks = [r.ambient_matrices() for r in reps]
        if all(b is not None for b in blocks):
            amb = np.stack([sla.block_diag(*[b[g] for b in blocks]) for g in range(G.order)])
    cert = "direct_sum" if all(r.certificate for r in reps) else None
    spec = {"kind": "direct_sum", "parts": [r.spec for r in reps]}
    label = " + ".join(r.label or "rep" for r in reps)
    return Representation(G, space, M, ambient=amb, label=label, spec=spec,
                          certificate=cert, check=cert is None)


# --- amplification ----------------------------------------------------------

def as_function_array(F, group: FiniteGroup) -> np.ndarray:
    """Coefficient array of shape (n, n, |G|) from nested GroupFunctions or an array."""
    if isinstance(F, np.ndarray) and F.dtype != object:
        arr = np.asarray(F, dtype=np.complex128)
    else:
        rows = [list(r) for r in F]
        n = len(rows)
        if any(len(r) != n for r in rows):
            raise ShapeMismatch("function array must be square")
        arr = np.empty((n, n, group.order), np.complex128)
        for i, r in enumerate(rows):
            for j, f in enumerate(r):
                if isinstance(f, GroupFunction):
                    if f.group != group:
                        raise GroupMismatch("array entry on a different group")
                    arr[i, j] = f.coeffs
                else:
                    arr[i, j] = np.asarray(f, dtype=np.complex128)
    if arr.ndim != 3 or arr.shape[0] != arr.shape[1] or arr.shape[2] != group.order:
        raise ShapeMismatch(f"expected an (n, n, {group.order}) array, got {arr.shape}")
    return arr


def blocks_to_matrix(B):
    """(n, n, d, d) blocks to the (n d) x (n d) block matrix."""
    n, _, d, e = B.shape
    return B.transpose(0, 2, 1, 3).reshape(n * d, n * e)


class AmplifiedRep:
    """pi^(n): [f_ij] -> [pi(f_ij)] acting on E^(n), coordinates block by block."""

    def __init__(self, rep: Representation, n: int):
        if n < 1:
            raise ShapeMismatch("n must be positive")
        self.rep = rep
        self.n = n
        self.space = amplify_space(rep.space, n)

    def __call__(self, F) -> np.ndarray:
        arr = as_function_array(F, self.rep.group)
        if arr.shape[0] != self.n:
            raise ShapeMismatch(f"expected a {self.n}x{self.n} array, got {arr.shape[0]}x{arr.shape[0]}")
        return blocks_to_matrix(self.rep.lift_matrix(arr))

    def extension(self, F):
        """Block ambient operator inducing pi^(n)(F), or None for plain spaces."""
        if self.rep.space.is_plain or self.rep.ambient_matrices() is None:
            return None
        arr = as_function_array(F, self.rep.group)
        return blocks_to_matrix(np.tensordot(arr, self.rep.ambient_matrices(), axes=([-1], [0])))

    def norm(self, F, *, budget=DEFAULT_BUDGET, seed=0, extra_starts=None) -> NormEstimate:
        return opnorm(self(F), self.space, budget=budget, seed=seed,
                      extra_starts=extra_starts, extension=self.extension(F))


def amplify_rep(rep: Representation, n: int) -> AmplifiedRep:
    return AmplifiedRep(rep, n)


# --- cyclic subrepresentations ---------------------------------------------

def orbit_basis(rep: Representation, vectors, tol=RANK_TOL) -> np.ndarray:
    """Orthonormal coordinate basis of span{pi(g) v : g in G, v in vectors}."""
    V = np.atleast_2d(np.asarray(vectors, dtype=np.complex128))
    orbit = np.einsum("gij,vj->igv", rep.matrices, V).reshape(rep.dim, -1)
    if not np.any(orbit):
        return np.zeros((rep.dim, 0), np.complex128)
    u, s, _ = np.linalg.svd(orbit, full_matrices=False)
    rank = int(np.sum(s > tol * s[0]))
    return u[:, :rank]


@dataclass(frozen=True, eq=False)
class CyclicSubrep:
    rep: Representation  # the restricted representation rho
    inclusion: np.ndarray = field(repr=False)  # d x k, orthonormal coordinate columns
    xi: np.ndarray = field(repr=False)  # cyclic vector in the parent coordinates

    def cyclic_vector(self) -> SpaceVector:
        """xi in the coordinates of the subrepresentation's own space."""
        return SpaceVector(self.rep.space, np.conj(self.inclusion.T) @ self.xi)


def cyclic_subrep(rep: Representation, xi) -> CyclicSubrep:
    """Restriction of ``rep`` to the cyclic subspace span{pi(g) xi}."""
    x = xi.coords if isinstance(xi, SpaceVector) else np.asarray(xi, dtype=np.complex128)
    if x.shape != (rep.dim,):
        raise ValueError(f"expected a vector with {rep.dim} coordinates")
    if np.abs(x).max(initial=0) == 0 or rep.space.norms(x) <= 1e-12 * max(1.0, np.abs(x).max()):
        raise ZeroVector("cyclic vector is zero")
    Q = orbit_basis(rep, x[None, :])
    if Q.shape[1] == rep.dim:
        # the whole space: keep the same coordinates
        Q = np.eye(rep.dim, dtype=np.complex128)
        sub_space = rep.space
    else:
        sub_space = subspace_of(rep.space, Q)
    rho = np.conj(Q.T)[None] @ rep.matrices @ Q[None]
    amb = rep.ambient_matrices() if not sub_space.is_plain else None
    spec = {"kind": "cyclic", "base": rep.spec, "xi": _complex_list(x)}
    sub = Representation(rep.group, sub_space, rho, ambient=amb, label=f"cyclic({rep.label})",
                         spec=spec, certificate=rep.certificate and "restriction", check=False)
    Q.setflags(write=False)
    x = x.copy()
    x.setflags(write=False)
    return CyclicSubrep(sub, Q, x)


# --- equivalence and cyclic matrix representations -------------------------

@dataclass
class CheckReport:
    passed: bool
    failures: list
    details: dict = field(default_factory=dict)

    def __bool__(self):
        return self.passed


def equivalence_check(rep1: Representation, rep2: Representation, T, *, n_max=3,
                      budget=DEFAULT_BUDGET, seed=0) -> CheckReport:
    """Check that T: E1 -> E2 is an isometric intertwiner rho(x) T = T pi(x).

    Also checks that the (n)-fold T^(n) intertwines the amplifications on
    random arrays and stays isometric, for n <= n_max.
    """
    T = np.asarray(T, dtype=np.complex128)
    fails = []
    det = {}
    if rep1.group != rep2.group:
        return CheckReport(False, ["representations of different groups"])
    if T.shape != (rep2.dim, rep1.dim):
        return CheckReport(False, [f"T has shape {T.shape}, expected {(rep2.dim, rep1.dim)}"])
    if np.linalg.matrix_rank(T, tol=1e-10 * max(1.0, np.abs(T).max())) < rep1.dim or rep1.dim != rep2.dim:
        return CheckReport(False, ["T is not invertible"])
    Tinv = np.linalg.inv(T)
    fwd = opnorm(T, rep1.space, rep2.space, budget=budget, seed=seed)
    bwd = opnorm(Tinv, rep2.space, rep1.space, budget=budget, seed=seed)
    det["norm_T"] = fwd.to_dict()
    det["norm_T_inverse"] = bwd.to_dict()
    for name, est in (("T", fwd), ("T^-1", bwd)):
        if est.lower > 1 + ISOMETRY_TOL:
            fails.append(f"||{name}|| >= {est.lower:.10g} > 1: not an isometry")
        elif est.upper > 1 + ISOMETRY_TOL:
            fails.append(f"could not confirm ||{name}|| <= 1")
    err = np.abs(rep2.matrices @ T[None] - T[None] @ rep1.matrices).max(axis=(1, 2))
    scale = max(1.0, float(np.abs(T).max()))
    bad = np.nonzero(err > HOM_TOL * scale)[0]
    for g in bad:
        fails.append(f"T does not intertwine at element {int(g)} (error {err[g]:.2e})")
    rng = stream(seed, "equivalence", rep1.dim)
    for n in range(2, n_max + 1):
        F = rng.standard_normal((n, n, rep1.group.order)) + 1j * rng.standard_normal((n, n, rep1.group.order))
        Tn = np.kron(np.eye(n), T)
        A1 = amplify_rep(rep1, n)(F)
        A2 = amplify_rep(rep2, n)(F)
        e = np.abs(A2 @ Tn - Tn @ A1).max()
        if e > HOM_TOL * scale * max(1.0, np.abs(F).sum()):
            fails.append(f"T^({n}) does not intertwine the amplifications (error {e:.2e})")
        if not fails:
            est = opnorm(Tn, amplify_space(rep1.space, n), amplify_space(rep2.space, n),
                         budget=budget, seed=seed, extra_starts=np.kron(np.eye(n)[:1], fwd.witness))
            det[f"norm_T_{n}"] = est.to_dict()
            if est.lower > 1 + ISOMETRY_TOL:
                fails.append(f"T^({n}) is not contractive")
    return CheckReport(not fails, fails, det)


def _span_contains(A, B, tol=RANK_TOL):
    """True when the columns of B lie in span(A) (both coordinate matrices)."""
    if B.shape[1] == 0:
        return True
    if A.shape[1] == 0:
        return not np.any(np.abs(B) > tol)
    coef, *_ = np.linalg.lstsq(A, B, rcond=None)
    return np.abs(A @ coef - B).max() <= tol * max(1.0, np.abs(B).max())


def cyclic_matrix_decompose(rep: Representation, n: int, x) -> CheckReport:
    """Compare K = span{pi^(n)([f_ij]) x} with (F_1 + ... + F_n)^(n).

    ``x`` has n * dim coordinates (blocks x_1, ..., x_n) and
    F_k = span{pi(g) x_k}.  K is spanned by the vectors e_i (x) pi(g) x_j,
    so the report states the rank of each side and mutual containment.
    """
    x = np.asarray(x.coords if isinstance(x, SpaceVector) else x, dtype=np.complex128)
    d = rep.dim
    if x.shape != (n * d,):
        raise ShapeMismatch(f"expected {n * d} coordinates")
    if not np.any(np.abs(x) > 0):
        raise ZeroVector("generating vector is zero")
    blocks = x.reshape(n, d)
    comps = [orbit_basis(rep, b[None, :]) if np.any(b) else np.zeros((d, 0), complex) for b in blocks]
    # generators of K: pi^(n)(delta_g E_ij) x puts pi(g) x_j in block i
    gens = []
    for i in range(n):
        for j in range(n):
            v = np.einsum("gab,b->ag", rep.matrices, blocks[j])  # d x |G|
            G = np.zeros((n * d, rep.group.order), np.complex128)
            G[i * d : (i + 1) * d] = v
            gens.append(G)
    Kgen = np.concatenate(gens, axis=1)
    u, s, _ = np.linalg.svd(Kgen, full_matrices=False)
    K = u[:, : int(np.sum(s > RANK_TOL * s[0]))]
    Fsum = np.concatenate(comps, axis=1)
    if Fsum.shape[1]:
        u, s, _ = np.linalg.svd(Fsum, full_matrices=False)
        Fsum = u[:, : int(np.sum(s > RANK_TOL * s[0]))]
    target = np.kron(np.eye(n), Fsum)
    k_in_t = _span_contains(target, K)
    t_in_k = _span_contains(K, target)
    dims = [c.shape[1] for c in comps]
    det = {
        "rank_K": int(K.shape[1]),
        "rank_target": int(target.shape[1]),
        "component_dims": dims,
        "sum_is_direct": int(Fsum.shape[1]) == sum(dims),
    }
    fails = []
    if not k_in_t:
        fails.append("K is not contained in (F_1 + ... + F_n)^(n)")
    if not t_in_k:
        fails.append("(F_1 + ... + F_n)^(n) is not contained in K")
    return CheckReport(not fails, fails, det)


# --- serialization ----------------------------------------------------------

def _complex_list(a):
    a = np.asarray(a, dtype=np.complex128)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def _from_complex_list(v):
    a = np.asarray(v, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def space_spec(E: QSLpSpace) -> dict:
    if E.is_plain:
        return {"dim": E.ambient_dim, "p": E.p}
    return {"p": E.p, "R": _complex_list(E.R), "N": _complex_list(E.N)}


def space_from_spec(spec: dict) -> QSLpSpace:
    if "R" not in spec:
        return QSLpSpace.plain(int(spec["dim"]), float(spec["p"]))
    R = _from_complex_list(spec["R"])
    N = _from_complex_list(spec["N"]) if spec.get("N") else None
    if N is not None and N.size == 0:
        N = None
    return QSLpSpace.from_representatives(R, N, float(spec["p"]))


def rep_from_spec(group: FiniteGroup, p, spec: dict, budget=DEFAULT_BUDGET) -> Representation:
    kind = spec.get("kind")
    if kind == "regular":
        return left_regular(group, p)
    if kind == "trivial":
        return trivial_rep(group, p)
    if kind == "permutation":
        return permutation_rep(group, spec["action"], p)
    if kind == "direct_sum":
        return direct_sum_rep([rep_from_spec(group, p, s, budget) for s in spec["parts"]])
    if kind == "explicit":
        space = space_from_spec(spec["space"]) if "space" in spec else None
        M = _from_complex_list(spec["matrices"]) if np.ndim(spec["matrices"]) == 4 else np.asarray(spec["matrices"], dtype=np.complex128)
        if space is None:
            space = QSLpSpace.plain(M.shape[1], p)
        return explicit_rep(group, space, M, budget=budget)
    if kind == "cyclic":
        base = rep_from_spec(group, p, spec["base"], budget)
        return cyclic_subrep(base, _from_complex_list(spec["xi"])).rep
    raise ValueError(f"unknown representation kind {kind!r}")
