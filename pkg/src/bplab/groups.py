"""Finite groups given by multiplication tables, and the group algebra L_1(G).

Haar measure is counting measure, so integrals are plain sums and the
convolution of two functions is

    (f * g)(x) = sum_y f(y) g(y^{-1} x).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np


class NotAGroup(ValueError):
    """Raised when a table fails one of the group axioms.

    ``witness`` holds the first offending index tuple (a triple for
    associativity, a pair or single index otherwise).
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class GroupMismatch(ValueError):
    pass


EXHAUSTIVE_ASSOC_ORDER = 64
SAMPLED_ASSOC_TRIPLES = 20000


@dataclass(frozen=True, eq=False)
class FiniteGroup:
    mul_table: np.ndarray
    identity: int
    inverse_table: np.ndarray
    name: str = ""

    @property
    def order(self) -> int:
        return self.mul_table.shape[0]

    def mul(self, a: int, b: int) -> int:
        return int(self.mul_table[a, b])

    def inverse(self, a: int) -> int:
        return int(self.inverse_table[a])

    @property
    def is_abelian(self) -> bool:
        return bool(np.array_equal(self.mul_table, self.mul_table.T))

    def __eq__(self, other):
        if not isinstance(other, FiniteGroup):
            return NotImplemented
        return self.identity == other.identity and np.array_equal(
            self.mul_table, other.mul_table
        )

    def __hash__(self):
        return hash((self.identity, self.mul_table.tobytes()))

    def __repr__(self):
        label = self.name or "FiniteGroup"
        return f"<{label} order={self.order}>"


def _check_latin(table):
    n = table.shape[0]
    target = np.arange(n)
    for i in range(n):
        if not np.array_equal(np.sort(table[i]), target):
            raise NotAGroup(f"row {i} is not a permutation", witness=(i,))
        if not np.array_equal(np.sort(table[:, i]), target):
            raise NotAGroup(f"column {i} is not a permutation", witness=(i,))


def _check_associative(table, rng=None):
    n = table.shape[0]
    if n <= EXHAUSTIVE_ASSOC_ORDER:
        # (ab)c and a(bc) for all triples at once
        left = table[table[:, :, None], np.arange(n)[None, None, :]]
        right = table[np.arange(n)[:, None, None], table[None, :, :]]
        bad = np.argwhere(left != right)
        if len(bad):
            a, b, c = (int(v) for v in bad[0])
            raise NotAGroup(f"associativity fails at {(a, b, c)}", witness=(a, b, c))
        return
    rng = np.random.default_rng(0) if rng is None else rng
    trip = rng.integers(0, n, size=(SAMPLED_ASSOC_TRIPLES, 3))
    a, b, c = trip.T
    bad = np.nonzero(table[table[a, b], c] != table[a, table[b, c]])[0]
    if len(bad):
        t = tuple(int(v) for v in trip[bad[0]])
        raise NotAGroup(f"associativity fails at {t}", witness=t)


def group_from_table(table, identity_hint=None, name="") -> FiniteGroup:
    """Validate a multiplication table and build a :class:`FiniteGroup`.

    Raises :class:`NotAGroup` on the first violated axiom.
    """
    t = np.asarray(table)
    if t.ndim != 2 or t.shape[0] != t.shape[1] or t.shape[0] == 0:
        raise NotAGroup("table must be a non-empty square array")
    if not np.issubdtype(t.dtype, np.integer):
        if not np.all(np.equal(np.mod(t, 1), 0)):
            raise NotAGroup("table entries must be integers")
    t = t.astype(np.int64)
    n = t.shape[0]
    if t.min() < 0 or t.max() >= n:
        raise NotAGroup("table entries out of range")
    _check_latin(t)

    candidates = [identity_hint] if identity_hint is not None else range(n)
    identity = None
    for e in candidates:
        if np.array_equal(t[e], np.arange(n)) and np.array_equal(t[:, e], np.arange(n)):
            identity = int(e)
            break
    if identity is None:
        raise NotAGroup("no two-sided identity element", witness=identity_hint)

    _check_associative(t)

    inv = np.empty(n, dtype=np.int64)
    for g in range(n):
        (hits,) = np.nonzero(t[g] == identity)
        h = int(hits[0])
        if t[h, g] != identity:
            raise NotAGroup(f"element {g} has no two-sided inverse", witness=(g,))
        inv[g] = h
    t.setflags(write=False)
    inv.setflags(write=False)
    return FiniteGroup(t, identity, inv, name)


def cyclic_group(n: int) -> FiniteGroup:
    if n < 1:
        raise ValueError("cyclic group needs n >= 1")
    i = np.arange(n)
    return group_from_table((i[:, None] + i[None, :]) % n, identity_hint=0, name=f"Z_{n}")


def dihedral_group(n: int) -> FiniteGroup:
    """D_n of order 2n: elements 0..n-1 are rotations r^k, n..2n-1 reflections s r^k."""
    if n < 2:
        raise ValueError("dihedral group needs n >= 2")
    size = 2 * n
    table = np.empty((size, size), dtype=np.int64)
    # encode s^a r^k as a*n + k;  r^k s = s r^{-k}
    for x, y in product(range(size), repeat=2):
        a, k = divmod(x, n)
        b, l = divmod(y, n)
        sign = -1 if b else 1
        table[x, y] = ((a + b) % 2) * n + (sign * k + l) % n
    return group_from_table(table, identity_hint=0, name=f"D_{n}")


def permutation_action_check(group: FiniteGroup, action) -> np.ndarray:
    """Validate a group action table ``action[g, i] = g.i`` on points 0..k-1."""
    act = np.asarray(action, dtype=np.int64)
    if act.ndim != 2 or act.shape[0] != group.order:
        raise ValueError("action table must have one row per group element")
    k = act.shape[1]
    for g in range(group.order):
        if not np.array_equal(np.sort(act[g]), np.arange(k)):
            raise ValueError(f"action of element {g} is not a permutation")
    if not np.array_equal(act[group.identity], np.arange(k)):
        raise ValueError("identity must act trivially")
    for g, h in product(range(group.order), repeat=2):
        if not np.array_equal(act[group.mul(g, h)], act[g][act[h]]):
            raise ValueError(f"action is not compatible with multiplication at {(g, h)}")
    return act


@dataclass(frozen=True, eq=False)
class GroupFunction:
    """An element of L_1(G): one complex value per group element."""

    group: FiniteGroup
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128).reshape(-1)
        if c.shape[0] != self.group.order:
            raise ValueError(
                f"expected {self.group.order} coefficients, got {c.shape[0]}"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def delta(cls, group, x=None):
        c = np.zeros(group.order, dtype=np.complex128)
        c[group.identity if x is None else x] = 1.0
        return cls(group, c)

    @classmethod
    def constant(cls, group, value=1.0):
        return cls(group, np.full(group.order, value, dtype=np.complex128))

    @classmethod
    def zero(cls, group):
        return cls(group, np.zeros(group.order, dtype=np.complex128))

    def l1_norm(self) -> float:
        return float(np.abs(self.coeffs).sum())

    def _same(self, other):
        if self.group != other.group:
            raise GroupMismatch("functions live on different groups")

    def __add__(self, other):
        self._same(other)
        return GroupFunction(self.group, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._same(other)
        return GroupFunction(self.group, self.coeffs - other.coeffs)

    def __neg__(self):
        return GroupFunction(self.group, -self.coeffs)

    def __mul__(self, scalar):
        return GroupFunction(self.group, self.coeffs * complex(scalar))

    __rmul__ = __mul__

    def __matmul__(self, other):
        return convolve(self, other)

    def allclose(self, other, atol=1e-12):
        return self.group == other.group and np.allclose(self.coeffs, other.coeffs, atol=atol)


def convolve(f: GroupFunction, g: GroupFunction) -> GroupFunction:
    f._same(g)
    G = f.group
    n = G.order
    # (f*g)(x) = sum_y f(y) g(y^-1 x);  with z = y^-1 x we have x = y z
    out = np.zeros(n, dtype=np.complex128)
    np.add.at(out, G.mul_table.reshape(-1), np.outer(f.coeffs, g.coeffs).reshape(-1))
    return GroupFunction(G, out)


def haar_integral(f: GroupFunction) -> complex:
    return complex(f.coeffs.sum())


def random_function(group, rng, real=False, scale=1.0) -> GroupFunction:
    n = group.order
    c = rng.standard_normal(n)
    if not real:
        c = c + 1j * rng.standard_normal(n)
    return GroupFunction(group, scale * c)


def group_spec(group: FiniteGroup) -> dict:
    """Serializable description; named families round-trip by name."""
    name = group.name
    if name.startswith("Z_"):
        return {"family": "cyclic", "n": int(name[2:])}
    if name.startswith("D_"):
        return {"family": "dihedral", "n": int(name[2:])}
    return {"table": group.mul_table.tolist(), "identity": group.identity}


def group_from_spec(spec: dict) -> FiniteGroup:
    if "family" in spec:
        fam = spec["family"]
        if fam == "cyclic":
            return cyclic_group(int(spec["n"]))
        if fam == "dihedral":
            return dihedral_group(int(spec["n"]))
        raise ValueError(f"unknown group family {fam!r}")
    if "table" in spec:
        return group_from_table(spec["table"], spec.get("identity"))
    raise ValueError("group spec needs 'family' or 'table'")
