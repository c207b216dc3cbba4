from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bplab.groups import GroupFunction, GroupMismatch, cyclic_group, dihedral_group, haar_integral, random_function
from bplab.opnorm import SolverBudget
from bplab.representation import (
    AmplifiedRep,
    NotARepresentation,
    NotIsometric,
    ShapeMismatch,
    ZeroVector,
    cyclic_matrix_decompose,
    cyclic_subrep,
    direct_sum_rep,
    equivalence_check,
    explicit_rep,
    left_regular,
    lift,
    permutation_rep,
    rep_from_spec,
    trivial_rep,
)
from bplab.spaces import QSLpSpace

groups = st.sampled_from([cyclic_group(2), cyclic_group(3), cyclic_group(4), dihedral_group(3)])
exponents = st.sampled_from([1.5, 2.0, 3.0])
seeds = st.integers(0, 2**32 - 1)
FAST = SolverBudget(starts=8)


def test_left_regular_examples():
    assert np.array_equal(left_regular(cyclic_group(1), 3.0).matrices[0], np.eye(1))
    lam = left_regular(cyclic_group(2), 3.0)
    assert np.array_equal(lam.matrices[1], [[0, 1], [1, 0]])
    L = left_regular(cyclic_group(4), 1.5).matrices[1]
    assert np.array_equal(np.linalg.matrix_power(L, 4), np.eye(4))
    assert not np.array_equal(np.linalg.matrix_power(L, 2), np.eye(4))


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_trivial_rep_examples(p):
    G = dihedral_group(3)
    pi = trivial_rep(G, p)
    f = random_function(G, np.random.default_rng(0))
    M = lift(pi, f).matrix
    assert M.shape == (1, 1) and np.isclose(M[0, 0], haar_integral(f))
    assert lift(pi, f).norm().lower == pytest.approx(abs(haar_integral(f)))


def test_lift_examples():
    G = cyclic_group(2)
    lam = left_regular(G, 3.0)
    assert np.array_equal(lift(lam, GroupFunction.delta(G)).matrix, np.eye(2))
    a, b = 2.0 - 1j, 0.5
    assert np.allclose(lift(lam, GroupFunction(G, [a, b])).matrix, [[a, b], [b, a]])
    with pytest.raises(GroupMismatch):
        lift(lam, GroupFunction.delta(cyclic_group(3)))


def test_bad_matrices_rejected():
    G = cyclic_group(2)
    E = QSLpSpace.plain(2, 3.0)
    with pytest.raises(NotARepresentation):
        explicit_rep(G, E, [np.eye(2), np.diag([1.0, 1j])])  # not a homomorphism
    with pytest.raises(NotIsometric):
        # a homomorphism by reflections that is not an l_3 isometry
        R = np.array([[0.6, 0.8], [0.8, -0.6]])
        explicit_rep(G, E, [np.eye(2), R], budget=FAST)
    # the same reflection is an l_2 isometry
    explicit_rep(G, QSLpSpace.plain(2, 2.0), [np.eye(2), np.array([[0.6, 0.8], [0.8, -0.6]])])


def test_permutation_rep_is_regular_for_the_left_action():
    G = dihedral_group(3)
    pi = permutation_rep(G, G.mul_table, 3.0)
    assert np.array_equal(pi.matrices, left_regular(G, 3.0).matrices)


def test_direct_sum_examples():
    G = cyclic_group(3)
    lam, one = left_regular(G, 3.0), trivial_rep(G, 3.0)
    s = direct_sum_rep([lam, one])
    f = random_function(G, np.random.default_rng(1))
    M = lift(s, f).matrix
    assert np.allclose(M[:3, :3], lift(lam, f).matrix)
    assert np.isclose(M[3, 3], haar_integral(f))
    assert np.allclose(M[:3, 3], 0) and np.allclose(M[3, :3], 0)
    n = lift(s, f).norm(budget=FAST).lower
    assert n == pytest.approx(max(lift(lam, f).norm(budget=FAST).lower, abs(haar_integral(f))), rel=1e-6)
    left = direct_sum_rep([direct_sum_rep([lam, one]), lam])
    right = direct_sum_rep([lam, direct_sum_rep([one, lam])])
    assert lift(left, f).norm(budget=FAST).lower == pytest.approx(lift(right, f).norm(budget=FAST).lower, rel=1e-6)


def test_amplify_examples():
    G = cyclic_group(3)
    lam = left_regular(G, 3.0)
    f = random_function(G, np.random.default_rng(2))
    assert np.allclose(AmplifiedRep(lam, 1)([[f]]), lift(lam, f).matrix)
    z = GroupFunction.zero(G)
    D = AmplifiedRep(lam, 2)([[f, z], [z, f]])
    assert np.allclose(D, np.kron(np.eye(2), lift(lam, f).matrix))
    assert AmplifiedRep(lam, 2).norm([[f, z], [z, f]], budget=FAST).lower == pytest.approx(
        lift(lam, f).norm(budget=FAST).lower, rel=1e-6)
    with pytest.raises(ShapeMismatch):
        AmplifiedRep(lam, 2)([[f]])


def test_amplification_of_sum_is_sum_of_amplifications():
    G = cyclic_group(2)
    lam, one = left_regular(G, 3.0), trivial_rep(G, 3.0)
    rng = np.random.default_rng(3)
    F = rng.standard_normal((2, 2, 2)) + 1j * rng.standard_normal((2, 2, 2))
    big = AmplifiedRep(direct_sum_rep([lam, one]), 2)(F)  # blocks (lam+one) per array entry
    parts = [AmplifiedRep(lam, 2)(F), AmplifiedRep(one, 2)(F)]
    # reindex: array block i holds (lam coords, one coord); group all lam coords first
    perm = [0, 1, 3, 4, 2, 5]
    reordered = big[np.ix_(perm, perm)]
    assert np.allclose(reordered[:4, :4], parts[0]) and np.allclose(reordered[4:, 4:], parts[1])
    assert np.allclose(reordered[:4, 4:], 0)


def test_cyclic_subrep_examples():
    G = cyclic_group(2)
    lam = left_regular(G, 3.0)
    assert cyclic_subrep(lam, [1, 0]).rep.dim == 2
    s = direct_sum_rep([lam, lam])
    v = np.array([1.0, 1.0])
    sub = cyclic_subrep(s, np.concatenate([v, v]))
    assert sub.rep.dim == cyclic_subrep(lam, v).rep.dim == 1
    assert cyclic_subrep(trivial_rep(G, 3.0), [1.0]).rep.dim == 1
    with pytest.raises(ZeroVector):
        cyclic_subrep(lam, [0, 0])


def test_cyclic_subspace_is_invariant():
    G = dihedral_group(3)
    lam = left_regular(G, 3.0)
    xi = np.zeros(6)
    xi[0], xi[3] = 1.0, -1.0
    sub = cyclic_subrep(lam, xi)
    Q = sub.inclusion
    for g in range(G.order):
        assert np.allclose(lam.matrices[g] @ Q, Q @ sub.rep.matrices[g], atol=1e-10)


def test_equivalence_examples():
    G = cyclic_group(2)
    lam = left_regular(G, 3.0)
    assert equivalence_check(lam, lam, np.eye(2), budget=FAST).passed
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert equivalence_check(lam, lam, swap, budget=FAST).passed
    rep = equivalence_check(lam, lam, np.diag([2.0, 1.0]), budget=FAST)
    assert not rep.passed and any("isometry" in f for f in rep.failures)


def test_cyclic_matrix_decompose_examples():
    G = cyclic_group(3)
    lam = left_regular(G, 3.0)
    xi = np.array([1.0, 0.0, 0.0])
    one = cyclic_matrix_decompose(lam, 1, xi)
    assert one.passed and one.details["rank_K"] == cyclic_subrep(lam, xi).rep.dim
    two = cyclic_matrix_decompose(lam, 2, np.concatenate([xi, np.zeros(3)]))
    assert two.passed and two.details["rank_K"] == 6
    rng = np.random.default_rng(4)
    for _ in range(5):
        x = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        assert cyclic_matrix_decompose(lam, 2, x).passed
    with pytest.raises(ZeroVector):
        cyclic_matrix_decompose(lam, 2, np.zeros(6))


def test_spec_round_trip():
    G = dihedral_group(3)
    s = direct_sum_rep([left_regular(G, 3.0), trivial_rep(G, 3.0)])
    sub = cyclic_subrep(s, np.arange(7.0))
    back = rep_from_spec(G, 3.0, sub.rep.spec)
    assert np.allclose(back.matrices, sub.rep.matrices)


@given(groups, exponents)
def test_homomorphism_and_inverse(G, p):
    for pi in (left_regular(G, p), trivial_rep(G, p)):
        M = pi.matrices
        for g in range(G.order):
            for h in range(G.order):
                assert np.allclose(M[g] @ M[h], M[G.mul_table[g, h]], atol=1e-9)
            assert np.allclose(M[g] @ M[G.inverse_table[g]], np.eye(pi.dim), atol=1e-9)


@given(groups, exponents, seeds)
def test_lift_is_contractive_homomorphism(G, p, seed):
    rng = np.random.default_rng(seed)
    lam = left_regular(G, p)
    f, g = random_function(G, rng), random_function(G, rng)
    lhs = lift(lam, f @ g).matrix
    assert np.abs(lhs - lift(lam, f).matrix @ lift(lam, g).matrix).max() <= 1e-9 * (1 + f.l1_norm() * g.l1_norm())
    assert lift(lam, f).norm(budget=FAST).lower <= f.l1_norm() * (1 + 1e-12)


@given(groups, exponents, seeds)
def test_lift_is_linear(G, p, seed):
    rng = np.random.default_rng(seed)
    lam = left_regular(G, p)
    f, g = random_function(G, rng), random_function(G, rng)
    c = complex(*rng.standard_normal(2))
    assert np.allclose(lift(lam, f + c * g).matrix, lift(lam, f).matrix + c * lift(lam, g).matrix)


@given(st.sampled_from([cyclic_group(3), dihedral_group(3)]), st.sampled_from([1.5, 3.0]), seeds)
def test_containment_monotonicity(G, p, seed):
    rng = np.random.default_rng(seed)
    lam = left_regular(G, p)
    xi = rng.standard_normal(G.order)
    sub = cyclic_subrep(lam, xi)
    f = random_function(G, rng)
    small = lift(sub.rep, f).norm(budget=FAST)
    big = lift(lam, f).norm(budget=FAST)
    assert small.lower <= big.upper * (1 + 1e-9) + 1e-12


@given(groups, exponents, seeds)
def test_equivalent_reps_have_equal_lift_norms(G, p, seed):
    rng = np.random.default_rng(seed)
    lam = left_regular(G, p)
    P = np.eye(G.order)[rng.permutation(G.order)]
    conj = explicit_rep(G, lam.space, P[None] @ lam.matrices @ P.T[None], budget=FAST)
    assert equivalence_check(lam, conj, P, n_max=2, budget=FAST).passed
    f = random_function(G, rng)
    a, b = lift(lam, f).norm(budget=FAST), lift(conj, f).norm(budget=FAST)
    assert abs(a.lower - b.lower) <= 2e-6 * max(1.0, a.lower)
