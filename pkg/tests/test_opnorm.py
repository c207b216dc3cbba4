from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bplab.opnorm import (
    DimensionTooLarge,
    SolverBudget,
    directsum_opnorm,
    evaluate_witness,
    mixed_scalar_norm,
    opnorm,
    opnorm_boyd,
    opnorm_bruteforce,
    riesz_thorin_upper,
)
from bplab.spaces import ExponentMismatch, QSLpSpace, SpaceVector, vector_norm

ps = [1.5, 2.0, 2.5, 3.0]
seeds = st.integers(0, 2**32 - 1)
exponents = st.sampled_from([1.5, 2.5, 3.0])


def _cmat(rng, n, m=None):
    m = n if m is None else m
    return rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))


def _ok(est):
    assert est.lower <= est.upper + 1e-12


@pytest.mark.parametrize("p", ps)
def test_identity_and_diagonal(p):
    E = QSLpSpace.plain(3, p)
    assert np.isclose(opnorm(np.eye(3), E).lower, 1.0, atol=1e-12)
    F = QSLpSpace.plain(2, p)
    est = opnorm(np.diag([2.0, 1.0]), F)
    assert np.isclose(est.lower, 2.0) and np.isclose(est.upper, 2.0)


@pytest.mark.parametrize("p", ps)
def test_ones_matrix(p):
    E = QSLpSpace.plain(2, p)
    est = opnorm(np.ones((2, 2)), E)
    _ok(est)
    assert abs(est.lower - 2.0) <= 1e-8
    x = np.full(2, 2 ** (-1 / p))
    assert np.isclose(evaluate_witness(np.ones((2, 2)), E, witness=x), 2.0)


def test_bruteforce_examples():
    rng = np.random.default_rng(1)
    E2 = QSLpSpace.plain(2, 2.0)
    for _ in range(5):
        A = _cmat(rng, 2)
        assert abs(opnorm_bruteforce(A, E2, resolution=400).lower - np.linalg.norm(A, 2)) <= 1e-4
    # p = 1 is outside the space type, so compare on the scalar solver
    for _ in range(5):
        A = _cmat(rng, 2)
        assert abs(mixed_scalar_norm(A, 1.0, 1.0).lower - np.abs(A).sum(axis=0).max()) <= 1e-4
    E3 = QSLpSpace.plain(2, 3.0)
    assert abs(opnorm_bruteforce(np.ones((2, 2)), E3, resolution=400).lower - 2.0) <= 1e-4


def test_bruteforce_dimension_limit():
    with pytest.raises(DimensionTooLarge):
        opnorm_bruteforce(np.ones((5, 5)), QSLpSpace.plain(5, 3.0))


@pytest.mark.parametrize("p", [1.5, 2.5, 3.0])
@pytest.mark.parametrize("n", [2, 3])
def test_boyd_matches_bruteforce(p, n):
    rng = np.random.default_rng(int(100 * p) + n)
    E = QSLpSpace.plain(n, p)
    for _ in range(50):
        A = _cmat(rng, n)
        b = opnorm_boyd(A, E, starts=32, seed=0).lower
        g = opnorm_bruteforce(A, E, resolution=400, max_points=20_000).lower
        assert abs(b - g) <= 1e-6 * max(1.0, g)


def test_boyd_permutation_exact():
    P = np.eye(3)[[2, 0, 1]]
    est = opnorm_boyd(P, QSLpSpace.plain(3, 3.0), starts=4, seed=0)
    assert est.lower == pytest.approx(1.0, abs=1e-12)


def test_boyd_nonnegative_single_start():
    rng = np.random.default_rng(7)
    E = QSLpSpace.plain(3, 2.5)
    for _ in range(10):
        A = rng.random((3, 3))
        one = opnorm_boyd(A, E, starts=1, seed=0, extra_starts=np.ones((1, 3))).lower
        grid = opnorm_bruteforce(A, E, resolution=400, max_points=20_000).lower
        assert abs(one - grid) <= 1e-6 * grid


def test_boyd_deterministic():
    A = _cmat(np.random.default_rng(3), 3)
    E = QSLpSpace.plain(3, 3.0)
    a = opnorm_boyd(A, E, starts=8, seed=5)
    b = opnorm_boyd(A, E, starts=8, seed=5)
    assert a.lower == b.lower and np.array_equal(a.witness, b.witness)


def test_riesz_thorin_examples():
    assert riesz_thorin_upper(np.eye(3), 3.0) == pytest.approx(1.0)
    assert riesz_thorin_upper(np.diag([2.0, 1.0]), 1.5) == pytest.approx(2.0)
    assert riesz_thorin_upper(np.ones((2, 2)), 3.0) == pytest.approx(2.0)


def test_directsum_examples():
    E = QSLpSpace.plain(1, 3.0)
    est = directsum_opnorm([(np.array([[2.0]]), E), (np.array([[3.0]]), E)])
    assert est.lower == pytest.approx(3.0)
    A = np.array([[1.0, 2.0], [0.5, -1.0]])
    F = QSLpSpace.plain(2, 3.0)
    assert directsum_opnorm([(A, F)]).lower == pytest.approx(opnorm(A, F).lower)
    with pytest.raises(ExponentMismatch):
        directsum_opnorm([(A, F), (A, QSLpSpace.plain(2, 2.0))])


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_directsum_matches_assembled(p):
    rng = np.random.default_rng(int(p * 10))
    for _ in range(5):
        A, B = _cmat(rng, 2), _cmat(rng, 1)
        blocks = [(A, QSLpSpace.plain(2, p)), (B, QSLpSpace.plain(1, p))]
        big = np.zeros((3, 3), np.complex128)
        big[:2, :2], big[2:, 2:] = A, B
        whole = opnorm_bruteforce(big, QSLpSpace.plain(3, p), resolution=60, max_points=20_000,
                                  budget=SolverBudget(polish=12))
        assert abs(directsum_opnorm(blocks).lower - whole.lower) <= 1e-6 * max(1.0, whole.lower)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
@pytest.mark.parametrize("m", [2, 3, 4])
def test_mixed_scalar_examples(p, m):
    q = p / (p - 1)
    row = mixed_scalar_norm(np.ones((1, m)), p, p)
    assert abs(row.lower - m ** (1 / q)) <= 1e-8
    col = mixed_scalar_norm(np.ones((m, 1)), p, p)
    assert abs(col.lower - m ** (1 / p)) <= 1e-10
    assert mixed_scalar_norm(np.eye(m), p, p).lower == pytest.approx(1.0)


def test_quotient_domain():
    # the operator (x1, x2) -> x2 kills the null direction (1, 0): quotient norm of the class
    E = QSLpSpace(2, 3.0, np.eye(2), [[1.0], [0.0]])
    assert E.dim == 1
    est = opnorm(np.array([[1.0]]), E)
    assert est.lower == pytest.approx(1.0)


@given(exponents, st.integers(2, 3), seeds)
def test_witness_reproduces_lower(p, n, seed):
    A = _cmat(np.random.default_rng(seed), n)
    E = QSLpSpace.plain(n, p)
    est = opnorm(A, E, budget=SolverBudget(starts=8))
    _ok(est)
    w = SpaceVector(E, est.witness)
    ratio = vector_norm(SpaceVector(E, A @ est.witness)) / vector_norm(w)
    assert abs(ratio - est.lower) <= 1e-10 * max(1.0, est.lower)


@given(exponents, seeds)
def test_certified_upper_is_above_grid(p, seed):
    A = _cmat(np.random.default_rng(seed), 2)
    E = QSLpSpace.plain(2, p)
    est = opnorm_boyd(A, E, starts=8)
    grid = opnorm_bruteforce(A, E, resolution=200)
    assert grid.lower <= est.certified_upper * (1 + 1e-12)
    assert est.lower <= grid.certified_upper * (1 + 1e-12)


@given(exponents, seeds)
def test_submultiplicative(p, seed):
    rng = np.random.default_rng(seed)
    A, B = _cmat(rng, 3), _cmat(rng, 3)
    E = QSLpSpace.plain(3, p)
    b = SolverBudget(starts=8)
    assert opnorm(A @ B, E, budget=b).lower <= opnorm(A, E, budget=b).upper * opnorm(B, E, budget=b).upper + 1e-8


@given(exponents, seeds)
def test_permutation_invariance(p, seed):
    rng = np.random.default_rng(seed)
    A = _cmat(rng, 3)
    P = np.eye(3)[rng.permutation(3)]
    E = QSLpSpace.plain(3, p)
    b = SolverBudget(starts=16)
    assert abs(opnorm(P @ A @ P.T, E, budget=b).lower - opnorm(A, E, budget=b).lower) <= 1e-9 * max(
        1.0, opnorm(A, E, budget=b).lower)


@given(exponents, seeds)
def test_subspace_restriction_never_increases(p, seed):
    rng = np.random.default_rng(seed)
    A = _cmat(rng, 2)
    E = QSLpSpace.plain(2, p)
    full = opnorm(A, E)
    # restrict to the line spanned by a vector: the estimate is one ratio
    v = _cmat(rng, 2, 1)[:, 0]
    ratio = vector_norm(SpaceVector(E, A @ v)) / vector_norm(SpaceVector(E, v))
    assert ratio <= full.upper * (1 + 1e-12)
