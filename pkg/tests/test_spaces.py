from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bplab.spaces import (
    DualVector,
    ExponentMismatch,
    QSLpSpace,
    SpaceMismatch,
    SpaceVector,
    amplify_space,
    conjugate_exponent,
    direct_sum_space,
    dual_norm,
    dual_pair,
    norming_functional,
    vector_norm,
)

exponents = st.sampled_from([1.25, 1.5, 2.0, 3.0, 4.5])


def _cvec(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def test_plain_norm_examples():
    assert np.isclose(vector_norm(SpaceVector(QSLpSpace.plain(2, 2.0), [3, 4])), 5.0)
    assert np.isclose(vector_norm(SpaceVector(QSLpSpace.plain(2, 3.0), [1, 1])), 2 ** (1 / 3))


def test_quotient_norm_matches_grid():
    E = QSLpSpace(2, 2.0, np.eye(2), [[1.0], [0.0]])
    v = SpaceVector.from_subspace_coords(E, [5.0, 2.0])
    # oracle: min_t ||(5 + t, 2)||_2 on a fine grid
    t = np.linspace(-10, 10, 200_001)
    grid = np.sqrt((5 + t) ** 2 + 4).min()
    assert np.isclose(grid, 2.0, atol=1e-9)
    assert abs(vector_norm(v) - 2.0) <= 1e-9


@pytest.mark.parametrize("p", [1.5, 3.0])
def test_quotient_norm_one_dimensional_null_brute_force(p):
    rng = np.random.default_rng(int(10 * p))
    for m in (2, 3):
        for _ in range(5):
            n = rng.standard_normal(m)
            E = QSLpSpace(m, p, np.eye(m), n[:, None])
            a = rng.standard_normal(m)
            v = SpaceVector.from_subspace_coords(E, a)
            t = np.linspace(-20, 20, 400_001)
            vals = (np.abs(a[None, :] + t[:, None] * n[None, :]) ** p).sum(axis=1) ** (1 / p)
            assert abs(vector_norm(v) - vals.min()) <= 1e-6


def test_null_basis_outside_subspace_rejected():
    with pytest.raises(ValueError):
        QSLpSpace(3, 2.0, np.eye(3)[:, :2], [[0.0], [0.0], [1.0]])


def test_p_domain():
    for p in (1.0, np.inf, 0.5):
        with pytest.raises(ValueError):
            QSLpSpace.plain(2, p)


def test_direct_sum_examples():
    E = direct_sum_space([QSLpSpace.plain(1, 2.0), QSLpSpace.plain(1, 2.0)])
    assert E.is_plain and E.dim == 2
    F = direct_sum_space([QSLpSpace.plain(2, 3.0)] * 2)
    assert np.isclose(vector_norm(SpaceVector(F, [1, 0, 0, 1])), 2 ** (1 / 3))
    with pytest.raises(ExponentMismatch):
        direct_sum_space([QSLpSpace.plain(1, 2.0), QSLpSpace.plain(1, 3.0)])


def test_amplify_examples():
    E = QSLpSpace.plain(2, 2.5)
    assert amplify_space(E, 1) is E
    assert amplify_space(E, 3).dim == 6


def test_dual_pair_examples():
    E = QSLpSpace.plain(2, 3.0)
    assert dual_pair(SpaceVector(E, [1, 0]), DualVector(E, [1, 0])) == 1
    with pytest.raises(SpaceMismatch):
        dual_pair(SpaceVector(E, [1, 0]), DualVector(QSLpSpace.plain(2, 2.0), [1, 0]))


def test_dual_pair_constant_on_cosets():
    E = QSLpSpace(3, 1.5, np.eye(3), [[1.0], [1.0], [0.0]])
    w = DualVector(E, [1.0, -1.0, 2.0])
    a = SpaceVector.from_subspace_coords(E, [1.0, 2.0, 3.0])
    b = SpaceVector.from_subspace_coords(E, [1.0 + 7.0, 2.0 + 7.0, 3.0])
    assert np.isclose(dual_pair(a, w), dual_pair(b, w))


def test_dual_vector_must_annihilate_null():
    E = QSLpSpace(2, 2.0, np.eye(2), [[1.0], [0.0]])
    with pytest.raises(ValueError):
        DualVector(E, [1.0, 0.0])


def test_conjugate_exponent():
    assert conjugate_exponent(2.0) == 2.0
    assert np.isclose(1 / 3.0 + 1 / conjugate_exponent(3.0), 1.0)


@given(exponents, st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_plain_norm_closed_form(p, n, seed):
    x = _cvec(np.random.default_rng(seed), n)
    assert np.isclose(vector_norm(SpaceVector(QSLpSpace.plain(n, p), x)), (np.abs(x) ** p).sum() ** (1 / p),
                      rtol=1e-12)


@given(exponents, st.integers(0, 2**32 - 1))
def test_holder(p, seed):
    rng = np.random.default_rng(seed)
    E = QSLpSpace(3, p, np.eye(3), rng.standard_normal((3, 1)))
    v = SpaceVector(E, _cvec(rng, 2))
    w = norming_functional(SpaceVector(E, _cvec(rng, 2)))
    assert abs(dual_pair(v, w)) <= vector_norm(v) * dual_norm(w) * (1 + 1e-7) + 1e-9


@given(exponents, st.integers(0, 2**32 - 1))
def test_norming_functional_attains(p, seed):
    rng = np.random.default_rng(seed)
    E = QSLpSpace(3, p, np.eye(3), rng.standard_normal((3, 1)))
    v = SpaceVector(E, _cvec(rng, 2))
    w = norming_functional(v)
    assert dual_norm(w) <= 1 + 1e-7
    assert np.isclose(dual_pair(v, w).real, vector_norm(v), rtol=1e-6)


@given(exponents, st.integers(0, 2**32 - 1))
def test_direct_sum_additivity(p, seed):
    rng = np.random.default_rng(seed)
    E1 = QSLpSpace(3, p, np.eye(3), rng.standard_normal((3, 1)))
    E2 = QSLpSpace.plain(2, p)
    x, y = _cvec(rng, 2), _cvec(rng, 2)
    S = direct_sum_space([E1, E2])
    lhs = vector_norm(SpaceVector(S, np.concatenate([x, y]))) ** p
    rhs = vector_norm(SpaceVector(E1, x)) ** p + vector_norm(SpaceVector(E2, y)) ** p
    assert np.isclose(lhs, rhs, rtol=1e-7)


@given(exponents, st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_amplification_commutes_with_sums(p, n, seed):
    rng = np.random.default_rng(seed)
    E1, E2 = QSLpSpace.plain(2, p), QSLpSpace.plain(1, p)
    A = amplify_space(direct_sum_space([E1, E2]), n)
    B = direct_sum_space([amplify_space(E1, n), amplify_space(E2, n)])
    x = _cvec(rng, 3 * n)
    blocks = x.reshape(n, 3)
    y = np.concatenate([blocks[:, :2].reshape(-1), blocks[:, 2:].reshape(-1)])
    assert np.isclose(vector_norm(SpaceVector(A, x)), vector_norm(SpaceVector(B, y)), rtol=1e-12)


@given(exponents, st.integers(0, 2**32 - 1))
def test_dual_of_sum_is_sum_of_duals(p, seed):
    rng = np.random.default_rng(seed)
    E = direct_sum_space([QSLpSpace.plain(2, p)] * 2)
    w = _cvec(rng, 4)
    q = conjugate_exponent(p)
    expected = (np.linalg.norm(w[:2], q) ** q + np.linalg.norm(w[2:], q) ** q) ** (1 / q)
    assert np.isclose(dual_norm(DualVector(E, w)), expected, rtol=1e-9)
