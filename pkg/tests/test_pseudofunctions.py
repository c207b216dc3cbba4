from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bplab.checks import Verdict
from bplab.groups import GroupFunction, GroupMismatch, cyclic_group, dihedral_group, random_function
from bplab.opnorm import SolverBudget
from bplab.pseudofunctions import (
    axiom_check_dinf,
    axiom_check_mp,
    build_universal_family,
    matrix_pf_norm,
    null_ideal,
    pf_norm,
    pf_norm_sup_cyclic,
    pi_isometry_gap,
    random_probe,
    restriction_pcb_check,
    universal_independence_check,
    amplified_isometry_check,
)
from bplab.representation import ShapeMismatch, cyclic_subrep, direct_sum_rep, left_regular, trivial_rep

FAST = SolverBudget(starts=8)
seeds = st.integers(0, 2**32 - 1)


def _arr(rng, G, n):
    return rng.standard_normal((n, n, G.order)) + 1j * rng.standard_normal((n, n, G.order))


def test_pf_norm_examples():
    G = cyclic_group(2)
    for p in (1.5, 3.0):
        assert pf_norm(left_regular(G, p), GroupFunction.delta(G)).lower == pytest.approx(1.0)
    assert pf_norm(left_regular(G, 2.0), GroupFunction(G, [1, 1])).lower == pytest.approx(2.0)
    assert pf_norm(trivial_rep(G, 3.0), GroupFunction(G, [1, -1])).upper == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(GroupMismatch):
        pf_norm(left_regular(G, 3.0), GroupFunction.delta(cyclic_group(3)))


def test_null_ideal_examples():
    assert null_ideal(left_regular(dihedral_group(3), 3.0)).shape[0] == 0
    N = null_ideal(trivial_rep(cyclic_group(2), 3.0))
    assert N.shape[0] == 1
    v = N[0] / N[0][0]
    assert np.allclose(v, [1, -1])


def test_null_ideal_is_an_ideal():
    G = dihedral_group(3)
    pi = direct_sum_rep([trivial_rep(G, 3.0), cyclic_subrep(left_regular(G, 3.0), [1, 1, 1, -1, -1, -1]).rep])
    N = null_ideal(pi)
    assert N.shape[0] == G.order - 2
    rng = np.random.default_rng(0)
    for row in N:
        f = GroupFunction(G, row)
        g = random_function(G, rng)
        for h in (f @ g, g @ f):
            coef, *_ = np.linalg.lstsq(N.T, h.coeffs, rcond=None)
            assert np.abs(N.T @ coef - h.coeffs).max() <= 1e-9


def test_matrix_pf_norm_examples():
    G = cyclic_group(3)
    lam = left_regular(G, 2.5)
    rng = np.random.default_rng(1)
    f, g = random_function(G, rng), random_function(G, rng)
    assert matrix_pf_norm(lam, [[f]]).lower == pytest.approx(pf_norm(lam, f).lower)
    z = GroupFunction.zero(G)
    d = matrix_pf_norm(lam, [[f, z], [z, g]], budget=FAST).lower
    assert d == pytest.approx(max(pf_norm(lam, f).lower, pf_norm(lam, g).lower), rel=1e-6)
    with pytest.raises(ShapeMismatch):
        matrix_pf_norm(lam, np.zeros((2, 3, 3)))


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
def test_matrix_norm_below_entrywise_sum(p):
    # ||[x_ij]|| <= (sum ||x_ij||^r)^(1/r) with r = min(p, p'); r = p when p <= 2
    G = cyclic_group(2)
    lam = left_regular(G, p)
    r = min(p, p / (p - 1))
    rng = np.random.default_rng(int(p * 10))
    for _ in range(5):
        F = _arr(rng, G, 2)
        whole = matrix_pf_norm(lam, F, budget=FAST)
        parts = [pf_norm(lam, GroupFunction(G, F[i, j])).upper for i in range(2) for j in range(2)]
        assert whole.lower <= (np.array(parts) ** r).sum() ** (1 / r) + 1e-8


def test_entrywise_p_sum_fails_above_two():
    # all-identity 2x2 array: the block operator is the ones matrix tensor I, norm 2
    G = cyclic_group(2)
    lam = left_regular(G, 3.0)
    e = GroupFunction.delta(G)
    est = matrix_pf_norm(lam, [[e, e], [e, e]])
    assert est.lower == pytest.approx(2.0)
    assert est.lower > 4 ** (1 / 3.0)


def test_dinf_examples():
    G = cyclic_group(3)
    lam = left_regular(G, 2.5)
    e = GroupFunction.delta(G)
    r = axiom_check_dinf(lam, [[e]], [[e]])
    assert r.verdict == Verdict.PASS and r.lhs == pytest.approx(1.0)
    rng = np.random.default_rng(2)
    f, g = random_function(G, rng), random_function(G, rng)
    assert axiom_check_dinf(lam, [[f]], [[g]]).verdict == Verdict.PASS
    r = axiom_check_dinf(lam, np.zeros((1, 1, 3)), [[g]])
    assert r.verdict == Verdict.PASS and r.lhs == pytest.approx(pf_norm(lam, g).lower, rel=1e-6)


def test_mp_examples():
    G = cyclic_group(4)
    lam = left_regular(G, 1.5)
    rng = np.random.default_rng(3)
    U = _arr(rng, G, 2)
    r = axiom_check_mp(lam, U, np.eye(2), np.eye(2), budget=FAST)
    assert r.verdict == Verdict.PASS and r.lhs == pytest.approx(r.rhs, rel=1e-6)
    alpha, beta = np.array([[1.0, 0.0]]), np.array([[1.0], [0.0]])
    r = axiom_check_mp(lam, U, alpha, beta, budget=FAST)
    assert r.verdict == Verdict.PASS
    assert r.lhs == pytest.approx(pf_norm(lam, GroupFunction(G, U[0, 0])).lower, rel=1e-6)
    with pytest.raises(ShapeMismatch):
        axiom_check_mp(lam, U, np.eye(3), np.eye(2))


def test_mp_random_instances():
    G = cyclic_group(4)
    lam = left_regular(G, 1.5)
    rng = np.random.default_rng(4)
    for _ in range(20):
        m, n = rng.integers(1, 3, size=2)
        U = _arr(rng, G, m)
        alpha = rng.standard_normal((n, m))
        beta = rng.standard_normal((m, n))
        r = axiom_check_mp(lam, U, alpha, beta, budget=FAST)
        assert r.verdict != Verdict.FAIL
        assert r.lhs <= r.rhs + 5e-5 * max(1.0, r.rhs)


def test_family_identity_probe():
    G = cyclic_group(3)
    lam = left_regular(G, 3.0)
    fam = build_universal_family(lam, [GroupFunction.delta(G)], 2)
    assert fam.norm(GroupFunction.delta(G)).lower == pytest.approx(1.0)


def test_family_z2_p2():
    G = cyclic_group(2)
    f = GroupFunction(G, [1, 1])
    fam = build_universal_family(left_regular(G, 2.0), [f], 3)
    assert fam.norm(f).lower == pytest.approx(2.0)


@pytest.mark.parametrize("m", [1, 2, 4])
def test_family_construction_bound(m):
    G = dihedral_group(3)
    lam = left_regular(G, 3.0)
    g = random_probe(G, 5, "t", m)
    fam = build_universal_family(lam, [g], m)
    for pc in fam.pieces:
        assert pc.value > pc.threshold
        assert np.isclose(lam.space.norms(pc.xi), 1.0)
    assert fam.norm(g).lower > pf_norm(lam, g).lower - 1 / m


def test_gap_examples():
    G = cyclic_group(3)
    lam = left_regular(G, 3.0)
    probes = [random_probe(G, 1, "gap", k) for k in range(2)]
    fam = build_universal_family(lam, probes, 4)
    for r in pi_isometry_gap(fam, probes):
        assert r.verdict == Verdict.PASS and -5e-5 <= r.details["gap"] < 1 / 4 + 1e-3
    other = [random_probe(G, 2, "other", k) for k in range(3)]
    for r in pi_isometry_gap(fam, other):
        assert r.verdict == Verdict.PASS and r.details["gap"] >= -5e-5
    triv = build_universal_family(trivial_rep(G, 3.0), probes, 2)
    for r in pi_isometry_gap(triv, probes + other):
        assert abs(r.details["gap"]) <= 1e-12


def test_amplified_examples():
    G = cyclic_group(2)
    lam = left_regular(G, 2.0)
    probes = [random_probe(G, 3, "amp", k) for k in range(2)]
    fam = build_universal_family(lam, probes, 4)
    assert amplified_isometry_check(fam, [[probes[0]]]).details["gap"] == pytest.approx(
        pi_isometry_gap(fam, probes[:1])[0].details["gap"], abs=1e-9)
    z = GroupFunction.zero(G)
    r = amplified_isometry_check(fam, [[probes[0], z], [z, probes[1]]])
    assert r.verdict == Verdict.PASS and r.details["gap"] <= 1 / 4 + 1e-3
    rng = np.random.default_rng(5)
    for _ in range(3):
        r = amplified_isometry_check(fam, _arr(rng, G, 2), adequate=False, budget=FAST)
        assert r.verdict == Verdict.PASS


def test_restriction_examples():
    G = cyclic_group(4)
    lam = left_regular(G, 3.0)
    sub = cyclic_subrep(lam, [1.0, 1.0, 0.0, 0.0])
    (r,) = restriction_pcb_check(lam, sub, [[[GroupFunction.delta(G)]]])
    assert r.lhs == pytest.approx(1.0) and r.rhs == pytest.approx(1.0)
    rng = np.random.default_rng(6)
    arrays = [_arr(rng, G, n) for n in (1, 2, 2)]
    assert all(r.verdict == Verdict.PASS for r in restriction_pcb_check(lam, sub, arrays, budget=FAST))
    whole = cyclic_subrep(lam, [1.0, 0.0, 0.0, 0.0])
    for r in restriction_pcb_check(lam, whole, arrays[:2], budget=FAST):
        assert r.lhs == pytest.approx(r.rhs, rel=1e-6)


def test_independence_examples():
    G = cyclic_group(2)
    lam = left_regular(G, 3.0)
    probes = [random_probe(G, 7, "ind", k) for k in range(2)]
    A = build_universal_family(lam, probes, 3)
    rng = np.random.default_rng(7)
    arrays = [_arr(rng, G, 1), _arr(rng, G, 2)]
    B = A.permuted(list(reversed(range(len(A.blocks)))))
    for r in universal_independence_check(A, B, arrays, budget=FAST):
        assert r.verdict == Verdict.PASS and r.lhs == pytest.approx(r.rhs, rel=1e-9)
    C = A.with_blocks([cyclic_subrep(lam, [1.0, 1.0])])
    for r in universal_independence_check(A, C, arrays, budget=FAST):
        assert r.verdict != Verdict.FAIL
    deep = [build_universal_family(lam, [random_probe(G, 8, "d", k)], 16) for k in range(2)]
    for r in universal_independence_check(deep[0], deep[1], arrays, budget=FAST):
        assert abs(r.lhs - r.rhs) <= (2 / 16 + 5e-5) * max(1.0, r.lhs)


@given(st.sampled_from([1.5, 3.0]), seeds)
def test_coset_invariance(p, seed):
    G = cyclic_group(3)
    rng = np.random.default_rng(seed)
    pi = direct_sum_rep([trivial_rep(G, p), trivial_rep(G, p)])
    f = random_function(G, rng)
    N = null_ideal(pi)
    g = GroupFunction(G, rng.standard_normal(N.shape[0]) @ N)
    assert abs(pf_norm(pi, f + g).lower - pf_norm(pi, f).lower) <= 1e-8


@given(st.sampled_from([cyclic_group(3), dihedral_group(3)]), st.sampled_from([1.5, 3.0]), seeds)
def test_sup_over_cyclic_subreps(G, p, seed):
    rng = np.random.default_rng(seed)
    lam = left_regular(G, p)
    f = random_function(G, rng)
    whole = pf_norm(lam, f, budget=FAST)
    vectors = np.vstack([np.eye(G.order), whole.witness[None, :]])
    sup = pf_norm_sup_cyclic(lam, f, vectors, budget=FAST)
    assert abs(sup.lower - whole.lower) <= 5e-5 * max(1.0, whole.lower)


@given(st.sampled_from([1.5, 3.0]), seeds)
def test_family_never_exceeds_base(p, seed):
    G = dihedral_group(3)
    lam = left_regular(G, p)
    fam = build_universal_family(lam, [random_probe(G, seed % 1000, "fam")], 2, budget=FAST)
    f = random_function(G, np.random.default_rng(seed))
    assert fam.norm(f, budget=FAST).lower <= pf_norm(lam, f, budget=FAST).upper + 5e-5
