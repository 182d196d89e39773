import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tensorgap.ensembles import sample_haar, sample_permutation_complement
from tensorgap.krylov import lanczos_top
from tensorgap.linalg import ShapeError, UnitaryTuple
from tensorgap.superop import (
    BimultiplicationOperator,
    NormEstimate,
    SolverParams,
    apply,
    apply_adjoint,
    dense_norm_oracle,
    min_norm,
    tracial_witness,
)

from conftest import random_unitary

I2 = np.eye(2, dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)


def op(a, b):
    return BimultiplicationOperator(a, b)


def small_pair(seed, n, na, nb):
    return sample_haar(n, na, seed), sample_haar(n, nb, seed + 7919)


# --- apply / adjoint ------------------------------------------------------


def test_apply_identity():
    t = UnitaryTuple((np.eye(3),))
    x = np.arange(9).reshape(3, 3) * (1 + 1j)
    np.testing.assert_allclose(apply(op(t, t), x), x)
    np.testing.assert_allclose(apply_adjoint(op(t, t), x), x)


def test_apply_same_tuple_fixes_identity():
    u = sample_haar(4, 6, 1)
    np.testing.assert_allclose(apply(op(u, u), np.eye(6)), 4 * np.eye(6), atol=1e-12)


def test_apply_single_term(rng):
    u, v = sample_haar(1, 3, 1), sample_haar(1, 5, 2)
    x = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
    np.testing.assert_allclose(apply(op(u, v), x), u[0] @ x @ v[0].conj().T, atol=1e-13)
    np.testing.assert_allclose(apply_adjoint(op(u, v), x), u[0].conj().T @ x @ v[0], atol=1e-13)


def test_apply_matches_kronecker(rng):
    # vec(X) row-major, xi (x) eta <-> xi eta^T
    u, v = small_pair(3, 3, 4, 5)
    x = rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5))
    k = sum(np.kron(a, b.conj()) for a, b in zip(u, v))
    np.testing.assert_allclose(apply(op(u, v), x).ravel(), k @ x.ravel(), atol=1e-12)


def test_adjoint_identity(rng):
    u, v = small_pair(5, 3, 4, 6)
    o = op(u, v)
    for _ in range(5):
        x = rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6))
        y = rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6))
        lhs = np.vdot(y, apply(o, x))
        rhs = np.vdot(apply_adjoint(o, y), x)
        assert abs(lhs - rhs) < 1e-10


def test_shape_errors():
    u, v = sample_haar(2, 3, 1), sample_haar(3, 3, 1)
    with pytest.raises(ShapeError):
        op(u, v)
    o = op(u, sample_haar(2, 4, 1))
    with pytest.raises(ShapeError):
        apply(o, np.zeros((4, 3)))
    with pytest.raises(ShapeError):
        tracial_witness(u, sample_haar(2, 4, 1))


# --- min_norm -------------------------------------------------------------


@pytest.mark.parametrize("n,dim", [(1, 3), (2, 4), (3, 5), (5, 8), (4, 20)])
def test_diagonal_value_is_n(n, dim):
    u = sample_haar(n, dim, n * 100 + dim)
    est = min_norm(op(u, u))
    assert est.converged
    assert abs(est.value - n) < 1e-8


def test_exact_cancellation():
    a = UnitaryTuple((I2, I2))
    b = UnitaryTuple((I2, -I2))
    est = min_norm(op(a, b))
    assert est.converged and est.value < 1e-9


def test_single_term_is_isometry():
    est = min_norm(op(sample_haar(1, 7, 1), sample_haar(1, 4, 2)))
    assert abs(est.value - 1) < 1e-10


def test_dense_oracle_trivial():
    u = sample_haar(3, 2, 4)
    assert abs(dense_norm_oracle(op(u, u)) - 3) < 1e-10
    assert abs(dense_norm_oracle(op(sample_haar(1, 3, 1), sample_haar(1, 2, 2))) - 1) < 1e-12
    with pytest.raises(ValueError):
        dense_norm_oracle(op(sample_haar(1, 65, 1), sample_haar(1, 64, 1)))


def test_oracle_agreement_fifty_instances():
    rng = np.random.default_rng(77)
    worst = 0.0
    for c in range(50):
        n = int(rng.integers(1, 4))
        na, nb = (int(x) for x in rng.integers(2, 7, size=2))
        o = op(sample_haar(n, na, 2 * c), sample_permutation_complement(n, nb, 2 * c + 1)
               if c % 2 else sample_haar(n, nb, 2 * c + 1))
        est = min_norm(o)
        assert est.converged
        worst = max(worst, abs(est.value - dense_norm_oracle(o)))
    assert worst <= 1e-8


def test_unconverged_is_reported():
    # the n = 2 spectrum is a dense arc near the top; a tiny budget cannot resolve it
    u, v = small_pair(1, 2, 30, 30)
    est = min_norm(op(u, v), tol=1e-12, max_iter=20, n_restarts=2)
    assert not est.converged
    assert est.iterations <= 40
    assert 0 < est.value <= 2 + 1e-8
    assert est.residual > 1e-12


def test_norm_estimate_json():
    est = NormEstimate(1.5, 1e-10, 42, 3, True)
    obj = json.loads(est.to_json())
    assert obj == {"value": 1.5, "residual": 1e-10, "iterations": 42, "restarts": 3, "converged": True}
    assert NormEstimate.from_dict(obj) == est


def test_solver_params_validation():
    with pytest.raises(ValueError):
        SolverParams(tol=0)
    with pytest.raises(ValueError):
        SolverParams(n_restarts=0)


def test_lanczos_against_eigh(rng):
    m = rng.standard_normal((40, 40)) + 1j * rng.standard_normal((40, 40))
    a = m.conj().T @ m
    res = lanczos_top(lambda x: a @ x, rng.standard_normal(40) + 0j, tol=1e-12, basis_size=10, keep=4)
    assert res.converged
    assert abs(res.value - np.linalg.eigvalsh(a)[-1]) < 1e-9 * res.value


def test_deterministic():
    u, v = small_pair(2, 3, 6, 6)
    assert min_norm(op(u, v), seed=5) == min_norm(op(u, v), seed=5)


# --- invariances (small instances, hypothesis-driven seeds) ----------------

dims = st.integers(2, 5)
ns = st.integers(1, 3)
seeds = st.integers(0, 2**31)


@settings(max_examples=15, deadline=None)
@given(seed=seeds, n=ns, na=dims, nb=dims)
def test_flip_symmetry(seed, n, na, nb):
    u, v = sample_haar(n, na, seed), sample_haar(n, nb, seed + 1)
    assert abs(min_norm(op(u, v)).value - min_norm(op(v, u)).value) < 1e-8


@settings(max_examples=15, deadline=None)
@given(seed=seeds, n=ns, na=dims, nb=dims)
def test_conjugation_invariance(seed, n, na, nb):
    u, v = sample_haar(n, na, seed), sample_haar(n, nb, seed + 1)
    uc, vc = u.map(np.conj), v.map(np.conj)
    assert abs(min_norm(op(u, v)).value - min_norm(op(uc, vc)).value) < 1e-8


@settings(max_examples=15, deadline=None)
@given(seed=seeds, n=ns, na=dims)
def test_unitary_invariance(seed, n, na):
    u, v = sample_haar(n, na, seed), sample_haar(n, na, seed + 1)
    w1, w2 = random_unitary(na, seed + 2), random_unitary(na, seed + 3)
    moved = u.map(lambda a: w1 @ a @ w2)
    assert abs(min_norm(op(u, v)).value - min_norm(op(moved, v)).value) < 1e-8


@settings(max_examples=15, deadline=None)
@given(seed=seeds, n=st.integers(1, 6), na=dims)
def test_upper_bound_and_witness(seed, n, na):
    u, v = sample_haar(n, na, seed), sample_permutation_complement(n, na, seed)
    val = min_norm(op(u, v)).value
    assert val <= n + 1e-8
    assert tracial_witness(u, v) <= val + 1e-8


# --- tracial witness --------------------------------------------------------


def test_witness_diagonal_exact():
    u = sample_haar(5, 9, 3)
    assert abs(tracial_witness(u, u) - 5) < 1e-12


def test_witness_cancels():
    assert tracial_witness(UnitaryTuple((I2,)), UnitaryTuple((Z,))) == 0


def test_witness_is_phi_at_identity():
    u, v = sample_haar(3, 6, 1), sample_haar(3, 6, 2)
    xi = np.eye(6) / np.sqrt(6)
    val = abs(np.vdot(xi, apply(op(u, v), xi)))
    assert abs(tracial_witness(u, v) - val) < 1e-12
