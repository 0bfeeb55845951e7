import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bmcnorm.errors import NonFinite
from bmcnorm.model import build_instance, dense_expected_counts, validate_model
from bmcnorm.sampler import sample_path_counts
from bmcnorm.spectral import (
    CenteredOperator,
    dense_singular_values,
    row_lower_bound,
    scaled_spectral_norm,
    spectral_gap_profile,
    top_singular_values,
)
from bmcnorm.trim import TrimPolicy, apply_trim, trim, trim_set

from conftest import random_model


def make_op(model, n, T, seed, m=0):
    inst = build_instance(model, n)
    c = sample_path_counts(inst, T, seed)
    t = apply_trim(c, trim_set(c, m))
    return inst, t, CenteredOperator(t, inst, T)


def test_diagonal_map():
    est = top_singular_values(np.diag([3.0, 2.0, 1.0]), k=2)
    np.testing.assert_allclose(est.values, [3.0, 2.0], rtol=1e-12)
    assert est.converged


def test_rank_one_map():
    u = np.array([2.0, 0.0, 0.0, 0.0])
    v = np.array([0.0, 3.0, 4.0, 0.0])
    est = top_singular_values(np.outer(u, v), k=2)
    assert est.values[0] == pytest.approx(10.0, rel=1e-12)
    assert abs(est.values[1]) <= 1e-10


def test_zero_map():
    est = top_singular_values(np.zeros((6, 6)), k=3)
    assert est.values.tolist() == [0.0, 0.0, 0.0]


@pytest.mark.parametrize("shape, k", [((80, 80), 5), ((60, 45), 4), ((200, 200), 5)])
def test_random_dense_against_svd(shape, k):
    A = np.random.default_rng(0).standard_normal(shape)
    est = top_singular_values(A, k)
    want = dense_singular_values(A)[:k]
    np.testing.assert_allclose(est.values, want, rtol=1e-8)
    assert np.all(np.diff(est.values) <= 0)
    assert est.converged and np.all(est.residuals <= 1e-8)


def test_rejects_non_finite():
    A = np.eye(5)
    A[2, 2] = np.nan
    with pytest.raises(NonFinite):
        top_singular_values(A, 1)


def test_rejects_bad_k():
    with pytest.raises(ValueError):
        top_singular_values(np.eye(3), 4)


def test_unconverged_values_still_returned():
    A = np.random.default_rng(3).standard_normal((300, 300))
    est = top_singular_values(A, 5, tol=1e-14, max_iter=1, ncv=12)
    assert not est.converged
    assert est.values.shape == (5,)
    assert est.iterations == 1


def test_solver_reproducible(fig1):
    _, _, op = make_op(fig1, 300, 3000, seed=1)
    a = top_singular_values(op, 3, seed=5).values
    b = top_singular_values(op, 3, seed=5).values
    assert a.tobytes() == b.tobytes()


@pytest.mark.parametrize("n", [50, 150])
def test_centered_operator_matches_dense(fig1, n):
    T = int(n * math.log(n))
    inst, counts, op = make_op(fig1, n, T, seed=n)
    D = counts.toarray() - dense_expected_counts(inst, T)
    np.testing.assert_allclose(op.dense(), D, atol=1e-12 * T)
    rng = np.random.default_rng(0)
    for _ in range(20):
        v = rng.standard_normal(n)
        assert np.linalg.norm(op.matvec(v) - D @ v) <= 1e-12 * np.linalg.norm(D @ v)
        assert np.linalg.norm(op.rmatvec(v) - D.T @ v) <= 1e-12 * np.linalg.norm(D.T @ v)
    X = rng.standard_normal((n, 3))
    np.testing.assert_allclose(op.matmat(X), D @ X, atol=1e-10)


def test_centered_operator_zero_and_total_mass(fig1):
    inst, counts, op = make_op(fig1, 60, 1000, seed=3)
    assert not op.matvec(np.zeros(60)).any()
    ones = np.ones(60)
    assert abs(ones @ op.matvec(ones)) <= 1e-9 * 1000


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1), st.integers(20, 120), st.integers(0, 3000))
def test_operator_adjoint_consistency(K, seed, n, T):
    model = random_model(np.random.default_rng(seed), K)
    inst, counts, op = make_op(model, n, T, seed, m=seed % 3)
    rng = np.random.default_rng(seed + 1)
    u, v = rng.standard_normal(n), rng.standard_normal(n)
    lhs, rhs = u @ op.matvec(v), op.rmatvec(u) @ v
    assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), abs(rhs), 1e-300) + 1e-12


@settings(max_examples=10, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1), st.integers(20, 200), st.integers(1, 5000))
def test_solver_matches_dense_on_centered(K, seed, n, T):
    model = random_model(np.random.default_rng(seed), K)
    inst, counts, op = make_op(model, n, T, seed)
    k = 5
    est = top_singular_values(op, k, seed=seed)
    want = dense_singular_values(op.dense())[:k]
    np.testing.assert_allclose(est.values, want, rtol=1e-8, atol=1e-10 * want[0])
    assert est.values[0] <= op.norm_upper_bound() * (1 + 1e-12)


def test_upper_bound_matches_dense(fig1):
    inst, counts, op = make_op(fig1, 120, 900, seed=8, m=2)
    D = op.dense()
    np.testing.assert_allclose(op.abs_row_sums(), np.abs(D).sum(axis=1), rtol=1e-12)
    np.testing.assert_allclose(op.abs_col_sums(), np.abs(D).sum(axis=0), rtol=1e-12)
    bound = math.sqrt(np.abs(D).sum(axis=0).max() * np.abs(D).sum(axis=1).max())
    assert op.norm_upper_bound() == pytest.approx(bound, rel=1e-12)


def test_weyl_perturbation(fig1):
    inst, counts, op = make_op(fig1, 90, 2000, seed=6, m=1)
    s_hat = dense_singular_values(counts.toarray())
    s_exp = dense_singular_values(dense_expected_counts(inst, 2000))
    gap = dense_singular_values(op.dense())[0]
    assert np.all(np.abs(s_hat - s_exp) <= gap + 1e-8)


def test_scaled_norm_single_state():
    inst = build_instance(validate_model([1.0], [[1.0]]), 1)
    c = sample_path_counts(inst, 40, seed=0)
    assert scaled_spectral_norm(c, inst, 40) == 0.0


def test_scaled_norm_definition(fig1):
    inst, counts, op = make_op(fig1, 100, 700, seed=2)
    want = math.sqrt(100 / 700) * dense_singular_values(op.dense())[0]
    assert scaled_spectral_norm(counts, inst, 700) == pytest.approx(want, rel=1e-8)


def test_row_lower_bound(fig1):
    inst = build_instance(validate_model([1.0], [[1.0]]), 1)
    assert row_lower_bound(sample_path_counts(inst, 9, 0), inst, 9) == 0.0
    for seed in range(5):
        inst, counts, op = make_op(fig1, 80, 600, seed)
        D = op.dense()
        assert row_lower_bound(counts, inst, 600) == pytest.approx(np.linalg.norm(D[0]), rel=1e-12)
        assert row_lower_bound(counts, inst, 600) <= top_singular_values(op, 1).values[0] + 1e-8


def test_gap_profile_matches_dense(fig1):
    inst, counts, op = make_op(fig1, 60, 5000, seed=1, m=2)
    prof = spectral_gap_profile(counts, inst, k=6)
    np.testing.assert_allclose(prof, dense_singular_values(counts.toarray())[:6], rtol=1e-8)


def test_gap_profile_empty_and_bad_k(fig1):
    inst, counts, op = make_op(fig1, 30, 300, seed=0)
    empty = apply_trim(counts, trim_set(counts, 30))
    assert not spectral_gap_profile(empty, inst).any()
    with pytest.raises(ValueError):
        spectral_gap_profile(counts, inst, k=3)


def test_gap_profile_dense_regime(fig1):
    # well inside the dense regime the K block values separate from the bulk
    n, T = 200, 200_000
    inst = build_instance(fig1, n)
    for seed in range(3):
        counts, _ = trim(sample_path_counts(inst, T, seed), TrimPolicy("auto"))
        s = spectral_gap_profile(counts, inst)
        assert s[2] / s[3] >= 3
        assert 0.1 <= s[2] * n / T <= 10


def test_scaled_norm_close_to_published_point(fig1):
    # n = 2000, T = round(n sqrt(ln n)): published mean 2.50103 +- 0.0453
    from bmcnorm.experiments import trajectory_length
    n = 2000
    T = trajectory_length(n, 0.5)
    inst = build_instance(fig1, n)
    vals = [scaled_spectral_norm(sample_path_counts(inst, T, s), inst, T) for s in range(8)]
    assert abs(np.mean(vals) - 2.50103) <= 0.3
