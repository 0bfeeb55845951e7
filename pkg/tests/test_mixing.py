import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bmcnorm.diagnostics import (
    absolute_spectral_gap,
    cluster_distance_profile,
    exact_distance_profile,
    geometric_bound,
    mixing_report,
    mixing_time,
    pseudo_spectral_gap,
)
from bmcnorm.errors import DenseTooLarge
from bmcnorm.model import build_instance, dense_transition_matrix, validate_model

from conftest import random_model


def test_single_cluster_mixes_in_one_step():
    inst = build_instance(validate_model([1.0], [[1.0]]), 8)
    d = exact_distance_profile(inst, 5)
    assert d[0] == pytest.approx(1 - 1 / 8)
    assert np.all(np.abs(d[1:]) <= 1e-15)
    assert pseudo_spectral_gap(inst) == pytest.approx(1.0, abs=1e-12)


def test_distance_profile_by_brute_force(fig1):
    inst = build_instance(fig1, 12)
    P = dense_transition_matrix(inst)
    d = exact_distance_profile(inst, 6)
    for t in range(7):
        Pt = np.linalg.matrix_power(P, t)
        want = max(0.5 * sum(abs(Pt[x, y] - inst.Pi[y]) for y in range(12)) for x in range(12))
        assert d[t] == pytest.approx(want, abs=1e-14)


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1), st.integers(0, 30))
def test_profile_monotone_and_two_routes_agree(K, seed, extra):
    inst = build_instance(random_model(np.random.default_rng(seed), K), 5 * K + extra)
    d = exact_distance_profile(inst, 25)
    assert d[0] <= 1
    assert np.all(np.diff(d) <= 1e-12)
    assert np.max(np.abs(cluster_distance_profile(inst, 25) - d)) <= 1e-12


def test_figure1_mixing(fig1_30):
    rep = mixing_report(fig1_30, t_max=50)
    d = rep.d_values
    assert np.all(np.diff(d) <= 1e-12)
    assert np.all(d <= geometric_bound(rep.eta, 50) + 1e-12)
    assert rep.geometric_bound_ok
    assert rep.gamma_ps >= 1 / (2 * (1 + 4 * rep.eta))
    for eps in (0.5, 0.25):
        assert rep.gamma_ps >= (1 - eps) / rep.t_mix[eps / 2]


def test_mixing_time():
    d = np.array([1.0, 0.6, 0.3, 0.1, 0.05])
    assert mixing_time(d, 0.5) == 2
    assert mixing_time(d, 0.1) == 3
    assert mixing_time(d, 1.0) == 0
    assert mixing_time(d, 0.01) is None


def test_geometric_bound_values():
    np.testing.assert_allclose(geometric_bound(2.5, 3), [1, 0.8, 0.64, 0.512])


def test_pseudo_spectral_gap_by_eigenvalues(fig1):
    # independent route: eigenvalues of the multiplicative reversibilization
    inst = build_instance(fig1, 15)
    P = dense_transition_matrix(inst)
    Pi = inst.Pi
    Pstar = (P * Pi[:, None]).T / Pi[:, None]
    best = 0.0
    for i in range(1, 40):
        Pi_i = np.linalg.matrix_power(P, i)
        Ps_i = np.linalg.matrix_power(Pstar, i)
        lam = np.sort(np.linalg.eigvals(Ps_i @ Pi_i).real)[::-1]
        best = max(best, (1 - lam[1]) / i)
    assert pseudo_spectral_gap(inst) == pytest.approx(best, abs=1e-10)


def test_pseudo_spectral_gap_reversible():
    # symmetric p with uniform alpha gives a reversible chain
    p = np.array([[0.5, 0.3, 0.2], [0.3, 0.4, 0.3], [0.2, 0.3, 0.5]])
    inst = build_instance(validate_model([1 / 3] * 3, p), 30)
    P = dense_transition_matrix(inst)
    assert np.allclose(P, P.T)
    gamma_ps = pseudo_spectral_gap(inst, i_max=1)
    assert gamma_ps >= absolute_spectral_gap(inst) - 1e-12
    lam = np.sort(np.linalg.eigvalsh(P))[::-1]
    # p here has no eigenvalue near -1, so the classical gap is the absolute one
    assert gamma_ps >= 1 - lam[1] - 1e-12


def test_dense_limits(fig1):
    inst = build_instance(fig1, 40)
    with pytest.raises(DenseTooLarge):
        exact_distance_profile(inst, 3, limit=30)
    with pytest.raises(DenseTooLarge):
        pseudo_spectral_gap(inst, limit=30)


def test_report_contains_half_epsilons(fig1_30):
    rep = mixing_report(fig1_30, t_max=10, epsilons=(0.5,))
    assert set(rep.t_mix) == {0.5, 0.25}
