import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bmcnorm.model import build_instance
from bmcnorm.sampler import counts_from_matrix, sample_path_counts
from bmcnorm.trim import TrimPolicy, apply_trim, default_trim_count, trim, trim_set


@pytest.mark.parametrize("n, T, m", [
    (1000, 0, 1000),
    (1000, 1000 * math.log(1000), 1),
    (1000, 1000 * math.log(1000 / 7), 7),
    (10, 10**6, 0),
])
def test_default_trim_count(n, T, m):
    assert default_trim_count(n, T) == m


def test_default_trim_count_figure1_largest_size():
    # floor(n e^{-ln n}) = floor(1) at T = n ln n, even at n = 10000
    assert default_trim_count(10000, 10000 * math.log(10000)) == 1
    assert default_trim_count(10000, 10000 * math.log(10000) + 1) == 0


def in_degree_counts(degrees):
    # one column per state whose sum is the requested in-degree
    n = len(degrees)
    M = np.zeros((n, n), dtype=np.int64)
    M[0] = degrees
    return counts_from_matrix(M, int(sum(degrees)))


def test_trim_set_tie_broken_by_index():
    c = in_degree_counts([5, 9, 9, 1])
    assert trim_set(c, 1).gamma_complement.tolist() == [1]
    assert trim_set(c, 2).gamma_complement.tolist() == [1, 2]
    assert trim_set(c, 3).gamma_complement.tolist() == [0, 1, 2]


def test_trim_set_extremes():
    c = in_degree_counts([5, 9, 9, 1])
    g0 = trim_set(c, 0)
    assert g0.m == 0 and g0.gamma.tolist() == [0, 1, 2, 3]
    gn = trim_set(c, 4)
    assert gn.gamma.tolist() == []
    with pytest.raises(ValueError):
        trim_set(c, 5)


def test_trim_condition_on_degrees(fig1):
    c = sample_path_counts(build_instance(fig1, 200), 2000, seed=1)
    g = trim_set(c, 17)
    assert c.in_degree[g.gamma_complement].min() >= c.in_degree[g.gamma].max()


def test_apply_trim_identity_and_empty(fig1):
    c = sample_path_counts(build_instance(fig1, 40), 400, seed=2)
    same = apply_trim(c, trim_set(c, 0))
    assert (same.counts != c.counts).nnz == 0
    empty = apply_trim(c, trim_set(c, 40))
    assert empty.nnz == 0 and empty.total == 0


@settings(max_examples=20, deadline=None)
@given(st.integers(3, 40), st.integers(1, 800), st.integers(0, 2**32), st.data())
def test_trim_properties(n, T, seed, data):
    from bmcnorm.model import figure1_model
    c = sample_path_counts(build_instance(figure1_model(), n), T, seed)
    m = data.draw(st.integers(0, n))
    g = trim_set(c, m)
    t = apply_trim(c, g)
    dense, tdense = c.toarray(), t.toarray()
    # rows/cols of removed states are zero, the rest are untouched
    keep = g.keep_mask
    assert not tdense[~keep].any() and not tdense[:, ~keep].any()
    np.testing.assert_array_equal(tdense[np.ix_(keep, keep)], dense[np.ix_(keep, keep)])
    np.testing.assert_array_equal(tdense.sum(axis=0), t.in_degree)
    np.testing.assert_array_equal(tdense.sum(axis=1), t.out_degree)
    # idempotence
    assert (apply_trim(t, g).counts != t.counts).nnz == 0
    # projection monotonicity of the top singular value
    s, ts = np.linalg.norm(dense, 2), np.linalg.norm(tdense, 2)
    assert ts <= s * (1 + 1e-12) + 1e-12
    # e_Gamma(A, B) <= e(A, B) for random subset pairs
    rng = np.random.default_rng(seed)
    for _ in range(100):
        A = rng.random(n) < 0.5
        B = rng.random(n) < 0.5
        assert tdense[np.ix_(A, B)].sum() <= dense[np.ix_(A, B)].sum()


def test_trim_does_not_mutate_source(fig1):
    c = sample_path_counts(build_instance(fig1, 30), 300, seed=4)
    before = c.toarray().copy()
    trim(c, TrimPolicy("fixed", 5))
    np.testing.assert_array_equal(c.toarray(), before)


@pytest.mark.parametrize("text, kind, m", [("auto", "auto", 0), ("none", "none", 0), ("m=3", "fixed", 3), (" M=0 ", "fixed", 0)])
def test_policy_parse(text, kind, m):
    p = TrimPolicy.parse(text)
    assert (p.kind, p.m) == (kind, m)
    assert TrimPolicy.parse(str(p)) == p


@pytest.mark.parametrize("text", ["m=-1", "m=x", "all", ""])
def test_policy_parse_rejects(text):
    with pytest.raises(ValueError):
        TrimPolicy.parse(text)


def test_policy_counts():
    assert TrimPolicy("none").count(1000, 0) == 0
    assert TrimPolicy("auto").count(1000, 0) == 1000
    assert TrimPolicy("fixed", 50).count(10, 0) == 10


def test_auto_policy_trims_one_state_at_critical_length(fig1):
    n = 1000
    T = math.floor(n * math.log(n))
    c = sample_path_counts(build_instance(fig1, n), T, seed=0)
    trimmed, g = trim(c, TrimPolicy("auto"))
    assert g.m == 1
    assert c.in_degree[g.gamma_complement[0]] == c.in_degree.max()
    assert trimmed.T == T
