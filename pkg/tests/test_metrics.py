import itertools
import math

import numpy as np
import pytest
import scipy.optimize
import scipy.sparse
from scipy.sparse.csgraph import maximum_bipartite_matching
from hypothesis import given, settings
from hypothesis import strategies as st

from isoclouds.errors import IncomparableInputError, InvalidInputError
from isoclouds.geometry import apply_isometry, random_isometry
from isoclouds.invariants import build_ocd, build_ord, build_osd, build_scd, mirror, permutation_parity
from isoclouds.metrics import (
    _perfect_small,
    bottleneck,
    bottleneck_from_costs,
    chebyshev_costs,
    cost_matrix,
    distribution_distance,
    emd,
    lac,
    linf,
    m_inf,
    m_inf_ocd,
    m_inf_ord,
    osd_distance,
    scd_distance,
)
from isoclouds.strength import lipschitz_constant


def brute_bottleneck(costs):
    k = costs.shape[0]
    return min(max(costs[i, p[i]] for i in range(k)) for p in itertools.permutations(range(k)))


def brute_lac(costs):
    k = costs.shape[0]
    return min(sum(costs[i, p[i]] for i in range(k)) for p in itertools.permutations(range(k))) / k


def lp_emd(wx, wy, costs):
    k, l = costs.shape
    a_eq = np.zeros((k + l, k * l))
    for i in range(k):
        a_eq[i, i * l:(i + 1) * l] = 1
    for j in range(l):
        a_eq[k + j, j::l] = 1
    res = scipy.optimize.linprog(costs.ravel(), A_eq=a_eq, b_eq=np.concatenate([wx, wy]), bounds=(0, None),
                                 method="highs")
    assert res.status == 0
    return res.fun


def brute_m_inf(x, y):
    """M-inf from the raw fields: every free basis permutation, every column bijection."""
    h = x.h
    full = x.basis_dist + x.basis_dist.T
    dy = y.basis_dist[np.triu_indices(h, 1)]
    py = np.column_stack([y.rel_dists, y.strengths])
    fixed = tuple(range(h - x.n_fixed, h))
    best = math.inf
    for head in itertools.permutations(range(h - x.n_fixed)):
        perm = list(head) + list(fixed)
        par = permutation_parity(perm)
        dx = full[np.ix_(perm, perm)][np.triu_indices(h, 1)]
        px = np.column_stack([x.rel_dists[:, perm], par * x.strengths])
        w = brute_bottleneck(np.abs(px[:, None, :] - py[None, :, :]).max(axis=-1)) if len(px) else 0.0
        best = min(best, max(np.max(np.abs(dx - dy), initial=0.0), w))
    return best


def random_cloud(rng, m, n):
    return rng.normal(size=(m, n))


class TestLinf:
    def test_equal(self):
        a = np.arange(6.0).reshape(2, 3)
        assert linf(a, a) == 0.0

    def test_single_entry(self):
        assert linf([4.0], [3.0]) == 1.0

    def test_picks_largest(self):
        assert linf([[1, 2], [3, 4]], [[1, 2.5], [0, 4]]) == 3.0

    def test_shape_mismatch(self):
        with pytest.raises(InvalidInputError):
            linf([1, 2], [1, 2, 3])


class TestBottleneck:
    def test_equal_sets(self):
        a = np.array([[0.0, 0.0], [1.0, 2.0], [3.0, 1.0]])
        assert bottleneck(a, a[::-1]) == 0.0

    def test_two_points(self):
        assert bottleneck([[0, 0], [1, 0]], [[0, 0], [1, 0.5]]) == 0.5

    def test_empty(self):
        assert bottleneck(np.zeros((0, 2)), np.zeros((0, 2))) == 0.0

    def test_size_mismatch(self):
        with pytest.raises(InvalidInputError):
            bottleneck([[0, 0]], [[0, 0], [1, 1]])

    def test_non_square_costs(self):
        with pytest.raises(InvalidInputError):
            bottleneck_from_costs(np.zeros((2, 3)))

    def test_cutoff_returns_inf_when_no_improvement(self):
        c = np.array([[1.0, 5.0], [5.0, 1.0]])
        assert bottleneck_from_costs(c, cutoff=1.0) == math.inf
        assert bottleneck_from_costs(c, cutoff=2.0) == 1.0

    @pytest.mark.parametrize("k", range(1, 8))
    def test_matches_factorial_oracle(self, rng, k):
        for _ in range(10):
            a, b = rng.normal(size=(k, 3)), rng.normal(size=(k, 3))
            c = chebyshev_costs(a, b)
            assert bottleneck(a, b) == brute_bottleneck(c)

    def test_small_matcher_agrees_with_scipy(self, rng):
        for _ in range(200):
            k = int(rng.integers(1, 10))
            allowed = rng.random((k, k)) < rng.uniform(0.1, 0.6)
            fast = _perfect_small(allowed)
            slow = bool(np.all(maximum_bipartite_matching(scipy.sparse.csr_matrix(allowed), perm_type="column") >= 0))
            brute = any(all(allowed[i, p[i]] for i in range(k)) for p in itertools.permutations(range(k)))
            assert fast == slow == brute

    def test_large_instance_is_tight(self, rng):
        # above the small-matcher size: the value is feasible and the next smaller entry is not
        a, b = rng.normal(size=(30, 2)), rng.normal(size=(30, 2))
        c = chebyshev_costs(a, b)
        v = bottleneck_from_costs(c)
        below = np.max(c[c < v], initial=-1.0)
        _, cols = scipy.optimize.linear_sum_assignment(c > v)
        assert np.all(c[np.arange(30), cols] <= v)
        _, cols = scipy.optimize.linear_sum_assignment(c > below)
        assert np.any(c[np.arange(30), cols] > below)

    def test_ties_in_costs(self, rng):
        for _ in range(30):
            c = rng.integers(0, 3, size=(5, 5)).astype(float)
            assert bottleneck_from_costs(c) == brute_bottleneck(c)


class TestLac:
    def test_zero_diagonal(self):
        assert lac([[0, 1], [1, 0]]) == 0.0

    def test_two_by_two(self):
        assert lac([[1, 2], [3, 4]]) == 2.5

    def test_single(self):
        assert lac([[7.5]]) == 7.5

    def test_non_square(self):
        with pytest.raises(InvalidInputError):
            lac(np.zeros((2, 3)))

    @pytest.mark.parametrize("k", range(1, 8))
    def test_matches_factorial_oracle(self, rng, k):
        for _ in range(10):
            c = rng.random((k, k))
            assert lac(c) == pytest.approx(brute_lac(c), abs=1e-12)


class TestEmd:
    def test_identical_sets(self):
        assert emd([0.5, 0.5], [0.5, 0.5], [[0, 1], [1, 0]]) == 0.0

    def test_one_to_two(self):
        assert emd([1], [0.5, 0.5], [[2.0, 6.0]]) == pytest.approx(4.0)

    def test_flow_is_feasible(self, rng):
        wx = np.array([0.2, 0.3, 0.5])
        wy = np.array([0.25, 0.75])
        c = rng.random((3, 2))
        value, flow = emd(wx, wy, c, return_flow=True)
        f = np.array(flow, dtype=float)
        np.testing.assert_allclose(f.sum(axis=1), wx)
        np.testing.assert_allclose(f.sum(axis=0), wy)
        assert value == pytest.approx(float((f * c).sum()))

    def test_weight_sum_checked(self):
        with pytest.raises(InvalidInputError):
            emd([0.5, 0.4], [1.0], [[1.0], [1.0]])

    def test_negative_cost_rejected(self):
        with pytest.raises(InvalidInputError):
            emd([1.0], [1.0], [[-1.0]])

    def test_shape_checked(self):
        with pytest.raises(InvalidInputError):
            emd([1.0], [1.0], [[1.0, 2.0]])

    @pytest.mark.parametrize("k,l", [(1, 1), (2, 3), (3, 2), (4, 4), (1, 4)])
    def test_matches_lp(self, rng, k, l):
        for _ in range(20):
            wx = rng.random(k) + 0.05
            wy = rng.random(l) + 0.05
            wx, wy = wx / wx.sum(), wy / wy.sum()
            c = rng.random((k, l))
            assert emd(wx, wy, c) == pytest.approx(lp_emd(wx, wy, c), abs=1e-9)

    def test_reduces_to_lac_on_uniform_weights(self, rng):
        c = rng.random((5, 5))
        assert emd([0.2] * 5, [0.2] * 5, c) == pytest.approx(lac(c), abs=1e-12)


class TestMInf:
    def test_self_distance(self, T):
        x = build_ord(T, [0, 1])
        assert m_inf_ord(x, x) == 0.0

    def test_chiral_triangle(self, R, R_bar):
        # only the strength coordinate differs, by 2 * sigma / c_2 with sigma = 1/6
        x, y = build_ord(R, [0, 1]), build_ord(R_bar, [0, 1])
        assert m_inf_ord(x, y) == pytest.approx(2 * (1 / 6) / lipschitz_constant(2), abs=1e-12)

    def test_chiral_triangle_centred(self, R, R_bar):
        x, y = build_ocd(R, [1], anchor=0), build_ocd(R_bar, [1], anchor=0)
        assert m_inf_ocd(x, y) == pytest.approx(2 * (1 / 6) / lipschitz_constant(2), abs=1e-12)

    def test_symmetric(self, T, K):
        x, y = build_ord(T, [0, 1]), build_ord(K, [0, 1])
        assert m_inf(x, y) == m_inf(y, x)

    def test_incomparable(self, T, R):
        with pytest.raises(IncomparableInputError):
            m_inf(build_ord(T, [0, 1]), build_ord(R, [0, 1]))
        with pytest.raises(IncomparableInputError):
            m_inf(build_ord(T, [0, 1]), build_ocd(T, [0]))

    def test_table_rows_against_oracle(self, T, K):
        for bt, bk in zip(itertools.combinations(range(4), 2), itertools.combinations(range(4), 2)):
            x, y = build_ord(T, bt), build_ord(K, bk)
            assert m_inf(x, y) == pytest.approx(brute_m_inf(x, y), abs=1e-12)

    @pytest.mark.parametrize("n", [2, 3])
    def test_random_ord_against_oracle(self, rng, n):
        for _ in range(15):
            m = int(rng.integers(n + 1, n + 5))
            a, b = random_cloud(rng, m, n), random_cloud(rng, m, n)
            x, y = build_ord(a, range(n)), build_ord(b, range(n))
            assert m_inf(x, y) == pytest.approx(brute_m_inf(x, y), abs=1e-12)

    @pytest.mark.parametrize("n", [2, 3])
    def test_random_ocd_against_oracle(self, rng, n):
        for _ in range(15):
            m = int(rng.integers(n, n + 4))
            a, b = random_cloud(rng, m, n), random_cloud(rng, m, n)
            x, y = build_ocd(a, range(n - 1)), build_ocd(b, range(n - 1))
            assert m_inf(x, y) == pytest.approx(brute_m_inf(x, y), abs=1e-12)

    def test_cost_matrix(self, T, K):
        xs = build_osd(T).items
        ys = build_osd(K).items
        c = cost_matrix(xs, ys)
        assert c.shape == (len(xs), len(ys))
        assert c[1, 2] == m_inf(xs[1], ys[2])


class TestOsdDistance:
    @pytest.mark.parametrize("method", ["lac", "emd"])
    def test_rigid_motion_gives_zero(self, rng, method):
        c = random_cloud(rng, 5, 2)
        moved = apply_isometry(c, random_isometry(2, "preserve", seed=3))
        assert osd_distance(c, moved, method) <= 1e-9

    @pytest.mark.parametrize("method", ["lac", "emd"])
    def test_t_and_k_distinguished(self, T, K, method):
        assert osd_distance(T, K, method) > 1e-3
        assert osd_distance(T, K, method, mode="isometry") > 1e-3

    @pytest.mark.parametrize("method", ["lac", "emd"])
    def test_reflection(self, R, R_bar, method):
        assert osd_distance(R, R_bar, method, mode="rigid") > 1e-3
        assert osd_distance(R, R_bar, method, mode="isometry") == 0.0

    def test_mirror_coherence(self, rng):
        c = random_cloud(rng, 6, 3)
        reflected = c * np.array([-1.0, 1.0, 1.0])
        assert osd_distance(c, reflected, mode="isometry") == 0.0
        assert distribution_distance(mirror(build_osd(c)), build_osd(reflected)) == 0.0

    def test_incomparable(self, T, R):
        with pytest.raises(IncomparableInputError):
            osd_distance(T, R)
        with pytest.raises(IncomparableInputError):
            distribution_distance(build_osd(T), build_scd(T))

    def test_bad_method_and_mode(self, T, K):
        with pytest.raises(InvalidInputError):
            osd_distance(T, K, method="bottleneck")
        with pytest.raises(InvalidInputError):
            osd_distance(T, K, mode="affine")

    def test_emd_never_exceeds_lac(self, rng):
        for _ in range(10):
            a, b = random_cloud(rng, 5, 2), random_cloud(rng, 5, 2)
            assert osd_distance(a, b, "emd") <= osd_distance(a, b, "lac") + 1e-12


class TestScdDistance:
    def test_rotated_square(self, S):
        rot = apply_isometry(S, random_isometry(2, "preserve", seed=11))
        assert scd_distance(S, rot) <= 1e-9
        assert scd_distance(S, rot, method="lac") <= 1e-9

    def test_reflection_with_anchor(self, R, R_bar):
        assert scd_distance(R, R_bar, anchor=0) > 1e-3
        assert scd_distance(R, R_bar, anchor=0, mode="isometry") == 0.0

    def test_separate_anchors(self, R):
        shifted = R[[1, 2, 0]]
        assert scd_distance(R, shifted, anchor=0, anchor_b=2) <= 1e-12

    @pytest.mark.parametrize("eps", [1e-3, 1e-2])
    def test_perturbation_bound(self, rng, eps):
        for _ in range(10):
            c = random_cloud(rng, 5, 2)
            noise = rng.uniform(-1, 1, size=c.shape)
            noise *= eps * rng.random((5, 1)) / np.linalg.norm(noise, axis=1, keepdims=True)
            for method in ("lac", "emd"):
                assert scd_distance(c, c + noise, method) <= 2 * eps + 1e-9
                assert osd_distance(c, c + noise, method) <= 2 * eps + 1e-9


class TestMetricAxioms:
    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), n=st.sampled_from([2, 3]), method=st.sampled_from(["lac", "emd"]))
    def test_symmetry_and_triangle(self, seed, n, method):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(n + 1, n + 3))
        a, b, c = (random_cloud(rng, m, n) for _ in range(3))
        ab, ba = osd_distance(a, b, method), osd_distance(b, a, method)
        bc, ac = osd_distance(b, c, method), osd_distance(a, c, method)
        assert ab >= 0
        assert abs(ab - ba) <= 1e-9
        assert ac <= ab + bc + 1e-9
