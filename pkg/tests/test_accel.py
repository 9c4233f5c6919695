import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from hetesim.accel import (
    McParams,
    SubchainCache,
    TruncationParams,
    chain_order,
    dynamic_k,
    hetesim_dp,
    hetesim_hybrid,
    hetesim_mc,
    hetesim_truncated,
    mc_estimate_pm,
    multiply_chain,
    truncate,
    truncation_threshold,
)
from hetesim.engine import hetesim, hetesim_raw, reachable_matrix
from hetesim.exceptions import DimensionMismatch
from hetesim.graph import ProbMatrix
from hetesim.metapath import parse_path, reverse
from hetesim.metrics import matrix_recall
from hetesim.synthetic import bench_graph, random_hin, random_path


def brute_force_cost(dims):
    """Minimum scalar-multiplication cost over every parenthesisation."""
    if len(dims) == 1:
        return 0
    best = math.inf
    for s in range(1, len(dims)):
        left, right = dims[:s], dims[s:]
        c = brute_force_cost(left) + brute_force_cost(right) + left[0][0] * left[-1][1] * right[-1][1]
        best = min(best, c)
    return best


def tree_cost(tree, dims):
    if isinstance(tree, int):
        return 0, dims[tree][0], dims[tree][1]
    cl, r, k = tree_cost(tree[0], dims)
    cr, _, c = tree_cost(tree[1], dims)
    return cl + cr + r * k * c, r, c


class TestChainOrder:
    def test_three_matrices(self):
        plan = chain_order([(10, 100), (100, 5), (5, 50)])
        assert plan.cost == 7500
        assert plan.tree == ((0, 1), 2)

    def test_single(self):
        assert chain_order([(4, 7)]).cost == 0

    def test_two(self):
        assert chain_order([(3, 4), (4, 5)]).cost == 60

    def test_mismatch(self):
        with pytest.raises(DimensionMismatch):
            chain_order([(3, 4), (5, 6)])
        with pytest.raises(DimensionMismatch):
            chain_order([])

    def test_random_chains_are_optimal(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            n = int(rng.integers(1, 7))
            p = rng.integers(1, 60, size=n + 1)
            dims = [(int(p[i]), int(p[i + 1])) for i in range(n)]
            plan = chain_order(dims)
            assert plan.cost == brute_force_cost(dims)
            assert tree_cost(plan.tree, dims)[0] == plan.cost
            left_to_right = sum(p[0] * p[i] * p[i + 1] for i in range(1, n))
            assert plan.cost <= left_to_right


class TestMultiplyChain:
    def test_matches_naive_product(self):
        rng = np.random.default_rng(2)
        dims = [40, 7, 60, 3, 30, 50]
        mats = [sp.random(dims[i], dims[i + 1], density=0.3, random_state=int(rng.integers(1 << 30)), format="csr") for i in range(5)]
        plan = chain_order([m.shape for m in mats])
        got = multiply_chain(mats, plan).toarray()
        want = mats[0].toarray()
        for m in mats[1:]:
            want = want @ m.toarray()
        np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-15)

    def test_repeated_subchain_is_reused(self):
        g = bench_graph(0, n_authors=200, n_papers=300, n_terms=200)
        cache = SubchainCache()
        res = hetesim_dp(g, "A-P-C-P-A-P-C-P-A", cache=cache)
        assert cache.hits >= 1
        np.testing.assert_allclose(res.toarray(), hetesim(g, "A-P-C-P-A-P-C-P-A").toarray(), rtol=1e-9, atol=1e-12)

    def test_square_path_shares_half(self, biblio):
        cache = SubchainCache()
        hetesim_dp(biblio, "A-P-A-P-A", cache=cache)
        assert cache.hits >= 1

    def test_lru_bound(self):
        c = SubchainCache(max_entries=2)
        for k in range(3):
            c.put(k, k)
        assert 0 not in c and len(c) == 2

    def test_plan_dimension_check(self):
        plan = chain_order([(2, 3), (3, 4)])
        with pytest.raises(DimensionMismatch):
            multiply_chain([np.ones((2, 3)), np.ones((3, 5))], plan)


class TestDp:
    def test_toy(self, toy):
        np.testing.assert_allclose(hetesim_dp(toy, "A-B-A").toarray(), hetesim(toy, "A-B-A").toarray(), rtol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.booleans())
    def test_lossless(self, seed, length, normalized):
        g = random_hin(seed, max_nodes=20)
        p = random_path(seed, g.schema, length)
        exact = (hetesim if normalized else hetesim_raw)(g, p).toarray()
        dp = hetesim_dp(g, p, normalized=normalized, cache=SubchainCache()).toarray()
        np.testing.assert_allclose(dp, exact, rtol=1e-9, atol=1e-14)


class TestTruncation:
    @pytest.mark.parametrize(
        "L, W, beta, k",
        [(150, 200, 0.5, 150), (200, 200, 0.5, 200), (201, 200, 0.5, 201), (300, 200, 0.5, 210),
         (1200, 200, 0.5, 231), (5000, 200, 0.5, 269), (1000, 200, 0.0, 201), (1000, 200, 1.0, 1000),
         (1000, 10, 0.5, 41), (300, 200, 0.3, 203)],
    )
    def test_dynamic_k(self, L, W, beta, k):
        assert dynamic_k(L, W, beta) == k

    def test_params_validated(self):
        for bad in ({"W": 0}, {"beta": 1.5}, {"gamma": 0.0}, {"gamma": 1.2}):
            with pytest.raises(ValueError):
                TruncationParams(**bad)

    def test_no_op_when_columns_fit(self):
        m = sp.random(30, 50, density=0.5, random_state=1, format="csr")
        out = truncate(m, TruncationParams(W=50))
        np.testing.assert_array_equal(out.toarray(), m.toarray())

    def test_small_sample_selects_exactly(self):
        rng = np.random.default_rng(0)
        values = rng.random(100)
        # gamma * nnz = 5 < 10, so the threshold is the exact keep-th largest value
        eps = truncation_threshold(values, 37, 0.05, rng)
        assert eps == np.sort(values)[::-1][36]

    def test_never_grows(self):
        rng = np.random.default_rng(4)
        m = sp.random(40, 400, density=0.4, random_state=4, format="csr")
        out = truncate(m, TruncationParams(W=20, gamma=0.1), rng)
        assert out.nnz <= m.nnz
        diff = m.toarray() - out.toarray()
        assert diff.min() >= 0
        kept = out.toarray() > 0
        np.testing.assert_array_equal(out.toarray()[kept], m.toarray()[kept])

    def test_keeps_about_k_per_row(self):
        params = TruncationParams(W=200, beta=0.5, gamma=0.005)
        k = dynamic_k(1000, 200, 0.5)
        counts = []
        for seed in range(50):
            rng = np.random.default_rng(seed)
            m = sp.csr_matrix(rng.random((100, 1000)))
            counts.append(truncate(m, params, rng).nnz)
        target = k * 100
        assert abs(np.mean(counts) - target) <= 0.2 * target
        # single runs: 4 sigma of a sample quantile from 500 draws
        q = target / 100_000
        sigma = math.sqrt(q * (1 - q) / 500) / q
        assert all(abs(c - target) <= 4 * sigma * target for c in counts)

    def test_does_not_touch_input(self):
        m = sp.csr_matrix(np.random.default_rng(0).random((10, 500)))
        before = m.toarray().copy()
        pm = ProbMatrix(m, "A", "B", "AB")
        out = truncate(pm, TruncationParams(W=5))
        assert isinstance(out, ProbMatrix)
        np.testing.assert_array_equal(m.toarray(), before)

    def test_equals_exact_when_nothing_is_cut(self, biblio):
        big = TruncationParams(W=1000)
        for path in ("A-P-V-C", "A-P-S-P-A"):
            ex = hetesim(biblio, path).toarray()
            np.testing.assert_allclose(hetesim_truncated(biblio, path, big).toarray(), ex, atol=1e-15)
            np.testing.assert_allclose(hetesim_hybrid(biblio, path, big, cache=SubchainCache()).toarray(), ex, rtol=1e-9, atol=1e-14)

    def test_recall_floor_on_small_graphs(self):
        params = TruncationParams(W=5, beta=0.5, gamma=0.2)
        recalls = []
        for seed in range(10):
            g = random_hin(seed, max_types=3, max_nodes=30, density=(0.2, 0.5))
            p = random_path(seed, g.schema, 4)
            recalls.append(matrix_recall(hetesim(g, p), hetesim_truncated(g, p, params), 100))
        assert np.mean(recalls) >= 0.8

    def test_hybrid_not_less_accurate(self):
        g = bench_graph(1, n_authors=300, n_papers=600, n_terms=500)
        params = TruncationParams(W=20)
        for path in ("A-P-T-P-A", "A-P-T-P-T-P-A"):
            ex = hetesim(g, path)
            tr = matrix_recall(ex, hetesim_truncated(g, path, params))
            hy = matrix_recall(ex, hetesim_hybrid(g, path, params, cache=SubchainCache()))
            assert hy >= tr


class TestMonteCarlo:
    def test_params_validated(self):
        with pytest.raises(ValueError):
            McParams(K=0)

    def test_large_k_converges(self, toy):
        est = mc_estimate_pm(toy, "A-B", McParams(K=100_000, seed=1)).toarray()
        np.testing.assert_allclose(est, reachable_matrix(toy, "A-B").toarray(), atol=0.01)

    def test_huge_k_scores_match_exact(self, toy):
        res = hetesim_mc(toy, "A-B-A", McParams(K=1_000_000, seed=2))
        np.testing.assert_allclose(res.toarray(), hetesim(toy, "A-B-A").toarray(), atol=0.01)

    def test_deterministic_and_thread_independent(self, biblio):
        a = mc_estimate_pm(biblio, "A-P-V-C", McParams(K=300, seed=5)).toarray()
        b = mc_estimate_pm(biblio, "A-P-V-C", McParams(K=300, seed=5), n_jobs=3).toarray()
        np.testing.assert_array_equal(a, b)
        c = mc_estimate_pm(biblio, "A-P-V-C", McParams(K=300, seed=6)).toarray()
        assert not np.array_equal(a, c)

    def test_dangling_source_row_is_empty(self, biblio):
        est = mc_estimate_pm(biblio, "A-P-V", McParams(K=50), sources=["a_idle", "a0"])
        assert est.toarray()[biblio.index_of("a_idle")].sum() == 0
        assert est.toarray()[biblio.index_of("a1")].sum() == 0  # not requested

    def test_entries_are_multiples_of_one_over_k(self, biblio):
        K = 64
        est = mc_estimate_pm(biblio, "A-P-S-P-V", McParams(K=K, seed=3)).toarray()
        np.testing.assert_allclose(est * K, np.round(est * K), atol=1e-9)
        assert np.all(est.sum(axis=1) <= 1 + 1e-12)

    def test_error_shrinks_with_k(self, biblio):
        exact = reachable_matrix(biblio, "A-P-S-P-A").toarray()

        def err(K):
            return np.mean(
                [np.abs(mc_estimate_pm(biblio, "A-P-S-P-A", McParams(K, s)).toarray() - exact).sum(axis=1).mean() for s in range(20)]
            )

        assert err(4000) < err(250)

    def test_symmetry_with_matched_seeds(self, biblio):
        params = McParams(K=500, seed=9)
        for path in ("A-P-V-C", "A-P-S-P-V"):
            fwd = hetesim_mc(biblio, path, params).toarray()
            back = hetesim_mc(biblio, reverse(parse_path(path, biblio.schema)), params).toarray()
            # binomial 3-sigma bound at p = 1/2
            assert np.abs(fwd - back.T).max() <= 3 * math.sqrt(0.25 / params.K)
