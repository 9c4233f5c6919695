"""Cross-module invariants over random graphs and paths."""

import numpy as np
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from hetesim.accel import McParams, SubchainCache, TruncationParams, hetesim_dp, hetesim_mc, truncate
from hetesim.engine import hetesim, hetesim_raw, reachable_matrix
from hetesim.metapath import concatenate, reverse
from hetesim.synthetic import random_hin, random_path

seeds = st.integers(0, 2**32 - 1)
lengths = st.integers(1, 5)


def graph_and_path(seed, length, weighted=False):
    g = random_hin(seed, max_types=4, max_nodes=15, weighted=weighted)
    return g, random_path(seed, g.schema, length)


@settings(max_examples=40, deadline=None)
@given(seeds, lengths, st.booleans())
def test_reverse_path_transposes_scores(seed, length, weighted):
    g, p = graph_and_path(seed, length, weighted)
    np.testing.assert_allclose(hetesim(g, p).toarray(), hetesim(g, reverse(p)).toarray().T, rtol=0, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds, lengths)
def test_reachable_rows_are_subdistributions(seed, length):
    # walks that hit a dangling node mid-path lose their mass
    g, p = graph_and_path(seed, length)
    m = reachable_matrix(g, p).matrix
    sums = np.asarray(m.sum(axis=1)).ravel()
    assert m.nnz == 0 or m.data.min() > 0
    assert np.all(sums <= 1 + 1e-12)


@settings(max_examples=30, deadline=None)
@given(seeds, lengths)
def test_raw_scores_bounded_by_one(seed, length):
    g, p = graph_and_path(seed, length)
    raw = hetesim_raw(g, p).toarray()
    assert raw.min() >= 0 and raw.max() <= 1 + 1e-12


@settings(max_examples=30, deadline=None)
@given(seeds, lengths)
def test_dp_matches_exact(seed, length):
    g, p = graph_and_path(seed, length)
    np.testing.assert_allclose(
        hetesim_dp(g, p, cache=SubchainCache()).toarray(), hetesim(g, p).toarray(), rtol=1e-9, atol=1e-14
    )


@settings(max_examples=20, deadline=None)
@given(seeds, lengths, st.integers(0, 1000))
def test_mc_symmetric_under_matched_seed(seed, length, mc_seed):
    g, p = graph_and_path(seed, length)
    params = McParams(K=64, seed=mc_seed)
    fwd = hetesim_mc(g, p, params).toarray()
    back = hetesim_mc(g, reverse(p), params).toarray()
    np.testing.assert_allclose(fwd, back.T, rtol=0, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(1, 3))
def test_symmetric_path_diagonal_is_one(seed, length):
    g, p = graph_and_path(seed, length)
    q = concatenate(p, reverse(p))
    s = hetesim(g, q).toarray()
    alive = np.asarray(reachable_matrix(g, p).matrix.sum(axis=1)).ravel() > 0
    np.testing.assert_allclose(np.diag(s)[alive], 1.0, rtol=0, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 20), st.floats(0.0, 1.0))
def test_truncate_only_removes_entries(seed, W, beta):
    rng = np.random.default_rng(seed)
    m = sp.random(int(rng.integers(1, 30)), int(rng.integers(1, 60)), density=0.5, format="csr", random_state=rng)
    out = truncate(m, TruncationParams(W=W, beta=beta, seed=seed))
    dense_in, dense_out = m.toarray(), out.toarray()
    kept = dense_out != 0
    np.testing.assert_array_equal(dense_out[kept], dense_in[kept])
    assert out.nnz <= m.nnz
