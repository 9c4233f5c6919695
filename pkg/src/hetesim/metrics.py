"""Evaluation metrics over ranked lists and labelings.

Ranked lists are sequences of ``(id, score)`` pairs in rank order; label
maps are plain ``dict`` objects from id to label.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .exceptions import DegenerateLabels, IdSetMismatch, MissingLabel

__all__ = ["rank_items", "auc", "nmi", "recall_at_k", "avg_rank_difference", "matrix_recall"]

NMI_NORMALIZATION = "arithmetic"
# Scores agreeing to this many decimals rank as ties (broken by id), so
# reassociation noise cannot reorder otherwise equal results.
TIE_DECIMALS = 12


def rank_items(scores: Mapping[str, float] | Sequence) -> list:
    """Sort ``(id, score)`` pairs by descending score, ties by ascending id."""
    items = scores.items() if isinstance(scores, Mapping) else scores
    return sorted(((str(i), float(s)) for i, s in items), key=lambda x: (-x[1], x[0]))


def auc(ranked: Sequence, labels: Mapping, positive, top_n: int | None = 100) -> float:
    """Area under the ROC curve of a ranked list.

    An item is relevant when its label equals ``positive``.  Only the first
    ``top_n`` items are scored (all of them if ``None``).  Tied scores count
    half, as in the Mann-Whitney statistic.

    Raises
    ------
    MissingLabel
        A ranked id has no label.
    DegenerateLabels
        The scored items are all relevant or all irrelevant.
    """
    items = list(ranked)[:top_n] if top_n is not None else list(ranked)
    truth = []
    for nid, _ in items:
        if nid not in labels:
            raise MissingLabel(f"no label for {nid!r}")
        truth.append(labels[nid] == positive)
    truth = np.asarray(truth, dtype=bool)
    n_pos = int(truth.sum())
    n_neg = len(truth) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels("AUC needs at least one positive and one negative item")
    scores = np.asarray([s for _, s in items], dtype=np.float64)
    ranks = rankdata(scores)  # ascending, ties share their mid-rank
    return float((ranks[truth].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def _entropy(counts) -> float:
    n = sum(counts)
    return -sum(c / n * math.log(c / n) for c in counts if c)


def nmi(clustering: Mapping, truth: Mapping) -> float:
    """Mutual information normalised by the mean of the two entropies.

    Two constant labelings count as identical (1.0); a constant labeling
    against a non-constant one scores 0.
    """
    if set(clustering) != set(truth):
        raise IdSetMismatch("clustering and truth cover different ids")
    ids = list(clustering)
    n = len(ids)
    if n == 0:
        raise IdSetMismatch("empty labelings")
    joint = Counter((clustering[i], truth[i]) for i in ids)
    ca = Counter(clustering[i] for i in ids)
    cb = Counter(truth[i] for i in ids)
    h_a, h_b = _entropy(ca.values()), _entropy(cb.values())
    if h_a == 0.0 and h_b == 0.0:
        return 1.0
    mi = sum(c / n * math.log(c * n / (ca[a] * cb[b])) for (a, b), c in joint.items())
    return float(min(1.0, max(0.0, mi / ((h_a + h_b) / 2))))


def recall_at_k(exact: Sequence, approx: Sequence, k: int) -> float:
    """Share of the exact top-``k`` ids that the approximation also ranks top-``k``.

    When the exact list is shorter than ``k`` its length is the
    denominator; an empty exact list has perfect recall.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    want = {i for i, _ in list(exact)[:k]}
    if not want:
        return 1.0
    got = {i for i, _ in list(approx)[:k]}
    return len(want & got) / len(want)


def avg_rank_difference(measure_ranks: Sequence, truth_ranks: Sequence, top_n: int) -> float:
    """Mean ``|rank by measure - rank in truth|`` over the truth's top ``top_n``.

    Ranks are 1-based.  Items the measure does not rank at all get rank
    ``len(measure_ranks) + 1``.
    """
    truth = list(truth_ranks)
    if len(truth) < top_n:
        raise ValueError(f"ground truth has {len(truth)} items, fewer than top_n={top_n}")
    pos = {}
    for r, (nid, _) in enumerate(measure_ranks, start=1):
        pos.setdefault(nid, r)
    missing = len(pos) + 1
    diffs = [abs(pos.get(nid, missing) - r) for r, (nid, _) in enumerate(truth[:top_n], start=1)]
    return float(np.mean(diffs)) if diffs else 0.0


def _top_k_columns(m, id_rank: np.ndarray, k: int) -> list:
    m = m.tocsr()
    out = []
    for i in range(m.shape[0]):
        lo, hi = m.indptr[i], m.indptr[i + 1]
        cols, vals = m.indices[lo:hi], m.data[lo:hi]
        keep = vals > 0
        cols, vals = cols[keep], vals[keep]
        order = np.lexsort((id_rank[cols], -np.round(vals, TIE_DECIMALS)))[:k]
        out.append(set(cols[order].tolist()))
    return out


def matrix_recall(exact, approx, k: int = 100) -> float:
    """Mean per-row :func:`recall_at_k` between two relevance results.

    Rows are ranked like :meth:`RelevanceResult.ranked` (nonzero scores,
    ties by id).  Rows whose exact ranking is empty are skipped.
    """
    id_rank = np.empty(len(exact.col_ids), dtype=np.int64)
    id_rank[np.argsort(np.asarray(exact.col_ids, dtype=object))] = np.arange(len(exact.col_ids))
    want = _top_k_columns(exact.scores, id_rank, k)
    got = _top_k_columns(approx.scores, id_rank, k)
    vals = [len(w & g) / len(w) for w, g in zip(want, got) if w]
    return float(np.mean(vals)) if vals else 1.0
