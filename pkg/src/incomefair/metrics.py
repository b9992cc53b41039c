"""Effectiveness and fairness metrics."""
from __future__ import annotations

import numpy as np

DEFAULT_ALPHA = 0.995


def position_weights(k: int) -> np.ndarray:
    return 1.0 / np.log2(np.arange(2, k + 2))


def ideal_dcg(relevance, k: int, mask=None):
    rel = np.asarray(relevance, dtype=float)
    if mask is not None:
        rel = np.where(mask, rel, 0.0)
    ideal = -np.sort(-rel, axis=-1)[..., :k]
    return (ideal * position_weights(k)[: ideal.shape[-1]]).sum(axis=-1)


def ndcg_at_k(ranking, relevance, k: int, mask=None, ideal=None):
    """NDCG@k with examination probabilities 1/log2(i+1) as position weights.

    ``ranking`` holds item indices into ``relevance`` along the last axis and
    may be shorter than ``k``. A query whose ideal DCG is zero scores 1.
    ``ideal`` optionally supplies precomputed :func:`ideal_dcg` values.
    """
    ranking = np.asarray(ranking)
    rel = np.asarray(relevance, dtype=float)
    if mask is not None:
        rel = np.where(mask, rel, 0.0)
    shown = ranking[..., :k]
    w = position_weights(k)
    rel = np.broadcast_to(rel, shown.shape[:-1] + rel.shape[-1:])
    dcg = (np.take_along_axis(rel, shown, axis=-1) * w[: shown.shape[-1]]).sum(axis=-1)
    idcg = ideal_dcg(relevance if mask is None else np.where(mask, relevance, 0.0), k) if ideal is None else np.asarray(ideal)
    safe = np.where(idcg > 0, idcg, 1.0)
    out = np.where(idcg > 0, dcg / safe, 1.0)
    return float(out) if out.ndim == 0 else out


class CNDCGAccumulator:
    """Recency-discounted running average of per-session NDCG.

    After n sessions the value is sum_tau alpha^(n-tau) NDCG_tau divided by
    sum_tau alpha^(n-tau), so a policy that is ideal in every session scores
    exactly 1. Both sums are kept by the recurrence S_n = alpha S_{n-1} + x_n.
    """

    def __init__(self, alpha: float = DEFAULT_ALPHA, shape=()):
        if not 0.0 < alpha <= 1.0:
            raise ValueError("alpha must lie in (0, 1]")
        self.alpha = alpha
        self.shape = shape
        self.reset()

    def reset(self):
        self.numerator = np.zeros(self.shape)
        self.weight = 0.0
        self.n = 0

    def update(self, ndcg) -> None:
        self.numerator = self.alpha * self.numerator + ndcg
        self.weight = self.alpha * self.weight + 1.0
        self.n += 1

    def value(self):
        if self.n == 0:
            raise ValueError("no sessions accumulated")
        out = self.numerator / self.weight
        return float(out) if np.ndim(out) == 0 else out


def cndcg_avg(ndcgs, alpha: float = DEFAULT_ALPHA) -> float:
    """Closed-form cNDCG_avg over a sequence of per-session NDCG values."""
    x = np.asarray(ndcgs, dtype=float)
    if x.size == 0:
        raise ValueError("no sessions")
    w = alpha ** np.arange(len(x) - 1, -1, -1, dtype=float)
    return float((w * x).sum() / w.sum())


def _pairwise_unfairness(utility, relevance, mask=None):
    u = np.asarray(utility, dtype=float)
    r = np.asarray(relevance, dtype=float)
    if mask is not None:
        u = np.where(mask, u, 0.0)
        r = np.where(mask, r, 0.0)
        n = np.asarray(mask).sum(axis=-1)
    else:
        n = np.full(u.shape[:-1], u.shape[-1])
    if np.any(n < 2):
        raise ValueError("fairness needs at least two items per query")
    cross = u[..., :, None] * r[..., None, :] - u[..., None, :] * r[..., :, None]
    out = (cross**2).sum(axis=(-2, -1)) / (n * (n - 1))
    return float(out) if np.ndim(out) == 0 else out


def income_unfairness(income, relevance, mask=None):
    """Mean squared cross-difference (I_x R_y - I_y R_x)^2 over ordered item pairs.

    Zero exactly when income is proportional to relevance. Fairness is the
    negation.
    """
    return _pairwise_unfairness(income, relevance, mask)


def exposure_unfairness(exposure, relevance, mask=None):
    """The same pairwise measure with cumulative exposure in place of income."""
    return _pairwise_unfairness(exposure, relevance, mask)


def fairness(income, relevance, mask=None):
    return -_pairwise_unfairness(income, relevance, mask)
