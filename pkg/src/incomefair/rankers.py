"""Ranking policies built on marginal-gain scores, plus exact enumeration oracles.

Every scoring function works along the last axis (items) and accepts leading
batch axes, so one call scores many queries at once. Padded item slots are
excluded through an optional boolean ``mask`` and must carry zero relevance
and zero income.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator

from .errors import ConfigError
from .ledger import uncertainty_gain
from .metrics import fairness
from .usermodel import ExaminationModel

POLICIES = ("RandomK", "TopK", "FairK", "FairCo", "MCFair", "DIDRF", "DIDRF_WO_h", "DIDRF_WO_p")
FAIRCO_RELEVANCE_FLOOR = 1e-6
MAX_ORACLE_ITEMS = 8


def _count(x, mask):
    if mask is None:
        return np.full(np.shape(x)[:-1], np.shape(x)[-1])
    return np.asarray(mask).sum(axis=-1)


def sigma(num_items):
    """Normaliser 4 / (|D| (|D| - 1)) of the fairness derivatives."""
    n = np.asarray(num_items)
    if np.any(n < 2):
        raise ValueError("sigma needs at least two items")
    out = 4.0 / (n * (n - 1.0))
    return float(out) if out.ndim == 0 else out


def fairness_grad_g(income, relevance, mask=None):
    """d fair / d I(d) = sigma (R(d) sum_l I(l) R(l) - I(d) sum_h R(h)^2)."""
    income = np.asarray(income, dtype=float)
    rel = np.asarray(relevance, dtype=float)
    s = np.asarray(sigma(_count(rel, mask)))[..., None]
    sum_ir = (income * rel).sum(axis=-1, keepdims=True)
    sum_r2 = (rel**2).sum(axis=-1, keepdims=True)
    return s * (rel * sum_ir - income * sum_r2)


def fairness_hess_h(relevance, rate, mask=None):
    """Self-impact curvature -sigma (sum_{s != d} R(s)^2) f_d(t)^2, never positive."""
    rel = np.asarray(relevance, dtype=float)
    s = np.asarray(sigma(_count(rel, mask)))[..., None]
    others = (rel**2).sum(axis=-1, keepdims=True) - rel**2
    return -s * others * np.asarray(rate, dtype=float) ** 2


def fairness_hessian(relevance, mask=None):
    """Full Hessian -sigma (sum R^2 [x == y] - R(x) R(y)) of fairness in income."""
    rel = np.asarray(relevance, dtype=float)
    s = np.asarray(sigma(_count(rel, mask)))[..., None, None]
    eye = np.eye(rel.shape[-1])
    sum_r2 = (rel**2).sum(axis=-1)[..., None, None]
    return -s * (sum_r2 * eye - rel[..., :, None] * rel[..., None, :])


def fairness_delta_taylor(income, relevance, delta_income, mask=None):
    """Second-order expansion of fair(I + dI) - fair(I) with every cross term.

    Fairness is quadratic in income, so this equals the direct difference.
    """
    d = np.asarray(delta_income, dtype=float)
    g = fairness_grad_g(income, relevance, mask)
    hess = fairness_hessian(relevance, mask)
    return (g * d).sum(axis=-1) + 0.5 * np.einsum("...i,...ij,...j->...", d, hess, d)


@dataclass
class ScoringState:
    """What a policy sees before building the list for session ``session``.

    ``relevance`` is the true relevance offline and the click estimate online.
    ``exposure_hat`` is None offline, which switches the uncertainty term off.
    ``noise`` carries this session's uniform tie-break keys.
    """

    relevance: np.ndarray
    income: np.ndarray
    rates: float | np.ndarray
    session: int
    exposure_hat: np.ndarray | None = None
    mask: np.ndarray | None = None
    noise: np.ndarray | None = None


@dataclass
class ScoreBreakdown:
    relevance_term: np.ndarray
    g: np.ndarray
    h: np.ndarray
    phi: np.ndarray
    u: np.ndarray
    total: np.ndarray


class RankingPolicy(BaseEstimator):
    """Base class: subclasses map a :class:`ScoringState` to per-item scores."""

    def score(self, state: ScoringState) -> ScoreBreakdown:
        raise NotImplementedError

    def rank(self, state: ScoringState, k: int, rng=None) -> np.ndarray:
        keys = state.noise
        if keys is None:
            keys = np.random.default_rng(rng).random(np.shape(state.relevance))
        return rank(self.score(state).total, k, keys=keys, mask=state.mask)


def _zeros(state):
    return np.zeros(np.shape(state.relevance))


class TopK(RankingPolicy):
    def score(self, state):
        r = np.asarray(state.relevance, dtype=float)
        z = _zeros(state)
        return ScoreBreakdown(r, z, z, z, z, r)


class RandomK(RankingPolicy):
    """Uniformly random lists; the score is this session's fresh uniform draw."""

    def score(self, state):
        if state.noise is None:
            raise ValueError("RandomK needs per-session noise in the scoring state")
        z = _zeros(state)
        return ScoreBreakdown(z, z, z, z, z, np.asarray(state.noise, dtype=float))


class DIDRF(RankingPolicy):
    """Marginal income-fairness scoring R + gamma (g + h/2) - eta u.

    ``use_hessian=False`` drops the self-impact curvature h and
    ``second_order_uncertainty=False`` keeps only -1/E^2 in u. The
    uncertainty term is active only when the state carries ``exposure_hat``.
    """

    def __init__(self, gamma=1.0, eta=0.0, use_hessian=True, second_order_uncertainty=True):
        self.gamma = gamma
        self.eta = eta
        self.use_hessian = use_hessian
        self.second_order_uncertainty = second_order_uncertainty

    def score(self, state):
        r = np.asarray(state.relevance, dtype=float)
        g = fairness_grad_g(state.income, r, state.mask)
        h = fairness_hess_h(r, state.rates, state.mask) if self.use_hessian else np.zeros_like(g)
        phi = g + 0.5 * h
        if state.exposure_hat is None:
            u = np.zeros_like(g)
        else:
            u = uncertainty_gain(state.exposure_hat, self.second_order_uncertainty)
        total = r + self.gamma * phi - self.eta * u
        return ScoreBreakdown(r, g, h, phi, u, total)


class FairK(RankingPolicy):
    """Ranks by the marginal fairness term g + h/2 alone."""

    def __init__(self, use_hessian=True):
        self.use_hessian = use_hessian

    def score(self, state):
        r = np.asarray(state.relevance, dtype=float)
        g = fairness_grad_g(state.income, r, state.mask)
        h = fairness_hess_h(r, state.rates, state.mask) if self.use_hessian else np.zeros_like(g)
        phi = g + 0.5 * h
        return ScoreBreakdown(r, g, h, phi, np.zeros_like(g), phi)


class FairCo(RankingPolicy):
    """Proportional controller on income-per-relevance disparity.

    total(d) = R(d) + gamma (n - 1) max(0, max_d' I(d')/R(d') - I(d)/R(d)).
    This is a reconstruction of the exposure-based controller, carried over
    to income; relevances are floored to keep the ratios finite.
    """

    def __init__(self, gamma=1.0):
        self.gamma = gamma

    def score(self, state):
        r = np.asarray(state.relevance, dtype=float)
        ratio = np.asarray(state.income, dtype=float) / np.maximum(r, FAIRCO_RELEVANCE_FLOOR)
        if state.mask is not None:
            ratio = np.where(state.mask, ratio, -np.inf)
        err = np.maximum(0.0, ratio.max(axis=-1, keepdims=True) - ratio)
        if state.mask is not None:
            err = np.where(state.mask, err, 0.0)
        z = _zeros(state)
        return ScoreBreakdown(r, z, z, z, z, r + self.gamma * (state.session - 1) * err)


def make_policy(name: str, gamma: float = 1.0, eta: float = 0.0) -> RankingPolicy:
    """Build a policy from its configuration name."""
    if name == "RandomK":
        return RandomK()
    if name == "TopK":
        return TopK()
    if name == "FairK":
        return FairK()
    if name == "FairCo":
        return FairCo(gamma=gamma)
    if name == "DIDRF":
        return DIDRF(gamma=gamma, eta=eta)
    if name == "DIDRF_WO_h":
        return DIDRF(gamma=gamma, eta=eta, use_hessian=False)
    if name == "DIDRF_WO_p":
        return DIDRF(gamma=gamma, eta=eta, second_order_uncertainty=False)
    if name == "MCFair":
        return DIDRF(gamma=gamma, eta=eta, use_hessian=False, second_order_uncertainty=False)
    raise ConfigError(f"unknown policy {name!r}; expected one of {', '.join(POLICIES)}")


def rank(scores, k: int, rng=None, keys=None, mask=None) -> np.ndarray:
    """Indices of the top-``k`` items by descending score.

    Ties are broken by a random pre-permutation (from ``keys`` or ``rng``)
    followed by a stable sort. Masked-out slots sort last.
    """
    scores = np.asarray(scores, dtype=float)
    if k > scores.shape[-1]:
        raise ValueError(f"k={k} exceeds the {scores.shape[-1]} candidates")
    if mask is not None:
        if np.any(np.asarray(mask).sum(axis=-1) < k):
            raise ValueError(f"k={k} exceeds the candidates of some query")
        scores = np.where(mask, scores, -np.inf)
    if keys is None:
        keys = np.random.default_rng(rng).random(scores.shape)
    perm = np.argsort(keys, axis=-1)
    shuffled = np.take_along_axis(scores, perm, axis=-1)
    order = np.argsort(-shuffled, axis=-1, kind="stable")
    return np.take_along_axis(perm, order, axis=-1)[..., :k]


def marginal_objective(ranking, relevance, income, rate, gamma, exam: ExaminationModel) -> float:
    """Exact gain R . dE + gamma (fair(I + f dE) - fair(I)) of showing ``ranking``."""
    rel = np.asarray(relevance, dtype=float)
    d_exp = np.zeros_like(rel)
    d_exp[np.asarray(ranking)] = exam.probs(len(ranking))
    after = np.asarray(income, dtype=float) + np.asarray(rate) * d_exp
    return float(rel @ d_exp + gamma * (fairness(after, rel) - fairness(income, rel)))


def brute_force_best(relevance, income, rate, gamma, k: int, exam: ExaminationModel) -> np.ndarray:
    """Enumerate every ordered k-arrangement and return the exact-objective argmax.

    No expansion or surrogate is involved; the first maximiser in
    lexicographic order wins ties.
    """
    n = len(relevance)
    if n > MAX_ORACLE_ITEMS:
        raise ValueError(f"oracle limited to {MAX_ORACLE_ITEMS} items, got {n}")
    best, best_val = None, -np.inf
    for arrangement in itertools.permutations(range(n), k):
        val = marginal_objective(arrangement, relevance, income, rate, gamma, exam)
        if val > best_val:
            best, best_val = arrangement, val
    return np.array(best)
