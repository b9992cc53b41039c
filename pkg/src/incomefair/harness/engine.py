"""The session-by-session feedback loop.

:class:`FeedbackLoop` advances many independent (trial, query) pairs in
lock-step as one ``(trials, queries, items)`` array problem. Each trial owns
a generator seeded with ``base_seed + trial``; every session it draws the
tie-break keys ``(queries, items)`` and then the click uniforms
``(queries, k)``. A trial's outcome therefore does not depend on which other
trials share the batch.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..income import IncomeFunctionSpec
from ..ledger import Ledger
from ..metrics import (
    DEFAULT_ALPHA, CNDCGAccumulator, exposure_unfairness, ideal_dcg, income_unfairness, ndcg_at_k,
    position_weights,
)
from ..rankers import RankingPolicy, ScoreBreakdown, ScoringState, rank
from ..usermodel import ExaminationModel, clicks_from_uniforms


@dataclass
class SessionOutcome:
    session: int
    ranking: np.ndarray
    clicks: np.ndarray
    exposure_increment: np.ndarray
    income_increment: np.ndarray
    scores: ScoreBreakdown
    ndcg: np.ndarray


@dataclass
class QueryState:
    """Single-query state for :func:`run_session`."""

    relevance: np.ndarray
    ledger: Ledger = None
    phases: np.ndarray | None = None
    cndcg: CNDCGAccumulator = None
    session: int = 0
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.relevance = np.asarray(self.relevance, dtype=float)
        if self.ledger is None:
            self.ledger = Ledger.zeros(self.relevance.shape)


def _scoring_state(relevance, ledger: Ledger, rates, session, online, mask, noise, estimator):
    if online:
        est = estimator(ledger) if estimator is not None else ledger.estimate_relevance()
        if mask is not None:
            est = np.where(mask, est, 0.0)
        return ScoringState(est, ledger.income, rates, session, ledger.exposure_hat, mask, noise)
    return ScoringState(relevance, ledger.income, rates, session, None, mask, noise)


def run_session(state: QueryState, policy: RankingPolicy, *, income: IncomeFunctionSpec,
                exam: ExaminationModel, k: int, rng, mode: str = "offline",
                cutoffs=(1, 3, 5), alpha: float = DEFAULT_ALPHA, estimator=None) -> SessionOutcome:
    """Run the next session of one query and update ``state`` in place.

    Relevance source (true or estimated), scoring, top-k display, click
    simulation and ledger update, in that order. The session index is
    ``state.session + 1`` and doubles as the income timestep.
    """
    n = state.session + 1
    rates = income.rates(n, state.phases)
    noise = rng.random(state.relevance.shape)
    sstate = _scoring_state(state.relevance, state.ledger, rates, n, mode == "online", None, noise, estimator)
    scores = policy.score(sstate)
    ranking = rank(scores.total, k, keys=noise)
    clicks = clicks_from_uniforms(ranking, state.relevance, exam, rng.random(ranking.shape))
    d_exp, d_inc = state.ledger.increments(ranking, rates, exam)
    state.ledger.update(ranking, clicks, rates, exam)
    ndcg = np.array([ndcg_at_k(ranking, state.relevance, c) for c in cutoffs])
    if state.cndcg is None:
        state.cndcg = CNDCGAccumulator(alpha, shape=(len(cutoffs),))
    state.cndcg.update(ndcg)
    state.session = n
    return SessionOutcome(n, ranking, clicks, d_exp, d_inc, scores, ndcg)


class FeedbackLoop:
    """Batched simulation of ``len(seeds)`` trials over every query of a corpus.

    Parameters
    ----------
    relevance, mask : (queries, items) arrays
        True click-relevance per padded item slot and slot validity.
    policy : RankingPolicy
    income : IncomeFunctionSpec
    seeds : sequence of int
        One generator seed per trial.
    phases : optional (queries, items) int array of income phase offsets.
    estimator : optional callable ``ledger -> relevance`` replacing the click
        estimate in online mode.
    """

    def __init__(self, relevance, mask, policy: RankingPolicy, income: IncomeFunctionSpec,
                 seeds, *, mode="offline", k_c=5, k=5, cutoffs=(1, 3, 5), alpha=DEFAULT_ALPHA,
                 phases=None, estimator=None):
        if mode not in ("offline", "online"):
            raise ValueError(f"unknown mode {mode!r}")
        self.relevance = np.asarray(relevance, dtype=float)
        self.mask = np.ones(self.relevance.shape, bool) if mask is None else np.asarray(mask, bool)
        self.relevance = np.where(self.mask, self.relevance, 0.0)
        self.policy = policy
        self.income = income
        self.exam = ExaminationModel(k_c)
        self.k = k
        self.cutoffs = tuple(cutoffs)
        self.online = mode == "online"
        self.phases = phases
        self.estimator = estimator
        self.rngs = [np.random.default_rng(s) for s in seeds]
        shape = (len(self.rngs),) + self.relevance.shape
        self.ledger = Ledger.zeros(shape)
        self.cndcg = CNDCGAccumulator(alpha, shape=shape[:-1] + (len(self.cutoffs),))
        self.weights = position_weights(max(self.cutoffs))
        self.ideal = np.stack([ideal_dcg(self.relevance, c) for c in self.cutoffs], axis=-1)
        self.session = 0
        self.score_sort_seconds = 0.0

    def step(self) -> SessionOutcome:
        n = self.session + 1
        rates = self.income.rates(n, self.phases)
        noise = np.stack([g.random(self.relevance.shape) for g in self.rngs])
        mask = np.broadcast_to(self.mask, noise.shape)
        tic = time.perf_counter()
        state = _scoring_state(self.relevance, self.ledger, rates, n, self.online, mask, noise, self.estimator)
        scores = self.policy.score(state)
        ranking = rank(scores.total, self.k, keys=noise, mask=mask)
        self.score_sort_seconds += time.perf_counter() - tic
        uniforms = np.stack([g.random(ranking.shape[1:]) for g in self.rngs])
        clicks = clicks_from_uniforms(ranking, self.relevance, self.exam, uniforms)
        d_exp, d_inc = self.ledger.increments(ranking, rates, self.exam)
        self.ledger.update(ranking, clicks, rates, self.exam)
        ndcg = self._ndcg(ranking)
        self.cndcg.update(ndcg)
        self.session = n
        return SessionOutcome(n, ranking, clicks, d_exp, d_inc, scores, ndcg)

    def _ndcg(self, ranking):
        # One gather for all cutoffs; equals ndcg_at_k at each cutoff.
        top = ranking[..., : len(self.weights)]
        rel = np.broadcast_to(self.relevance, top.shape[:-1] + self.relevance.shape[-1:])
        gains = np.take_along_axis(rel, top, axis=-1) * self.weights[: top.shape[-1]]
        dcg = np.cumsum(gains, axis=-1)[..., [min(c, top.shape[-1]) - 1 for c in self.cutoffs]]
        return np.where(self.ideal > 0, dcg / np.where(self.ideal > 0, self.ideal, 1.0), 1.0)

    def run(self, sessions: int, callback=None) -> "FeedbackLoop":
        for _ in range(sessions):
            out = self.step()
            if callback is not None:
                callback(self, out)
        return self

    def cndcg_avg(self) -> np.ndarray:
        """(trials, queries, cutoffs) recency-weighted NDCG averages."""
        return self.cndcg.value()

    def income_unfairness(self) -> np.ndarray:
        return income_unfairness(self.ledger.income, self.relevance, np.broadcast_to(self.mask, self.ledger.income.shape))

    def exposure_unfairness(self) -> np.ndarray:
        return exposure_unfairness(self.ledger.exposure, self.relevance, np.broadcast_to(self.mask, self.ledger.exposure.shape))
