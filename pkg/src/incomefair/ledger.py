"""Cumulative exposure / income / click bookkeeping and the click-based estimator."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .usermodel import ExaminationModel

PRIOR_EXPOSURE = 1.0
PRIOR_CLICKS = 0.5


def estimate_relevance(cum_clicks, exposure, prior_exposure=PRIOR_EXPOSURE, prior_clicks=PRIOR_CLICKS):
    """(cumC + C0) / (E + E0), clipped to [0, 1]."""
    denom = np.asarray(exposure, dtype=float) + prior_exposure
    if np.any(denom <= 0):
        raise ZeroDivisionError("relevance estimate undefined for zero exposure without a prior")
    out = np.clip((np.asarray(cum_clicks, dtype=float) + prior_clicks) / denom, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def uncertainty_gain(exposure_hat, second_order: bool = True):
    """Per-unit-exposure change in the 1/E uncertainty surrogate.

    Returns -1/E^2 + 1/E^3, or only the first-order part -1/E^2 when
    ``second_order`` is False.
    """
    e = np.asarray(exposure_hat, dtype=float)
    if np.any(e <= 0):
        raise ValueError("exposure estimate must be positive")
    out = -1.0 / e**2
    if second_order:
        out = out + 1.0 / e**3
    return float(out) if out.ndim == 0 else out


@dataclass
class Ledger:
    """Cumulative per-item state for one query, or a batch of queries along leading axes."""

    exposure: np.ndarray
    income: np.ndarray
    clicks: np.ndarray
    prior_exposure: float = PRIOR_EXPOSURE
    prior_clicks: float = PRIOR_CLICKS

    @classmethod
    def zeros(cls, shape, **priors) -> "Ledger":
        return cls(np.zeros(shape), np.zeros(shape), np.zeros(shape), **priors)

    def copy(self) -> "Ledger":
        return Ledger(self.exposure.copy(), self.income.copy(), self.clicks.copy(),
                      self.prior_exposure, self.prior_clicks)

    @property
    def exposure_hat(self) -> np.ndarray:
        return self.exposure + self.prior_exposure

    def estimate_relevance(self) -> np.ndarray:
        return estimate_relevance(self.clicks, self.exposure, self.prior_exposure, self.prior_clicks)

    def increments(self, ranking, rates, exam: ExaminationModel):
        """Exposure and income increments per displayed position."""
        ranking = np.asarray(ranking)
        p = np.broadcast_to(exam.probs(ranking.shape[-1]), ranking.shape)
        if np.ndim(rates) == 0:
            f = rates
        else:
            f = np.take_along_axis(np.broadcast_to(rates, self.exposure.shape), ranking, axis=-1)
        return p, p * f

    def update(self, ranking, clicks, rates, exam: ExaminationModel) -> "Ledger":
        """Credit one session in place and return self.

        Item at position j gains p_j exposure, p_j * f(t) income and its click.
        ``rates`` is a scalar or a per-item array of income rates f_d(t).
        """
        ranking = np.asarray(ranking)
        d_exp, d_inc = self.increments(ranking, rates, exam)
        width = self.exposure.shape[-1]
        rows = np.arange(ranking.size // ranking.shape[-1]).reshape(ranking.shape[:-1] + (1,))
        # Items are distinct within a list, so buffered fancy-index += is safe.
        flat = (rows * width + ranking).ravel()
        self.exposure.reshape(-1)[flat] += np.ravel(d_exp)
        self.income.reshape(-1)[flat] += np.ravel(d_inc)
        self.clicks.reshape(-1)[flat] += np.ravel(clicks).astype(float)
        return self
