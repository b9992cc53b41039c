"""Position- and selection-biased examination and click simulation."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def examination_prob(rank: int, k_c: int) -> float:
    """1/log2(rank + 1) within the top ``k_c`` positions, 0 beyond."""
    if rank < 1:
        raise ValueError(f"rank must be >= 1, got {rank}")
    return 1.0 / np.log2(rank + 1) if rank <= k_c else 0.0


@dataclass(frozen=True)
class ExaminationModel:
    k_c: int = 5

    def __post_init__(self):
        if self.k_c < 1:
            raise ValueError("k_c must be >= 1")

    def probs(self, k: int) -> np.ndarray:
        """Examination probabilities for positions 1..k."""
        ranks = np.arange(1, k + 1)
        p = 1.0 / np.log2(ranks + 1.0)
        p[ranks > self.k_c] = 0.0
        return p


def simulate_session(ranking, relevance, exam: ExaminationModel, rng) -> np.ndarray:
    """Sample independent clicks for a displayed list.

    ``ranking`` holds item indices into ``relevance`` (leading batch axes
    allowed). One uniform is drawn per displayed position, in rank order, so
    position j is clicked with probability p_j * R(item at j).
    """
    ranking = np.asarray(ranking)
    return clicks_from_uniforms(ranking, relevance, exam, rng.random(ranking.shape))


def clicks_from_uniforms(ranking, relevance, exam: ExaminationModel, uniforms) -> np.ndarray:
    ranking = np.asarray(ranking)
    p = exam.probs(ranking.shape[-1])
    rel = np.asarray(relevance)
    rel = np.broadcast_to(rel, ranking.shape[:-1] + rel.shape[-1:])
    r = np.take_along_axis(rel, ranking, axis=-1)
    return uniforms < p * r
