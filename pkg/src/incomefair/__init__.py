"""Income-fair ranking simulation: DIDRF scoring, baselines and evaluation."""

__version__ = "0.1.0"

from .corpus import Query, QuerySet, parse_letor, relevance_probability, synth_queryset, write_letor
from .income import IncomeFunctionSpec, income_at
from .ledger import Ledger, estimate_relevance, uncertainty_gain
from .metrics import CNDCGAccumulator, cndcg_avg, exposure_unfairness, income_unfairness, ndcg_at_k
from .rankers import (
    DIDRF, FairCo, FairK, RandomK, RankingPolicy, ScoreBreakdown, ScoringState, TopK,
    brute_force_best, fairness_grad_g, fairness_hess_h, make_policy, rank, sigma,
)
from .usermodel import ExaminationModel, examination_prob, simulate_session
