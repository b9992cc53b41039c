"""Multi-trial experiments, parameter sweeps, timing and result files."""
from __future__ import annotations

import itertools
import json
import logging
import time
from pathlib import Path

import numpy as np
import pandas as pd

from .. import __version__
from ..corpus import QuerySet, synth_queryset
from ..income import PERIODIC_WAVEFORM, IncomeFunctionSpec
from ..ledger import PRIOR_CLICKS, PRIOR_EXPOSURE, Ledger
from ..rankers import POLICIES, make_policy
from .config import RunConfig
from .engine import FeedbackLoop

logger = logging.getLogger(__name__)

RESULT_COLUMNS = [
    "trial", "policy", "gamma", "eta", "cutoff", "cndcg_avg",
    "unfairness_income", "unfairness_exposure", "wall_time_s",
]
SESSION_COLUMNS = [
    "t", "trial", "query_id", "position", "item_id",
    "exposure_increment", "income_increment", "click",
]
DEFAULT_GAMMA_GRID = (0.0, 0.01, 0.1, 1.0, 10.0, 100.0, 1000.0)
DEFAULT_ETA_GRID = (1.0, 10.0, 100.0)

_USES_GAMMA = {"FairCo", "MCFair", "DIDRF", "DIDRF_WO_h", "DIDRF_WO_p"}
_USES_ETA = {"MCFair", "DIDRF", "DIDRF_WO_h", "DIDRF_WO_p"}


def uses_gamma(policy: str) -> bool:
    return policy in _USES_GAMMA


def uses_eta(policy: str, mode: str) -> bool:
    return mode == "online" and policy in _USES_ETA


def _phases(spec: IncomeFunctionSpec, queryset: QuerySet, width: int):
    if not spec.per_item_phase:
        return None
    out = np.zeros((len(queryset), width), dtype=np.int64)
    for i, q in enumerate(queryset):
        out[i, : len(q)] = spec.phases(q.item_ids)
    return out


class SessionLog:
    """Collects per-position session records from a :class:`FeedbackLoop`."""

    def __init__(self, queryset: QuerySet, trials):
        self.queryset = queryset
        self.trials = list(trials)
        self.chunks = []

    def __call__(self, loop, out):
        self.chunks.append((out.session, out.ranking, out.clicks, out.exposure_increment, out.income_increment))

    def frame(self) -> pd.DataFrame:
        if not self.chunks:
            return pd.DataFrame(columns=SESSION_COLUMNS)
        t, ranking, clicks, d_exp, d_inc = zip(*self.chunks)
        ranking = np.stack(ranking)  # (sessions, trials, queries, k)
        s, nt, nq, k = ranking.shape
        grid = np.indices(ranking.shape)
        qids = np.array([q.query_id for q in self.queryset], dtype=object)
        width = max(len(q) for q in self.queryset)
        ids = np.full((nq, width), None, dtype=object)
        for i, q in enumerate(self.queryset):
            ids[i, : len(q)] = q.item_ids
        return pd.DataFrame({
            "t": np.asarray(t)[grid[0]].ravel(),
            "trial": np.asarray(self.trials)[grid[1]].ravel(),
            "query_id": qids[grid[2]].ravel(),
            "position": (grid[3] + 1).ravel(),
            "item_id": ids[grid[2], ranking].ravel(),
            "exposure_increment": np.broadcast_to(np.stack(d_exp), ranking.shape).ravel(),
            "income_increment": np.broadcast_to(np.stack(d_inc), ranking.shape).ravel(),
            "click": np.stack(clicks).astype(np.int8).ravel(),
        })


def replay_session_log(log: pd.DataFrame, queryset: QuerySet, trials) -> Ledger:
    """Rebuild the (trials, queries, items) ledger from session records, in session order."""
    trials = list(trials)
    width = max(len(q) for q in queryset)
    ledger = Ledger.zeros((len(trials), len(queryset), width))
    tpos = {t: i for i, t in enumerate(trials)}
    qpos = {q.query_id: i for i, q in enumerate(queryset)}
    ipos = [{item: j for j, item in enumerate(q.item_ids)} for q in queryset]
    ti = log["trial"].map(tpos).to_numpy()
    qi = log["query_id"].map(qpos).to_numpy()
    ii = np.array([ipos[q][item] for q, item in zip(qi, log["item_id"])], dtype=np.int64)
    for _, rows in log.groupby("t", sort=True).indices.items():
        idx = (ti[rows], qi[rows], ii[rows])
        ledger.exposure[idx] += log["exposure_increment"].to_numpy()[rows]
        ledger.income[idx] += log["income_increment"].to_numpy()[rows]
        ledger.clicks[idx] += log["click"].to_numpy()[rows]
    return ledger


def simulate(config: RunConfig, queryset: QuerySet, policy: str, gamma: float = 0.0, eta: float = 0.0,
             trials=None, session_log: SessionLog | None = None, estimator=None) -> FeedbackLoop:
    """Run every query of ``queryset`` for ``config.horizon`` sessions, one lane per trial."""
    trials = range(config.trials) if trials is None else trials
    spec = config.income_spec()
    rel, mask = queryset.padded_relevance(config.epsilon)
    loop = FeedbackLoop(
        rel, mask, make_policy(policy, gamma=gamma, eta=eta), spec,
        [config.base_seed + t for t in trials],
        mode=config.mode, k_c=config.k_c, k=config.k, cutoffs=config.cutoffs,
        alpha=config.alpha, phases=_phases(spec, queryset, rel.shape[1]), estimator=estimator,
    )
    return loop.run(config.horizon, callback=session_log)


def _rows(loop: FeedbackLoop, config: RunConfig, policy, gamma, eta, trials, wall) -> list[dict]:
    cndcg = loop.cndcg_avg().mean(axis=1)  # (trials, cutoffs)
    unf_i = loop.income_unfairness().mean(axis=1)
    unf_e = loop.exposure_unfairness().mean(axis=1)
    rows = []
    for ti, trial in enumerate(trials):
        for ci, cutoff in enumerate(config.cutoffs):
            rows.append(dict(trial=trial, policy=policy, gamma=gamma, eta=eta, cutoff=cutoff,
                             cndcg_avg=cndcg[ti, ci], unfairness_income=unf_i[ti],
                             unfairness_exposure=unf_e[ti], wall_time_s=wall / len(trials)))
    return rows


def _grid(config: RunConfig, policy: str):
    sweep = config.sweep
    gammas = [config.policy.gamma]
    etas = [config.policy.eta]
    if sweep is not None:
        gammas = sweep.gamma or gammas
        etas = sweep.eta or etas
    gammas = gammas if uses_gamma(policy) else [np.nan]
    etas = etas if uses_eta(policy, config.mode) else [np.nan]
    return list(itertools.product(gammas, etas))


def run_experiment(config: RunConfig, queryset: QuerySet | None = None, policies=None,
                   sweep: bool = False, session_log: SessionLog | None = None) -> pd.DataFrame:
    """Per-trial result rows for each policy and, with ``sweep``, each (gamma, eta) grid point.

    Parameters a policy does not use are reported as NaN and not swept.
    ``session_log`` receives every simulated session of every grid point.
    """
    queryset = config.load_queries() if queryset is None else queryset
    if policies is None:
        policies = (config.sweep.policies if sweep and config.sweep and config.sweep.policies
                    else [config.policy.policy])
    trials = list(range(config.trials))
    rows = []
    for policy in policies:
        grid = _grid(config, policy) if sweep else [
            (config.policy.gamma if uses_gamma(policy) else np.nan,
             config.policy.eta if uses_eta(policy, config.mode) else np.nan)]
        for gamma, eta in grid:
            tic = time.perf_counter()
            loop = simulate(config, queryset, policy, 0.0 if np.isnan(gamma) else gamma,
                            0.0 if np.isnan(eta) else eta, trials, session_log=session_log)
            wall = time.perf_counter() - tic
            logger.info("%s gamma=%s eta=%s done in %.1fs", policy, gamma, eta, wall)
            rows.extend(_rows(loop, config, policy, gamma, eta, trials, wall))
    return pd.DataFrame(rows, columns=RESULT_COLUMNS)


def summarize(results: pd.DataFrame) -> pd.DataFrame:
    """Mean over trials for each (policy, gamma, eta, cutoff); trial is 'mean'."""
    keys = ["policy", "gamma", "eta", "cutoff"]
    metrics = ["cndcg_avg", "unfairness_income", "unfairness_exposure", "wall_time_s"]
    out = results.groupby(keys, dropna=False, sort=False)[metrics].mean().reset_index()
    out.insert(0, "trial", "mean")
    return out[RESULT_COLUMNS]


def frontier(results: pd.DataFrame, cutoff: int | None = None) -> pd.DataFrame:
    """Trial-mean (gamma, eta, cNDCG_avg@cutoff, unfairness) points per policy."""
    cutoff = results["cutoff"].max() if cutoff is None else cutoff
    m = summarize(results)
    m = m[m["cutoff"] == cutoff]
    return pd.DataFrame({
        "policy": m["policy"], "gamma": m["gamma"], "eta": m["eta"],
        f"cndcg_avg@{cutoff}": m["cndcg_avg"], "unfairness": m["unfairness_income"],
    }).reset_index(drop=True)


def best_effectiveness(points: pd.DataFrame, unfairness_level: float, cutoff: int) -> float:
    """Highest cNDCG_avg among points whose unfairness does not exceed ``unfairness_level``."""
    ok = points[points["unfairness"] <= unfairness_level]
    return float(ok[f"cndcg_avg@{cutoff}"].max()) if len(ok) else -np.inf


def run_metadata(config: RunConfig) -> dict:
    return {
        "config": config.model_dump(),
        "version": __version__,
        "income_function": {
            "kind": config.income.kind,
            "periodic_waveform": PERIODIC_WAVEFORM,
            "aperiodic": "exp(-t / horizon), clamped beyond the horizon",
        },
        "timestep": "t_n = n, sessions numbered from 1",
        "estimator_priors": {"exposure": PRIOR_EXPOSURE, "clicks": PRIOR_CLICKS},
        "fairco": "income-adapted proportional controller (reconstruction)",
        "cndcg_avg": "sum alpha^(n-tau) NDCG_tau / sum alpha^(n-tau)",
    }


def write_outputs(results: pd.DataFrame, config: RunConfig, out_dir=None,
                  sessions: pd.DataFrame | None = None) -> Path:
    out = Path(out_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    pd.concat([results, summarize(results)], ignore_index=True).to_csv(out / "results.csv", index=False)
    frontier(results).to_csv(out / "frontier.csv", index=False)
    if sessions is not None:
        sessions.to_csv(out / "sessions.csv.gz", index=False)
    (out / "run_meta.json").write_text(json.dumps(run_metadata(config), indent=2, default=str))
    return out


def timing_report(config: RunConfig, queryset: QuerySet | None = None, policies=None) -> pd.DataFrame:
    """Scoring+sorting and wall time per policy at the configured gamma/eta."""
    queryset = config.load_queries() if queryset is None else queryset
    rows = []
    for policy in policies or POLICIES:
        tic = time.perf_counter()
        loop = simulate(config, queryset, policy, config.policy.gamma, config.policy.eta)
        wall = time.perf_counter() - tic
        sessions = config.horizon * config.trials
        rows.append(dict(policy=policy, score_sort_s=loop.score_sort_seconds,
                         per_session_ms=1e3 * loop.score_sort_seconds / sessions,
                         wall_time_s=wall))
    return pd.DataFrame(rows)


def session_cost(policy: str, num_items: int, sessions: int = 100, seed: int = 0,
                 gamma: float = 1.0, k: int = 5) -> float:
    """Mean seconds of scoring+sorting per session for one synthetic query of ``num_items``."""
    qs = synth_queryset(1, num_items, [0.2] * 5, seed)
    rel, mask = qs.padded_relevance()
    loop = FeedbackLoop(rel, mask, make_policy(policy, gamma=gamma), IncomeFunctionSpec("aperiodic"),
                        [seed], k=k)
    loop.run(sessions)
    return loop.score_sort_seconds / sessions
