"""Declarative run configuration (one JSON document, unknown keys rejected)."""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from ..corpus import DEFAULT_EPSILON, QuerySet, parse_letor, synth_queryset
from ..errors import ConfigError, DataError
from ..income import IncomeFunctionSpec, load_table_csv
from ..metrics import DEFAULT_ALPHA
from ..rankers import POLICIES


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SyntheticData(_Strict):
    num_queries: int = Field(50, ge=1)
    docs_per_query: int = Field(20, ge=2)
    grade_distribution: list[float] = [0.2, 0.2, 0.2, 0.2, 0.2]
    seed: int = 0


class DatasetConfig(_Strict):
    letor: Optional[str] = None
    synthetic: Optional[SyntheticData] = None
    y_max: Optional[int] = Field(None, ge=1)
    max_queries: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def _one_source(self):
        if (self.letor is None) == (self.synthetic is None):
            raise ValueError("exactly one of 'letor' or 'synthetic' must be given")
        return self


class IncomeConfig(_Strict):
    kind: Literal["periodic", "aperiodic", "constant", "table"] = "aperiodic"
    horizon: Optional[int] = Field(None, ge=1)
    peaks: int = Field(100, ge=1)
    constant_value: float = 1.0
    table: Optional[list[float]] = None
    table_csv: Optional[str] = None
    per_item_phase: Optional[dict[str, int]] = None


def _finite_nonneg(v: float) -> float:
    if not math.isfinite(v) or v < 0:
        raise ValueError("must be finite and >= 0")
    return v


class PolicyConfig(_Strict):
    policy: Literal[POLICIES] = "DIDRF"
    gamma: float = 1.0
    eta: float = 0.0

    _check = field_validator("gamma", "eta")(_finite_nonneg)


class SweepConfig(_Strict):
    gamma: Optional[list[float]] = None
    eta: Optional[list[float]] = None
    policies: Optional[list[Literal[POLICIES]]] = None

    @field_validator("gamma", "eta")
    @classmethod
    def _values(cls, v):
        if v is not None:
            if not v:
                raise ValueError("sweep list must not be empty")
            for x in v:
                _finite_nonneg(x)
        return v


class RunConfig(_Strict):
    dataset: DatasetConfig = DatasetConfig(synthetic=SyntheticData())
    income: IncomeConfig = IncomeConfig()
    policy: PolicyConfig = PolicyConfig()
    mode: Literal["offline", "online"] = "offline"
    horizon: int = Field(10_000, ge=1)
    k_c: int = Field(5, ge=1)
    k: int = Field(5, ge=1)
    epsilon: float = Field(DEFAULT_EPSILON, ge=0.0, lt=1.0)
    alpha: float = Field(DEFAULT_ALPHA, gt=0.0, le=1.0)
    trials: int = Field(5, ge=1)
    base_seed: int = 0
    cutoffs: list[int] = [1, 3, 5]
    sweep: Optional[SweepConfig] = None
    output_dir: str = "results"
    session_log: bool = False

    @model_validator(mode="after")
    def _cutoffs(self):
        limit = min(self.k, self.k_c)
        if not self.cutoffs or any(c < 1 or c > limit for c in self.cutoffs):
            raise ValueError(f"cutoffs must lie in 1..min(k, k_c) = 1..{limit}")
        self.cutoffs = sorted(set(self.cutoffs))
        return self

    def income_spec(self) -> IncomeFunctionSpec:
        inc = self.income
        table = inc.table
        if inc.kind == "table" and table is None:
            if inc.table_csv is None:
                raise ConfigError("income.kind 'table' needs 'table' or 'table_csv'")
            try:
                table = load_table_csv(inc.table_csv)
            except OSError as exc:
                raise DataError(f"income table: {exc}") from exc
        try:
            return IncomeFunctionSpec(
                kind=inc.kind,
                horizon=inc.horizon or self.horizon,
                peaks=inc.peaks,
                constant_value=inc.constant_value,
                table=tuple(table) if table is not None else None,
                per_item_phase=inc.per_item_phase,
            )
        except ValueError as exc:
            raise ConfigError(f"income: {exc}") from exc

    def load_queries(self) -> QuerySet:
        ds = self.dataset
        if ds.letor is not None:
            try:
                qs = parse_letor(ds.letor, y_max=ds.y_max)
            except OSError as exc:
                raise DataError(str(exc)) from exc
        else:
            s = ds.synthetic
            try:
                qs = synth_queryset(s.num_queries, s.docs_per_query, s.grade_distribution, s.seed)
            except DataError as exc:
                raise ConfigError(f"dataset.synthetic: {exc}") from exc
        if ds.max_queries is not None:
            qs = QuerySet(qs.queries[: ds.max_queries], qs.y_max)
        short = [q.query_id for q in qs if len(q) < self.k]
        if short:
            raise ConfigError(f"k={self.k} exceeds the candidates of {len(short)} queries (e.g. {short[0]})")
        return qs


def _format(exc: ValidationError) -> str:
    return "; ".join(f"{'.'.join(map(str, e['loc'])) or '<root>'}: {e['msg']}" for e in exc.errors())


def parse_config(data: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format(exc)) from None


def load_config(path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return parse_config(data)


def with_overrides(config: RunConfig, **overrides) -> RunConfig:
    """Copy of ``config`` with CLI-style overrides (None means keep)."""
    data = config.model_dump()
    mapping = {"policy": ("policy", "policy"), "gamma": ("policy", "gamma"), "eta": ("policy", "eta")}
    for key, value in overrides.items():
        if value is None:
            continue
        if key in mapping:
            outer, inner = mapping[key]
            data[outer][inner] = value
        elif key == "seed":
            data["base_seed"] = value
        elif key == "out":
            data["output_dir"] = str(value)
        else:
            data[key] = value
    return parse_config(data)
