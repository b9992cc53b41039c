"""Time-dependent unit-income functions f_d(t)."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal

import numpy as np

KINDS = ("periodic", "aperiodic", "constant", "table")

# Recorded in run metadata so the stand-in shape is reproducible downstream.
PERIODIC_WAVEFORM = (
    "square wave sq(t) = 1 if (t mod P) < P/2 else 0 with P = horizon/peaks, "
    "plus linear ramp 0.5*t/horizon, min-max normalised over t = 0..horizon-1"
)


@dataclass(frozen=True)
class IncomeFunctionSpec:
    kind: Literal["periodic", "aperiodic", "constant", "table"] = "aperiodic"
    horizon: int = 10_000
    peaks: int = 100
    constant_value: float = 1.0
    table: tuple[float, ...] | None = None
    per_item_phase: dict[str, int] | None = field(default=None, hash=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown income kind {self.kind!r}; expected one of {KINDS}")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.kind == "periodic" and not 1 <= self.peaks <= self.horizon:
            raise ValueError("peaks must satisfy 1 <= peaks <= horizon")
        if self.kind == "table":
            if not self.table:
                raise ValueError("table kind needs a non-empty table")
            object.__setattr__(self, "table", tuple(float(v) for v in self.table))

    def evaluate(self, t) -> np.ndarray:
        """Vectorised f(t) for integer timesteps ``t`` (no per-item phase)."""
        t = np.asarray(t, dtype=np.int64)
        if self.kind == "constant":
            return np.full(t.shape, float(self.constant_value))
        if self.kind == "aperiodic":
            return np.exp(-np.minimum(t, self.horizon) / self.horizon)
        if self.kind == "periodic":
            return _periodic_grid(self.horizon, self.peaks)[t % self.horizon]
        table = np.asarray(self.table)
        if np.any(t < 0) or np.any(t >= len(table)):
            raise ValueError(f"timestep outside income table of length {len(table)}")
        return table[t]

    def phases(self, item_ids) -> np.ndarray:
        if not self.per_item_phase:
            return np.zeros(len(item_ids), dtype=np.int64)
        return np.array([self.per_item_phase.get(i, 0) for i in item_ids], dtype=np.int64)

    def rates(self, t: int, phases: np.ndarray | None = None):
        """Income rate at session time ``t``, per item when ``phases`` is given."""
        if phases is None or not np.any(phases):
            return float(self.evaluate(t))
        return self.evaluate((t + phases) % self.horizon)


@lru_cache(maxsize=8)
def _periodic_grid(horizon: int, peaks: int) -> np.ndarray:
    t = np.arange(horizon, dtype=float)
    period = horizon / peaks
    wave = (np.mod(t, period) < period / 2).astype(float) + 0.5 * t / horizon
    lo, hi = wave.min(), wave.max()
    grid = (wave - lo) / (hi - lo)
    grid.setflags(write=False)
    return grid


def income_at(spec: IncomeFunctionSpec, item_id: str, t: int) -> float:
    """Unit income of ``item_id`` at timestep ``t``."""
    if spec.per_item_phase:
        t = (t + spec.per_item_phase.get(item_id, 0)) % spec.horizon
    return float(spec.evaluate(t))


def load_table_csv(path) -> tuple[float, ...]:
    """Read a one-column CSV of income values; a non-numeric header row is skipped."""
    values = []
    with open(path, newline="", encoding="utf-8") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or not row[0].strip():
                continue
            try:
                values.append(float(row[0]))
            except ValueError:
                if i == 0:
                    continue
                raise ValueError(f"{path}: row {i + 1} is not a number: {row[0]!r}") from None
    if not values:
        raise ValueError(f"{path}: empty income table")
    return tuple(values)
