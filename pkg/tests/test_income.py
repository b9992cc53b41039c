import math

import numpy as np
import pytest

from incomefair.income import IncomeFunctionSpec, income_at, load_table_csv


def test_aperiodic_endpoints():
    spec = IncomeFunctionSpec("aperiodic", horizon=10_000)
    assert income_at(spec, "d", 0) == 1.0
    assert income_at(spec, "d", 10_000) == pytest.approx(math.exp(-1), abs=1e-12)
    assert income_at(spec, "d", 20_000) == income_at(spec, "d", 10_000)


def test_aperiodic_strictly_decreasing():
    v = IncomeFunctionSpec("aperiodic", horizon=500).evaluate(np.arange(501))
    assert np.all(np.diff(v) < 0)


def test_constant():
    spec = IncomeFunctionSpec("constant", constant_value=1.0)
    assert {income_at(spec, "x", t) for t in (0, 7, 99_999)} == {1.0}


def _strict_local_maxima(v):
    return np.flatnonzero((v[1:-1] > v[:-2]) & (v[1:-1] > v[2:])) + 1


def test_periodic_peaks_and_range():
    spec = IncomeFunctionSpec("periodic", horizon=10_000, peaks=100)
    v = spec.evaluate(np.arange(10_000))
    peaks = _strict_local_maxima(v)
    assert len(peaks) == 100
    assert len(set(np.diff(peaks))) == 1
    assert v.min() == 0.0 and v.max() == 1.0


@pytest.mark.parametrize("horizon,peaks", [(1000, 10), (600, 3), (10_000, 1)])
def test_periodic_peak_count_other_grids(horizon, peaks):
    v = IncomeFunctionSpec("periodic", horizon=horizon, peaks=peaks).evaluate(np.arange(horizon))
    assert len(_strict_local_maxima(v)) == peaks


def test_periodic_wraps():
    spec = IncomeFunctionSpec("periodic", horizon=1000, peaks=10)
    assert income_at(spec, "d", 1003) == income_at(spec, "d", 3)


def test_table_lookup_and_bounds(tmp_path):
    spec = IncomeFunctionSpec("table", table=[0.5, 0.25, 1.0])
    assert income_at(spec, "d", 1) == 0.25
    with pytest.raises(ValueError):
        income_at(spec, "d", 3)
    p = tmp_path / "t.csv"
    p.write_text("income\n0.1\n0.2\n")
    assert load_table_csv(p) == (0.1, 0.2)


def test_per_item_phase():
    spec = IncomeFunctionSpec("periodic", horizon=1000, peaks=10, per_item_phase={"a": 50})
    assert income_at(spec, "a", 10) == income_at(spec, "b", 60)
    rates = spec.rates(10, spec.phases(["a", "b"]))
    assert rates[0] == income_at(spec, "a", 10) and rates[1] == income_at(spec, "b", 10)


@pytest.mark.parametrize("kw", [dict(kind="wave"), dict(horizon=0), dict(kind="periodic", horizon=5, peaks=6),
                                dict(kind="table")])
def test_invalid_specs(kw):
    with pytest.raises(ValueError):
        IncomeFunctionSpec(**kw)
