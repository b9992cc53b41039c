import numpy as np
import pytest
from hypothesis import given, strategies as st

from incomefair.corpus import (
    CorpusError, EmptyCorpusError, LetorParseError, QuerySet, Query,
    parse_letor, relevance_probability, synth_queryset, write_letor,
)


def _write(tmp_path, text):
    p = tmp_path / "data.txt"
    p.write_text(text)
    return p


def test_parse_minimal(tmp_path):
    qs = parse_letor(_write(tmp_path, "2 qid:1 1:0.5\n0 qid:1 1:0.1\n"))
    assert len(qs) == 1
    assert qs.queries[0].query_id == "1"
    assert list(qs.queries[0].grades) == [2, 0]


def test_parse_groups_in_first_appearance_order(tmp_path):
    text = (
        "1 qid:b 1:0.1 2:3 #docid = GX1\n"
        "0 qid:a 1:0.2 #docid = GX2\n"
        "2 qid:b 1:1e-3 #docid = GX3\n"
        "4 qid:a 1:.5 #docid = GX4\n"
    )
    qs = parse_letor(_write(tmp_path, text))
    assert [q.query_id for q in qs] == ["b", "a"]
    assert qs.queries[0].item_ids == ("GX1", "GX3")
    assert qs.y_max == 4


@pytest.mark.parametrize("line", ["x qid:1", "1 q:1 1:0.5", "1 qid:1 a:0.5", "1"])
def test_malformed_line_reports_line_number(tmp_path, line):
    with pytest.raises(LetorParseError) as err:
        parse_letor(_write(tmp_path, line + "\n0 qid:1 1:0\n"))
    assert err.value.lineno == 1


def test_grade_above_ymax_rejected(tmp_path):
    with pytest.raises(LetorParseError, match="line 2"):
        parse_letor(_write(tmp_path, "1 qid:1 1:0\n5 qid:1 1:0\n"), y_max=4)


def test_empty_file(tmp_path):
    with pytest.raises(EmptyCorpusError):
        parse_letor(_write(tmp_path, ""))


def test_singleton_queries_dropped(tmp_path, caplog):
    qs = parse_letor(_write(tmp_path, "1 qid:1 1:0\n0 qid:2 1:0\n2 qid:2 1:0\n"))
    assert [q.query_id for q in qs] == ["2"]
    assert "dropping query 1" in caplog.text


def test_letor_round_trip(tmp_path):
    qs = synth_queryset(7, 5, [0.1, 0.2, 0.3, 0.2, 0.2], seed=3)
    path = tmp_path / "rt.txt"
    write_letor(qs, path)
    back = parse_letor(path, y_max=qs.y_max)
    assert [q.query_id for q in back] == [q.query_id for q in qs]
    for a, b in zip(qs, back):
        assert a.item_ids == b.item_ids
        np.testing.assert_array_equal(a.grades, b.grades)


def test_relevance_probability_examples():
    assert relevance_probability(0, 4, 0.1) == pytest.approx(0.1, abs=1e-15)
    assert relevance_probability(4, 4, 0.1) == 1.0
    assert relevance_probability(2, 4, 0.1) == pytest.approx(0.28, abs=1e-15)


def test_relevance_probability_domain():
    with pytest.raises(ValueError):
        relevance_probability(5, 4)
    with pytest.raises(ValueError):
        relevance_probability(-1, 4)


@given(st.integers(1, 8), st.floats(0.0, 0.99))
def test_relevance_probability_monotone_with_exact_ends(y_max, eps):
    p = relevance_probability(np.arange(y_max + 1), y_max, eps)
    assert np.all(np.diff(p) > 0)
    assert p[0] == eps and p[-1] == 1.0


def test_synth_deterministic():
    a = synth_queryset(50, 20, [0.2] * 5, seed=1)
    b = synth_queryset(50, 20, [0.2] * 5, seed=1)
    assert all(np.array_equal(x.grades, y.grades) for x, y in zip(a, b))
    one = synth_queryset(1, 2, [0.2] * 5, seed=7)
    assert len(one) == 1 and len(one.queries[0]) == 2
    np.testing.assert_array_equal(one.queries[0].grades, synth_queryset(1, 2, [0.2] * 5, seed=7).queries[0].grades)


def test_synth_grade_frequencies():
    qs = synth_queryset(100, 20, [0.2] * 5, seed=1)
    grades = np.concatenate([q.grades for q in qs])
    freq = np.bincount(grades, minlength=5) / grades.size
    assert np.all(np.abs(freq - 0.2) < 0.05)


def test_synth_config_errors():
    with pytest.raises(CorpusError):
        synth_queryset(1, 1, [0.5, 0.5], seed=0)
    with pytest.raises(CorpusError):
        synth_queryset(1, 3, [0.5, 0.6], seed=0)
    degenerate = synth_queryset(2, 3, [0, 0, 1], seed=0)
    assert all((q.grades == 2).all() for q in degenerate)


def test_queryset_invariants():
    with pytest.raises(CorpusError):
        Query("q", ("a", "a"), [0, 1])
    with pytest.raises(CorpusError):
        QuerySet((Query("q", ("a",), [0]),), 4)
    with pytest.raises(CorpusError):
        QuerySet((Query("q", ("a", "b"), [0, 7]),), 4)


def test_padded_relevance():
    qs = QuerySet((Query("a", ("x", "y"), [0, 4]), Query("b", ("x", "y", "z"), [1, 2, 3])), 4)
    rel, mask = qs.padded_relevance(0.1)
    assert rel.shape == (2, 3)
    assert mask.tolist() == [[True, True, False], [True, True, True]]
    assert rel[0, 2] == 0.0 and rel[0, 1] == 1.0


@pytest.mark.skipif("not config.getoption('--mq2008', default=None)")
def test_mq2008_statistics(request):
    qs = parse_letor(request.config.getoption("--mq2008"))
    sizes = [len(q) for q in qs]
    assert 700 <= len(qs) <= 800
    assert 15 <= np.mean(sizes) <= 25
    assert qs.y_max <= 4
