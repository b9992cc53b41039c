"""Ranking corpora: LETOR ingestion, synthetic generation, relevance probabilities."""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass

import numpy as np

from .errors import DataError

logger = logging.getLogger(__name__)

DEFAULT_EPSILON = 0.1

_QID = re.compile(r"^qid:(\S+)$")
_FEATURE = re.compile(r"^\d+:[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?$")
_DOCID = re.compile(r"docid\s*=\s*(\S+)")


class CorpusError(DataError):
    pass


class LetorParseError(CorpusError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class EmptyCorpusError(CorpusError):
    pass


@dataclass(frozen=True)
class Query:
    query_id: str
    item_ids: tuple[str, ...]
    grades: np.ndarray

    def __post_init__(self):
        grades = np.asarray(self.grades, dtype=np.int64)
        grades.setflags(write=False)
        object.__setattr__(self, "grades", grades)
        if len(self.item_ids) != len(grades):
            raise CorpusError(f"query {self.query_id}: {len(self.item_ids)} ids for {len(grades)} grades")
        if len(set(self.item_ids)) != len(self.item_ids):
            raise CorpusError(f"query {self.query_id}: duplicate item ids")

    def __len__(self):
        return len(self.item_ids)


@dataclass(frozen=True)
class QuerySet:
    queries: tuple[Query, ...]
    y_max: int

    def __post_init__(self):
        object.__setattr__(self, "queries", tuple(self.queries))
        if self.y_max < 1:
            raise CorpusError("y_max must be >= 1")
        for q in self.queries:
            if len(q) < 2:
                raise CorpusError(f"query {q.query_id} has fewer than 2 items")
            if q.grades.min() < 0 or q.grades.max() > self.y_max:
                raise CorpusError(f"query {q.query_id} has grades outside 0..{self.y_max}")

    def __len__(self):
        return len(self.queries)

    def __iter__(self):
        return iter(self.queries)

    def relevance(self, epsilon: float = DEFAULT_EPSILON) -> list[np.ndarray]:
        """Per-query arrays of click-relevance probabilities."""
        return [relevance_probability(q.grades, self.y_max, epsilon) for q in self.queries]

    def padded_relevance(self, epsilon: float = DEFAULT_EPSILON) -> tuple[np.ndarray, np.ndarray]:
        """Relevance as a ``(num_queries, max_items)`` matrix plus a validity mask.

        Padding slots carry relevance 0 so they drop out of every sum.
        """
        width = max(len(q) for q in self.queries)
        rel = np.zeros((len(self.queries), width))
        mask = np.zeros((len(self.queries), width), dtype=bool)
        for i, r in enumerate(self.relevance(epsilon)):
            rel[i, : len(r)] = r
            mask[i, : len(r)] = True
        return rel, mask


def relevance_probability(grade, y_max: int, epsilon: float = DEFAULT_EPSILON):
    """Map graded judgments to P(r=1): eps + (1 - eps) (2^y - 1) / (2^y_max - 1)."""
    if y_max < 1:
        raise ValueError("y_max must be >= 1")
    if not 0.0 <= epsilon < 1.0:
        raise ValueError("epsilon must lie in [0, 1)")
    g = np.asarray(grade)
    if np.any(g < 0) or np.any(g > y_max) or np.any(g != np.floor(g)):
        raise ValueError(f"grade outside 0..{y_max}: {grade!r}")
    out = epsilon + (1.0 - epsilon) * (np.exp2(g) - 1.0) / (2.0**y_max - 1.0)
    out = np.where(g == y_max, 1.0, out)  # eps + (1 - eps) can round below 1
    return float(out) if np.ndim(out) == 0 else out


def parse_letor(path, y_max: int | None = None) -> QuerySet:
    """Read a LETOR/SVMlight ranking file.

    Queries keep first-appearance order. Features are checked for syntax and
    dropped. Item ids come from a ``docid = ...`` comment when present, else
    ``<qid>-<position>``. Queries with fewer than two candidates are skipped
    with a warning. When ``y_max`` is None it is the largest grade seen.
    """
    groups: dict[str, tuple[list[str], list[int]]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            body, _, comment = raw.partition("#")
            tokens = body.split()
            if not tokens:
                continue
            if len(tokens) < 2:
                raise LetorParseError(lineno, "expected '<grade> qid:<id> ...'")
            try:
                grade = int(tokens[0])
            except ValueError:
                raise LetorParseError(lineno, f"malformed grade {tokens[0]!r}") from None
            m = _QID.match(tokens[1])
            if m is None:
                raise LetorParseError(lineno, f"malformed qid token {tokens[1]!r}")
            for tok in tokens[2:]:
                if not _FEATURE.match(tok):
                    raise LetorParseError(lineno, f"malformed feature {tok!r}")
            if grade < 0 or (y_max is not None and grade > y_max):
                raise LetorParseError(lineno, f"grade {grade} outside 0..{y_max}")
            qid = m.group(1)
            ids, grades = groups.setdefault(qid, ([], []))
            d = _DOCID.search(comment)
            item_id = d.group(1) if d else f"{qid}-{len(ids)}"
            if item_id in ids:
                raise LetorParseError(lineno, f"duplicate item {item_id!r} in query {qid}")
            ids.append(item_id)
            grades.append(grade)

    if not groups:
        raise EmptyCorpusError(f"{path}: no ranking lines")
    if y_max is None:
        y_max = max(1, max(max(g) for _, g in groups.values()))
    queries = []
    for qid, (ids, grades) in groups.items():
        if len(ids) < 2:
            logger.warning("dropping query %s: %d candidate(s)", qid, len(ids))
            continue
        queries.append(Query(qid, tuple(ids), np.array(grades)))
    if not queries:
        raise EmptyCorpusError(f"{path}: no query has two or more candidates")
    return QuerySet(tuple(queries), y_max)


def write_letor(queryset: QuerySet, path) -> None:
    """Write ``queryset`` in LETOR format with a single dummy feature."""
    with open(path, "w", encoding="utf-8") as fh:
        for q in queryset:
            for item_id, grade in zip(q.item_ids, q.grades):
                fh.write(f"{int(grade)} qid:{q.query_id} 1:0 #docid = {item_id}\n")


def synth_queryset(num_queries: int, docs_per_query: int, grade_distribution, seed: int) -> QuerySet:
    """Sample a corpus with i.i.d. grades; ``y_max = len(grade_distribution) - 1``."""
    if num_queries < 1:
        raise CorpusError("num_queries must be >= 1")
    if docs_per_query < 2:
        raise CorpusError("docs_per_query must be >= 2")
    p = np.asarray(grade_distribution, dtype=float)
    if p.ndim != 1 or len(p) < 2 or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise CorpusError("grade_distribution must be a probability vector over 0..y_max")
    rng = np.random.default_rng(seed)
    grades = rng.choice(len(p), size=(num_queries, docs_per_query), p=p / p.sum())
    queries = tuple(
        Query(f"q{i}", tuple(f"d{j}" for j in range(docs_per_query)), grades[i])
        for i in range(num_queries)
    )
    return QuerySet(queries, len(p) - 1)

