"""Scoring and ranking of source files against bug-report queries.

Three techniques build on one another:

    vsm         cosine(query, doc) over tf-idf weights
    rvsm        1/(1 + e^-N(len_d)) * vsm, len_d the document token count
                min-max normalized over the corpus
    buglocator  (1-alpha) * N(rvsm) + alpha * N(simi), where simi credits a
                file with cosine(query, prior_report)/n_fixed for every
                earlier resolved report whose fix touched it

Min-max normalization maps a constant series to 0.5 everywhere. Ties in the
final score break on lexicographic path order.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from datetime import datetime

import numpy as np

from ._kernels import csr_cosine
from .corpus import BugReport, normalize_path
from .errors import EvalError
from .index import Index, QueryVector, query_dense

log = logging.getLogger(__name__)

TECHNIQUES = ("vsm", "rvsm", "buglocator")
DEFAULT_ALPHA = 0.2
DEFAULT_TOP_K = 100


def cosine(a_weights: dict[int, float], a_norm: float,
           b_weights: dict[int, float], b_norm: float) -> float:
    """Cosine of two sparse vectors; either side with zero norm scores 0."""
    if a_norm <= 0.0 or b_norm <= 0.0:
        return 0.0
    if len(b_weights) < len(a_weights):
        a_weights, b_weights = b_weights, a_weights
    dot = math.fsum(w * b_weights[t] for t, w in a_weights.items() if t in b_weights)
    return dot / (a_norm * b_norm)


def minmax(values: np.ndarray) -> np.ndarray:
    """(x - min)/(max - min) elementwise; a constant series maps to 0.5."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return values.copy()
    lo = float(values.min())
    hi = float(values.max())
    if hi == lo:
        return np.full(values.shape, 0.5)
    return (values - lo) / (hi - lo)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-x))


@dataclass(frozen=True)
class HistoryEntry:
    """One earlier resolved report usable as similarity evidence."""

    report_id: str
    resolved_at: datetime
    vector: QueryVector
    fixed_doc_ids: tuple[int, ...]
    n_fixed: int


class HistorySet:
    """Prior-report evidence with temporal filtering.

    A report is usable for a query only when it was resolved strictly before
    the query was reported; unresolved reports and reports without fixed
    files never contribute.
    """

    def __init__(self, entries: tuple[HistoryEntry, ...]):
        self.entries = entries

    @classmethod
    def build(cls, reports: list[BugReport], index: Index) -> "HistorySet":
        from .index import vectorize_query

        doc_ids = {p: i for i, p in enumerate(index.paths)}
        entries = []
        for report in reports:
            if report.resolved_at is None or not report.fixed_files:
                continue
            fixed = []
            seen = set()
            for f in report.fixed_files:
                norm = normalize_path(f)
                if norm not in seen:
                    seen.add(norm)
                    fixed.append(norm)
            ids = tuple(doc_ids[p] for p in fixed if p in doc_ids)
            entries.append(
                HistoryEntry(
                    report_id=report.id,
                    resolved_at=report.resolved_at,
                    vector=vectorize_query(report.query_text, index),
                    fixed_doc_ids=ids,
                    n_fixed=len(fixed),
                )
            )
        return cls(tuple(entries))

    def before(self, reported_at: datetime) -> list[HistoryEntry]:
        return [e for e in self.entries if e.resolved_at < reported_at]

    def __len__(self) -> int:
        return len(self.entries)


def vsm_scores(query: QueryVector, index: Index) -> np.ndarray:
    indptr, indices, data, norms = index.csr()
    qdense = query_dense(query, index)
    return csr_cosine(indptr, indices, data, norms, qdense, query.norm)


def rvsm_scores(query: QueryVector, index: Index) -> np.ndarray:
    lengths = np.array([v.term_count for v in index.vectors], dtype=np.float64)
    return _sigmoid(minmax(lengths)) * vsm_scores(query, index)


def simi_scores(
    query: QueryVector,
    index: Index,
    history: list[HistoryEntry],
) -> np.ndarray:
    """Sum over usable prior reports of cosine(query, report)/n_fixed, added
    to every file that report's fix touched."""
    scores = np.zeros(index.n_docs, dtype=np.float64)
    for entry in history:
        if entry.n_fixed == 0 or not entry.fixed_doc_ids:
            continue
        sim = cosine(query.weights, query.norm, entry.vector.weights, entry.vector.norm)
        if sim == 0.0:
            continue
        share = sim / entry.n_fixed
        for doc_id in entry.fixed_doc_ids:
            scores[doc_id] += share
    return scores


def buglocator_scores(
    query: QueryVector,
    index: Index,
    history: list[HistoryEntry],
    alpha: float = DEFAULT_ALPHA,
) -> np.ndarray:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    rvsm = rvsm_scores(query, index)
    simi = simi_scores(query, index, history)
    return (1.0 - alpha) * minmax(rvsm) + alpha * minmax(simi)


def score_documents(
    query: QueryVector,
    index: Index,
    technique: str,
    history: list[HistoryEntry] | None = None,
    alpha: float = DEFAULT_ALPHA,
) -> np.ndarray:
    if technique == "vsm":
        return vsm_scores(query, index)
    if technique == "rvsm":
        return rvsm_scores(query, index)
    if technique == "buglocator":
        return buglocator_scores(query, index, history or [], alpha)
    raise ValueError(f"unknown technique {technique!r}; expected one of {TECHNIQUES}")


@dataclass(frozen=True)
class RankingEntry:
    rank: int
    path: str
    score: float
    doc_id: int


def make_ranking(scores: np.ndarray, index: Index, top_k: int = DEFAULT_TOP_K) -> list[RankingEntry]:
    """Top-k documents ordered by descending score, path-lexicographic on ties."""
    order = sorted(range(index.n_docs), key=lambda d: (-scores[d], index.paths[d]))
    if top_k > 0:
        order = order[:top_k]
    return [
        RankingEntry(rank=r, path=index.paths[d], score=float(scores[d]), doc_id=d)
        for r, d in enumerate(order, start=1)
    ]


def _check_field(value: str, what: str) -> str:
    if not value or any(ch.isspace() for ch in value):
        raise EvalError(f"{what} {value!r} is empty or contains whitespace; "
                        "run files are whitespace-delimited")
    return value


def format_run_lines(query_id: str, entries: list[RankingEntry], tag: str) -> list[str]:
    _check_field(query_id, "query id")
    _check_field(tag, "run tag")
    lines = []
    for e in entries:
        _check_field(e.path, "document path")
        lines.append(f"{query_id} Q0 {e.path} {e.rank} {e.score:.6f} {tag}")
    return lines


def write_run_file(
    path: str,
    rankings: list[tuple[str, list[RankingEntry]]],
    tag: str,
) -> None:
    """TREC run format: qid Q0 path rank score tag, scores to six decimals."""
    with open(path, "w", encoding="utf-8") as fh:
        for query_id, entries in rankings:
            for line in format_run_lines(query_id, entries, tag):
                fh.write(line + "\n")
