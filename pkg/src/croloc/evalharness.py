"""Ranking evaluation: qrels handling, oracle linking, MAP/MRR/Success@N.

Metric semantics match trec_eval: average precision divides by the total
number of relevant files in the qrels (retrieved or not), reciprocal rank is
0 when nothing relevant is retrieved, and Success@N is the fraction of
queries with a relevant file in the top N.
"""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field

from .corpus import BugReport, normalize_path
from .errors import EvalError

log = logging.getLogger(__name__)

GRADE_DIRECT = 2
GRADE_INDIRECT = 1
MODES = ("direct", "direct+indirect")
DEFAULT_SUCCESS_NS = (1, 5, 10)


@dataclass
class Qrels:
    """Relevance grades per query: 2 directly fixed, 1 indirectly linked."""

    grades: dict[str, dict[str, int]] = field(default_factory=dict)

    def add(self, query_id: str, path: str, grade: int) -> None:
        self.grades.setdefault(query_id, {})[path] = grade

    def relevant(self, query_id: str, mode: str) -> set[str]:
        threshold = _mode_threshold(mode)
        return {p for p, g in self.grades.get(query_id, {}).items() if g >= threshold}

    def __contains__(self, query_id: str) -> bool:
        return query_id in self.grades


def _mode_threshold(mode: str) -> int:
    if mode == "direct":
        return GRADE_DIRECT
    if mode == "direct+indirect":
        return GRADE_INDIRECT
    raise EvalError(f"unknown evaluation mode {mode!r}; expected one of {MODES}")


def read_qrels(path: str) -> Qrels:
    """TREC qrels: `qid 0 path grade`, whitespace-separated."""
    qrels = Qrels()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 4:
                raise EvalError(f"{path}:{lineno}: expected 4 fields, found {len(parts)}")
            query_id, _, doc_path, grade_text = parts
            try:
                grade = int(grade_text)
            except ValueError:
                raise EvalError(f"{path}:{lineno}: grade {grade_text!r} is not an integer")
            if grade < 0:
                raise EvalError(f"{path}:{lineno}: negative grade {grade}")
            qrels.add(query_id, doc_path, grade)
    return qrels


def write_qrels(path: str, qrels: Qrels) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for query_id in sorted(qrels.grades):
            for doc_path in sorted(qrels.grades[query_id]):
                fh.write(f"{query_id} 0 {doc_path} {qrels.grades[query_id][doc_path]}\n")


def load_commit_log(path: str) -> list[dict]:
    """JSONL commits: {"hash": ..., "message": ..., "changed_files": [...]}."""
    commits = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise EvalError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise EvalError(f"{path}:{lineno}: commit entry must be an object")
            for key, kind in (("hash", str), ("message", str), ("changed_files", list)):
                if not isinstance(obj.get(key), kind):
                    raise EvalError(f"{path}:{lineno}: missing or malformed {key!r}")
            if not all(isinstance(f, str) for f in obj["changed_files"]):
                raise EvalError(f"{path}:{lineno}: changed_files must be strings")
            commits.append(obj)
    return commits


def _id_pattern(report_id: str) -> re.Pattern:
    # Word-ish boundaries so BUG-7 does not match inside BUG-73.
    return re.compile(rf"(?<![A-Za-z0-9_]){re.escape(report_id)}(?![A-Za-z0-9_])")


def link_oracles(reports: list[BugReport], commits: list[dict]) -> Qrels:
    """Build qrels from report fix lists and commit references.

    Files a report records as fixed are graded direct. Files changed by any
    commit whose message mentions the report id get the indirect grade,
    unless already direct. Reports without either source produce no rows.
    """
    qrels = Qrels()
    for report in reports:
        direct = {normalize_path(f) for f in (report.fixed_files or ())}
        for p in sorted(direct):
            qrels.add(report.id, p, GRADE_DIRECT)
        pattern = _id_pattern(report.id)
        for commit in commits:
            if not pattern.search(commit["message"]):
                continue
            for f in commit["changed_files"]:
                p = normalize_path(f)
                if p not in direct:
                    qrels.add(report.id, p, GRADE_INDIRECT)
    return qrels


def read_run_file(path: str) -> dict[str, list[str]]:
    """Parse a TREC run file into ranked path lists keyed by query id."""
    rows: dict[str, list[tuple[int, str]]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 6:
                raise EvalError(f"{path}:{lineno}: expected 6 fields, found {len(parts)}")
            query_id, _, doc_path, rank_text, score_text, _tag = parts
            try:
                rank = int(rank_text)
                float(score_text)
            except ValueError:
                raise EvalError(f"{path}:{lineno}: malformed rank or score")
            rows.setdefault(query_id, []).append((rank, doc_path))
    run: dict[str, list[str]] = {}
    for query_id, entries in rows.items():
        entries.sort()
        ranks = [r for r, _ in entries]
        if len(set(ranks)) != len(ranks):
            raise EvalError(f"{path}: duplicate rank for query {query_id}")
        paths = [p for _, p in entries]
        if len(set(paths)) != len(paths):
            raise EvalError(f"{path}: duplicate document for query {query_id}")
        run[query_id] = paths
    return run


def average_precision(ranked: list[str], relevant: set[str]) -> float:
    """Mean of precision at each relevant hit, over the full oracle size."""
    if not relevant:
        raise ValueError("average_precision needs a non-empty relevant set")
    hits = 0
    total = 0.0
    for k, path in enumerate(ranked, start=1):
        if path in relevant:
            hits += 1
            total += hits / k
    return total / len(relevant)


def reciprocal_rank(ranked: list[str], relevant: set[str]) -> float:
    for k, path in enumerate(ranked, start=1):
        if path in relevant:
            return 1.0 / k
    return 0.0


def first_relevant_rank(ranked: list[str], relevant: set[str]) -> int | None:
    for k, path in enumerate(ranked, start=1):
        if path in relevant:
            return k
    return None


def success_at_n(ranked: list[str], relevant: set[str], n: int) -> int:
    return 1 if any(p in relevant for p in ranked[:n]) else 0


@dataclass
class QueryResult:
    query_id: str
    ap: float
    rr: float
    first_rank: int | None
    n_relevant: int


@dataclass
class EvalReport:
    mode: str
    map_score: float
    mrr: float
    success: dict[int, float]
    per_query: list[QueryResult]
    skipped: list[str]

    @property
    def n_queries(self) -> int:
        return len(self.per_query)

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "queries_evaluated": self.n_queries,
            "queries_skipped": list(self.skipped),
            "map": self.map_score,
            "mrr": self.mrr,
            "success": {str(n): v for n, v in self.success.items()},
            "per_query": {
                q.query_id: {
                    "ap": q.ap,
                    "rr": q.rr,
                    "first_relevant_rank": q.first_rank,
                    "n_relevant": q.n_relevant,
                }
                for q in self.per_query
            },
        }

    def format_table(self) -> str:
        lines = [
            f"mode: {self.mode}",
            f"queries evaluated: {self.n_queries}"
            + (f" ({len(self.skipped)} skipped: no relevant files)" if self.skipped else ""),
            f"MAP  {self.map_score:.4f}",
            f"MRR  {self.mrr:.4f}",
        ]
        for n in sorted(self.success):
            lines.append(f"Success@{n}  {self.success[n]:.4f}")
        return "\n".join(lines)


def evaluate(
    run: dict[str, list[str]],
    qrels: Qrels,
    mode: str = "direct",
    success_ns: tuple[int, ...] = DEFAULT_SUCCESS_NS,
) -> EvalReport:
    """Score a run against qrels.

    A run query entirely absent from the qrels is an error; a query whose
    relevant set is empty after mode filtering is skipped with a warning and
    excluded from the averages.
    """
    _mode_threshold(mode)
    results: list[QueryResult] = []
    skipped: list[str] = []
    for query_id in sorted(run):
        if query_id not in qrels:
            raise EvalError(f"query {query_id!r} is missing from the qrels")
        relevant = qrels.relevant(query_id, mode)
        if not relevant:
            log.warning("query %s has no relevant files in mode %s; skipping",
                        query_id, mode)
            skipped.append(query_id)
            continue
        ranked = run[query_id]
        results.append(
            QueryResult(
                query_id=query_id,
                ap=average_precision(ranked, relevant),
                rr=reciprocal_rank(ranked, relevant),
                first_rank=first_relevant_rank(ranked, relevant),
                n_relevant=len(relevant),
            )
        )
    if not results:
        raise EvalError("no queries left to evaluate")
    n = len(results)
    success = {
        size: sum(1 for r in results if r.first_rank is not None and r.first_rank <= size) / n
        for size in success_ns
    }
    return EvalReport(
        mode=mode,
        map_score=sum(r.ap for r in results) / n,
        mrr=sum(r.rr for r in results) / n,
        success=success,
        per_query=results,
        skipped=skipped,
    )
