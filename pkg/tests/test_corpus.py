import json
from datetime import datetime, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from croloc.corpus import (
    REASON_FIX_NOT_COMPLETED,
    REASON_NO_SOURCE_FILE,
    REASON_NOT_FUNCTIONAL,
    BugReport,
    Language,
    filter_usable_reports,
    load_bug_reports,
    load_source_tree,
    normalize_path,
    parse_rfc3339,
    report_to_obj,
)
from croloc.errors import CorpusError, ReportFormatError


def _write_tree(root, files):
    for rel, text in files.items():
        p = root / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text, encoding="utf-8")


class TestNormalizePath:
    def test_backslashes_become_forward(self):
        assert normalize_path("src\\app\\Main.java") == "src/app/Main.java"

    def test_leading_dot_slash_stripped(self):
        assert normalize_path("./src/Main.java") == "src/Main.java"

    def test_plain_path_unchanged(self):
        assert normalize_path("src/Main.java") == "src/Main.java"

    @given(st.text(alphabet="abc/\\.", min_size=1, max_size=30))
    def test_idempotent(self, path):
        assert normalize_path(normalize_path(path)) == normalize_path(path)


class TestLoadSourceTree:
    def test_lexicographic_order_and_contiguous_ids(self, tmp_path):
        _write_tree(tmp_path, {
            "b/Two.java": "class Two {}",
            "a/One.java": "class One {}",
            "a/Zed.cs": "class Zed {}",
        })
        corpus = load_source_tree(tmp_path, ["**/*.java", "**/*.cs"])
        assert [d.path for d in corpus.documents] == [
            "a/One.java", "a/Zed.cs", "b/Two.java"]
        assert [d.doc_id for d in corpus.documents] == [0, 1, 2]

    def test_language_mapping(self, tmp_path):
        _write_tree(tmp_path, {
            "A.java": "x", "B.cs": "x", "C.sql": "x",
        })
        corpus = load_source_tree(tmp_path, ["**/*.java", "**/*.cs", "**/*.sql"])
        langs = {d.path: d.language for d in corpus.documents}
        assert langs == {"A.java": Language.JAVA, "B.cs": Language.CSHARP,
                         "C.sql": Language.GENERIC}

    def test_include_patterns_filter(self, tmp_path):
        _write_tree(tmp_path, {"A.java": "x", "B.txt": "x"})
        corpus = load_source_tree(tmp_path, ["**/*.java"])
        assert [d.path for d in corpus.documents] == ["A.java"]

    def test_strict_decode_error_names_file(self, tmp_path):
        (tmp_path / "Bad.java").write_bytes(b"class \xff {}")
        with pytest.raises(CorpusError, match="Bad.java"):
            load_source_tree(tmp_path, ["**/*.java"])

    def test_permissive_skips_and_records(self, tmp_path):
        _write_tree(tmp_path, {"Good.java": "class Good {}"})
        (tmp_path / "Bad.java").write_bytes(b"\xff\xfe")
        corpus = load_source_tree(tmp_path, ["**/*.java"], permissive=True)
        assert [d.path for d in corpus.documents] == ["Good.java"]
        assert len(corpus.skipped) == 1
        path, reason = corpus.skipped[0]
        assert path == "Bad.java"
        assert "utf-8" in reason

    def test_missing_root(self, tmp_path):
        with pytest.raises(CorpusError):
            load_source_tree(tmp_path / "nope", ["**/*.java"])

    def test_byte_len_counts_utf8_bytes(self, tmp_path):
        _write_tree(tmp_path, {"J.java": "// 在庫\n"})
        corpus = load_source_tree(tmp_path, ["**/*.java"])
        doc = corpus.documents[0]
        assert doc.byte_len == len(doc.raw_text.encode("utf-8")) == 10


class TestParseRfc3339:
    def test_z_suffix(self):
        dt = parse_rfc3339("2024-03-01T10:00:00Z")
        assert dt == datetime(2024, 3, 1, 10, tzinfo=timezone.utc)

    def test_offset(self):
        jst = parse_rfc3339("2024-03-01T19:00:00+09:00")
        utc = parse_rfc3339("2024-03-01T10:00:00Z")
        assert jst == utc

    def test_naive_taken_as_utc(self):
        dt = parse_rfc3339("2024-03-01T10:00:00")
        assert dt.tzinfo is timezone.utc

    def test_garbage_rejected(self):
        with pytest.raises(ReportFormatError):
            parse_rfc3339("yesterday")


class TestLoadBugReports:
    def _load(self, tmp_path, lines):
        p = tmp_path / "reports.jsonl"
        p.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return load_bug_reports(p)

    def test_minimal_report_defaults(self, tmp_path):
        reports = self._load(tmp_path, [json.dumps(
            {"id": "B-1", "summary": "s", "reported_at": "2024-01-01T00:00:00Z"})])
        r = reports[0]
        assert r.description == ""
        assert r.resolved_at is None
        assert r.fixed_files is None
        assert r.functional is True
        assert r.query_text == "s\n"

    def test_missing_required_field_has_line_number(self, tmp_path):
        lines = [
            json.dumps({"id": "B-1", "summary": "s", "reported_at": "2024-01-01T00:00:00Z"}),
            json.dumps({"id": "B-2", "summary": "s"}),
        ]
        with pytest.raises(ReportFormatError, match="line 2"):
            self._load(tmp_path, lines)

    def test_malformed_json_line(self, tmp_path):
        with pytest.raises(ReportFormatError, match="line 1"):
            self._load(tmp_path, ["{not json"])

    def test_duplicate_id_rejected(self, tmp_path):
        line = json.dumps({"id": "B-1", "summary": "s",
                           "reported_at": "2024-01-01T00:00:00Z"})
        with pytest.raises(ReportFormatError, match="duplicate"):
            self._load(tmp_path, [line, line])

    def test_resolution_before_report_rejected(self, tmp_path):
        with pytest.raises(ReportFormatError, match="resolved_at"):
            self._load(tmp_path, [json.dumps({
                "id": "B-1", "summary": "s",
                "reported_at": "2024-02-01T00:00:00Z",
                "resolved_at": "2024-01-01T00:00:00Z"})])

    def test_fixed_files_must_be_nonempty_strings(self, tmp_path):
        with pytest.raises(ReportFormatError, match="fixed_files"):
            self._load(tmp_path, [json.dumps({
                "id": "B-1", "summary": "s",
                "reported_at": "2024-01-01T00:00:00Z",
                "fixed_files": ["ok.java", ""]})])

    def test_blank_lines_skipped(self, tmp_path):
        p = tmp_path / "reports.jsonl"
        p.write_text('\n{"id": "B-1", "summary": "s", '
                     '"reported_at": "2024-01-01T00:00:00Z"}\n\n', encoding="utf-8")
        assert len(load_bug_reports(p)) == 1

    def test_round_trip_through_obj(self, tmp_path):
        obj = {"id": "B-1", "summary": "概要", "description": "詳細",
               "reported_at": "2024-01-01T00:00:00+00:00",
               "resolved_at": "2024-01-02T00:00:00+00:00",
               "fixed_files": ["a.java"], "functional": True}
        reports = self._load(tmp_path, [json.dumps(obj, ensure_ascii=False)])
        assert report_to_obj(reports[0]) == obj


def _report(rid, functional=True, resolved=True, fixed=("src/A.java",)):
    return BugReport(
        id=rid, summary="s", description="d",
        reported_at=datetime(2024, 1, 1, tzinfo=timezone.utc),
        resolved_at=datetime(2024, 1, 2, tzinfo=timezone.utc) if resolved else None,
        fixed_files=tuple(fixed) if fixed else None,
        functional=functional,
    )


class TestFilterUsableReports:
    CORPUS = {"src/A.java", "src/B.java"}

    def test_usable_report_passes(self):
        usable, excluded = filter_usable_reports([_report("R1")], self.CORPUS, {".java"})
        assert [r.id for r in usable] == ["R1"]
        assert excluded == []

    def test_non_functional_excluded_first(self):
        # criterion order: a non-functional report is reported as such even
        # when its fix is also incomplete
        usable, excluded = filter_usable_reports(
            [_report("R1", functional=False, resolved=False, fixed=None)],
            self.CORPUS, {".java"})
        assert usable == []
        assert excluded[0].reason == REASON_NOT_FUNCTIONAL

    def test_unresolved_is_not_completed(self):
        _, excluded = filter_usable_reports(
            [_report("R1", resolved=False)], self.CORPUS, {".java"})
        assert excluded[0].reason == REASON_FIX_NOT_COMPLETED

    def test_no_fixed_files_is_not_completed(self):
        _, excluded = filter_usable_reports(
            [_report("R1", fixed=None)], self.CORPUS, {".java"})
        assert excluded[0].reason == REASON_FIX_NOT_COMPLETED

    def test_fix_outside_corpus_excluded(self):
        _, excluded = filter_usable_reports(
            [_report("R1", fixed=("src/Gone.java",))], self.CORPUS, {".java"})
        assert excluded[0].reason == REASON_NO_SOURCE_FILE

    def test_wrong_extension_excluded(self):
        corpus = {"docs/readme.md"}
        _, excluded = filter_usable_reports(
            [_report("R1", fixed=("docs/readme.md",))], corpus, {".java"})
        assert excluded[0].reason == REASON_NO_SOURCE_FILE

    def test_one_matching_file_is_enough(self):
        usable, _ = filter_usable_reports(
            [_report("R1", fixed=("docs/readme.md", "src/B.java"))],
            self.CORPUS, {".java"})
        assert len(usable) == 1

    def test_windows_style_fixed_paths_normalize(self):
        usable, _ = filter_usable_reports(
            [_report("R1", fixed=("src\\A.java",))], self.CORPUS, {".java"})
        assert len(usable) == 1
