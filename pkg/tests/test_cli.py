"""End-to-end command line tests, driven through subprocesses."""
from __future__ import annotations

import json
import os
import subprocess
import sys

import pytest

from conftest import FIXTURES

PROJECT = FIXTURES / "synthetic_project"
TREE = PROJECT  # fixed_files paths in reports.jsonl are rooted here
REPORTS = PROJECT / "reports.jsonl"
COMMITS = PROJECT / "commit_log.jsonl"
GLOSSARY = PROJECT / "glossary.tsv"

ENTRY = "import sys; from croloc.cli import main; sys.exit(main())"


def run_cli(*args, cwd):
    env = os.environ.copy()
    env["CROLOC_DISABLE_NUMBA"] = "1"  # no jit warmup in subprocesses
    return subprocess.run(
        [sys.executable, "-c", ENTRY, *[str(a) for a in args]],
        capture_output=True,
        text=True,
        cwd=str(cwd),
        env=env,
        timeout=180,
    )


@pytest.fixture(scope="module")
def built(tmp_path_factory):
    """A translated index plus qrels, built once for the locate/eval tests."""
    out = tmp_path_factory.mktemp("built")
    result = run_cli(
        "index", "--tree", TREE, "--translator", "glossary",
        "--glossary", GLOSSARY, "--cache", out / "cache.jsonl",
        "--out-dir", out, cwd=out,
    )
    assert result.returncode == 0, result.stderr
    result = run_cli(
        "qrels", "--reports", REPORTS, "--commit-log", COMMITS,
        "-o", out / "qrels.txt", cwd=out,
    )
    assert result.returncode == 0, result.stderr
    return out


class TestHelp:
    def test_top_level_help(self, tmp_path):
        result = run_cli("--help", cwd=tmp_path)
        assert result.returncode == 0
        assert "usage" in result.stdout.lower()
        for name in ("extract", "translate", "index", "locate", "qrels", "eval"):
            assert name in result.stdout

    def test_subcommand_required(self, tmp_path):
        result = run_cli(cwd=tmp_path)
        assert result.returncode == 2


class TestExtract:
    def test_writes_jsonl_spans(self, tmp_path):
        out = tmp_path / "spans.jsonl"
        result = run_cli("extract", "--tree", TREE, "-o", out, cwd=tmp_path)
        assert result.returncode == 0, result.stderr
        rows = [json.loads(l) for l in out.read_text(encoding="utf-8").splitlines()]
        assert rows
        kinds = {r["kind"] for r in rows}
        assert kinds <= {"line_comment", "block_comment", "string_literal"}
        assert all(
            set(r) == {"path", "kind", "byte_start", "byte_end", "text", "segments"}
            for r in rows
        )
        # the fixture tree has Japanese comments, so segments must appear
        assert any(r["segments"] for r in rows)

    def test_stdout_by_default(self, tmp_path):
        result = run_cli("extract", "--tree", TREE, cwd=tmp_path)
        assert result.returncode == 0
        first = json.loads(result.stdout.splitlines()[0])
        assert "byte_start" in first

    def test_missing_tree_is_config_error(self, tmp_path):
        result = run_cli("extract", cwd=tmp_path)
        assert result.returncode == 1
        assert result.stderr.startswith("error:")


class TestTranslateCommand:
    def test_writes_tree_and_reports(self, tmp_path):
        result = run_cli(
            "translate", "--tree", TREE, "--reports", REPORTS,
            "--translator", "glossary", "--glossary", GLOSSARY,
            "--out-dir", tmp_path, cwd=tmp_path,
        )
        assert result.returncode == 0, result.stderr
        translated = tmp_path / "translated" / "src" / "shop" / "Zk001Batch.java"
        assert translated.exists()
        text = translated.read_text(encoding="utf-8")
        assert "inventory" in text  # glossary output reached the file
        reports_out = tmp_path / "reports.translated.jsonl"
        rows = [json.loads(l) for l in reports_out.read_text(encoding="utf-8").splitlines()]
        assert len(rows) == 11
        by_id = {r["id"]: r for r in rows}
        assert "inventory" in by_id["SHOP-101"]["summary"]
        # English report passes through unchanged
        assert by_id["SHOP-109"]["summary"] == "order placement returns -1 for valid customers"

    def test_requires_some_input(self, tmp_path):
        result = run_cli("translate", "--translator", "identity", cwd=tmp_path)
        assert result.returncode == 1
        assert "error:" in result.stderr

    def test_glossary_flag_implies_glossary_backend(self, tmp_path):
        result = run_cli(
            "translate", "--tree", TREE, "--glossary", GLOSSARY,
            "--out-dir", tmp_path, cwd=tmp_path,
        )
        assert result.returncode == 0, result.stderr
        translated = tmp_path / "translated" / "src" / "shop" / "Zk001Batch.java"
        assert "inventory" in translated.read_text(encoding="utf-8")

    def test_glossary_and_service_url_conflict(self, tmp_path):
        result = run_cli(
            "translate", "--tree", TREE, "--glossary", GLOSSARY,
            "--service-url", "http://localhost:1/translate",
            "--out-dir", tmp_path, cwd=tmp_path,
        )
        assert result.returncode == 1
        assert "pick a backend" in result.stderr

    def test_explicit_identity_beats_glossary_flag(self, tmp_path):
        result = run_cli(
            "translate", "--tree", TREE, "--translator", "identity",
            "--glossary", GLOSSARY, "--out-dir", tmp_path, cwd=tmp_path,
        )
        assert result.returncode == 0, result.stderr
        translated = tmp_path / "translated" / "src" / "shop" / "Zk001Batch.java"
        original = (TREE / "src" / "shop" / "Zk001Batch.java").read_bytes()
        assert translated.read_bytes() == original


class TestIndexCommand:
    def test_default_artifact_name(self, tmp_path):
        result = run_cli(
            "index", "--tree", TREE, "--translator", "identity",
            "--out-dir", tmp_path, cwd=tmp_path,
        )
        assert result.returncode == 0, result.stderr
        assert (tmp_path / "index.json").exists()

    def test_no_translate_artifact_name(self, tmp_path):
        result = run_cli(
            "index", "--tree", TREE, "--no-translate",
            "--out-dir", tmp_path, cwd=tmp_path,
        )
        assert result.returncode == 0, result.stderr
        assert (tmp_path / "index.notranslate.json").exists()

    def test_verbose_logs_to_stderr(self, tmp_path):
        result = run_cli(
            "index", "-v", "--tree", TREE, "--translator", "identity",
            "--out-dir", tmp_path, cwd=tmp_path,
        )
        assert result.returncode == 0
        assert "indexed" in result.stderr

    def test_quiet_by_default(self, tmp_path):
        result = run_cli(
            "index", "--tree", TREE, "--translator", "identity",
            "--out-dir", tmp_path, cwd=tmp_path,
        )
        assert "indexed" not in result.stderr


class TestLocateCommand:
    def test_buglocator_run_file(self, built, tmp_path):
        result = run_cli(
            "locate", "--index", built / "index.json", "--reports", REPORTS,
            "--translator", "glossary", "--glossary", GLOSSARY,
            "--technique", "buglocator", "--out-dir", tmp_path, cwd=tmp_path,
        )
        assert result.returncode == 0, result.stderr
        run_path = tmp_path / "run.buglocator.trec"
        assert run_path.exists()
        lines = run_path.read_text(encoding="utf-8").splitlines()
        assert lines
        parts = lines[0].split()
        assert len(parts) == 6
        assert parts[1] == "Q0"
        assert parts[5] == "croloc-buglocator"
        # non-functional and unresolved reports are filtered out
        qids = {l.split()[0] for l in lines}
        assert "SHOP-110" not in qids
        assert "SHOP-111" not in qids
        assert "SHOP-101" in qids

    def test_no_translate_artifact_name(self, built, tmp_path):
        result = run_cli(
            "locate", "--index", built / "index.json", "--reports", REPORTS,
            "--no-translate", "--technique", "vsm",
            "--out-dir", tmp_path, cwd=tmp_path,
        )
        assert result.returncode == 0, result.stderr
        assert (tmp_path / "run.vsm.notranslate.trec").exists()

    def test_query_subset(self, built, tmp_path):
        result = run_cli(
            "locate", "--index", built / "index.json", "--reports", REPORTS,
            "--translator", "glossary", "--glossary", GLOSSARY,
            "--technique", "vsm", "--query", "SHOP-101",
            "--out-dir", tmp_path, cwd=tmp_path,
        )
        assert result.returncode == 0, result.stderr
        lines = (tmp_path / "run.vsm.trec").read_text(encoding="utf-8").splitlines()
        assert {l.split()[0] for l in lines} == {"SHOP-101"}

    def test_unknown_query_id(self, built, tmp_path):
        result = run_cli(
            "locate", "--index", built / "index.json", "--reports", REPORTS,
            "--technique", "vsm", "--query", "SHOP-999",
            "--out-dir", tmp_path, cwd=tmp_path,
        )
        assert result.returncode == 1
        assert "SHOP-999" in result.stderr

    def test_bad_technique_is_usage_error(self, built, tmp_path):
        result = run_cli(
            "locate", "--index", built / "index.json", "--reports", REPORTS,
            "--technique", "pagerank", cwd=tmp_path,
        )
        assert result.returncode == 2
        assert "invalid choice" in result.stderr

    def test_custom_tag(self, built, tmp_path):
        result = run_cli(
            "locate", "--index", built / "index.json", "--reports", REPORTS,
            "--no-translate", "--technique", "vsm", "--tag", "exp7",
            "--out-dir", tmp_path, cwd=tmp_path,
        )
        assert result.returncode == 0, result.stderr
        lines = (tmp_path / "run.vsm.notranslate.trec").read_text(
            encoding="utf-8"
        ).splitlines()
        assert lines[0].split()[5] == "exp7"


class TestQrelsCommand:
    def test_stdout_rows(self, tmp_path):
        result = run_cli(
            "qrels", "--reports", REPORTS, "--commit-log", COMMITS, cwd=tmp_path
        )
        assert result.returncode == 0, result.stderr
        lines = result.stdout.splitlines()
        assert all(len(l.split()) == 4 for l in lines)
        assert "SHOP-101 0 src/shop/Zk001Batch.java 2" in lines
        # the fix commit for SHOP-101 also touched the audit logger
        assert "SHOP-101 0 src/shop/AuditLogger.java 1" in lines

    def test_file_output(self, tmp_path):
        out = tmp_path / "qrels.txt"
        result = run_cli(
            "qrels", "--reports", REPORTS, "--commit-log", COMMITS,
            "-o", out, cwd=tmp_path,
        )
        assert result.returncode == 0
        assert out.exists()
        assert not result.stdout.strip()


class TestEvalCommand:
    def _locate(self, built, tmp_path, technique="buglocator"):
        result = run_cli(
            "locate", "--index", built / "index.json", "--reports", REPORTS,
            "--translator", "glossary", "--glossary", GLOSSARY,
            "--technique", technique, "--out-dir", tmp_path, cwd=tmp_path,
        )
        assert result.returncode == 0, result.stderr
        return tmp_path / f"run.{technique}.trec"

    def test_table_output(self, built, tmp_path):
        run_path = self._locate(built, tmp_path)
        result = run_cli(
            "eval", "--run", run_path, "--qrels", built / "qrels.txt",
            "--mode", "direct", cwd=tmp_path,
        )
        assert result.returncode == 0, result.stderr
        assert "MAP" in result.stdout
        assert "MRR" in result.stdout
        assert "Success@10" in result.stdout

    def test_json_report(self, built, tmp_path):
        run_path = self._locate(built, tmp_path)
        json_path = tmp_path / "report.json"
        result = run_cli(
            "eval", "--run", run_path, "--qrels", built / "qrels.txt",
            "--mode", "direct+indirect", "--json", json_path, cwd=tmp_path,
        )
        assert result.returncode == 0, result.stderr
        payload = json.loads(json_path.read_text(encoding="utf-8"))
        assert payload["mode"] == "direct+indirect"
        assert 0.0 < payload["map"] <= 1.0
        assert payload["queries_evaluated"] > 0

    def test_run_query_missing_from_qrels(self, built, tmp_path):
        bad_run = tmp_path / "bad.trec"
        bad_run.write_text("GHOST-1 Q0 src/shop/Zk001Batch.java 1 0.900000 t\n",
                           encoding="utf-8")
        result = run_cli(
            "eval", "--run", bad_run, "--qrels", built / "qrels.txt", cwd=tmp_path
        )
        assert result.returncode == 1
        assert "GHOST-1" in result.stderr


class TestConfigFile:
    def test_config_supplies_defaults(self, tmp_path):
        cfg = tmp_path / "croloc.json"
        cfg.write_text(json.dumps({
            "tree": str(TREE),
            "translator": "glossary",
            "glossary": str(GLOSSARY),
            "out_dir": str(tmp_path),
        }), encoding="utf-8")
        result = run_cli("index", "--config", cfg, cwd=tmp_path)
        assert result.returncode == 0, result.stderr
        assert (tmp_path / "index.json").exists()

    def test_flag_overrides_config(self, built, tmp_path):
        cfg = tmp_path / "croloc.json"
        cfg.write_text(json.dumps({
            "reports": str(REPORTS),
            "technique": "vsm",
            "out_dir": str(tmp_path),
        }), encoding="utf-8")
        result = run_cli(
            "locate", "--config", cfg, "--index", built / "index.json",
            "--no-translate", "--technique", "rvsm", cwd=tmp_path,
        )
        assert result.returncode == 0, result.stderr
        # the flag value names the artifact, not the config value
        assert (tmp_path / "run.rvsm.notranslate.trec").exists()
        assert not (tmp_path / "run.vsm.notranslate.trec").exists()

    def test_unknown_key_rejected(self, tmp_path):
        cfg = tmp_path / "croloc.json"
        cfg.write_text(json.dumps({"tree": str(TREE), "bogus": 1}), encoding="utf-8")
        result = run_cli("index", "--config", cfg, cwd=tmp_path)
        assert result.returncode == 1
        assert "bogus" in result.stderr

    def test_config_missing_file(self, tmp_path):
        result = run_cli("index", "--config", tmp_path / "nope.json", cwd=tmp_path)
        assert result.returncode == 1
        assert result.stderr.startswith("error:")


class TestFullPipeline:
    def test_extract_to_eval(self, tmp_path):
        steps = [
            ("index", "--tree", TREE, "--translator", "glossary",
             "--glossary", GLOSSARY, "--cache", tmp_path / "cache.jsonl",
             "--out-dir", tmp_path),
            ("locate", "--index", tmp_path / "index.json", "--reports", REPORTS,
             "--translator", "glossary", "--glossary", GLOSSARY,
             "--cache", tmp_path / "cache.jsonl",
             "--technique", "buglocator", "--out-dir", tmp_path),
            ("qrels", "--reports", REPORTS, "--commit-log", COMMITS,
             "-o", tmp_path / "qrels.txt"),
            ("eval", "--run", tmp_path / "run.buglocator.trec",
             "--qrels", tmp_path / "qrels.txt", "--mode", "direct",
             "--json", tmp_path / "report.json"),
        ]
        for step in steps:
            result = run_cli(*step, cwd=tmp_path)
            assert result.returncode == 0, f"{step[0]} failed: {result.stderr}"
        payload = json.loads((tmp_path / "report.json").read_text(encoding="utf-8"))
        # translated pipeline pins every oracle file at rank 1 on this corpus
        assert payload["map"] == pytest.approx(1.0)
        assert payload["mrr"] == pytest.approx(1.0)
        assert (tmp_path / "cache.jsonl").exists()
