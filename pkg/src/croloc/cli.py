"""Command line interface.

Subcommands compose into a pipeline:

    extract    dump comment/string spans and their Japanese segments
    translate  materialize a translated source tree and report file
    index      build the tf-idf index (translating in memory by default)
    locate     rank files for each bug report into a TREC run file
    qrels      derive relevance judgments from fix lists and a commit log
    eval       score a run file against qrels

Every subcommand accepts --config pointing at a JSON object whose keys match
the long option names; explicit flags win over config values. Exit status is
0 only when the command completed without error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path, PurePosixPath

from .corpus import (
    filter_usable_reports,
    load_bug_reports,
    load_source_tree,
    report_to_obj,
)
from .errors import ConfigError, CrolocError
from .evalharness import (
    MODES,
    evaluate,
    link_oracles,
    load_commit_log,
    read_qrels,
    read_run_file,
    write_qrels,
)
from .extract import extract_spans, japanese_segments
from .index import (
    TokenizerOptions,
    index_documents,
    load_index,
    save_index,
    vectorize_query,
)
from .rank import (
    DEFAULT_ALPHA,
    DEFAULT_TOP_K,
    TECHNIQUES,
    HistorySet,
    make_ranking,
    score_documents,
    write_run_file,
)
from .translate import (
    GlossaryBackend,
    IdentityBackend,
    ServiceBackend,
    TranslationCache,
    TranslatorBackend,
    load_glossary,
    translate_document,
    translate_report,
)

log = logging.getLogger(__name__)

DEFAULT_INCLUDE = ("**/*.java", "**/*.cs")
TRANSLATORS = ("identity", "glossary", "service")

# Config keys mirror long option names; anything else is a typo worth failing on.
CONFIG_KEYS = {
    "tree", "reports", "include", "permissive", "translator", "glossary",
    "cache", "service_url", "alpha", "top_k", "technique", "mode",
    "stemming", "out_dir",
}


def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    unknown = set(cfg) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"config {path} has unknown keys: {', '.join(sorted(unknown))}")
    return cfg


def _apply_config(args: argparse.Namespace) -> None:
    if not getattr(args, "config", None):
        return
    cfg = _load_config(args.config)
    for key, value in cfg.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)


def _require(args: argparse.Namespace, name: str) -> str:
    value = getattr(args, name, None)
    if value is None:
        raise ConfigError(f"missing required option --{name.replace('_', '-')}")
    return value


def _fill(args: argparse.Namespace, **defaults) -> None:
    for key, value in defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)


def _include_patterns(args: argparse.Namespace) -> list[str]:
    include = getattr(args, "include", None)
    if include is None:
        return list(DEFAULT_INCLUDE)
    if isinstance(include, str):
        return [include]
    if not isinstance(include, list) or not all(isinstance(p, str) for p in include):
        raise ConfigError("include must be a list of glob patterns")
    return include


def _make_backend(args: argparse.Namespace) -> TranslatorBackend:
    kind = getattr(args, "translator", None)
    if kind is None:
        # Infer the backend from whichever option was supplied so that
        # passing --glossary alone does not silently translate nothing.
        has_glossary = bool(getattr(args, "glossary", None))
        has_url = bool(getattr(args, "service_url", None))
        if has_glossary and has_url:
            raise ConfigError(
                "both --glossary and --service-url given; "
                "pick a backend with --translator")
        kind = "glossary" if has_glossary else "service" if has_url else "identity"
    if kind == "identity":
        return IdentityBackend()
    if kind == "glossary":
        glossary_path = getattr(args, "glossary", None)
        if not glossary_path:
            raise ConfigError("the glossary translator requires --glossary")
        return GlossaryBackend(load_glossary(glossary_path))
    if kind == "service":
        url = getattr(args, "service_url", None)
        if not url:
            raise ConfigError("the service translator requires --service-url")
        return ServiceBackend(url)
    raise ConfigError(f"unknown translator {kind!r}; expected one of {TRANSLATORS}")


def _make_cache(args: argparse.Namespace) -> TranslationCache | None:
    path = getattr(args, "cache", None)
    return TranslationCache(path) if path else None


def _tokenizer_options(args: argparse.Namespace) -> TokenizerOptions:
    return TokenizerOptions(stemming=bool(getattr(args, "stemming", False)))


def _check_alpha(alpha: float) -> float:
    if not 0.0 <= alpha <= 1.0:
        raise ConfigError(f"--alpha must lie in [0, 1], got {alpha}")
    return alpha


def _default_index_path(args: argparse.Namespace) -> str:
    name = "index.notranslate.json" if args.no_translate else "index.json"
    return str(Path(args.out_dir) / name)


def _default_run_path(args: argparse.Namespace) -> str:
    suffix = ".notranslate" if args.no_translate else ""
    return str(Path(args.out_dir) / f"run.{args.technique}{suffix}.trec")


def cmd_extract(args: argparse.Namespace) -> int:
    tree = _require(args, "tree")
    corpus = load_source_tree(tree, _include_patterns(args),
                              permissive=bool(args.permissive))
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w", encoding="utf-8")
    try:
        n_spans = 0
        for doc in corpus.documents:
            for span in extract_spans(doc):
                segments = japanese_segments(span.text)
                obj = {
                    "path": doc.path,
                    "kind": span.kind.value,
                    "byte_start": span.byte_start,
                    "byte_end": span.byte_end,
                    "text": span.text,
                    "segments": [
                        {"byte_start": s.byte_start, "byte_end": s.byte_end, "text": s.text}
                        for s in segments
                    ],
                }
                out.write(json.dumps(obj, ensure_ascii=False) + "\n")
                n_spans += 1
    finally:
        if out is not sys.stdout:
            out.close()
    log.info("extracted %d spans from %d files", n_spans, len(corpus))
    return 0


def cmd_translate(args: argparse.Namespace) -> int:
    _fill(args, out_dir=".")
    if getattr(args, "tree", None) is None and getattr(args, "reports", None) is None:
        raise ConfigError("translate needs --tree and/or --reports")
    backend = _make_backend(args)
    cache = _make_cache(args)
    out_dir = Path(args.out_dir)

    if getattr(args, "tree", None) is not None:
        corpus = load_source_tree(args.tree, _include_patterns(args),
                                  permissive=bool(args.permissive))
        dest_root = out_dir / "translated"
        total_segments = 0
        for doc in corpus.documents:
            translated, n_segments = translate_document(doc, backend, cache)
            total_segments += n_segments
            dest = dest_root / PurePosixPath(doc.path)
            dest.parent.mkdir(parents=True, exist_ok=True)
            dest.write_text(translated.raw_text, encoding="utf-8")
        log.info("translated %d segments across %d files into %s",
                 total_segments, len(corpus), dest_root)

    if getattr(args, "reports", None) is not None:
        reports = load_bug_reports(args.reports)
        out_path = out_dir / "reports.translated.jsonl"
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_path, "w", encoding="utf-8") as fh:
            for report in reports:
                translated = translate_report(report, backend, cache)
                fh.write(json.dumps(report_to_obj(translated), ensure_ascii=False) + "\n")
        log.info("translated %d reports into %s", len(reports), out_path)
    return 0


def cmd_index(args: argparse.Namespace) -> int:
    tree = _require(args, "tree")
    _fill(args, out_dir=".", stemming=False)
    corpus = load_source_tree(tree, _include_patterns(args),
                              permissive=bool(args.permissive))
    documents = corpus.documents
    if not args.no_translate:
        backend = _make_backend(args)
        if not isinstance(backend, IdentityBackend):
            cache = _make_cache(args)
            documents = tuple(
                translate_document(doc, backend, cache)[0] for doc in documents
            )
    options = _tokenizer_options(args)
    index = index_documents([d.raw_text for d in documents],
                            [d.path for d in documents], options)
    out_path = args.out or _default_index_path(args)
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    save_index(index, out_path)
    log.info("indexed %d documents, %d terms -> %s",
             index.n_docs, len(index.vocabulary), out_path)
    return 0


def cmd_locate(args: argparse.Namespace) -> int:
    reports_path = _require(args, "reports")
    _fill(args, out_dir=".", technique="buglocator", alpha=DEFAULT_ALPHA,
          top_k=DEFAULT_TOP_K)
    if args.technique not in TECHNIQUES:
        raise ConfigError(f"unknown technique {args.technique!r}; "
                          f"expected one of {TECHNIQUES}")
    alpha = _check_alpha(float(args.alpha))
    index_path = args.index or _default_index_path(args)
    index = load_index(index_path)
    reports = load_bug_reports(reports_path)

    if not args.no_translate:
        backend = _make_backend(args)
        if not isinstance(backend, IdentityBackend):
            cache = _make_cache(args)
            reports = [translate_report(r, backend, cache) for r in reports]

    if args.query:
        by_id = {r.id: r for r in reports}
        missing = [q for q in args.query if q not in by_id]
        if missing:
            raise ConfigError(f"unknown report ids: {', '.join(missing)}")
        queries = [by_id[q] for q in args.query]
    else:
        extensions = {PurePosixPath(p).suffix for p in index.paths}
        queries, excluded = filter_usable_reports(reports, set(index.paths), extensions)
        for ex in excluded:
            log.info("report %s excluded: %s", ex.report.id, ex.reason)
        if not queries:
            raise ConfigError("no usable bug reports to rank; "
                              "use --query to force specific ids")

    history = HistorySet.build(reports, index) if args.technique == "buglocator" else None
    rankings = []
    for report in queries:
        query = vectorize_query(report.query_text, index)
        usable_history = history.before(report.reported_at) if history else []
        scores = score_documents(query, index, args.technique, usable_history, alpha)
        rankings.append((report.id, make_ranking(scores, index, int(args.top_k))))

    out_path = args.out or _default_run_path(args)
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    tag = args.tag or f"croloc-{args.technique}"
    write_run_file(out_path, rankings, tag)
    log.info("ranked %d queries over %d documents -> %s",
             len(rankings), index.n_docs, out_path)
    return 0


def cmd_qrels(args: argparse.Namespace) -> int:
    reports_path = _require(args, "reports")
    reports = load_bug_reports(reports_path)
    commits = load_commit_log(args.commit_log) if args.commit_log else []
    qrels = link_oracles(reports, commits)
    out = sys.stdout if args.out in (None, "-") else None
    if out is None:
        write_qrels(args.out, qrels)
        log.info("wrote qrels for %d queries -> %s", len(qrels.grades), args.out)
    else:
        for query_id in sorted(qrels.grades):
            for doc_path in sorted(qrels.grades[query_id]):
                out.write(f"{query_id} 0 {doc_path} {qrels.grades[query_id][doc_path]}\n")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    run_path = _require(args, "run")
    qrels_path = _require(args, "qrels")
    _fill(args, mode="direct")
    if args.mode not in MODES:
        raise ConfigError(f"unknown mode {args.mode!r}; expected one of {MODES}")
    run = read_run_file(run_path)
    qrels = read_qrels(qrels_path)
    report = evaluate(run, qrels, args.mode)
    print(report.format_table())
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(report.to_json(), fh, ensure_ascii=False, indent=2)
            fh.write("\n")
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log progress details to stderr")


def _add_tree_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tree", help="source tree root directory")
    parser.add_argument("--include", action="append", metavar="GLOB",
                        help="glob pattern for source files "
                             "(repeatable; default **/*.java and **/*.cs)")
    parser.add_argument("--permissive", action="store_true", default=None,
                        help="skip undecodable files instead of failing")


def _add_translator_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--translator", choices=TRANSLATORS,
                        help="translation backend (default: inferred from "
                             "--glossary or --service-url, else identity)")
    parser.add_argument("--glossary", help="TSV phrase table for the glossary backend")
    parser.add_argument("--cache", help="JSONL translation cache file")
    parser.add_argument("--service-url", dest="service_url",
                        help="endpoint for the service backend "
                             "(token read from CROLOC_SERVICE_TOKEN)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="croloc",
        description="Cross-lingual bug localization: extract, translate, "
                    "index, rank, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="dump comment/string spans as JSONL")
    _add_common(p)
    _add_tree_options(p)
    p.add_argument("-o", "--out", help="output file (default stdout)")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("translate", help="write a translated tree and reports")
    _add_common(p)
    _add_tree_options(p)
    _add_translator_options(p)
    p.add_argument("--reports", help="bug report JSONL file")
    p.add_argument("--out-dir", dest="out_dir", help="output directory (default .)")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("index", help="build the tf-idf index")
    _add_common(p)
    _add_tree_options(p)
    _add_translator_options(p)
    p.add_argument("--no-translate", action="store_true",
                   help="index the original text without translation")
    p.add_argument("--stemming", action=argparse.BooleanOptionalAction, default=None,
                   help="apply Porter stemming to tokens")
    p.add_argument("--out-dir", dest="out_dir", help="output directory (default .)")
    p.add_argument("-o", "--out",
                   help="index file (default OUT_DIR/index.json, or "
                        "index.notranslate.json with --no-translate)")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("locate", help="rank files per bug report into a run file")
    _add_common(p)
    _add_translator_options(p)
    p.add_argument("--index", help="index file built by the index subcommand")
    p.add_argument("--reports", help="bug report JSONL file")
    p.add_argument("--technique", choices=TECHNIQUES,
                   help="scoring technique (default buglocator)")
    p.add_argument("--alpha", type=float,
                   help="history weight for buglocator (default 0.2)")
    p.add_argument("--top-k", dest="top_k", type=int,
                   help="ranked files kept per query (default 100; 0 keeps all)")
    p.add_argument("--no-translate", action="store_true",
                   help="query with the original report text against the "
                        "untranslated index")
    p.add_argument("--query", action="append", metavar="ID",
                   help="rank only this report id, bypassing usability "
                        "filtering (repeatable)")
    p.add_argument("--tag", help="run tag (default croloc-TECHNIQUE)")
    p.add_argument("--out-dir", dest="out_dir", help="output directory (default .)")
    p.add_argument("-o", "--out",
                   help="run file (default OUT_DIR/run.TECHNIQUE.trec)")
    p.set_defaults(func=cmd_locate)

    p = sub.add_parser("qrels", help="derive qrels from fix lists and a commit log")
    _add_common(p)
    p.add_argument("--reports", help="bug report JSONL file")
    p.add_argument("--commit-log", dest="commit_log",
                   help="JSONL commit log for indirect links")
    p.add_argument("-o", "--out", help="qrels file (default stdout)")
    p.set_defaults(func=cmd_qrels)

    p = sub.add_parser("eval", help="score a run file against qrels")
    _add_common(p)
    p.add_argument("--run", help="TREC run file")
    p.add_argument("--qrels", help="TREC qrels file")
    p.add_argument("--mode", choices=MODES,
                   help="which grades count as relevant (default direct)")
    p.add_argument("--json", help="also write the full report as JSON")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    try:
        _apply_config(args)
        return args.func(args)
    except CrolocError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
