"""Command-line front end for the pipeline stages.

One subcommand per stage: ``tok`` trains or applies the byte-level
tokenizer, ``profile`` builds word-frequency profiles, ``aer`` labels
tokens with syntax tags, ``noise`` corrupts documents for MLM or DAE
training, ``corpus`` filters and reports on document sets, ``train`` runs
a schedule against a translator, ``score`` computes translation metrics,
and ``compile`` measures compilation accuracy with optional repair.

Global flags (``--seed``, ``--config``, ``--jobs``, ``--log-level``) are
accepted both before and after the subcommand. Exit codes: 0 on success,
2 for usage errors, 3 for bad or missing data, 4 when an external tool
(compiler, translator child, labeling endpoint) is unavailable or fails.
Every file output gets a sibling ``.manifest.json`` recording input and
output digests, so identical seeds and inputs are checkable for identical
results.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from forge import __version__
from forge.aer import extract_labels, load_tagset
from forge.compilebench import compilation_accuracy, load_adapter, stub_adapter
from forge.corpus import (
    LANGUAGE_EXTENSIONS,
    MAX_TOKENS,
    MIN_TOKENS,
    balance,
    corpus_stats,
    filter_keywords,
    filter_length,
    labeler_from_env,
    quality_filter,
    read_corpus,
    write_corpus,
)
from forge.documents import (
    AerLabeledDocument,
    TokenizedDocument,
    read_jsonl,
)
from forge.errors import (
    CompilerMissing,
    CompileTimeout,
    DataError,
    ForgeError,
    FormatError,
    LabelerUnavailable,
    TranslatorFailure,
    UsageError,
)
from forge.manifest import RunManifest, sha256_file
from forge.metrics import corpus_report
from forge.noise import NoiseConfig, NoiseEngine
from forge.orchestrator import load_plan, run_plan, translator_from_spec
from forge.profiles import build_profile, load_keywords, load_profile, save_profile
from forge.rng import derive_rng
from forge.tokenizer import (
    DEFAULT_SPECIALS,
    DEFAULT_VOCAB_SIZE,
    load_vocab,
    save_vocab,
    train_bpe,
)

log = logging.getLogger(__name__)

LANGUAGES = sorted(LANGUAGE_EXTENSIONS)
LOG_LEVELS = ("debug", "info", "warning", "error")


# -- shared plumbing ----------------------------------------------------------


def _global_flags(parser: argparse.ArgumentParser, suppress: bool) -> None:
    """Attach the global flags.

    The root parser gets real defaults; subparsers get SUPPRESS so a flag
    placed before the subcommand is not clobbered by subparser defaults,
    while a flag placed after it still wins.
    """

    def default(value):
        return argparse.SUPPRESS if suppress else value

    parser.add_argument("--seed", type=int, default=default(0),
                        help="seed for every random choice (default 0)")
    parser.add_argument("--config", default=default(None), metavar="FILE",
                        help="YAML file with noise settings")
    parser.add_argument("--jobs", type=int, default=default(1),
                        help="worker count for parallel stages (default 1)")
    parser.add_argument("--log-level", choices=LOG_LEVELS,
                        default=default("warning"), help="logging threshold")


def _read_text(path) -> str:
    return Path(path).read_text(encoding="utf-8")


def _read_jsonl_file(path):
    with open(path, encoding="utf-8") as fp:
        try:
            yield from read_jsonl(fp)
        except DataError as exc:
            raise DataError(f"{path}: {exc}") from exc


def _read_tokenized(path) -> list:
    return [TokenizedDocument.from_json(obj) for obj in _read_jsonl_file(path)]


def _read_keyword_file(path) -> set:
    words = set()
    for line in _read_text(path).splitlines():
        word = line.strip()
        if word and not word.startswith("#"):
            words.add(word)
    return words


def _load_profile_dir(directory, manifest: RunManifest) -> dict:
    profiles = {}
    paths = sorted(Path(directory).glob("*.profile"))
    if not paths:
        raise DataError(f"{directory}: no .profile files")
    for path in paths:
        manifest.read(path)
        profile = load_profile(path)
        profiles[profile.language] = profile
    return profiles


def _noise_config(args) -> NoiseConfig:
    if not args.config:
        return NoiseConfig()
    try:
        raw = yaml.safe_load(_read_text(args.config))
    except yaml.YAMLError as exc:
        raise FormatError(f"{args.config}: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise FormatError(f"{args.config}: expected a mapping")
    try:
        cfg = NoiseConfig(**raw)
        cfg.validate()
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{args.config}: {exc}") from exc
    return cfg


def _emit_jsonl(records, out, manifest: RunManifest) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fp:
            for record in records:
                fp.write(json.dumps(record, ensure_ascii=False) + "\n")
        manifest.wrote(out)
    else:
        for record in records:
            sys.stdout.write(json.dumps(record, ensure_ascii=False) + "\n")


def _emit_json(payload, out, manifest: RunManifest) -> None:
    text = json.dumps(payload, indent=2, ensure_ascii=False) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
        manifest.wrote(out)
    else:
        sys.stdout.write(text)


def _read_sources(paths, manifest: RunManifest, language: str | None = None) -> list:
    docs = []
    for path in paths:
        manifest.read(path)
        docs.extend(read_corpus(path, language))
    return docs


# -- subcommand handlers ------------------------------------------------------


def _cmd_tok_train(args, manifest: RunManifest) -> int:
    texts = []
    for path in args.files:
        manifest.read(path)
        texts.append(_read_text(path))
    specials = list(DEFAULT_SPECIALS) + [f"<{lang}>" for lang in LANGUAGES]
    vocab = train_bpe(texts, vocab_size=args.vocab_size, specials=specials)
    save_vocab(vocab, args.out)
    manifest.wrote(args.out)
    log.info("trained vocabulary of %d ids from %d files", vocab.size, len(texts))
    return 0


def _cmd_tok_encode(args, manifest: RunManifest) -> int:
    vocab = load_vocab(manifest.read(args.vocab))
    records = []
    for path in args.files:
        manifest.read(path)
        doc = vocab.tokenize(_read_text(path), args.lang, path)
        records.append(doc.to_json())
    _emit_jsonl(records, args.out, manifest)
    return 0


def _cmd_profile_build(args, manifest: RunManifest) -> int:
    vocab = load_vocab(manifest.read(args.vocab))
    docs = []
    for path in args.files:
        manifest.read(path)
        docs.extend(d for d in _read_tokenized(path) if d.language == args.lang)
    if args.keywords:
        keywords = _read_keyword_file(manifest.read(args.keywords))
    else:
        keywords = load_keywords(args.lang)
    profile = build_profile(docs, args.lang, keywords, vocab)
    save_profile(profile, args.out)
    manifest.wrote(args.out)
    return 0


def _cmd_aer_label(args, manifest: RunManifest) -> int:
    vocab = load_vocab(manifest.read(args.vocab))
    tagset = load_tagset(args.lang, extended=args.extended)
    records = []
    for path in args.files:
        manifest.read(path)
        source = _read_text(path)
        doc = vocab.tokenize(source, args.lang, path)
        records.append(extract_labels(doc, source, vocab, tagset).to_json())
    _emit_jsonl(records, args.out, manifest)
    return 0


def _cmd_noise(args, manifest: RunManifest) -> int:
    vocab = load_vocab(manifest.read(args.vocab))
    cfg = _noise_config(args)
    profiles = {}
    if args.action == "dae":
        profiles = _load_profile_dir(args.profiles, manifest)
    engine = NoiseEngine(vocab, profiles, cfg)
    records = []
    for path in args.inputs:
        manifest.read(path)
        for doc in _read_tokenized(path):
            if args.action == "dae" and doc.language not in profiles:
                raise DataError(f"{doc.doc_id}: no profile for {doc.language!r}")
            rng = derive_rng(args.seed, "noise", args.action, args.epoch, doc.doc_id)
            if args.action == "mlm":
                example = engine.mlm(doc, rng)
                example.epoch = args.epoch
            else:
                example = engine.dae(doc, args.epoch, rng)
            records.append(example.to_json())
    _emit_jsonl(records, args.out, manifest)
    return 0


def _cmd_corpus_filter(args, manifest: RunManifest) -> int:
    docs = _read_sources(args.inputs, manifest, args.lang)
    before = len(docs)
    if not args.skip_keywords:
        if args.keywords:
            keywords = _read_keyword_file(manifest.read(args.keywords))
        else:
            keywords = load_keywords(args.lang)
        docs, _ = filter_keywords(docs, args.lang, keywords)
    docs, _ = filter_length(docs, args.min_tokens, args.max_tokens)
    log.info("kept %d of %d documents", len(docs), before)
    if args.out:
        write_corpus(docs, args.out)
        manifest.wrote(args.out)
    else:
        _emit_jsonl([d.to_json() for d in docs], None, manifest)
    return 0


def _cmd_corpus_balance(args, manifest: RunManifest) -> int:
    docs_a = read_corpus(manifest.read(args.corpus_a))
    docs_b = read_corpus(manifest.read(args.corpus_b))
    kept_a, kept_b = balance(docs_a, docs_b, derive_rng(args.seed, "balance"))
    write_corpus(kept_a, args.out_a)
    manifest.wrote(args.out_a)
    write_corpus(kept_b, args.out_b)
    manifest.wrote(args.out_b)
    return 0


def _cmd_corpus_quality(args, manifest: RunManifest) -> int:
    docs = _read_sources(args.inputs, manifest)
    try:
        labeler = labeler_from_env()
    except LabelerUnavailable:
        labeler = None
    kept, _ = quality_filter(docs, labeler, cache_path=args.cache, jobs=args.jobs)
    if args.out:
        write_corpus(kept, args.out)
        manifest.wrote(args.out)
    else:
        _emit_jsonl([d.to_json() for d in kept], None, manifest)
    return 0


def _cmd_corpus_stats(args, manifest: RunManifest) -> int:
    docs = _read_sources(args.inputs, manifest)
    stats = corpus_stats(docs)
    payload = {
        "stage": stats.stage,
        "input_count": stats.input_count,
        "retained": stats.retained,
        "dropped": stats.dropped,
        "per_language": {k: list(v) for k, v in stats.per_language.items()},
        "token_counts": dict(stats.token_counts),
        "token_histogram": {str(k): v for k, v in stats.token_histogram.items()},
    }
    _emit_json(payload, args.out, manifest)
    return 0


def _parse_corpus_flag(items) -> dict:
    corpora = {}
    for item in items:
        lang, sep, path = item.partition("=")
        if not sep or not lang or not path:
            raise UsageError(f"--corpus expects LANG=FILE, got {item!r}")
        corpora[lang] = path
    return corpora


def _cmd_train(args, manifest: RunManifest) -> int:
    plan = load_plan(manifest.read(args.plan))
    vocab = load_vocab(manifest.read(args.vocab))
    profiles = _load_profile_dir(args.profiles, manifest)
    corpora = {
        lang: _read_tokenized(manifest.read(path))
        for lang, path in _parse_corpus_flag(args.corpus).items()
    }
    labeled = None
    if args.labeled:
        labeled = [
            AerLabeledDocument.from_json(obj)
            for obj in _read_jsonl_file(manifest.read(args.labeled))
        ]
    pairs = None
    if args.pairs:
        pairs = []
        for obj in _read_jsonl_file(manifest.read(args.pairs)):
            try:
                pairs.append(
                    (
                        TokenizedDocument.from_json(obj["source"]),
                        TokenizedDocument.from_json(obj["target"]),
                    )
                )
            except (KeyError, TypeError) as exc:
                raise DataError(f"{args.pairs}: bad pair record: {exc}") from exc
    translator = translator_from_spec(args.translator, vocab)
    try:
        engine = NoiseEngine(vocab, profiles, plan.noise)
        reports = run_plan(
            plan, corpora, translator, engine, labeled=labeled, pairs=pairs
        )
    finally:
        closer = getattr(translator, "close", None)
        if closer is not None:
            closer()
    _emit_json([report.to_json() for report in reports], args.out, manifest)
    return 0


def _cmd_score(args, manifest: RunManifest) -> int:
    pairs = []
    for index, obj in enumerate(_read_jsonl_file(manifest.read(args.pairs))):
        try:
            pairs.append((obj["hypothesis"], obj["reference"]))
        except (KeyError, TypeError) as exc:
            raise DataError(f"{args.pairs}: record {index}: {exc}") from exc
    report = corpus_report(pairs, args.lang)
    _emit_json(report.to_json(), args.out, manifest)
    return 0


def _cmd_compile(args, manifest: RunManifest) -> int:
    docs = _read_sources(args.inputs, manifest, args.lang)
    if not docs:
        raise DataError("no documents to compile")
    if args.adapter == "stub":
        adapter = stub_adapter(args.lang)
    else:
        adapter = load_adapter(args.adapter or args.lang)
    report = compilation_accuracy(
        [(d.doc_id, d.text) for d in docs],
        adapter,
        with_repair=args.repair,
        jobs=args.jobs,
    )
    if args.report:
        _emit_json(report.to_json(), args.report, manifest)
    print(
        f"{report.compiled}/{report.total} compiled "
        f"({report.accuracy:.1f}%, repair={'on' if args.repair else 'off'})"
    )
    return 0


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)

    parser = argparse.ArgumentParser(
        prog="forge", description="code translation pipeline tools"
    )
    parser.add_argument("--version", action="version", version=f"forge {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    tok = sub.add_parser("tok", parents=[common], help="byte-level tokenizer")
    tok_sub = tok.add_subparsers(dest="action", metavar="ACTION", required=True)
    tok_train = tok_sub.add_parser("train", parents=[common],
                                   help="learn a vocabulary from raw files")
    tok_train.add_argument("--vocab-size", type=int, default=DEFAULT_VOCAB_SIZE)
    tok_train.add_argument("--out", required=True, metavar="FILE")
    tok_train.add_argument("files", nargs="+", metavar="FILE")
    tok_train.set_defaults(handler=_cmd_tok_train)
    tok_encode = tok_sub.add_parser("encode", parents=[common],
                                    help="tokenize raw files to JSONL")
    tok_encode.add_argument("--vocab", required=True, metavar="FILE")
    tok_encode.add_argument("--lang", required=True, choices=LANGUAGES)
    tok_encode.add_argument("--out", metavar="FILE")
    tok_encode.add_argument("files", nargs="+", metavar="FILE")
    tok_encode.set_defaults(handler=_cmd_tok_encode)

    profile = sub.add_parser("profile", parents=[common],
                             help="word-frequency profiles")
    profile_sub = profile.add_subparsers(dest="action", metavar="ACTION",
                                         required=True)
    profile_build = profile_sub.add_parser(
        "build", parents=[common],
        help="build a profile from tokenized documents")
    profile_build.add_argument("--lang", required=True, choices=LANGUAGES)
    profile_build.add_argument("--vocab", required=True, metavar="FILE")
    profile_build.add_argument("--keywords", metavar="FILE",
                               help="one keyword per line (default: built-in list)")
    profile_build.add_argument("--out", required=True, metavar="FILE")
    profile_build.add_argument("files", nargs="+", metavar="FILE")
    profile_build.set_defaults(handler=_cmd_profile_build)

    aer = sub.add_parser("aer", parents=[common], help="syntax entity labels")
    aer_sub = aer.add_subparsers(dest="action", metavar="ACTION", required=True)
    aer_label = aer_sub.add_parser("label", parents=[common],
                                   help="label raw files token by token")
    aer_label.add_argument("--lang", required=True, choices=LANGUAGES)
    aer_label.add_argument("--vocab", required=True, metavar="FILE")
    aer_label.add_argument("--extended", action="store_true",
                           help="use the extended tag set")
    aer_label.add_argument("--out", metavar="FILE")
    aer_label.add_argument("files", nargs="+", metavar="FILE")
    aer_label.set_defaults(handler=_cmd_aer_label)

    noise = sub.add_parser("noise", parents=[common],
                           help="corrupt documents into training examples")
    noise_sub = noise.add_subparsers(dest="action", metavar="ACTION", required=True)
    for action in ("mlm", "dae"):
        np_parser = noise_sub.add_parser(
            action, parents=[common],
            help=f"emit {action} examples from tokenized documents")
        np_parser.add_argument("--vocab", required=True, metavar="FILE")
        np_parser.add_argument("--epoch", type=int, default=0)
        if action == "dae":
            np_parser.add_argument("--profiles", required=True, metavar="DIR")
        np_parser.add_argument("--out", metavar="FILE")
        np_parser.add_argument("inputs", nargs="+", metavar="FILE")
        np_parser.set_defaults(handler=_cmd_noise, action=action)

    corpus = sub.add_parser("corpus", parents=[common],
                            help="filter and inspect document sets")
    corpus_sub = corpus.add_subparsers(dest="action", metavar="ACTION",
                                       required=True)
    corpus_filter = corpus_sub.add_parser(
        "filter", parents=[common],
        help="keyword and length filters for one language")
    corpus_filter.add_argument("--lang", required=True, choices=LANGUAGES)
    corpus_filter.add_argument("--min-tokens", type=int, default=MIN_TOKENS)
    corpus_filter.add_argument("--max-tokens", type=int, default=MAX_TOKENS)
    corpus_filter.add_argument("--keywords", metavar="FILE")
    corpus_filter.add_argument("--skip-keywords", action="store_true",
                               help="apply only the length filter")
    corpus_filter.add_argument("--out", metavar="FILE")
    corpus_filter.add_argument("inputs", nargs="+", metavar="FILE")
    corpus_filter.set_defaults(handler=_cmd_corpus_filter)
    corpus_balance = corpus_sub.add_parser(
        "balance", parents=[common],
        help="downsample the larger of two corpora")
    corpus_balance.add_argument("--out-a", required=True, metavar="FILE")
    corpus_balance.add_argument("--out-b", required=True, metavar="FILE")
    corpus_balance.add_argument("corpus_a", metavar="FILE_A")
    corpus_balance.add_argument("corpus_b", metavar="FILE_B")
    corpus_balance.set_defaults(handler=_cmd_corpus_balance)
    corpus_quality = corpus_sub.add_parser(
        "quality", parents=[common],
        help="keep documents judged educational")
    corpus_quality.add_argument("--cache", metavar="FILE",
                                help="verdict cache, read and extended")
    corpus_quality.add_argument("--out", metavar="FILE")
    corpus_quality.add_argument("inputs", nargs="+", metavar="FILE")
    corpus_quality.set_defaults(handler=_cmd_corpus_quality)
    corpus_stats_p = corpus_sub.add_parser(
        "stats", parents=[common], help="count documents and tokens")
    corpus_stats_p.add_argument("--out", metavar="FILE")
    corpus_stats_p.add_argument("inputs", nargs="+", metavar="FILE")
    corpus_stats_p.set_defaults(handler=_cmd_corpus_stats)

    train = sub.add_parser("train", parents=[common],
                           help="run a training schedule")
    train.add_argument("--plan", required=True, metavar="FILE")
    train.add_argument(
        "--translator", required=True, metavar="SPEC",
        help="stub-identity, stub-dict:FILE, or external:CMD")
    train.add_argument("--corpus", action="append", required=True,
                       metavar="LANG=FILE",
                       help="tokenized corpus for one language (repeatable)")
    train.add_argument("--vocab", required=True, metavar="FILE")
    train.add_argument("--profiles", required=True, metavar="DIR")
    train.add_argument("--labeled", metavar="FILE",
                       help="labeled documents for aer phases")
    train.add_argument("--pairs", metavar="FILE",
                       help="parallel pairs for finetune phases")
    train.add_argument("--out", metavar="FILE")
    train.set_defaults(handler=_cmd_train)

    score = sub.add_parser("score", parents=[common],
                           help="translation metrics over hypothesis/reference pairs")
    score.add_argument("--lang", required=True, choices=LANGUAGES)
    score.add_argument("--out", metavar="FILE")
    score.add_argument("pairs", metavar="FILE")
    score.set_defaults(handler=_cmd_score)

    compile_p = sub.add_parser("compile", parents=[common],
                               help="compilation accuracy with optional repair")
    compile_p.add_argument("--lang", required=True, choices=LANGUAGES)
    compile_p.add_argument("--adapter", metavar="NAME",
                           help="compiler adapter name, or 'stub' (default: --lang)")
    compile_p.add_argument("--repair", action="store_true",
                           help="apply mechanical repairs to failures")
    compile_p.add_argument("--report", metavar="FILE")
    compile_p.add_argument("inputs", nargs="+", metavar="PATH",
                           help="JSONL corpus or source directory")
    compile_p.set_defaults(handler=_cmd_compile)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    logging.basicConfig(
        level=getattr(logging, args.log_level.upper()),
        format="%(levelname)s %(name)s: %(message)s",
    )
    logging.getLogger("forge").setLevel(getattr(logging, args.log_level.upper()))

    manifest = RunManifest(
        tool=f"forge {__version__}",
        command=["forge", *argv],
        seed=args.seed,
        config_digest=sha256_file(args.config) if args.config else None,
    )
    try:
        code = args.handler(args, manifest)
    except UsageError as exc:
        print(f"forge: {exc}", file=sys.stderr)
        return 2
    except (CompilerMissing, CompileTimeout, TranslatorFailure,
            LabelerUnavailable) as exc:
        print(f"forge: {exc}", file=sys.stderr)
        return 4
    except ForgeError as exc:
        print(f"forge: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"forge: {exc}", file=sys.stderr)
        return 3
    if code == 0:
        manifest.write()
    return code


if __name__ == "__main__":
    sys.exit(main())
