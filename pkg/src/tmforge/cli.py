"""Command-line interface.

Subcommands are thin shells over the library: data always goes to files,
stdout carries only human-readable summaries, and structured JSON log lines
go to stderr.  Exit codes: 2 usage, 3 I/O, 4 validation, 5 internal.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, ingest, partition, promptkit, report as report_mod
from .corpus import LangTag, read_jsonl, write_drop_log, write_jsonl
from .curate import CurationConfig, curate_corpus
from .decontam import DecontamConfig, decontaminate, verdict_drop_records
from .metrics import MetricConfig, score_run, signatures
from .pipeline import PipelineConfig, PipelineError, run_pipeline

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_VALIDATION = 4
EXIT_INTERNAL = 5


class _JsonLogFormatter(logging.Formatter):
    def format(self, record: logging.LogRecord) -> str:
        payload = {
            "level": record.levelname.lower(),
            "logger": record.name,
            "message": record.getMessage(),
        }
        return json.dumps(payload, ensure_ascii=False, sort_keys=True)


def _setup_logging(verbose: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(_JsonLogFormatter())
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(logging.DEBUG if verbose else logging.INFO)


def _parse_ratios(text: str) -> tuple[float, float, float]:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise ValueError(f"expected three comma-separated ratios, got {text!r}")
    return tuple(parts)


def _parse_sizes(text: str) -> tuple[int, ...]:
    if not text:
        return ()
    return tuple(int(p) for p in text.split(","))


def _cmd_ingest(args) -> int:
    if args.format == "tsv" or (args.format == "auto" and args.input.suffix.lower() == ".tsv"):
        if not args.target_lang:
            raise ValueError("--target-lang is required for tsv input")
        corpus = ingest.parse_tsv(args.input, args.source_lang, args.target_lang, domain=args.domain)
    else:
        corpus = ingest.parse_tmx(args.input, domain=args.domain)
    write_jsonl(corpus, args.out)
    print(f"ingested {len(corpus)} units -> {args.out}")
    return EXIT_OK


def _cmd_curate(args) -> int:
    corpus = read_jsonl(args.input)
    cfg = CurationConfig(
        max_words=args.max_words,
        drop_duplicates=not args.keep_duplicates,
        drop_source_copies=not args.keep_source_copies,
        drop_noncontent=not args.keep_noncontent,
    )
    kept, drops = curate_corpus(corpus, cfg)
    write_jsonl(kept, args.out)
    if args.drop_log:
        write_drop_log(drops, args.drop_log)
    print(f"kept {len(kept)} / {len(corpus)} units ({len(drops)} dropped) -> {args.out}")
    return EXIT_OK


def _cmd_align(args) -> int:
    corpora = {}
    for item in args.input:
        lang_code, _, path = item.partition("=")
        if not path:
            raise ValueError(f"--input expects LANG=PATH, got {item!r}")
        corpora[LangTag(lang_code)] = read_jsonl(path)
    aligned, drops = partition.interlingual_align(corpora)
    write_jsonl(aligned, args.out)
    if args.drop_log:
        write_drop_log(drops, args.drop_log)
    print(f"aligned {len(aligned)} units across {len(corpora)} languages -> {args.out}")
    return EXIT_OK


def _cmd_split(args) -> int:
    corpus = read_jsonl(args.input)
    shuffled = partition.seeded_shuffle(corpus, args.seed)
    train, dev, test, manifest = partition.split(
        shuffled, args.ratios, seed=args.seed, subset_sizes=args.subsets
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_jsonl(train, out / "train.jsonl")
    write_jsonl(dev, out / "dev.jsonl")
    write_jsonl(test, out / "test.jsonl")
    for size, subset in zip(args.subsets, partition.nested_subsets(train, args.subsets)):
        write_jsonl(subset, out / f"train.{size}.jsonl")
    (out / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")
    print(f"split N={len(corpus)} -> train={len(train)} dev={len(dev)} test={len(test)} in {out}")
    return EXIT_OK


def _cmd_decontam(args) -> int:
    test = read_jsonl(args.test)
    train = read_jsonl(args.train)
    cfg = DecontamConfig(threshold=args.threshold, ngram_order=args.ngram, combine=args.combine)
    kept, verdicts = decontaminate(test, train, cfg, threads=args.threads)
    write_jsonl(kept, args.out)
    if args.report:
        with Path(args.report).open("w", encoding="utf-8", newline="\n") as fh:
            for verdict in verdicts:
                fh.write(json.dumps(verdict.to_record(), ensure_ascii=False, sort_keys=True) + "\n")
    if args.drop_log:
        write_drop_log(verdict_drop_records(verdicts), args.drop_log)
    print(f"kept {len(kept)} / {len(test)} test units (threshold {cfg.threshold}) -> {args.out}")
    return EXIT_OK


def _cmd_prompts(args) -> int:
    corpus = read_jsonl(args.input)
    records = promptkit.render_prompt_batch(corpus, args.lang, args.kind)
    promptkit.write_prompt_batch(records, args.out)
    print(f"rendered {len(records)} {args.kind} prompts for {args.lang} -> {args.out}")
    return EXIT_OK


def _cmd_configs(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    train_overrides = {}
    if args.lr is not None:
        train_overrides["learning_rate"] = args.lr
    if args.batch_size is not None:
        train_overrides["batch_size"] = args.batch_size
    promptkit.emit_training_config(out / "config.train.json", **train_overrides)
    promptkit.emit_inference_config(out / "config.infer.json")
    print(f"wrote config.train.json and config.infer.json in {out}")
    return EXIT_OK


def _cmd_score(args) -> int:
    hyp_path = Path(args.hyp)
    if args.raw_outputs:
        outputs = promptkit.read_raw_outputs(hyp_path)
        extracted = []
        failures = 0
        for unit_id, raw in outputs.items():
            try:
                text = promptkit.extract_translation(raw)
            except promptkit.TranslationExtractionError:
                if not args.permissive:
                    raise
                failures += 1
                text = raw  # --permissive: score the raw string
            extracted.append({"id": unit_id, "text": text})
        hyp_path = Path(args.out).with_suffix(".extracted.jsonl") if args.out else Path("extracted.jsonl")
        with hyp_path.open("w", encoding="utf-8", newline="\n") as fh:
            for record in extracted:
                fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True) + "\n")
        if failures:
            logging.getLogger(__name__).warning("%d raw outputs had no extractable payload", failures)

    reports = score_run(hyp_path, args.ref, args.lang, MetricConfig())
    for rep in reports:
        print(f"{rep.metric.upper():7s} {rep.score:.2f}  [{rep.signature}]")
    if args.out:
        payload = [rep.to_record() for rep in reports]
        Path(args.out).write_text(
            json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )
    return EXIT_OK


def _cmd_report(args) -> int:
    table = report_mod.load_run_table(args.table)
    summaries = []
    for label in args.summary or []:
        summary = report_mod.delta_summary(table, label)
        summaries.append(summary)
        for metric in ("bleu", "chrf", "ter", "comet"):
            if metric in summary.absolute:
                direction = "decrease" if metric in report_mod.LOWER_IS_BETTER else "delta"
                rel = summary.relative.get(metric)
                rel_text = f", relative {rel:.2f}%" if rel is not None else ""
                print(f"{label} {metric.upper()} {direction} {summary.absolute[metric]:.2f}{rel_text}")
    document = report_mod.render(table, summaries, args.format)
    if args.out:
        Path(args.out).write_text(document, encoding="utf-8")
    elif not args.summary:
        print(document, end="")
    return EXIT_OK


def _cmd_pipeline(args) -> int:
    config = PipelineConfig.from_json(args.config)
    if args.threads is not None:
        config.threads = args.threads
    out = run_pipeline(config)
    print(f"pipeline complete -> {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tmforge", description=__doc__)
    parser.add_argument("--version", action="store_true", help="print version, metric signatures, PRNG id")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("ingest", help="parse a TSV/TMX export into the corpus format")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--format", choices=("auto", "tsv", "tmx"), default="auto")
    p.add_argument("--source-lang", default="en")
    p.add_argument("--target-lang", default=None)
    p.add_argument("--domain", default="other")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("curate", help="apply the cleaning rules")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--drop-log", type=Path, default=None)
    p.add_argument("--max-words", type=int, default=150)
    p.add_argument("--keep-duplicates", action="store_true")
    p.add_argument("--keep-source-copies", action="store_true")
    p.add_argument("--keep-noncontent", action="store_true")
    p.set_defaults(func=_cmd_curate)

    p = sub.add_parser("align", help="inter-lingual alignment of per-language corpora")
    p.add_argument("--input", action="append", required=True, metavar="LANG=PATH")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--drop-log", type=Path, default=None)
    p.set_defaults(func=_cmd_align)

    p = sub.add_parser("split", help="seeded shuffle, split, and nested subsets")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--ratios", type=_parse_ratios, default=(0.8, 0.1, 0.1))
    p.add_argument("--subsets", type=_parse_sizes, default=())
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("decontam", help="filter test units similar to training units")
    p.add_argument("--test", type=Path, required=True)
    p.add_argument("--train", type=Path, required=True)
    p.add_argument("--threshold", type=float, default=0.75)
    p.add_argument("--ngram", type=int, default=5)
    p.add_argument("--combine", choices=("max", "mean"), default="max")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--report", type=Path, default=None)
    p.add_argument("--drop-log", type=Path, default=None)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_decontam)

    p = sub.add_parser("prompts", help="render chat prompts or training examples")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--lang", required=True)
    p.add_argument("--kind", choices=("inference", "training"), default="inference")
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=_cmd_prompts)

    p = sub.add_parser("configs", help="emit trainer and inference config artifacts")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.set_defaults(func=_cmd_configs)

    p = sub.add_parser("score", help="BLEU / chrF++ / TER for a hypothesis file")
    p.add_argument("--hyp", type=Path, required=True)
    p.add_argument("--ref", type=Path, required=True)
    p.add_argument("--lang", required=True)
    p.add_argument("--raw-outputs", action="store_true",
                   help="treat --hyp as raw {id, output} records and extract translations first")
    p.add_argument("--permissive", action="store_true",
                   help="score the raw string when extraction fails")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("report", help="run-table rendering and delta summaries")
    p.add_argument("--table", type=Path, required=True)
    p.add_argument("--summary", action="append", default=None, metavar="SIZE_LABEL")
    p.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    p.add_argument("--out", type=Path, default=None)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("pipeline", help="run the whole pipeline from a JSON config")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--threads", type=int, default=None)
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _setup_logging(getattr(args, "verbose", False))

    if args.version:
        print(f"tmforge {__version__}")
        for name, sig in signatures().items():
            print(f"metric {name}: {sig}")
        print(f"prng: {partition.PRNG_ID}")
        return EXIT_OK
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    log = logging.getLogger("tmforge.cli")
    try:
        return args.func(args)
    except PipelineError as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION if exc.stage == "config" else EXIT_INTERNAL
    except ingest.IngestError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except OSError as exc:
        log.error("%s", exc)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    except Exception as exc:  # pragma: no cover
        log.error("internal error: %s", exc)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
