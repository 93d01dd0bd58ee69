"""End-to-end pipeline: ingest, curate, align, shuffle, split, subset,
decontaminate, and emit prompt batches plus trainer/inference configs.

Every stage writes its artifacts under the output directory and records the
content digests of its inputs and outputs in ``manifest.json``, so a rerun
with identical configuration and inputs produces a byte-identical tree.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from . import ingest, partition, promptkit
from .corpus import (
    Corpus,
    DIGEST_ALGORITHM,
    LangTag,
    corpus_digest,
    read_jsonl,
    write_drop_log,
    write_jsonl,
)
from .curate import CurationConfig, curate_corpus
from .decontam import DecontamConfig, decontaminate, verdict_drop_records

logger = logging.getLogger(__name__)


class PipelineError(Exception):
    """A stage failed; carries the stage name."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage {stage!r}: {message}")
        self.stage = stage


@dataclass(frozen=True)
class InputSpec:
    path: Path
    format: str  # tsv | tmx | jsonl
    source_lang: str = "en"
    target_lang: str | None = None
    domain: str = "other"


@dataclass
class PipelineConfig:
    inputs: list[InputSpec]
    seed: int
    output_dir: Path
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    subset_sizes: tuple[int, ...] = ()
    curation: CurationConfig = field(default_factory=CurationConfig)
    decontam: DecontamConfig = field(default_factory=DecontamConfig)
    language_names: dict[str, str] | None = None
    threads: int = 1

    @classmethod
    def from_json(cls, path: Path | str) -> "PipelineConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise PipelineError("config", f"cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise PipelineError("config", f"{path}: invalid JSON: {exc}") from exc

        if "seed" not in data:
            raise PipelineError("config", "seed is mandatory; refusing implicit entropy")
        if "output_dir" not in data:
            raise PipelineError("config", "output_dir is mandatory")

        base = path.parent
        inputs = []
        for raw in data.get("inputs", []):
            spec = InputSpec(
                path=(base / raw["path"]).resolve() if not Path(raw["path"]).is_absolute() else Path(raw["path"]),
                format=raw.get("format", Path(raw["path"]).suffix.lstrip(".").lower()),
                source_lang=raw.get("source_lang", "en"),
                target_lang=raw.get("target_lang"),
                domain=raw.get("domain", "other"),
            )
            if spec.format not in ("tsv", "tmx", "jsonl"):
                raise PipelineError("config", f"unknown input format {spec.format!r} for {raw['path']}")
            if spec.format == "tsv" and not spec.target_lang:
                raise PipelineError("config", f"tsv input {raw['path']} needs a target_lang")
            if not spec.path.exists():
                raise PipelineError("config", f"input file does not exist: {spec.path}")
            inputs.append(spec)
        if not inputs:
            raise PipelineError("config", "at least one input is required")

        split_cfg = data.get("split", {})
        out_dir = Path(data["output_dir"])
        if not out_dir.is_absolute():
            out_dir = base / out_dir
        return cls(
            inputs=inputs,
            seed=int(data["seed"]),
            output_dir=out_dir,
            ratios=tuple(split_cfg.get("ratios", (0.8, 0.1, 0.1))),
            subset_sizes=tuple(split_cfg.get("subset_sizes", ())),
            curation=CurationConfig(**data.get("curation", {})),
            decontam=DecontamConfig(**data.get("decontam", {})),
            language_names=data.get("language_names"),
            threads=int(data.get("threads", 1)),
        )


def _digest_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _size_label(size: int) -> str:
    return str(size)


def run_pipeline(config: PipelineConfig) -> Path:
    """Run every stage; returns the output directory.

    Raises :class:`PipelineError` naming the failing stage.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "drops").mkdir(exist_ok=True)
    (out / "prompts").mkdir(exist_ok=True)
    stages: dict[str, dict] = {}

    # ingest
    try:
        parsed: list[Corpus] = []
        input_digests = {}
        for spec in config.inputs:
            if spec.format == "tsv":
                corpus = ingest.parse_tsv(spec.path, spec.source_lang, spec.target_lang, domain=spec.domain)
            elif spec.format == "tmx":
                corpus = ingest.parse_tmx(spec.path, domain=spec.domain)
            else:
                corpus = read_jsonl(spec.path)
            parsed.append(corpus)
            input_digests[spec.path.name] = _digest_file(spec.path)
        stages["ingest"] = {"inputs": input_digests,
                            "units": sum(len(c) for c in parsed)}
    except Exception as exc:
        raise PipelineError("ingest", str(exc)) from exc

    # curate per target language
    try:
        languages = sorted({lang for corpus in parsed for lang in corpus.languages}, key=str)
        if not languages:
            raise ValueError("no target languages found in the inputs")
        curated: dict[LangTag, Corpus] = {}
        curate_digests = {}
        for lang in languages:
            units = []
            for corpus in parsed:
                for unit in corpus:
                    if lang in unit.targets:
                        units.append(unit.__class__(
                            id=unit.id,
                            source=unit.source,
                            source_lang=unit.source_lang,
                            targets={lang: unit.targets[lang]},
                            provenance=unit.provenance,
                        ))
            kept, drops = curate_corpus(Corpus(units), config.curation)
            curated[lang] = kept
            lang_file = out / f"curated.{lang}.jsonl"
            write_jsonl(kept, lang_file)
            write_drop_log(drops, out / "drops" / f"curate.{lang}.jsonl")
            curate_digests[lang_file.name] = corpus_digest(kept)
        stages["curate"] = {"outputs": curate_digests}
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError("curate", str(exc)) from exc

    # align
    try:
        aligned, align_drops = partition.interlingual_align(curated)
        write_jsonl(aligned, out / "aligned.jsonl")
        write_drop_log(align_drops, out / "drops" / "align.jsonl")
        stages["align"] = {"outputs": {"aligned.jsonl": corpus_digest(aligned)},
                           "dropped": len(align_drops)}
    except Exception as exc:
        raise PipelineError("align", str(exc)) from exc

    # shuffle + split + subsets
    try:
        shuffled = partition.seeded_shuffle(aligned, config.seed)
        train, dev, test, manifest = partition.split(
            shuffled, config.ratios, seed=config.seed, subset_sizes=config.subset_sizes
        )
        write_jsonl(train, out / "train.jsonl")
        write_jsonl(dev, out / "dev.jsonl")
        write_jsonl(test, out / "test.jsonl")
        split_outputs = {
            "train.jsonl": corpus_digest(train),
            "dev.jsonl": corpus_digest(dev),
            "test.jsonl": corpus_digest(test),
        }
        for size, subset in zip(config.subset_sizes, partition.nested_subsets(train, config.subset_sizes)):
            name = f"train.{_size_label(size)}.jsonl"
            write_jsonl(subset, out / name)
            split_outputs[name] = corpus_digest(subset)
        stages["split"] = {"outputs": split_outputs, "counts": list(manifest.counts)}
    except Exception as exc:
        raise PipelineError("split", str(exc)) from exc

    # decontaminate test against train
    try:
        clean_test, verdicts = decontaminate(test, train, config.decontam, threads=config.threads)
        write_jsonl(clean_test, out / "test.decontaminated.jsonl")
        with (out / "verdicts.jsonl").open("w", encoding="utf-8", newline="\n") as fh:
            for verdict in verdicts:
                fh.write(json.dumps(verdict.to_record(), ensure_ascii=False, sort_keys=True))
                fh.write("\n")
        write_drop_log(verdict_drop_records(verdicts), out / "drops" / "decontam.jsonl")
        stages["decontam"] = {
            "outputs": {"test.decontaminated.jsonl": corpus_digest(clean_test)},
            "kept": len(clean_test),
            "dropped": len(test) - len(clean_test),
            "threshold": config.decontam.threshold,
            "ngram_order": config.decontam.ngram_order,
            "combine": config.decontam.combine,
        }
    except Exception as exc:
        raise PipelineError("decontam", str(exc)) from exc

    # prompts + training examples per language
    try:
        prompt_digests = {}
        for lang in languages:
            inference = promptkit.render_prompt_batch(clean_test, lang, "inference", config.language_names)
            training = promptkit.render_prompt_batch(train, lang, "training", config.language_names)
            inf_path = out / "prompts" / f"inference.{lang}.jsonl"
            trn_path = out / "prompts" / f"training.{lang}.jsonl"
            promptkit.write_prompt_batch(inference, inf_path)
            promptkit.write_prompt_batch(training, trn_path)
            prompt_digests[inf_path.name] = _digest_file(inf_path)
            prompt_digests[trn_path.name] = _digest_file(trn_path)
        stages["prompts"] = {"outputs": prompt_digests}
    except Exception as exc:
        raise PipelineError("prompts", str(exc)) from exc

    # config artifacts
    try:
        promptkit.emit_training_config(out / "config.train.json")
        promptkit.emit_inference_config(out / "config.infer.json")
        stages["configs"] = {"outputs": {
            "config.train.json": _digest_file(out / "config.train.json"),
            "config.infer.json": _digest_file(out / "config.infer.json"),
        }}
    except Exception as exc:
        raise PipelineError("configs", str(exc)) from exc

    # manifest
    payload = json.loads(manifest.to_json())
    payload.update({
        "curation": {
            "max_words": config.curation.max_words,
            "drop_duplicates": config.curation.drop_duplicates,
            "drop_source_copies": config.curation.drop_source_copies,
            "drop_noncontent": config.curation.drop_noncontent,
            "rule_order": ["empty-after-clean", "over-length", "source-copy", "non-content", "duplicate"],
            "text_cleaning": "strip-markup-then-collapse-whitespace",
        },
        "decontam": {
            "threshold": config.decontam.threshold,
            "ngram_order": config.decontam.ngram_order,
            "combine": config.decontam.combine,
            "compared_on": "source",
        },
        "checksum_algorithm": DIGEST_ALGORITHM,
        "languages": [str(lang) for lang in languages],
        "stages": stages,
    })
    (out / "manifest.json").write_text(
        json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    return out
