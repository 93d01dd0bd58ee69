"""Corpus-level MT metrics: BLEU, chrF++ and TER, plus file-level scoring."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from ..corpus import LangTag, read_jsonl
from .bleu import BleuConfig, bleu, bleu_score_from_counts, brevity_penalty
from .chrf import ChrfConfig, chrf_pp, chrf_score_from_stats
from .report import MetricReport
from .ter import TerConfig, ter, translation_edit_rate
from .tokenizers import separate_punctuation, tercom_tokenize, tokenize_13a

__all__ = [
    "BleuConfig",
    "ChrfConfig",
    "MetricConfig",
    "MetricReport",
    "TerConfig",
    "bleu",
    "bleu_score_from_counts",
    "brevity_penalty",
    "chrf_pp",
    "chrf_score_from_stats",
    "score_pairs",
    "score_run",
    "separate_punctuation",
    "signatures",
    "ter",
    "tercom_tokenize",
    "tokenize_13a",
    "translation_edit_rate",
]


@dataclass(frozen=True)
class MetricConfig:
    bleu: BleuConfig = field(default_factory=BleuConfig)
    chrf: ChrfConfig = field(default_factory=ChrfConfig)
    ter: TerConfig = field(default_factory=TerConfig)


def signatures(cfg: MetricConfig | None = None) -> dict[str, str]:
    cfg = cfg or MetricConfig()
    return {
        "bleu": cfg.bleu.signature(),
        "chrf++": cfg.chrf.signature(),
        "ter": cfg.ter.signature(),
    }


def score_pairs(
    hypotheses: Sequence[str],
    references: Sequence[str],
    cfg: MetricConfig | None = None,
) -> list[MetricReport]:
    """All three metrics over aligned (hypothesis, reference) pairs."""
    cfg = cfg or MetricConfig()
    return [
        bleu(hypotheses, references, cfg.bleu),
        chrf_pp(hypotheses, references, cfg.chrf),
        ter(hypotheses, references, cfg.ter),
    ]


def _file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _read_hypotheses(path: Path) -> dict[str, str]:
    hyps: dict[str, str] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            if "id" not in record or "text" not in record:
                raise ValueError(f"{path}:{lineno}: hypothesis records need 'id' and 'text'")
            hyps[str(record["id"])] = record["text"]
    return hyps


def score_run(
    hyp_path: Path | str,
    ref_path: Path | str,
    lang: LangTag | str,
    cfg: MetricConfig | None = None,
) -> list[MetricReport]:
    """Score a hypothesis file against a corpus file for one target language.

    The hypothesis file is line-delimited JSON ``{id, text}``; references come
    from the corpus units' targets for ``lang``, joined by unit id.  Ids
    missing on either side are an error.  All reports carry the same input
    digests.
    """
    cfg = cfg or MetricConfig()
    hyp_path = Path(hyp_path)
    ref_path = Path(ref_path)
    lang = LangTag(str(lang))

    hyp_by_id = _read_hypotheses(hyp_path)
    corpus = read_jsonl(ref_path)
    ref_by_id: dict[str, str] = {}
    for unit in corpus:
        if lang in unit.targets:
            ref_by_id[unit.id] = unit.targets[lang]

    missing_refs = sorted(set(hyp_by_id) - set(ref_by_id))
    missing_hyps = sorted(set(ref_by_id) - set(hyp_by_id))
    if missing_refs or missing_hyps:
        parts = []
        if missing_refs:
            parts.append(f"ids without a {lang} reference: {', '.join(missing_refs[:10])}")
        if missing_hyps:
            parts.append(f"ids without a hypothesis: {', '.join(missing_hyps[:10])}")
        raise ValueError("hypothesis/reference id mismatch: " + "; ".join(parts))

    ids = [unit.id for unit in corpus if unit.id in hyp_by_id]
    hypotheses = [hyp_by_id[i] for i in ids]
    references = [ref_by_id[i] for i in ids]

    inputs = {
        "hyp_file": hyp_path.name,
        "hyp_sha256": _file_digest(hyp_path),
        "ref_file": ref_path.name,
        "ref_sha256": _file_digest(ref_path),
        "lang": str(lang),
        "pairs": len(ids),
    }
    reports = score_pairs(hypotheses, references, cfg)
    for report in reports:
        report.inputs = dict(inputs)
    return reports
