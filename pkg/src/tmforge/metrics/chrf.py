"""Corpus-level chrF++ compatible with the standard scorer's defaults.

Character n-grams (orders 1..char_order) are taken over whitespace-removed
text; word n-grams (orders 1..word_order) over punctuation-separated tokens.
Per-order [hyp, ref, match] counts are summed over the corpus; the final
score is F_beta over precision and recall averaged across the orders where
both sides produced at least one n-gram ("effective order" smoothing, the
reference scorer's default aggregation).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .report import MetricReport
from .tokenizers import separate_punctuation


@dataclass(frozen=True)
class ChrfConfig:
    char_order: int = 6
    word_order: int = 2
    beta: float = 2.0

    def __post_init__(self) -> None:
        if self.char_order < 1:
            raise ValueError("char_order must be >= 1")
        if self.word_order < 0:
            raise ValueError("word_order must be >= 0")
        if self.beta <= 0:
            raise ValueError("beta must be > 0")

    @property
    def order(self) -> int:
        return self.char_order + self.word_order

    def signature(self) -> str:
        return f"chrf|nc:{self.char_order}|nw:{self.word_order}|beta:{self.beta}|space:no|eff:yes"


def _char_ngram_counters(text: str, max_order: int) -> list[Counter]:
    squeezed = "".join(text.split())
    return [
        Counter(squeezed[i:i + n] for i in range(len(squeezed) - n + 1))
        for n in range(1, max_order + 1)
    ]


def _word_ngram_counters(text: str, max_order: int) -> list[Counter]:
    tokens = separate_punctuation(text)
    return [
        Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))
        for n in range(1, max_order + 1)
    ]


def _segment_statistics(hyp: str, ref: str, cfg: ChrfConfig) -> list[int]:
    hyp_counters = _char_ngram_counters(hyp, cfg.char_order)
    ref_counters = _char_ngram_counters(ref, cfg.char_order)
    if cfg.word_order > 0:
        hyp_counters += _word_ngram_counters(hyp, cfg.word_order)
        ref_counters += _word_ngram_counters(ref, cfg.word_order)
    stats = []
    for hyp_c, ref_c in zip(hyp_counters, ref_counters):
        match = sum(min(count, ref_c[gram]) for gram, count in hyp_c.items())
        stats.extend([sum(hyp_c.values()), sum(ref_c.values()), match])
    return stats


def chrf_score_from_stats(stats: Sequence[int], beta: float) -> float:
    """F_beta over effective-order averaged precision and recall, on 0-100."""
    avg_prec = 0.0
    avg_rec = 0.0
    effective_order = 0
    for i in range(0, len(stats), 3):
        n_hyp, n_ref, n_match = stats[i:i + 3]
        if n_hyp > 0 and n_ref > 0:
            avg_prec += n_match / n_hyp
            avg_rec += n_match / n_ref
            effective_order += 1
    if effective_order == 0:
        return 0.0
    avg_prec /= effective_order
    avg_rec /= effective_order
    if avg_prec + avg_rec == 0.0:
        return 0.0
    factor = beta ** 2
    return 100.0 * (1 + factor) * avg_prec * avg_rec / (factor * avg_prec + avg_rec)


def chrf_pp(hypotheses: Sequence[str], references: Sequence[str], cfg: ChrfConfig | None = None) -> MetricReport:
    cfg = cfg or ChrfConfig()
    if len(hypotheses) != len(references):
        raise ValueError(f"got {len(hypotheses)} hypotheses but {len(references)} references")
    if not hypotheses:
        raise ValueError("cannot score an empty corpus")

    totals = [0] * (3 * cfg.order)
    for hyp, ref in zip(hypotheses, references):
        for i, value in enumerate(_segment_statistics(hyp, ref, cfg)):
            totals[i] += value

    score = chrf_score_from_stats(totals, cfg.beta)
    orders = [f"char{n}" for n in range(1, cfg.char_order + 1)]
    orders += [f"word{n}" for n in range(1, cfg.word_order + 1)]
    counts = {
        label: {"hyp": totals[3 * i], "ref": totals[3 * i + 1], "match": totals[3 * i + 2]}
        for i, label in enumerate(orders)
    }
    return MetricReport(metric="chrf++", score=score, signature=cfg.signature(), counts=counts)
