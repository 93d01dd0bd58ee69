"""Corpus-level BLEU compatible with the standard scorer's defaults.

Sufficient statistics (clipped n-gram matches, totals, lengths) are summed
over the corpus, then combined as the geometric mean of n-gram precisions
times the brevity penalty.  A zero match count at some order is smoothed
exponentially (precision 100 / (2^k * total)), matching the default smoothing
of the reference scorer; a zero *total* leaves that order at precision zero,
which drives the corpus score to zero just like the reference does.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .report import MetricReport
from .tokenizers import tokenize_13a

_LOG_ZERO = -9999999999


@dataclass(frozen=True)
class BleuConfig:
    max_ngram_order: int = 4
    tokenizer: str = "13a"
    case_sensitive: bool = True
    smoothing: str = "exp"

    def __post_init__(self) -> None:
        if self.max_ngram_order < 1:
            raise ValueError("max_ngram_order must be >= 1")
        if self.tokenizer not in ("13a", "none"):
            raise ValueError(f"unknown tokenizer {self.tokenizer!r}")
        if self.smoothing not in ("exp", "none"):
            raise ValueError(f"unknown smoothing {self.smoothing!r}")

    def signature(self) -> str:
        case = "mixed" if self.case_sensitive else "lc"
        return f"bleu|order:{self.max_ngram_order}|tok:{self.tokenizer}|case:{case}|smooth:{self.smoothing}"


def _tokens(line: str, cfg: BleuConfig) -> list[str]:
    line = line.rstrip()
    if not cfg.case_sensitive:
        line = line.lower()
    if cfg.tokenizer == "13a":
        return tokenize_13a(line)
    return line.split()


def _ngram_counts(tokens: Sequence[str], max_order: int) -> Counter:
    counts: Counter = Counter()
    for n in range(1, max_order + 1):
        for i in range(len(tokens) - n + 1):
            counts[tuple(tokens[i:i + n])] += 1
    return counts


def _safe_log(value: float) -> float:
    return math.log(value) if value > 0.0 else _LOG_ZERO


def bleu_score_from_counts(
    correct: Sequence[int],
    total: Sequence[int],
    hyp_len: int,
    ref_len: int,
    smoothing: str = "exp",
) -> float:
    """Recombine sufficient statistics into the 0-100 corpus score."""
    order = len(correct)
    precisions = [0.0] * order
    smooth = 1.0
    for n in range(1, order + 1):
        if total[n - 1] == 0:
            break
        if correct[n - 1] == 0:
            if smoothing == "exp":
                smooth *= 2.0
                precisions[n - 1] = 100.0 / (smooth * total[n - 1])
        else:
            precisions[n - 1] = 100.0 * correct[n - 1] / total[n - 1]

    brevity_penalty = 1.0
    if hyp_len < ref_len:
        brevity_penalty = math.exp(1.0 - ref_len / hyp_len) if hyp_len > 0 else 0.0

    return brevity_penalty * math.exp(sum(_safe_log(p) for p in precisions) / order)


def brevity_penalty(hyp_len: int, ref_len: int) -> float:
    if hyp_len >= ref_len:
        return 1.0
    return math.exp(1.0 - ref_len / hyp_len) if hyp_len > 0 else 0.0


def bleu(hypotheses: Sequence[str], references: Sequence[str], cfg: BleuConfig | None = None) -> MetricReport:
    cfg = cfg or BleuConfig()
    if len(hypotheses) != len(references):
        raise ValueError(f"got {len(hypotheses)} hypotheses but {len(references)} references")
    if not hypotheses:
        raise ValueError("cannot score an empty corpus")

    order = cfg.max_ngram_order
    correct = [0] * order
    total = [0] * order
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_tokens = _tokens(hyp, cfg)
        ref_tokens = _tokens(ref, cfg)
        hyp_len += len(hyp_tokens)
        ref_len += len(ref_tokens)
        ref_counts = _ngram_counts(ref_tokens, order)
        for gram, count in _ngram_counts(hyp_tokens, order).items():
            n = len(gram)
            total[n - 1] += count
            correct[n - 1] += min(count, ref_counts.get(gram, 0))

    score = bleu_score_from_counts(correct, total, hyp_len, ref_len, cfg.smoothing)
    return MetricReport(
        metric="bleu",
        score=score,
        signature=cfg.signature(),
        counts={
            "correct": correct,
            "total": total,
            "hyp_len": hyp_len,
            "ref_len": ref_len,
            "brevity_penalty": round(brevity_penalty(hyp_len, ref_len), 6),
        },
    )
