"""Corpus-level translation edit rate with tercom-style block shifts.

Per segment, the hypothesis is repeatedly improved by the single block shift
that most reduces the remaining word edit distance (each shift costs one
edit), then the leftover insertions/deletions/substitutions are added.  A
shifted block must match a reference span exactly, contain at least one
misaligned word, land at a position derived from the current alignment, and
respect the distance/size caps.  This mirrors the published greedy algorithm
(including its tie-breaking preferences), so scores are comparable with the
standard scorer; it is not guaranteed optimal, which the exhaustive-oracle
tests quantify.

Corpus score = 100 * total edits / total reference words.  An empty reference
counts one reference word (every hypothesis word then costs one edit), and
such segments are flagged in the report counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .report import MetricReport
from .tokenizers import tercom_tokenize

_MAX_SHIFT_CANDIDATES = 1000

_OP_NOP = " "
_OP_SUB = "s"
_OP_INS = "i"  # extra hypothesis word
_OP_DEL = "d"  # missing reference word


@dataclass(frozen=True)
class TerConfig:
    normalized: bool = True
    case_insensitive: bool = True
    max_shift_distance: int = 50
    max_shift_size: int = 10

    def __post_init__(self) -> None:
        if self.max_shift_distance < 0 or self.max_shift_size < 1:
            raise ValueError("shift caps must be positive")

    def signature(self) -> str:
        norm = "yes" if self.normalized else "no"
        case = "lc" if self.case_insensitive else "mixed"
        return (
            f"ter|norm:{norm}|case:{case}"
            f"|shiftdist:{self.max_shift_distance}|shiftsize:{self.max_shift_size}"
        )


def _edit_distance_with_trace(hyp: tuple[str, ...], ref: tuple[str, ...]) -> tuple[int, str]:
    """Word edit distance plus one optimal trace.

    Trace characters: ' ' match, 's' substitution, 'i' extra hypothesis word,
    'd' extra reference word.  Ties prefer the diagonal, then consuming a
    hypothesis word, then a reference word.
    """
    nh, nr = len(hyp), len(ref)
    # cell = (cost, op); row 0 consumes reference words
    prev = [(j, _OP_DEL) for j in range(nr + 1)]
    rows = [prev]
    for i in range(1, nh + 1):
        cur = [(i, _OP_INS)] + [(0, "")] * nr
        hyp_word = hyp[i - 1]
        for j in range(1, nr + 1):
            sub_cost = prev[j - 1][0] + (hyp_word != ref[j - 1])
            op = _OP_NOP if hyp_word == ref[j - 1] else _OP_SUB
            best = (sub_cost, op)
            ins_cost = prev[j][0] + 1
            if ins_cost < best[0]:
                best = (ins_cost, _OP_INS)
            del_cost = cur[j - 1][0] + 1
            if del_cost < best[0]:
                best = (del_cost, _OP_DEL)
            cur[j] = best
        rows.append(cur)
        prev = cur

    ops = []
    i, j = nh, nr
    while i > 0 or j > 0:
        op = rows[i][j][1]
        ops.append(op)
        if op in (_OP_NOP, _OP_SUB):
            i -= 1
            j -= 1
        elif op == _OP_INS:
            i -= 1
        else:
            j -= 1
    return rows[nh][nr][0], "".join(reversed(ops))


class _CachedEditDistance:
    """Memoized edit distance against one fixed reference."""

    def __init__(self, ref: tuple[str, ...]):
        self._ref = ref
        self._cache: dict[tuple[str, ...], tuple[int, str]] = {}

    def __call__(self, hyp: tuple[str, ...]) -> tuple[int, str]:
        hit = self._cache.get(hyp)
        if hit is None:
            hit = _edit_distance_with_trace(hyp, self._ref)
            self._cache[hyp] = hit
        return hit


def _trace_to_alignment(trace: str) -> tuple[dict[int, int], list[int], list[int]]:
    """Alignment (ref position -> hyp position) plus per-side error flags."""
    pos_hyp = -1
    pos_ref = -1
    align: dict[int, int] = {}
    hyp_err: list[int] = []
    ref_err: list[int] = []
    for op in trace:
        if op == _OP_NOP:
            pos_hyp += 1
            pos_ref += 1
            align[pos_ref] = pos_hyp
            hyp_err.append(0)
            ref_err.append(0)
        elif op == _OP_SUB:
            pos_hyp += 1
            pos_ref += 1
            align[pos_ref] = pos_hyp
            hyp_err.append(1)
            ref_err.append(1)
        elif op == _OP_INS:
            pos_hyp += 1
            hyp_err.append(1)
        else:
            pos_ref += 1
            ref_err.append(1)
    return align, ref_err, hyp_err


def _find_shifted_pairs(hyp: tuple[str, ...], ref: tuple[str, ...], cfg: TerConfig):
    """All (hyp_start, ref_start, length) with identical word spans."""
    for start_h in range(len(hyp)):
        for start_r in range(len(ref)):
            if abs(start_r - start_h) > cfg.max_shift_distance:
                continue
            length = 0
            while (
                start_h + length < len(hyp)
                and start_r + length < len(ref)
                and hyp[start_h + length] == ref[start_r + length]
                and length < cfg.max_shift_size
            ):
                length += 1
                yield start_h, start_r, length


def _perform_shift(words: tuple[str, ...], start: int, length: int, target: int) -> tuple[str, ...]:
    if target < start:
        return (
            words[:target]
            + words[start:start + length]
            + words[target:start]
            + words[start + length:]
        )
    if target > start + length:
        return (
            words[:start]
            + words[start + length:target]
            + words[start:start + length]
            + words[target:]
        )
    # rotate within the span
    return (
        words[:start]
        + words[start + length:length + target]
        + words[start:start + length]
        + words[length + target:]
    )


def _best_shift(
    hyp: tuple[str, ...],
    ref: tuple[str, ...],
    cached_ed: _CachedEditDistance,
    checked: int,
    cfg: TerConfig,
) -> tuple[int, tuple[str, ...], int]:
    pre_score, trace = cached_ed(hyp)
    align, ref_err, hyp_err = _trace_to_alignment(trace)

    best = None
    for start_h, start_r, length in _find_shifted_pairs(hyp, ref, cfg):
        # only shift spans that are wrong somewhere on both sides
        if not any(hyp_err[start_h + i] for i in range(length)):
            continue
        if not any(ref_err[start_r + i] for i in range(length)):
            continue
        # do not shift a span onto its own current alignment
        aligned_start = align.get(start_r)
        if aligned_start is not None and start_h <= aligned_start < start_h + length:
            continue

        prev_idx = -1
        for offset in range(-1, length):
            if start_r + offset == -1:
                idx = 0
            elif start_r + offset in align:
                idx = align[start_r + offset] + 1
            else:
                break  # aims past the aligned part of the reference
            if idx == prev_idx:
                continue
            prev_idx = idx

            shifted = _perform_shift(hyp, start_h, length, idx)
            candidate = (pre_score - cached_ed(shifted)[0], length, -start_h, -idx, shifted)
            checked += 1
            if best is None or candidate > best:
                best = candidate
            if checked >= _MAX_SHIFT_CANDIDATES:
                break
        if checked >= _MAX_SHIFT_CANDIDATES:
            break

    if best is None:
        return 0, hyp, checked
    return best[0], best[4], checked


def translation_edit_rate(
    hyp_words: Sequence[str],
    ref_words: Sequence[str],
    cfg: TerConfig | None = None,
) -> tuple[int, int]:
    """Greedy-shift edit count for one segment: (edits, reference length)."""
    cfg = cfg or TerConfig()
    hyp = tuple(hyp_words)
    ref = tuple(ref_words)
    if not ref:
        return len(hyp), 1

    cached_ed = _CachedEditDistance(ref)
    shifts = 0
    checked = 0
    while True:
        delta, new_hyp, checked = _best_shift(hyp, ref, cached_ed, checked, cfg)
        if delta <= 0 or checked >= _MAX_SHIFT_CANDIDATES:
            break
        shifts += 1
        hyp = new_hyp
    distance, _ = cached_ed(hyp)
    return shifts + distance, len(ref)


def ter(hypotheses: Sequence[str], references: Sequence[str], cfg: TerConfig | None = None) -> MetricReport:
    cfg = cfg or TerConfig()
    if len(hypotheses) != len(references):
        raise ValueError(f"got {len(hypotheses)} hypotheses but {len(references)} references")
    if not hypotheses:
        raise ValueError("cannot score an empty corpus")

    total_edits = 0
    total_ref_words = 0
    empty_references = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_words = tercom_tokenize(hyp, cfg.normalized, cfg.case_insensitive)
        ref_words = tercom_tokenize(ref, cfg.normalized, cfg.case_insensitive)
        if not ref_words:
            empty_references += 1
        edits, ref_len = translation_edit_rate(hyp_words, ref_words, cfg)
        total_edits += edits
        total_ref_words += ref_len

    score = 100.0 * total_edits / total_ref_words if total_ref_words else 0.0
    return MetricReport(
        metric="ter",
        score=score,
        signature=cfg.signature(),
        counts={
            "edits": total_edits,
            "ref_words": total_ref_words,
            "empty_references": empty_references,
        },
    )
