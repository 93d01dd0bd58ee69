"""Near-duplicate filtering of test sets against training sets.

A test unit is dropped when the combined Levenshtein / word-n-gram similarity
of its source against any training source strictly exceeds the threshold
(default 0.75; a pair at exactly the threshold is kept).  The indexed path
must return exactly the same kept-set as a brute-force all-pairs scan, so
candidate pruning is only ever done on provable grounds:

* inverted index: two sides with at least n words each need a shared n-gram
  for any non-zero n-gram similarity;
* fallback orders (a side under n words): the shorter side has exactly one
  distinct window at the effective order, so non-zero similarity requires
  that window to occur in the longer side, and the Jaccard value equals
  1 / (distinct windows of the longer side) -- short train units are found
  by exact window lookup, short test units match only trains with few
  distinct windows (for thresholds >= 0.5, a single repeated token);
* character-length band: ``lev_sim > t`` forces ``t*len <= len_s <= len/t``;
* hashed character q-gram profiles (q = 1, 2, 3): one edit changes at most
  q q-grams per side, so ``lev >= L1(profiles) / 2q``, and bucketing only
  shrinks L1.

Every surviving candidate is scored exactly, on the raw source strings.
Verdicts report the best pair the pruned search had to examine; pairs
provably at or below the threshold may be skipped, which never changes the
kept-set.
"""

from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .corpus import Corpus, DropRecord, TransUnit, check_corpus

#: (q-gram order, bucket count) for the hashed character-profile filters.
#: One edit changes at most q q-grams per side, so L1(profiles) <= 2q * lev;
#: hashing into buckets only merges coordinates and never increases L1.
_PROFILE_SPECS = ((1, 64), (2, 128), (3, 256))
_GRAM_SEP = "\x1f"


@dataclass(frozen=True)
class DecontamConfig:
    threshold: float = 0.75
    ngram_order: int = 5
    combine: str = "max"

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must be in [0, 1]")
        if self.ngram_order < 1:
            raise ValueError("ngram_order must be >= 1")
        if self.combine not in ("max", "mean"):
            raise ValueError("combine must be 'max' or 'mean'")


@dataclass(frozen=True)
class SimilarityVerdict:
    test_unit_id: str
    best_train_unit_id: str | None
    lev_sim: float
    ngram_sim: float
    combined: float
    dropped: bool

    def to_record(self) -> dict:
        return {
            "test_unit_id": self.test_unit_id,
            "best_train_unit_id": self.best_train_unit_id,
            "lev_sim": round(self.lev_sim, 6),
            "ngram_sim": round(self.ngram_sim, 6),
            "combined": round(self.combined, 6),
            "dropped": self.dropped,
        }


def lev_distance(a: str, b: str) -> int:
    """Levenshtein distance over Unicode scalar values.

    Myers' bit-parallel scan; Python's arbitrary-precision integers make it
    exact for any length at roughly one machine word op per 64 pattern
    characters per text character.
    """
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    m = len(b)
    if m == 0:
        return len(a)
    mask = (1 << m) - 1
    last = 1 << (m - 1)
    peq: dict[str, int] = {}
    for i, ch in enumerate(b):
        peq[ch] = peq.get(ch, 0) | (1 << i)
    score = m
    vp = mask
    vn = 0
    for ch in a:
        eq = peq.get(ch, 0)
        d0 = ((((eq & vp) + vp) & mask) ^ vp) | eq | vn
        hp = vn | (~(d0 | vp) & mask)
        hn = d0 & vp
        if hp & last:
            score += 1
        if hn & last:
            score -= 1
        hp = ((hp << 1) | 1) & mask
        hn = (hn << 1) & mask
        vp = hn | (~(d0 | hp) & mask)
        vn = d0 & hp
    return score


class _MyersMatcher:
    """One fixed pattern, many distance queries; bit-vectors built once."""

    __slots__ = ("pattern", "length", "mask", "last", "peq")

    def __init__(self, pattern: str):
        self.pattern = pattern
        self.length = len(pattern)
        self.mask = (1 << self.length) - 1
        self.last = 1 << (self.length - 1) if self.length else 0
        peq: dict[str, int] = {}
        for i, ch in enumerate(pattern):
            peq[ch] = peq.get(ch, 0) | (1 << i)
        self.peq = peq

    def distance(self, text: str) -> int:
        m = self.length
        if m == 0:
            return len(text)
        if not text:
            return m
        mask = self.mask
        last = self.last
        peq = self.peq
        score = m
        vp = mask
        vn = 0
        for ch in text:
            eq = peq.get(ch, 0)
            d0 = ((((eq & vp) + vp) & mask) ^ vp) | eq | vn
            hp = vn | (~(d0 | vp) & mask)
            hn = d0 & vp
            if hp & last:
                score += 1
            if hn & last:
                score -= 1
            hp = ((hp << 1) | 1) & mask
            hn = (hn << 1) & mask
            vp = hn | (~(d0 | hp) & mask)
            vn = d0 & hp
        return score

    def bounded(self, text: str, cutoff: int) -> int:
        """Exact distance when <= cutoff, else any value above the cutoff."""
        if abs(self.length - len(text)) > cutoff:
            return cutoff + 1
        return self.distance(text)


def lev_similarity(a: str, b: str) -> float:
    """1 - distance / max(len); defined as 1.0 when both strings are empty."""
    m = max(len(a), len(b))
    if m == 0:
        return 1.0
    return 1.0 - lev_distance(a, b) / m


def word_ngrams(text: str, n: int) -> set[str]:
    """Set of contiguous word n-grams of the whitespace-tokenized string."""
    tokens = text.split()
    return {_GRAM_SEP.join(tokens[i:i + n]) for i in range(len(tokens) - n + 1)}


def ngram_similarity(a: str, b: str, n: int = 5) -> float:
    """Jaccard coefficient over word n-gram sets.

    When either side has fewer than n words the order falls back to the
    shorter side's word count; an empty side scores 0 (1 when both empty).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    ta, tb = a.split(), b.split()
    if not ta or not tb:
        return 1.0 if not ta and not tb else 0.0
    k = n if (len(ta) >= n and len(tb) >= n) else min(len(ta), len(tb))
    ga = {_GRAM_SEP.join(ta[i:i + k]) for i in range(len(ta) - k + 1)}
    gb = {_GRAM_SEP.join(tb[i:i + k]) for i in range(len(tb) - k + 1)}
    inter = len(ga & gb)
    return inter / (len(ga) + len(gb) - inter)


def combined_similarity(a: str, b: str, cfg: DecontamConfig | None = None) -> float:
    cfg = cfg or DecontamConfig()
    lev = lev_similarity(a, b)
    ng = ngram_similarity(a, b, cfg.ngram_order)
    return max(lev, ng) if cfg.combine == "max" else (lev + ng) / 2.0


def _char_profiles(text: str) -> list[np.ndarray]:
    """Hashed q-gram count vectors for each (q, buckets) in _PROFILE_SPECS."""
    codes = np.frombuffer(text.encode("utf-32-le"), dtype=np.uint32)
    out = []
    for q, buckets in _PROFILE_SPECS:
        if codes.size < q:
            out.append(np.zeros(buckets, dtype=np.uint16))
            continue
        h = codes[: codes.size - q + 1].copy()
        for offset in range(1, q):
            h = h * np.uint32(31) + codes[offset: codes.size - q + 1 + offset]
        out.append(np.bincount(h % np.uint32(buckets), minlength=buckets).astype(np.uint16))
    return out


class NgramIndex:
    """Inverted word-n-gram index plus the banded fallback structures."""

    def __init__(self, corpus: Corpus, n: int):
        self.n = n
        self.unit_ids: list[str] = []
        self.sources: list[str] = []
        self.token_lists: list[tuple[str, ...]] = []
        self.gram_sets: list[frozenset[str] | None] = []

        intern: dict[str, str] = {}
        postings: dict[str, list[int]] = {}
        short_exact: dict[tuple[str, ...], list[int]] = {}
        lengths = []
        wordcounts = []
        profile_rows: list[list[np.ndarray]] = [[] for _ in _PROFILE_SPECS]
        for idx, unit in enumerate(corpus):
            source = unit.source
            tokens = tuple(intern.setdefault(t, t) for t in source.split())
            self.unit_ids.append(unit.id)
            self.sources.append(source)
            self.token_lists.append(tokens)
            lengths.append(len(source))
            wordcounts.append(len(tokens))
            for row_list, profile in zip(profile_rows, _char_profiles(source)):
                row_list.append(profile)
            if len(tokens) >= n:
                grams = frozenset(_GRAM_SEP.join(tokens[i:i + n]) for i in range(len(tokens) - n + 1))
                self.gram_sets.append(grams)
                for gram in grams:
                    postings.setdefault(gram, []).append(idx)
            else:
                self.gram_sets.append(None)
                short_exact.setdefault(tokens, []).append(idx)

        self.postings: dict[str, np.ndarray] = {
            gram: np.asarray(ids, dtype=np.int32) for gram, ids in postings.items()
        }
        self.short_exact: dict[tuple[str, ...], np.ndarray] = {
            tokens: np.asarray(ids, dtype=np.int32) for tokens, ids in short_exact.items()
        }
        self.lengths = np.asarray(lengths, dtype=np.int32)
        self.wordcounts = np.asarray(wordcounts, dtype=np.int32)
        self.profiles = [
            np.vstack(rows) if rows else np.zeros((0, buckets), dtype=np.uint16)
            for rows, (_, buckets) in zip(profile_rows, _PROFILE_SPECS)
        ]
        self.len_order = np.argsort(self.lengths, kind="stable").astype(np.int32)
        self.sorted_lengths = self.lengths[self.len_order]
        self.empty_units = np.nonzero(self.wordcounts == 0)[0].astype(np.int32)
        uniform: dict[str, list[int]] = {}
        for idx, tokens in enumerate(self.token_lists):
            if tokens and tokens.count(tokens[0]) == len(tokens):
                uniform.setdefault(tokens[0], []).append(idx)
        self.uniform_units: dict[str, np.ndarray] = {
            token: np.asarray(ids, dtype=np.int32) for token, ids in uniform.items()
        }
        self._few_window_cache: dict[tuple[int, int], np.ndarray] = {}

    def few_window_ids(self, order: int, limit: int) -> np.ndarray:
        """Units with at most ``limit`` distinct word windows of this order."""
        key = (order, limit)
        hit = self._few_window_cache.get(key)
        if hit is None:
            ids = [
                i for i, tokens in enumerate(self.token_lists)
                if len(tokens) >= order
                and len({tokens[j:j + order] for j in range(len(tokens) - order + 1)}) <= limit
            ]
            hit = np.asarray(ids, dtype=np.int32)
            self._few_window_cache[key] = hit
        return hit

    def __len__(self) -> int:
        return len(self.unit_ids)

    def posting_count(self) -> int:
        """Total number of (gram, unit) postings; one per distinct gram per unit."""
        return sum(arr.size for arr in self.postings.values())

    def ids_in_length_range(self, lo: int, hi: int) -> np.ndarray:
        left = np.searchsorted(self.sorted_lengths, lo, side="left")
        right = np.searchsorted(self.sorted_lengths, hi, side="right")
        return self.len_order[left:right]


def build_ngram_index(train: Corpus, n: int = 5) -> NgramIndex:
    return NgramIndex(train, n)


def _lev_cutoff(bound: float, maxlen: int) -> int:
    """Largest distance worth resolving when we only care about sim > bound."""
    if maxlen == 0:
        return 0
    return max(0, int(math.floor((1.0 - bound) * maxlen + 1e-12)))


def _candidates(index: NgramIndex, source: str, tokens: tuple[str, ...], cfg: DecontamConfig) -> np.ndarray:
    theta = cfg.threshold
    n = cfg.ngram_order
    m = len(index)
    if m == 0:
        return np.empty(0, dtype=np.int32)
    if theta <= 0.0:
        return np.arange(m, dtype=np.int32)

    parts: list[np.ndarray] = []
    wc = len(tokens)
    length = len(source)

    # shared order-n grams
    if wc >= n:
        grams = {_GRAM_SEP.join(tokens[i:i + n]) for i in range(wc - n + 1)}
        hits = [index.postings[g] for g in grams if g in index.postings]
        if hits:
            parts.append(np.concatenate(hits))

    # fallback orders (min side < n).  The effective order is the shorter
    # side's word count, at which the shorter side contributes exactly one
    # distinct window; any non-zero similarity therefore requires that window
    # to occur in the longer side, and the Jaccard value is 1 / |windows of
    # the longer side| (distinct, so repeated tokens collapse).
    if wc == 0:
        if index.empty_units.size:
            parts.append(index.empty_units)
    else:
        # train side shorter or equal: its full token sequence must be one of
        # the test unit's windows
        seen_windows: set[tuple[str, ...]] = set()
        for order in range(1, min(n - 1, wc) + 1):
            for i in range(wc - order + 1):
                window = tokens[i:i + order]
                if window in seen_windows:
                    continue
                seen_windows.add(window)
                hit = index.short_exact.get(window)
                if hit is not None:
                    parts.append(hit)
        # test side shorter: similarity is 1 / (distinct train windows), so
        # only trains with at most ceil(1/theta) - 1 distinct windows at this
        # order can get over the threshold; for thresholds >= 0.5 that means
        # every window identical, i.e. a single repeated token
        if wc < n:
            limit = math.ceil(1.0 / theta) - 1
            if limit <= 1:
                if tokens.count(tokens[0]) == wc:
                    hit = index.uniform_units.get(tokens[0])
                    if hit is not None:
                        parts.append(hit)
            else:
                parts.append(index.few_window_ids(wc, limit))

    # character-length band with sound q-gram-profile pruning:
    # lev >= L1(q-profiles) / (2q), and lev_sim > theta needs
    # lev < (1 - theta) * maxlen
    lo_len = int(math.floor(theta * length))
    hi_len = int(math.ceil(length / theta))
    band = index.ids_in_length_range(lo_len, hi_len)
    if band.size:
        own_profiles = _char_profiles(source)
        band_lengths = index.lengths[band]
        maxlen = np.maximum(band_lengths, length)
        allowed = (1.0 - theta) * maxlen
        for (q, _), own, matrix in zip(_PROFILE_SPECS, own_profiles, index.profiles):
            if not band.size:
                break
            shared = np.minimum(matrix[band], own).sum(axis=1, dtype=np.int64)
            grams_t = max(length - q + 1, 0)
            grams_s = np.maximum(band_lengths - (q - 1), 0)
            l1 = grams_t + grams_s - 2 * shared
            keep = l1 < 2 * q * allowed
            band = band[keep]
            band_lengths = band_lengths[keep]
            maxlen = maxlen[keep]
            allowed = allowed[keep]
        if band.size:
            parts.append(band)

    if not parts:
        return np.empty(0, dtype=np.int32)
    return np.unique(np.concatenate(parts))


def _score_unit(unit: TransUnit, index: NgramIndex, cfg: DecontamConfig) -> SimilarityVerdict:
    theta = cfg.threshold
    n = cfg.ngram_order
    source = unit.source
    tokens = tuple(source.split())
    wc = len(tokens)
    own_grams = (
        frozenset(_GRAM_SEP.join(tokens[i:i + n]) for i in range(wc - n + 1)) if wc >= n else None
    )
    matcher = _MyersMatcher(source)

    posting_hits: set[int] = set()
    if own_grams is not None:
        for gram in own_grams:
            hit = index.postings.get(gram)
            if hit is not None:
                posting_hits.update(hit.tolist())

    best_idx = -1
    best_combined = -1.0
    best_ng = 0.0
    best_lev: float | None = None  # None when only bounded below the n-gram score
    for cand in _candidates(index, source, tokens, cfg):
        cand = int(cand)
        s_source = index.sources[cand]
        s_tokens = index.token_lists[cand]
        s_wc = len(s_tokens)

        # exact n-gram similarity, using the prebuilt sets at full order
        if wc == 0 or s_wc == 0:
            ng = 1.0 if wc == s_wc else 0.0
        elif own_grams is not None and index.gram_sets[cand] is not None:
            if cand not in posting_hits:
                ng = 0.0  # both sides have >= n words but share no n-gram
            else:
                other = index.gram_sets[cand]
                inter = len(own_grams & other)
                ng = inter / (len(own_grams) + len(other) - inter)
        else:
            k = min(wc, s_wc)
            ga = {_GRAM_SEP.join(tokens[i:i + k]) for i in range(wc - k + 1)}
            gb = {_GRAM_SEP.join(s_tokens[i:i + k]) for i in range(s_wc - k + 1)}
            inter = len(ga & gb)
            ng = inter / (len(ga) + len(gb) - inter)

        needed = max(theta, best_combined)
        maxlen = max(len(source), len(s_source))
        if cfg.combine == "max":
            # resolve lev exactly only while it can still raise this pair
            # above both the threshold and the current best
            bound = max(needed, ng)
            if maxlen == 0:
                lev = 1.0
            else:
                cutoff = _lev_cutoff(bound, maxlen)
                d = matcher.bounded(s_source, cutoff)
                lev = 1.0 - d / maxlen if d <= cutoff else None
            combined = ng if lev is None else max(lev, ng)
        else:
            # mean combine: the pair matters only if lev > 2*needed - ng
            bound = max(0.0, 2.0 * needed - ng)
            if maxlen == 0:
                lev = 1.0
            else:
                if bound >= 1.0:
                    continue  # even lev == 1 cannot lift the mean past `needed`
                cutoff = _lev_cutoff(bound, maxlen)
                d = matcher.bounded(s_source, cutoff)
                if d > cutoff:
                    continue  # mean provably <= needed
                lev = 1.0 - d / maxlen
            combined = (lev + ng) / 2.0

        if combined > best_combined:
            best_combined = combined
            best_ng = ng
            best_lev = lev
            best_idx = cand

    if best_idx < 0:
        return SimilarityVerdict(unit.id, None, 0.0, 0.0, 0.0, False)

    if best_lev is None:  # bounded out during the search: resolve for the report
        other = index.sources[best_idx]
        m = max(len(source), len(other))
        best_lev = 1.0 if m == 0 else 1.0 - matcher.distance(other) / m
    combined = max(best_lev, best_ng) if cfg.combine == "max" else (best_lev + best_ng) / 2.0
    return SimilarityVerdict(
        test_unit_id=unit.id,
        best_train_unit_id=index.unit_ids[best_idx],
        lev_sim=best_lev,
        ngram_sim=best_ng,
        combined=combined,
        dropped=combined > theta,
    )


_WORKER_STATE: dict = {}


def _score_chunk(args) -> list[SimilarityVerdict]:
    lo, hi = args
    units = _WORKER_STATE["units"]
    index = _WORKER_STATE["index"]
    cfg = _WORKER_STATE["cfg"]
    return [_score_unit(units[i], index, cfg) for i in range(lo, hi)]


def decontaminate_with_index(
    test: Corpus,
    index: NgramIndex,
    cfg: DecontamConfig | None = None,
    threads: int = 1,
) -> tuple[Corpus, list[SimilarityVerdict]]:
    cfg = cfg or DecontamConfig()
    units = list(test.units)

    if threads > 1 and len(units) > 1:
        _WORKER_STATE.update(units=units, index=index, cfg=cfg)
        try:
            chunk = max(1, math.ceil(len(units) / (threads * 4)))
            spans = [(lo, min(lo + chunk, len(units))) for lo in range(0, len(units), chunk)]
            ctx = multiprocessing.get_context("fork")
            with ctx.Pool(threads) as pool:
                verdict_chunks = pool.map(_score_chunk, spans)
            verdicts = [v for chunk_result in verdict_chunks for v in chunk_result]
        finally:
            _WORKER_STATE.clear()
    else:
        verdicts = [_score_unit(u, index, cfg) for u in units]

    dropped_ids = {v.test_unit_id for v in verdicts if v.dropped}
    kept = Corpus([u for u in units if u.id not in dropped_ids], metadata=dict(test.metadata))
    verdicts.sort(key=lambda v: v.test_unit_id)
    return kept, verdicts


def decontaminate(
    test: Corpus,
    train: Corpus,
    cfg: DecontamConfig | None = None,
    threads: int = 1,
) -> tuple[Corpus, list[SimilarityVerdict]]:
    """Drop test units too similar to any training unit; report verdicts.

    Similarity is computed on source texts.  The result is exactly what the
    all-pairs scan would produce; the inverted index and length bands are a
    pure optimization.
    """
    cfg = cfg or DecontamConfig()
    if len(test) and len(train):
        src_langs = {u.source_lang for u in test} | {u.source_lang for u in train}
        if len(src_langs) > 1:
            raise ValueError(f"test and train must share a source language, got {sorted(map(str, src_langs))}")
    index = build_ngram_index(train, cfg.ngram_order)
    return decontaminate_with_index(test, index, cfg, threads)


def verdict_drop_records(verdicts: list[SimilarityVerdict]) -> list[DropRecord]:
    return [
        DropRecord(
            v.test_unit_id,
            "contaminated",
            f"combined similarity {v.combined:.4f} with train unit {v.best_train_unit_id}",
        )
        for v in verdicts
        if v.dropped
    ]


class NearDuplicateFilter(BaseEstimator, TransformerMixin):
    """sklearn-style decontaminator: fit on the training corpus, transform the
    test corpus.  After ``transform`` the per-unit judgments are available as
    ``verdicts_``."""

    def __init__(self, threshold=0.75, ngram_order=5, combine="max", threads=1):
        self.threshold = threshold
        self.ngram_order = ngram_order
        self.combine = combine
        self.threads = threads

    def _config(self) -> DecontamConfig:
        return DecontamConfig(self.threshold, self.ngram_order, self.combine)

    def fit(self, X, y=None):
        train = check_corpus(X)
        cfg = self._config()
        self.index_ = build_ngram_index(train, cfg.ngram_order)
        return self

    def transform(self, X) -> Corpus:
        if not hasattr(self, "index_"):
            raise RuntimeError("NearDuplicateFilter must be fitted before transform")
        test = check_corpus(X)
        kept, verdicts = decontaminate_with_index(test, self.index_, self._config(), self.threads)
        self.verdicts_ = verdicts
        return kept
