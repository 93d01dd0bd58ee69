"""Inter-lingual alignment, seeded shuffling, splitting and nested subsets.

The shuffle permutation comes from a Fisher-Yates walk driven by raw 64-bit
words from the Philox4x64 counter-based generator (keyed on the seed) with
rejection sampling, so the order is reproducible across platforms and numpy
versions; only the published Philox stream is consumed.  The generator
identifier is recorded in every manifest.
"""

from __future__ import annotations

import logging
import math
from typing import Mapping

import numpy as np

from .corpus import (
    Corpus,
    DIGEST_ALGORITHM,
    DropRecord,
    LangTag,
    SplitManifest,
    TransUnit,
    corpus_digest,
)
from .ingest import normalize_whitespace

logger = logging.getLogger(__name__)

#: Identifier of the shuffle recipe stored in manifests.
PRNG_ID = "philox4x64+fisher-yates/rejection-v1"

_U64 = 1 << 64


def check_aligned(corpus: Corpus, languages: set[LangTag] | frozenset[LangTag]) -> None:
    """Raise unless every unit has a non-empty target for every language."""
    for unit in corpus:
        for lang in languages:
            if not unit.targets.get(lang, "").strip():
                raise ValueError(f"unit {unit.id!r} is missing a {lang} target")


def interlingual_align(corpora: Mapping[LangTag, Corpus]) -> tuple[Corpus, list[DropRecord]]:
    """Join per-language corpora on identical normalized source text.

    Output contains one unit per source present in every input corpus, with
    targets merged across corpora; order follows the first corpus.  Sources
    missing from any corpus are excluded and recorded with rule
    ``missing-target``.  Conflicting translations for the same source keep the
    first by input order and log a warning.
    """
    if not corpora:
        return Corpus([]), []
    langs = list(corpora)
    source_langs = {corpus.units[0].source_lang for corpus in corpora.values() if len(corpus)}
    if len(source_langs) > 1:
        raise ValueError(f"input corpora disagree on source language: {sorted(map(str, source_langs))}")

    # per language: normalized source -> (translation, unit) with first-wins
    tables: dict[LangTag, dict[str, tuple[str, TransUnit]]] = {}
    order: list[str] = []  # first-corpus appearance order of source keys
    first_unit: dict[str, TransUnit] = {}
    for pos, lang in enumerate(langs):
        table: dict[str, tuple[str, TransUnit]] = {}
        for unit in corpora[lang]:
            translation = unit.targets.get(lang)
            if translation is None:
                logger.warning("align: unit %s has no %s target; ignored", unit.id, lang)
                continue
            key = normalize_whitespace(unit.source)
            if key in table:
                if table[key][0] != translation:
                    logger.warning(
                        "align: conflicting %s translations for source %r; keeping the first", lang, key
                    )
                continue
            table[key] = (translation, unit)
            if pos == 0:
                order.append(key)
            if key not in first_unit:
                first_unit[key] = unit
        tables[lang] = table

    shared = set.intersection(*(set(t) for t in tables.values()))
    aligned_units = []
    for key in order:
        if key not in shared:
            continue
        base = tables[langs[0]][key][1]
        targets = {lang: tables[lang][key][0] for lang in langs}
        aligned_units.append(TransUnit(
            id=base.id,
            source=base.source,
            source_lang=base.source_lang,
            targets=targets,
            provenance=base.provenance,
        ))

    drops = []
    all_keys = set().union(*(set(t) for t in tables.values()))
    for key in sorted(all_keys - shared):
        missing = [str(lang) for lang in langs if key not in tables[lang]]
        rep = first_unit[key]
        drops.append(DropRecord(rep.id, "missing-target", f"no translation in: {', '.join(missing)}"))

    aligned = Corpus(aligned_units, metadata={"aligned_languages": sorted(str(l) for l in langs)})
    return aligned, drops


class _PhiloxWords:
    """Buffered stream of raw 64-bit words from Philox4x64 keyed on the seed."""

    def __init__(self, seed: int, block: int = 4096):
        if not 0 <= seed < _U64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self._bitgen = np.random.Philox(key=seed)
        self._block = block
        self._buf: list[int] = []

    def __next__(self) -> int:
        if not self._buf:
            self._buf = self._bitgen.random_raw(self._block).tolist()
            self._buf.reverse()
        return self._buf.pop()


def seeded_shuffle(corpus: Corpus, seed: int) -> Corpus:
    """Deterministic permutation of the corpus driven by the seed."""
    order = _permutation(len(corpus), seed)
    units = [corpus.units[i] for i in order]
    meta = dict(corpus.metadata)
    meta.update({"shuffle_seed": seed, "prng": PRNG_ID})
    return Corpus(units, metadata=meta)


def _permutation(n: int, seed: int) -> list[int]:
    words = _PhiloxWords(seed)
    idx = list(range(n))
    for i in range(n - 1, 0, -1):
        bound = i + 1
        limit = _U64 - (_U64 % bound)
        while True:
            w = next(words)
            if w < limit:
                j = w % bound
                break
        idx[i], idx[j] = idx[j], idx[i]
    return idx


def _ceil_count(ratio: float, n: int) -> int:
    x = ratio * n
    nearest = round(x)
    if abs(x - nearest) < 1e-9:  # treat 0.1 * 10 as exactly 1
        return int(nearest)
    return math.ceil(x)


def split(
    corpus: Corpus,
    ratios: tuple[float, float, float] = (0.8, 0.1, 0.1),
    *,
    seed: int = 0,
    subset_sizes: tuple[int, ...] = (),
) -> tuple[Corpus, Corpus, Corpus, SplitManifest]:
    """Slice an already-shuffled corpus into train/dev/test.

    Dev and test sizes are ``ceil(ratio * N)``; train takes the remainder.
    Assignment is by contiguous slices in corpus order: train first, then dev,
    then test.  The manifest records the seed the caller shuffled with, the
    subset plan, and the content checksum of the input.
    """
    n = len(corpus)
    if n < 3:
        raise ValueError(f"cannot split {n} units into three non-empty parts")
    train_r, dev_r, test_r = ratios
    if min(ratios) <= 0 or abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must be positive and sum to 1, got {ratios}")

    dev_n = _ceil_count(dev_r, n)
    test_n = _ceil_count(test_r, n)
    train_n = n - dev_n - test_n
    if train_n <= 0:
        raise ValueError(f"ratios {ratios} leave no training units for N={n}")

    units = corpus.units
    train = Corpus(units[:train_n], metadata=dict(corpus.metadata))
    dev = Corpus(units[train_n:train_n + dev_n], metadata=dict(corpus.metadata))
    test = Corpus(units[train_n + dev_n:], metadata=dict(corpus.metadata))

    manifest = SplitManifest(
        seed=seed,
        ratios=(train_r, dev_r, test_r),
        counts=(train_n, dev_n, test_n),
        subset_sizes=tuple(subset_sizes),
        checksum=corpus_digest(corpus),
        checksum_algorithm=DIGEST_ALGORITHM,
        prng=PRNG_ID,
    )
    return train, dev, test, manifest


def nested_subsets(train: Corpus, sizes: tuple[int, ...] | list[int]) -> list[Corpus]:
    """Prefix subsets of the training corpus, one per requested size.

    Sizes must be strictly ascending and no larger than the train set, so each
    smaller subset is exactly the head of every larger one.
    """
    sizes = tuple(sizes)
    for a, b in zip(sizes, sizes[1:]):
        if b <= a:
            raise ValueError(f"subset sizes must be strictly ascending, got {sizes}")
    for size in sizes:
        if size > len(train):
            raise ValueError(f"subset size {size} exceeds train size {len(train)}")
        if size < 1:
            raise ValueError(f"subset size {size} must be positive")
    return [Corpus(train.units[:size], metadata=dict(train.metadata)) for size in sizes]


def full_language_extract(
    corpora: Mapping[LangTag, Corpus],
    aligned_dev: Corpus,
    aligned_test: Corpus,
    lang: LangTag,
) -> Corpus:
    """All units for one language whose source does not leak into dev/test.

    Exclusion is an exact match on normalized source text against the aligned
    dev and test sets.
    """
    if lang not in corpora:
        raise KeyError(f"no corpus for language {lang}")
    held_out = {normalize_whitespace(u.source) for u in aligned_dev}
    held_out.update(normalize_whitespace(u.source) for u in aligned_test)
    kept = [u for u in corpora[lang] if normalize_whitespace(u.source) not in held_out]
    meta = dict(corpora[lang].metadata)
    meta["full_dataset_language"] = str(lang)
    return Corpus(kept, metadata=meta)
