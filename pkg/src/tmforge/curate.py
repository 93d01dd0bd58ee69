"""Cleaning rules for ingested corpora, with an auditable drop log.

Rules run per unit in a fixed order and the first failing rule wins:

1. empty-after-clean   source or any target empty after normalization
2. over-length         source or any target above the word cap (default 150)
3. source-copy         a target equals the source verbatim
4. non-content         source consists only of dates / versions / code
5. duplicate           exact duplicate (source + all targets) of a kept unit

Word counting is whitespace-delimited token counting.  The non-content
detector is heuristic by necessity; the patterns below are the documented,
testable definitions of "date", "version number" and "programming language"
used throughout the pipeline.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from sklearn.base import BaseEstimator, TransformerMixin

from .corpus import Corpus, DropRecord, LangTag, TransUnit, check_corpus
from .ingest import normalize_whitespace

#: Tokens that are dates on their own: ISO, slashed, or dotted numeric forms.
DATE_TOKEN_PATTERNS = (
    re.compile(r"^\d{4}-\d{1,2}-\d{1,2}$"),
    re.compile(r"^\d{1,2}/\d{1,2}/\d{2,4}$"),
    re.compile(r"^\d{4}/\d{1,2}/\d{1,2}$"),
    re.compile(r"^\d{1,2}\.\d{1,2}\.\d{2,4}$"),
)

#: Whole rows that are month-name dates ("May 14, 2023", "14 May 2023").
_MONTHS = (
    "january|february|march|april|may|june|july|august|september|october|"
    "november|december|jan|feb|mar|apr|jun|jul|aug|sep|sept|oct|nov|dec"
)
FULL_DATE_PATTERNS = (
    re.compile(rf"^(?:{_MONTHS})\.?\s+\d{{1,2}}(?:st|nd|rd|th)?,?\s+\d{{2,4}}$", re.IGNORECASE),
    re.compile(rf"^\d{{1,2}}(?:st|nd|rd|th)?\.?\s+(?:{_MONTHS})\.?,?\s+\d{{2,4}}$", re.IGNORECASE),
)

#: Version-number tokens: v1.2, 1.2.3, v2, 1.0-rc1, plus bare stage tags.
VERSION_TOKEN_PATTERNS = (
    re.compile(r"^[vV]?\d+(\.\d+)+[A-Za-z0-9.+_-]*$"),
    re.compile(r"^[vV]\d+$"),
    re.compile(r"^(?:rc|beta|alpha|build|rev|r)\d*$", re.IGNORECASE),
)

_CODE_CHARS = set("(){};=<>[]")
_SNAKE_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9]*_[A-Za-z0-9_]*$")
_CAMEL_RE = re.compile(r"^[a-z]+[A-Z][A-Za-z0-9]*$")
_ALPHA_RUN_RE = re.compile(r"[^\W\d_]{3,}")
_ALPHA_RE = re.compile(r"[^\W\d_]")


@dataclass(frozen=True)
class CurationConfig:
    max_words: int = 150
    drop_duplicates: bool = True
    drop_source_copies: bool = True
    drop_noncontent: bool = True

    def __post_init__(self) -> None:
        if self.max_words < 1:
            raise ValueError("max_words must be >= 1")


def word_count(text: str) -> int:
    """Number of maximal non-whitespace runs."""
    return len(text.split())


def is_source_copy(unit: TransUnit, lang: LangTag) -> bool:
    """True iff the target for ``lang`` equals the source after whitespace
    normalization, compared case-sensitively."""
    if lang not in unit.targets:
        raise KeyError(f"unit {unit.id!r} has no target for {lang}")
    return normalize_whitespace(unit.source) == normalize_whitespace(unit.targets[lang])


def _is_date_token(token: str) -> bool:
    return any(p.match(token) for p in DATE_TOKEN_PATTERNS)


def _is_version_token(token: str) -> bool:
    return any(p.match(token) for p in VERSION_TOKEN_PATTERNS)


def _is_codeish_token(token: str) -> bool:
    if any(ch in _CODE_CHARS for ch in token):
        return True
    if len(token) == 1 and token.isalpha():
        return True  # bare single letters read as variables next to code
    return bool(_SNAKE_RE.match(token) or _CAMEL_RE.match(token))


def is_noncontent(text: str) -> bool:
    """True iff the text carries no translatable content.

    After removing date tokens, version tokens and (when the row carries no
    ordinary word of three or more letters outside them) code-like tokens,
    no token containing an alphabetic character may remain.  Code-like means
    containing brackets/operators, snake_case or camelCase identifiers, or a
    bare single letter.  Whole-row month-name dates are recognized directly.
    """
    text = normalize_whitespace(text)
    if any(p.match(text) for p in FULL_DATE_PATTERNS):
        return True
    tokens = text.split()
    classified: list[str | None] = []
    for tok in tokens:
        if _is_date_token(tok) or _is_version_token(tok):
            classified.append(None)
        else:
            classified.append(tok)
    survivors = [tok for tok in classified if tok is not None]
    code_candidates = [tok for tok in survivors if _is_codeish_token(tok)]
    ordinary = [tok for tok in survivors if not _is_codeish_token(tok)]
    if not any(_ALPHA_RUN_RE.search(tok) for tok in ordinary):
        survivors = ordinary  # code heuristic active: drop the code tokens
    else:
        survivors = ordinary + code_candidates
    return not any(_ALPHA_RE.search(tok) for tok in survivors)


def _length_violation(unit: TransUnit, max_words: int) -> str | None:
    n = word_count(unit.source)
    if n > max_words:
        return f"source is {n} words (max {max_words})"
    for lang, text in sorted(unit.targets.items()):
        n = word_count(text)
        if n > max_words:
            return f"target {lang} is {n} words (max {max_words})"
    return None


def _duplicate_key(unit: TransUnit) -> tuple:
    return (unit.source, tuple(sorted((str(l), t) for l, t in unit.targets.items())))


def curate_corpus(corpus: Corpus, cfg: CurationConfig | None = None) -> tuple[Corpus, list[DropRecord]]:
    """Apply the cleaning rules in fixed order; first failing rule wins.

    Returns the kept corpus (input order preserved) and one DropRecord per
    removed unit.  ``|kept| + |dropped| == |input|`` always holds, and running
    the result through curation again drops nothing.
    """
    cfg = cfg or CurationConfig()
    kept: list[TransUnit] = []
    drops: list[DropRecord] = []
    seen: set[tuple] = set()

    for unit in corpus:
        source = normalize_whitespace(unit.source)
        targets = {lang: normalize_whitespace(text) for lang, text in unit.targets.items()}

        if not source or any(not t for t in targets.values()):
            drops.append(DropRecord(unit.id, "empty-after-clean", "empty source or target after cleaning"))
            continue

        detail = _length_violation(unit, cfg.max_words)
        if detail is not None:
            drops.append(DropRecord(unit.id, "over-length", detail))
            continue

        if cfg.drop_source_copies:
            copy_langs = [str(lang) for lang, text in sorted(targets.items()) if text == source]
            if copy_langs:
                drops.append(DropRecord(unit.id, "source-copy", f"target equals source for {', '.join(copy_langs)}"))
                continue

        if cfg.drop_noncontent and is_noncontent(source):
            drops.append(DropRecord(unit.id, "non-content", "source is only dates, versions, or code"))
            continue

        if cfg.drop_duplicates:
            key = _duplicate_key(unit)
            if key in seen:
                drops.append(DropRecord(unit.id, "duplicate", "identical source and targets seen earlier"))
                continue
            seen.add(key)

        kept.append(unit)

    return Corpus(kept, metadata=dict(corpus.metadata)), drops


class CorpusCleaner(BaseEstimator, TransformerMixin):
    """Estimator-style wrapper over :func:`curate_corpus`.

    Stateless: ``fit`` only validates the input.  After ``transform`` the
    drop log is available as ``drop_records_``.
    """

    def __init__(self, max_words=150, drop_duplicates=True, drop_source_copies=True, drop_noncontent=True):
        self.max_words = max_words
        self.drop_duplicates = drop_duplicates
        self.drop_source_copies = drop_source_copies
        self.drop_noncontent = drop_noncontent

    def _config(self) -> CurationConfig:
        return CurationConfig(
            max_words=self.max_words,
            drop_duplicates=self.drop_duplicates,
            drop_source_copies=self.drop_source_copies,
            drop_noncontent=self.drop_noncontent,
        )

    def fit(self, X, y=None):
        check_corpus(X)
        self._config()
        return self

    def transform(self, X) -> Corpus:
        corpus = check_corpus(X)
        kept, drops = curate_corpus(corpus, self._config())
        self.drop_records_ = drops
        return kept
