"""Tokenization used by the corpus-level MT metrics.

``tokenize_13a`` reproduces the mteval-v13a scheme used by the standard
corpus-BLEU scorers: punctuation is split from non-digit neighbors, symbols
are split everywhere, and whitespace is collapsed.  ``tercom_tokenize``
reproduces the tercom normalization (always western mode here).  Both are
regex transliterations of the published reference behavior so that scores are
comparable with sacreBLEU defaults.
"""

from __future__ import annotations

import re
import string

_13A_RULES = (
    (re.compile(r"<skipped>"), ""),
    (re.compile(r"-\n"), ""),
    (re.compile(r"\n"), " "),
    (re.compile(r"&quot;"), '"'),
    (re.compile(r"&amp;"), "&"),
    (re.compile(r"&lt;"), "<"),
    (re.compile(r"&gt;"), ">"),
)

_13A_LANG_RULES = (
    (re.compile(r"([\{-\~\[-\` -\&\(-\+\:-\@\/])"), r" \1 "),
    (re.compile(r"([^0-9])([\.,])"), r"\1 \2 "),
    (re.compile(r"([\.,])([^0-9])"), r" \1 \2"),
    (re.compile(r"([0-9])(-)"), r"\1 \2 "),
)


def tokenize_13a(text: str) -> list[str]:
    """Tokenize one segment with the 13a scheme; returns the token list."""
    norm = text
    for pattern, repl in _13A_RULES:
        norm = pattern.sub(repl, norm)
    norm = f" {norm} "
    for pattern, repl in _13A_LANG_RULES:
        norm = pattern.sub(repl, norm)
    return norm.split()


_TERCOM_RULES = (
    (re.compile(r"\n-"), ""),
    (re.compile(r"\n"), " "),
    (re.compile(r"&quot;"), '"'),
    (re.compile(r"&amp;"), "&"),
    (re.compile(r"&lt;"), "<"),
    (re.compile(r"&gt;"), ">"),
)

_TERCOM_WESTERN_RULES = (
    (re.compile(r"([{-~\[-` -&(-+:-@/])"), r" \1 "),
    (re.compile(r"('s )"), r" \1"),
    (re.compile(r"('s$)"), r" \1"),
    (re.compile(r"([^0-9])([\.,])"), r"\1 \2 "),
    (re.compile(r"([\.,])([^0-9])"), r" \1 \2"),
    (re.compile(r"([0-9])(-)"), r"\1 \2 "),
)


def tercom_tokenize(text: str, normalized: bool = True, case_insensitive: bool = True) -> list[str]:
    """tercom-style preparation: optional lowercase, optional normalization,
    whitespace split."""
    if case_insensitive:
        text = text.lower()
    if normalized:
        for pattern, repl in _TERCOM_RULES:
            text = pattern.sub(repl, text)
        text = f" {text} "
        for pattern, repl in _TERCOM_WESTERN_RULES:
            text = pattern.sub(repl, text)
    return text.split()


_PUNCTUATION = set(string.punctuation)


def separate_punctuation(text: str) -> list[str]:
    """Word tokenization for chrF++ word n-grams.

    Splits one leading or trailing punctuation character off each
    whitespace-delimited word, the way the chrF++ reference tokenizer does
    ('1996.' becomes '1996' '.', but '1996.x' stays whole).
    """
    tokens: list[str] = []
    for word in text.split():
        if len(word) == 1:
            tokens.append(word)
        elif word[-1] in _PUNCTUATION:
            tokens.extend([word[:-1], word[-1]])
        elif word[0] in _PUNCTUATION:
            tokens.extend([word[0], word[1:]])
        else:
            tokens.append(word)
    return tokens
