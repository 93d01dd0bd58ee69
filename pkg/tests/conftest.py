from __future__ import annotations

from pathlib import Path

import pytest

from tmforge.corpus import Corpus, LangTag, Provenance, TransUnit

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

EN = LangTag("en")
DE = LangTag("de")
FI = LangTag("fi")
KO = LangTag("ko")
CS = LangTag("cs")
PT_BR = LangTag("pt-BR")


def make_unit(uid: str, source: str, targets: dict | None = None,
              origin: str = "test.tsv", domain: str = "other") -> TransUnit:
    targets = targets if targets is not None else {DE: source + " (de)"}
    return TransUnit(
        id=uid,
        source=source,
        source_lang=EN,
        targets={LangTag(str(k)): v for k, v in targets.items()},
        provenance=Provenance(origin_file=origin, domain=domain),
    )


def make_corpus(sources: list[str], prefix: str = "u", **kwargs) -> Corpus:
    return Corpus([make_unit(f"{prefix}{i}", s, **kwargs) for i, s in enumerate(sources)])


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES
