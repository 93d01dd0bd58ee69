"""Core domain types shared by the whole pipeline.

A corpus is an ordered, immutable sequence of translation units.  Units carry a
stable id, a source segment, and per-language target segments.  The canonical
on-disk form is UTF-8 line-delimited JSON, one unit per line; split manifests
are single JSON documents.  All artifact writes sort object keys so reruns are
byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

DOMAIN_TAGS = ("knowledge-base", "mobile-ui", "mobile-reference", "other")

DROP_RULES = frozenset({
    "duplicate",
    "source-copy",
    "over-length",
    "non-content",
    "empty-after-clean",
    "missing-target",
    "contaminated",
})

#: Content-digest algorithm; recorded in manifests so that artifacts hashed
#: with a different algorithm never compare equal silently.
DIGEST_ALGORITHM = "sha256"

_LANG_RE = re.compile(r"^([A-Za-z]{2,8})(?:-([A-Za-z]{2}|[0-9]{3}))?$")


@dataclass(frozen=True, order=True)
class LangTag:
    """Language identifier: a primary subtag plus an optional region subtag.

    Tags are canonicalized at construction (primary lowercased, region
    uppercased), so ``LangTag("PT-br") == LangTag("pt-BR")``.  The canonical
    spelling keeps the conventional region case for display ("pt-BR").
    """

    code: str

    def __post_init__(self) -> None:
        m = _LANG_RE.match(self.code)
        if m is None:
            raise ValueError(f"invalid language tag: {self.code!r}")
        primary, region = m.groups()
        canonical = primary.lower() if region is None else f"{primary.lower()}-{region.upper()}"
        object.__setattr__(self, "code", canonical)

    @property
    def primary(self) -> str:
        return self.code.split("-", 1)[0]

    def __str__(self) -> str:
        return self.code


@dataclass(frozen=True)
class Provenance:
    """Where a unit came from: origin file plus a coarse domain tag."""

    origin_file: str
    domain: str = "other"

    def __post_init__(self) -> None:
        if self.domain not in DOMAIN_TAGS:
            raise ValueError(f"unknown domain tag {self.domain!r}; expected one of {DOMAIN_TAGS}")


@dataclass(frozen=True)
class TransUnit:
    """One source segment with its per-language translations.

    Instances are treated as immutable value objects; the ``targets`` mapping
    must not be mutated after construction.  Invariants (non-empty source, no
    empty target values) are established by the ingest/curation stages rather
    than enforced here, so that cleaning rules can observe and log violations.
    """

    id: str
    source: str
    source_lang: LangTag
    targets: Mapping[LangTag, str]
    provenance: Provenance

    def target_languages(self) -> tuple[LangTag, ...]:
        return tuple(sorted(self.targets))

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "source": self.source,
            "source_lang": str(self.source_lang),
            "targets": {str(lang): text for lang, text in sorted(self.targets.items())},
            "provenance": {
                "origin_file": self.provenance.origin_file,
                "domain": self.provenance.domain,
            },
        }

    @classmethod
    def from_record(cls, record: Mapping) -> "TransUnit":
        prov = record.get("provenance") or {}
        return cls(
            id=str(record["id"]),
            source=record["source"],
            source_lang=LangTag(record["source_lang"]),
            targets={LangTag(code): text for code, text in record["targets"].items()},
            provenance=Provenance(
                origin_file=prov.get("origin_file", ""),
                domain=prov.get("domain", "other"),
            ),
        )


class Corpus:
    """Ordered collection of translation units with distinct ids."""

    def __init__(self, units: Iterable[TransUnit], metadata: dict | None = None):
        self.units: tuple[TransUnit, ...] = tuple(units)
        self.metadata: dict = dict(metadata or {})
        seen: set[str] = set()
        for unit in self.units:
            if unit.id in seen:
                raise ValueError(f"duplicate unit id {unit.id!r}")
            seen.add(unit.id)

    @property
    def languages(self) -> frozenset[LangTag]:
        """Union of target languages actually present."""
        langs: set[LangTag] = set()
        for unit in self.units:
            langs.update(unit.targets)
        return frozenset(langs)

    def __len__(self) -> int:
        return len(self.units)

    def __iter__(self) -> Iterator[TransUnit]:
        return iter(self.units)

    def __getitem__(self, idx):
        return self.units[idx]

    def __eq__(self, other) -> bool:
        return isinstance(other, Corpus) and self.units == other.units

    def __repr__(self) -> str:
        return f"Corpus({len(self.units)} units, {len(self.languages)} target languages)"


@dataclass(frozen=True)
class DropRecord:
    """Why one unit was removed, traceable back to the raw inputs."""

    unit_id: str
    rule: str
    detail: str = ""

    def __post_init__(self) -> None:
        if self.rule not in DROP_RULES:
            raise ValueError(f"unknown drop rule {self.rule!r}; expected one of {sorted(DROP_RULES)}")

    def to_record(self) -> dict:
        return {"unit_id": self.unit_id, "rule": self.rule, "detail": self.detail}


@dataclass(frozen=True)
class SplitManifest:
    """Auditable record of how a corpus was shuffled, split, and subset."""

    seed: int
    ratios: tuple[float, float, float]
    counts: tuple[int, int, int]
    subset_sizes: tuple[int, ...]
    checksum: str
    checksum_algorithm: str = DIGEST_ALGORITHM
    prng: str = ""

    def to_json(self) -> str:
        payload = {
            "seed": self.seed,
            "ratios": list(self.ratios),
            "counts": list(self.counts),
            "subset_sizes": list(self.subset_sizes),
            "checksum": self.checksum,
            "checksum_algorithm": self.checksum_algorithm,
            "prng": self.prng,
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SplitManifest":
        data = json.loads(text)
        return cls(
            seed=int(data["seed"]),
            ratios=tuple(data["ratios"]),
            counts=tuple(data["counts"]),
            subset_sizes=tuple(data["subset_sizes"]),
            checksum=data["checksum"],
            checksum_algorithm=data.get("checksum_algorithm", DIGEST_ALGORITHM),
            prng=data.get("prng", ""),
        )


def corpus_digest(corpus: Corpus) -> str:
    """Deterministic content hash over ids, sources and targets in order.

    Metadata does not participate, so two corpora with the same units always
    hash equal.  Reordering units changes the digest.  An empty corpus hashes
    to the SHA-256 of the empty byte string.
    """
    h = hashlib.sha256()
    for unit in corpus:
        row = [unit.id, unit.source, [[str(l), t] for l, t in sorted(unit.targets.items())]]
        h.update(json.dumps(row, ensure_ascii=False, sort_keys=True).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def write_jsonl(corpus: Corpus, path: Path | str) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for unit in corpus:
            fh.write(json.dumps(unit.to_record(), ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def read_jsonl(path: Path | str, metadata: dict | None = None) -> Corpus:
    path = Path(path)
    units = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                units.append(TransUnit.from_record(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed corpus record: {exc}") from exc
    return Corpus(units, metadata=metadata)


def write_drop_log(drops: Iterable[DropRecord], path: Path | str) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for drop in drops:
            fh.write(json.dumps(drop.to_record(), ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def check_corpus(obj, name: str = "X") -> Corpus:
    """Validation helper for estimator-style entry points."""
    if not isinstance(obj, Corpus):
        raise TypeError(f"{name} must be a Corpus, got {type(obj).__name__}")
    return obj


def check_unit_invariants(unit: TransUnit) -> list[str]:
    """Return human-readable invariant violations for one unit (empty = ok)."""
    problems = []
    if not unit.source.strip():
        problems.append("source is empty after whitespace trim")
    for lang, text in unit.targets.items():
        if not text.strip():
            problems.append(f"target {lang} is empty")
    return problems
