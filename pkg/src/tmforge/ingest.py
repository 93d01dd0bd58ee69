"""Parse raw TM exports (TSV, TMX) into corpora and normalize segment text.

Normalization is two steps applied to every cell: markup removal, then
whitespace collapse.  Markup removal uses a single-pass scanner instead of a
regex so that quoted attribute values containing ``>`` and comment/CDATA
sections are handled correctly; a ``<`` that never closes is left verbatim.
"""

from __future__ import annotations

import logging
import xml.etree.ElementTree as ET
from pathlib import Path

from .corpus import Corpus, LangTag, Provenance, TransUnit

logger = logging.getLogger(__name__)

XML_NS_LANG = "{http://www.w3.org/XML/1998/namespace}lang"

_NAMED_ENTITIES = {"amp": "&", "lt": "<", "gt": ">", "quot": '"', "apos": "'"}


class IngestError(Exception):
    """Raised for unreadable or structurally invalid input files."""


def _scan_tag(text: str, start: int) -> tuple[int, str] | None:
    """Scan a markup construct beginning at ``text[start] == '<'``.

    Returns (end_index_exclusive, replacement_text) or None when the
    construct never closes (caller keeps the ``<`` verbatim).
    """
    n = len(text)
    if text.startswith("<!--", start):
        end = text.find("-->", start + 4)
        return None if end < 0 else (end + 3, "")
    if text.startswith("<![CDATA[", start):
        end = text.find("]]>", start + 9)
        # CDATA content is literal text, not markup
        return None if end < 0 else (end + 3, text[start + 9:end])
    if start + 1 >= n:
        return None
    nxt = text[start + 1]
    if not (nxt.isalpha() or nxt in "/!?"):
        return None  # "< 5" or "<3" is plain text, not a tag
    i = start + 1
    quote = ""
    while i < n:
        ch = text[i]
        if quote:
            if ch == quote:
                quote = ""
        elif ch in "\"'":
            quote = ch
        elif ch == ">":
            return i + 1, ""
        i += 1
    return None


def _strip_tags(text: str, replacement: str = "") -> str:
    out: list[str] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch != "<":
            out.append(ch)
            i += 1
            continue
        scanned = _scan_tag(text, i)
        if scanned is None:
            out.append(ch)
            i += 1
        else:
            i, kept = scanned
            out.append(replacement)
            out.append(kept)
    return "".join(out)


def _decode_entities(text: str) -> str:
    """Decode the five XML-predefined entities and numeric character refs.

    Unknown named entities are left verbatim so literal ``&foo;`` strings in
    TM content are not corrupted.
    """
    if "&" not in text:
        return text
    out: list[str] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch != "&":
            out.append(ch)
            i += 1
            continue
        end = text.find(";", i + 1, i + 33)
        if end < 0:
            out.append(ch)
            i += 1
            continue
        body = text[i + 1:end]
        decoded = None
        if body in _NAMED_ENTITIES:
            decoded = _NAMED_ENTITIES[body]
        elif body.startswith("#"):
            digits = body[1:]
            try:
                cp = int(digits[1:], 16) if digits[:1] in ("x", "X") else int(digits)
                if 0 <= cp <= 0x10FFFF:
                    decoded = chr(cp)
            except ValueError:
                decoded = None
        if decoded is None:
            out.append(ch)
            i += 1
        else:
            out.append(decoded)
            i = end + 1
    return "".join(out)


def strip_html(text: str) -> str:
    """Remove HTML/XML markup and decode XML entities.

    Element tags, self-closing tags, comments, processing instructions and
    declarations are removed; CDATA sections are replaced by their literal
    content.  Entity decoding (``&amp;`` etc. plus numeric references) runs
    after tag removal; unknown named entities stay verbatim.
    """
    return _decode_entities(_strip_tags(text))


def normalize_whitespace(text: str) -> str:
    """Collapse every run of Unicode whitespace to one ASCII space and trim."""
    return " ".join(text.split())


def clean_text(text: str) -> str:
    """Standard ingest normalization: markup removal, then whitespace collapse."""
    return normalize_whitespace(strip_html(text))


def _read_utf8(path: Path) -> str:
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise IngestError(f"{path}: invalid UTF-8 at byte offset {exc.start}") from exc
    return text.lstrip("﻿")


def parse_tsv(
    path: Path | str,
    source_lang: LangTag | str,
    target_lang: LangTag | str,
    domain: str = "other",
) -> Corpus:
    """Parse a tab-separated bilingual export: column 1 source, column 2 target.

    Rows with fewer than two non-empty cells (after cleaning) are skipped and
    logged; columns beyond the second are ignored with a warning.  Unit ids
    are ``<file-stem>:<0-based row index>`` so drop logs stay traceable.
    """
    path = Path(path)
    source_lang = LangTag(str(source_lang))
    target_lang = LangTag(str(target_lang))
    text = _read_utf8(path)

    units = []
    extra_column_rows = 0
    for row_idx, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        cells = line.split("\t")
        if len(cells) > 2:
            extra_column_rows += 1
            logger.warning("%s:%d: row has %d columns; ignoring extras", path.name, row_idx, len(cells))
        source = clean_text(cells[0]) if cells else ""
        target = clean_text(cells[1]) if len(cells) > 1 else ""
        if not source or not target:
            logger.warning("%s:%d: skipping row with fewer than 2 non-empty columns", path.name, row_idx)
            continue
        units.append(TransUnit(
            id=f"{path.stem}:{row_idx}",
            source=source,
            source_lang=source_lang,
            targets={target_lang: target},
            provenance=Provenance(origin_file=path.name, domain=domain),
        ))
    if extra_column_rows:
        logger.warning("%s: %d rows carried extra columns (ignored)", path.name, extra_column_rows)
    return Corpus(units, metadata={"origin": path.name, "format": "tsv"})


def parse_tmx(path: Path | str, domain: str = "other") -> Corpus:
    """Parse a TMX 1.4 file into a corpus.

    The ``<tuv>`` whose language matches the header ``srclang`` (or a per-tu
    override) becomes the source; every other ``<tuv>`` populates targets.
    Inline markup inside ``<seg>`` is flattened to its text content before the
    standard cleaning.  Translation units without a usable source segment are
    skipped and logged.
    """
    path = Path(path)
    try:
        tree = ET.parse(path)
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    except ET.ParseError as exc:
        raise IngestError(f"{path}: XML parse error at line {exc.position[0]}, column {exc.position[1]}: {exc}") from exc

    root = tree.getroot()
    header = root.find("header")
    header_srclang = header.get("srclang") if header is not None else None
    if header_srclang in (None, "*all*"):
        raise IngestError(f"{path}: TMX header must declare a concrete srclang")

    units = []
    body = root.find("body")
    tus = [] if body is None else body.findall("tu")
    for tu_idx, tu in enumerate(tus):
        srclang = LangTag(tu.get("srclang", header_srclang))
        source_text = None
        targets: dict[LangTag, str] = {}
        for tuv in tu.findall("tuv"):
            code = tuv.get(XML_NS_LANG) or tuv.get("lang")
            if code is None:
                continue
            lang = LangTag(code)
            seg = tuv.find("seg")
            if seg is None:
                continue
            seg_text = clean_text("".join(seg.itertext()))
            if lang == srclang:
                if source_text is None:
                    source_text = seg_text
            elif seg_text:
                if lang not in targets:
                    targets[lang] = seg_text
        if not source_text:
            logger.warning("%s: tu #%d has no %s source segment; skipped", path.name, tu_idx, srclang)
            continue
        units.append(TransUnit(
            id=f"{path.stem}:{tu_idx}",
            source=source_text,
            source_lang=srclang,
            targets=targets,
            provenance=Provenance(origin_file=path.name, domain=domain),
        ))
    return Corpus(units, metadata={"origin": path.name, "format": "tmx"})
