"""Run tables (language x training-size score matrices) and delta summaries.

A run table holds one row per (language, size label) with BLEU, chrF++, TER
and an optional externally computed COMET column.  Summaries aggregate gains
against the per-language baseline rows: absolute deltas are means of
per-language differences (TER reported as a decrease), relative deltas are
means of per-language percentage changes.  The comparison-only ``gpt35`` rows
never participate in baselines or best/worst marking.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

SIZE_LABELS = ("gpt35", "baseline", "1k", "2k", "5k", "10k", "14.7k", "100k+")
METRIC_COLUMNS = ("bleu", "chrf", "ter", "comet")

#: Metrics where smaller is better.
LOWER_IS_BETTER = frozenset({"ter"})

#: Rows excluded from baselines and best/worst marking.
COMPARISON_ONLY = frozenset({"gpt35"})


@dataclass
class RunTable:
    """Scores keyed by (language, size label); at most one row per key."""

    rows: dict[tuple[str, str], dict[str, float | None]] = field(default_factory=dict)

    def add_row(self, language: str, size_label: str, scores: dict[str, float | None]) -> None:
        if size_label not in SIZE_LABELS:
            raise ValueError(f"unknown size label {size_label!r}; expected one of {SIZE_LABELS}")
        key = (language, size_label)
        if key in self.rows:
            raise ValueError(f"duplicate row for {key}")
        clean: dict[str, float | None] = {}
        for metric in METRIC_COLUMNS:
            value = scores.get(metric)
            if value is None:
                clean[metric] = None
                continue
            value = float(value)
            if not 0.0 <= value <= 200.0:
                raise ValueError(f"{key} {metric}: score {value} outside [0, 200]")
            clean[metric] = value
        self.rows[key] = clean

    @property
    def languages(self) -> list[str]:
        seen: list[str] = []
        for lang, _ in self.rows:
            if lang not in seen:
                seen.append(lang)
        return seen

    def sizes_for(self, language: str) -> list[str]:
        return [size for size in SIZE_LABELS if (language, size) in self.rows]

    def get(self, language: str, size_label: str, metric: str) -> float | None:
        row = self.rows.get((language, size_label))
        return None if row is None else row.get(metric)


@dataclass(frozen=True)
class DeltaSummary:
    """Mean gains at one size label versus the per-language baselines."""

    size_label: str
    languages: tuple[str, ...]
    absolute: dict[str, float]
    relative: dict[str, float]

    def to_record(self) -> dict:
        return {
            "size_label": self.size_label,
            "languages": list(self.languages),
            "absolute": {k: round(v, 4) for k, v in self.absolute.items()},
            "relative": {k: round(v, 4) for k, v in self.relative.items()},
        }


def load_run_table(path: Path | str) -> RunTable:
    """Load a run table from CSV (or JSON) with columns
    language,size,bleu,chrf,ter,comet."""
    path = Path(path)
    table = RunTable()
    if path.suffix.lower() == ".json":
        for record in json.loads(path.read_text(encoding="utf-8")):
            table.add_row(record["language"], record["size"],
                          {m: record.get(m) for m in METRIC_COLUMNS})
        return table
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return table
        for record in reader:
            scores = {}
            for metric in METRIC_COLUMNS:
                raw = (record.get(metric) or "").strip()
                scores[metric] = float(raw) if raw else None
            table.add_row(record["language"].strip(), record["size"].strip(), scores)
    return table


def delta_summary(table: RunTable, size_label: str) -> DeltaSummary:
    """Mean absolute and relative deltas against baseline, across the
    languages that have a row at ``size_label``.

    TER improvements are reported as decreases (baseline minus size) in both
    the absolute and relative figures, so larger is better everywhere.
    """
    if size_label not in SIZE_LABELS:
        raise ValueError(f"unknown size label {size_label!r}")
    languages = [lang for lang in table.languages if (lang, size_label) in table.rows]
    for lang in languages:
        if (lang, "baseline") not in table.rows:
            raise ValueError(f"language {lang!r} has a {size_label} row but no baseline row")

    absolute: dict[str, float] = {}
    relative: dict[str, float] = {}
    for metric in METRIC_COLUMNS:
        abs_deltas = []
        rel_deltas = []
        for lang in languages:
            at_size = table.get(lang, size_label, metric)
            at_base = table.get(lang, "baseline", metric)
            if at_size is None or at_base is None:
                continue
            delta = at_base - at_size if metric in LOWER_IS_BETTER else at_size - at_base
            abs_deltas.append(delta)
            if at_base != 0:
                rel_deltas.append(100.0 * delta / at_base)
        if abs_deltas:
            absolute[metric] = sum(abs_deltas) / len(abs_deltas)
        if rel_deltas:
            relative[metric] = sum(rel_deltas) / len(rel_deltas)
    return DeltaSummary(size_label, tuple(languages), absolute, relative)


def relative_gain(table: RunTable, language: str, size_label: str, metric: str) -> float:
    """Percentage change for one language/metric versus its baseline."""
    at_size = table.get(language, size_label, metric)
    at_base = table.get(language, "baseline", metric)
    if at_size is None or at_base is None:
        raise ValueError(f"missing {metric} at {language!r} {size_label!r} or baseline")
    if at_base == 0:
        raise ValueError(f"baseline {metric} for {language!r} is zero")
    delta = at_base - at_size if metric in LOWER_IS_BETTER else at_size - at_base
    return 100.0 * delta / at_base


def best_worst_markers(table: RunTable) -> dict[tuple[str, str], dict[str, list[str]]]:
    """Best / worst size labels per (language, metric), ties marked together.

    Comparison-only rows are excluded.  Best means max (min for TER); worst is
    the opposite end.
    """
    markers: dict[tuple[str, str], dict[str, list[str]]] = {}
    for lang in table.languages:
        sizes = [s for s in table.sizes_for(lang) if s not in COMPARISON_ONLY]
        for metric in METRIC_COLUMNS:
            scored = [(s, table.get(lang, s, metric)) for s in sizes]
            scored = [(s, v) for s, v in scored if v is not None]
            if not scored:
                continue
            values = [v for _, v in scored]
            lo, hi = min(values), max(values)
            best_value, worst_value = (lo, hi) if metric in LOWER_IS_BETTER else (hi, lo)
            markers[(lang, metric)] = {
                "best": [s for s, v in scored if v == best_value],
                "worst": [s for s, v in scored if v == worst_value],
            }
    return markers


def _format_score(value: float | None) -> str:
    return "" if value is None else f"{value:.2f}"


def render(table: RunTable, summaries: list[DeltaSummary] = (), fmt: str = "markdown") -> str:
    """Deterministic rendering; csv output round-trips through
    :func:`load_run_table`."""
    if fmt == "csv":
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["language", "size"] + list(METRIC_COLUMNS))
        for lang in table.languages:
            for size in table.sizes_for(lang):
                row = table.rows[(lang, size)]
                writer.writerow([lang, size] + [_format_score(row[m]) for m in METRIC_COLUMNS])
        return out.getvalue()
    if fmt != "markdown":
        raise ValueError(f"unknown format {fmt!r}")

    markers = best_worst_markers(table)
    lines = ["| Lang | Data Size | BLEU | chrF++ | TER | COMET |",
             "|---|---|---|---|---|---|"]
    for lang in table.languages:
        for size in table.sizes_for(lang):
            row = table.rows[(lang, size)]
            cells = []
            for metric in METRIC_COLUMNS:
                text = _format_score(row[metric])
                mark = markers.get((lang, metric), {})
                if size in mark.get("best", ()) and size not in COMPARISON_ONLY:
                    text = f"**{text}**"
                elif size in mark.get("worst", ()) and size not in COMPARISON_ONLY:
                    text = f"_{text}_"
                cells.append(text)
            lines.append(f"| {lang} | {size} | " + " | ".join(cells) + " |")
    for summary in summaries:
        lines.append("")
        lines.append(f"**Deltas vs baseline at {summary.size_label}** "
                     f"(languages: {', '.join(summary.languages)})")
        lines.append("| Metric | Mean absolute delta | Mean relative delta (%) |")
        lines.append("|---|---|---|")
        for metric in METRIC_COLUMNS:
            if metric in summary.absolute:
                direction = "decrease" if metric in LOWER_IS_BETTER else "increase"
                lines.append(
                    f"| {metric} ({direction}) | {summary.absolute[metric]:.2f} "
                    f"| {summary.relative.get(metric, float('nan')):.2f} |"
                )
    return "\n".join(lines) + "\n"
