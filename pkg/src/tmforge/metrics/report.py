"""Shared metric report container."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class MetricReport:
    """One corpus-level metric result with its full parameter signature.

    ``counts`` hold the sufficient statistics the score was computed from, so
    the score is recomputable and reports from different configurations are
    distinguishable by signature.
    """

    metric: str
    score: float
    signature: str
    counts: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {
            "metric": self.metric,
            "score": round(self.score, 2),
            "signature": self.signature,
            "counts": self.counts,
            "inputs": self.inputs,
        }
