"""tmforge: translation-memory curation, splitting, decontamination,
prompt packaging and corpus-level MT evaluation."""

__version__ = "0.1.0"

from .corpus import (
    Corpus,
    DropRecord,
    LangTag,
    Provenance,
    SplitManifest,
    TransUnit,
    corpus_digest,
    read_jsonl,
    write_jsonl,
)
from .curate import CorpusCleaner, CurationConfig, curate_corpus, is_noncontent, is_source_copy, word_count
from .decontam import (
    DecontamConfig,
    NearDuplicateFilter,
    SimilarityVerdict,
    build_ngram_index,
    combined_similarity,
    decontaminate,
    lev_distance,
    lev_similarity,
    ngram_similarity,
)
from .ingest import normalize_whitespace, parse_tmx, parse_tsv, strip_html
from .metrics import MetricConfig, MetricReport, bleu, chrf_pp, score_pairs, score_run, ter
from .partition import (
    PRNG_ID,
    full_language_extract,
    interlingual_align,
    nested_subsets,
    seeded_shuffle,
    split,
)
from .promptkit import (
    InferConfigArtifact,
    PromptRecord,
    TrainConfigArtifact,
    TranslationExtractionError,
    extract_translation,
    render_inference_prompt,
    render_training_example,
)
from .report import DeltaSummary, RunTable, best_worst_markers, delta_summary, load_run_table

__all__ = [name for name in dir() if not name.startswith("_")]
