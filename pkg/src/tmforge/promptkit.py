"""Chat-prompt rendering and model-output post-processing for translation.

Prompts follow the Llama 3 instruct format: role headers wrapped in special
tokens, each header followed by a blank line, each turn closed by the
end-of-turn token.  Inference prompts stop right after the assistant header;
training examples additionally carry the assistant payload, a JSON object
``{"translation": "..."}``, closed by the end-of-text token so the trainer
learns to stop.

Post-processing inverts this: truncate at the stop marker, pull the string
out of the first JSON object with a ``translation`` key (with a plain
prefix/suffix strip as fallback for truncated output), scrub overgenerated
HTML, replace newlines with spaces, collapse runs of spaces.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .corpus import Corpus, LangTag
from .ingest import _strip_tags

BEGIN_OF_TEXT = "<|begin_of_text|>"
START_HEADER = "<|start_header_id|>"
END_HEADER = "<|end_header_id|>"
END_OF_TURN = "<|eot_id|>"
END_OF_TEXT = "<|end_of_text|>"

#: Raw generation is cut at this marker; the closing brace stays.
STOP_MARKER = "}assistant"

SYSTEM_MESSAGE = (
    "You are a helpful AI assistant for translation from {source_language} to "
    '{target_language}. You MUST answer with the following JSON scheme: '
    '{{"translation": "string"}}'
)

#: English exonyms used inside prompts, keyed by canonical language tag.
LANGUAGE_NAMES = {
    "en": "English",
    "pt-BR": "Brazilian Portuguese",
    "pt": "Portuguese",
    "cs": "Czech",
    "de": "German",
    "fi": "Finnish",
    "ko": "Korean",
    "fr": "French",
    "es": "Spanish",
    "it": "Italian",
    "nl": "Dutch",
    "pl": "Polish",
    "ja": "Japanese",
    "zh": "Chinese",
    "ru": "Russian",
    "sv": "Swedish",
}


class TranslationExtractionError(ValueError):
    """No translation payload could be extracted; carries the raw output."""

    def __init__(self, message: str, raw_output: str):
        super().__init__(message)
        self.raw_output = raw_output


@dataclass(frozen=True)
class PromptRecord:
    unit_id: str
    kind: str  # "inference" | "training"
    rendered: str
    source_lang_name: str
    target_lang_name: str


def language_name(lang: LangTag | str, names: dict[str, str] | None = None) -> str:
    table = names or LANGUAGE_NAMES
    code = str(LangTag(str(lang)))
    if code not in table:
        raise KeyError(f"no prompt language name for tag {code!r}")
    return table[code]


def _header(role: str) -> str:
    return f"{START_HEADER}{role}{END_HEADER}\n\n"


def render_inference_prompt(source_lang_name: str, target_lang_name: str, sentence: str) -> str:
    """System + user turn plus the opened assistant header, byte-stable."""
    if not sentence:
        raise ValueError("sentence must be non-empty")
    system = SYSTEM_MESSAGE.format(
        source_language=source_lang_name, target_language=target_lang_name
    )
    return (
        BEGIN_OF_TEXT
        + _header("system")
        + system
        + END_OF_TURN
        + _header("user")
        + sentence
        + END_OF_TURN
        + _header("assistant")
    )


def render_training_example(
    source_lang_name: str, target_lang_name: str, sentence: str, target: str
) -> str:
    """Inference prompt plus the JSON-wrapped assistant answer and EOS token."""
    if not target:
        raise ValueError("target must be non-empty")
    prompt = render_inference_prompt(source_lang_name, target_lang_name, sentence)
    payload = '{"translation": ' + json.dumps(target, ensure_ascii=False) + "}"
    return prompt + payload + END_OF_TEXT


def _first_translation_object(text: str) -> str | None:
    """String value of the first parseable JSON object with a 'translation' key."""
    decoder = json.JSONDecoder()
    start = text.find("{")
    while start != -1:
        try:
            obj, _ = decoder.raw_decode(text, start)
        except ValueError:
            obj = None
        if isinstance(obj, dict) and isinstance(obj.get("translation"), str):
            return obj["translation"]
        start = text.find("{", start + 1)
    return None


def scrub_overgenerated_html(text: str) -> str:
    """Replace well-formed markup with spaces so line-break tags split words."""
    return _strip_tags(text, replacement=" ")


def postprocess_translation(text: str) -> str:
    """Steps applied to an extracted payload: tag scrub, newline to space,
    whitespace collapse."""
    text = scrub_overgenerated_html(text)
    text = text.replace("\n", " ").replace("\r", " ")
    while "  " in text:
        text = text.replace("  ", " ")
    return text.strip()


_FALLBACK_PREFIX = '{"translation": "'
_FALLBACK_SUFFIX = '"}'


def extract_translation(raw_model_output: str) -> str:
    """Recover the clean translation from raw model output.

    Pipeline: truncate at the first stop marker (keeping the brace), parse the
    first JSON object carrying a ``translation`` string, fall back to a
    literal prefix/suffix strip for truncated JSON, then post-process.  Raises
    :class:`TranslationExtractionError` when nothing extractable remains.
    """
    text = raw_model_output
    marker = text.find(STOP_MARKER)
    if marker != -1:
        text = text[:marker + 1]

    payload = _first_translation_object(text)
    if payload is None:
        stripped = text.strip()
        if stripped.startswith(_FALLBACK_PREFIX):
            body = stripped[len(_FALLBACK_PREFIX):]
            if body.endswith(_FALLBACK_SUFFIX):
                body = body[: -len(_FALLBACK_SUFFIX)]
            try:
                payload = json.loads('"' + body + '"')
            except ValueError:
                payload = body
        else:
            raise TranslationExtractionError(
                "no JSON translation payload in model output", raw_model_output
            )
    return postprocess_translation(payload)


def render_prompt_batch(
    corpus: Corpus,
    target_lang: LangTag | str,
    kind: str = "inference",
    names: dict[str, str] | None = None,
) -> list[PromptRecord]:
    """Render one prompt per unit; training kind uses the unit's target."""
    if kind not in ("inference", "training"):
        raise ValueError(f"kind must be 'inference' or 'training', got {kind!r}")
    target_lang = LangTag(str(target_lang))
    records = []
    for unit in corpus:
        src_name = language_name(unit.source_lang, names)
        tgt_name = language_name(target_lang, names)
        if kind == "inference":
            rendered = render_inference_prompt(src_name, tgt_name, unit.source)
        else:
            target = unit.targets.get(target_lang)
            if target is None:
                raise KeyError(f"unit {unit.id!r} has no {target_lang} target")
            rendered = render_training_example(src_name, tgt_name, unit.source, target)
        records.append(PromptRecord(unit.id, kind, rendered, src_name, tgt_name))
    return records


def write_prompt_batch(records: list[PromptRecord], path: Path | str) -> None:
    """Line-delimited JSON: {id, prompt} for inference, {id, text} for training."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            key = "prompt" if record.kind == "inference" else "text"
            fh.write(json.dumps({"id": record.unit_id, key: record.rendered},
                                ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def read_raw_outputs(path: Path | str) -> dict[str, str]:
    """Read {id, output} lines produced by an external inference engine."""
    path = Path(path)
    outputs: dict[str, str] = {}
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            if "id" not in record or "output" not in record:
                raise ValueError(f"{path}:{lineno}: raw output records need 'id' and 'output'")
            outputs[str(record["id"])] = record["output"]
    return outputs


@dataclass(frozen=True)
class TrainConfigArtifact:
    """QLoRA fine-tuning settings emitted for the external trainer."""

    load_in_4bit: bool = True
    quant_type: str = "nf4"
    double_quant: bool = True
    compute_dtype: str = "bfloat16"
    lora_r: int = 64
    lora_alpha: int = 16
    lora_dropout: float = 0.1
    lora_bias: str = "none"
    batch_size: int = 32
    learning_rate: float = 2e-3
    lr_scheduler_type: str = "constant"
    bf16: bool = True

    def to_dict(self) -> dict:
        return {
            "quantization": {
                "load_in_4bit": self.load_in_4bit,
                "bnb_4bit_quant_type": self.quant_type,
                "bnb_4bit_use_double_quant": self.double_quant,
                "bnb_4bit_compute_dtype": self.compute_dtype,
            },
            "adapter": {
                "r": self.lora_r,
                "lora_alpha": self.lora_alpha,
                "lora_dropout": self.lora_dropout,
                "bias": self.lora_bias,
            },
            "training": {
                "batch_size": self.batch_size,
                "learning_rate": self.learning_rate,
                "lr_scheduler_type": self.lr_scheduler_type,
                "bf16": self.bf16,
            },
        }


@dataclass(frozen=True)
class InferConfigArtifact:
    """CTranslate2-style inference settings emitted for the external engine."""

    sampling_topk: int = 1
    max_batch_size: int = 8096
    min_length: int = 1
    max_length_rule: str = "2*source_length"

    def to_dict(self) -> dict:
        return {
            "sampling_topk": self.sampling_topk,
            "max_batch_size": self.max_batch_size,
            "min_length": self.min_length,
            "max_length": self.max_length_rule,
        }


def _emit_config(payload: dict, overrides: dict, path: Path | str) -> dict:
    if overrides:
        payload = dict(payload)
        payload["overrides"] = overrides
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return payload


def emit_training_config(path: Path | str, **overrides) -> dict:
    """Write the training config JSON; explicit overrides replace defaults and
    are recorded under an ``overrides`` key."""
    artifact = TrainConfigArtifact(**overrides) if overrides else TrainConfigArtifact()
    return _emit_config(artifact.to_dict(), overrides, path)


def emit_inference_config(path: Path | str, **overrides) -> dict:
    artifact = InferConfigArtifact(**overrides) if overrides else InferConfigArtifact()
    return _emit_config(artifact.to_dict(), overrides, path)
