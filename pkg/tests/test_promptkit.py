import json
import random

import pytest

from conftest import DE, FIXTURES, KO, make_unit
from tmforge.corpus import Corpus
from tmforge.promptkit import (
    BEGIN_OF_TEXT,
    END_OF_TEXT,
    END_OF_TURN,
    InferConfigArtifact,
    STOP_MARKER,
    TrainConfigArtifact,
    TranslationExtractionError,
    emit_inference_config,
    emit_training_config,
    extract_translation,
    language_name,
    postprocess_translation,
    read_raw_outputs,
    render_inference_prompt,
    render_prompt_batch,
    render_training_example,
    write_prompt_batch,
)


class TestRenderInferencePrompt:
    def test_matches_committed_golden(self):
        golden = (FIXTURES / "prompt_inference_en-de.golden.txt").read_text(encoding="utf-8")
        rendered = render_inference_prompt(
            "English", "German", "Tap the Save button to keep your changes.")
        assert rendered == golden

    def test_structure(self):
        prompt = render_inference_prompt("English", "German", "Hello")
        assert prompt.startswith(BEGIN_OF_TEXT)
        assert prompt.endswith("<|start_header_id|>assistant<|end_header_id|>\n\n")
        assert "translation from English to German" in prompt
        assert '{"translation": "string"}' in prompt
        assert prompt.count(END_OF_TURN) == 2
        assert END_OF_TEXT not in prompt

    def test_empty_sentence_rejected(self):
        with pytest.raises(ValueError):
            render_inference_prompt("English", "German", "")

    def test_sentence_spliced_verbatim(self):
        sentence = 'weird {braces} and "quotes" stay'
        prompt = render_inference_prompt("English", "Czech", sentence)
        assert sentence in prompt

    def test_byte_stable(self):
        a = render_inference_prompt("English", "Korean", "x")
        b = render_inference_prompt("English", "Korean", "x")
        assert a == b


class TestRenderTrainingExample:
    def test_suffix_structure(self):
        text = render_training_example("English", "German", "Hello", "Hallo")
        assert text.endswith('{"translation": "Hallo"}' + END_OF_TEXT)
        prefix = render_inference_prompt("English", "German", "Hello")
        assert text.startswith(prefix)

    def test_json_escaping(self):
        text = render_training_example("English", "German", "Say \"hi\"", 'Sag "hallo"')
        assert '{"translation": "Sag \\"hallo\\""}' in text

    def test_empty_target_rejected(self):
        with pytest.raises(ValueError):
            render_training_example("English", "German", "Hello", "")

    def test_round_trip_through_extractor(self):
        target = "Zeile eins\nZeile zwei mit <br> tag"
        text = render_training_example("English", "German", "Source", target)
        payload = text[len(render_inference_prompt("English", "German", "Source")):]
        assert extract_translation(payload) == postprocess_translation(target)


class TestExtractTranslation:
    def test_stop_marker_truncation(self):
        raw = '{"translation": "Hallo Welt"}assistant...garbage{"translation": "no"}'
        assert extract_translation(raw) == "Hallo Welt"

    def test_newline_replaced(self):
        assert extract_translation('{"translation": "line1\\nline2"}') == "line1 line2"

    def test_html_scrubbed_with_spacing(self):
        assert extract_translation('{"translation": "Olá<br>mundo<p>"}') == "Olá mundo"

    def test_fallback_prefix_suffix(self):
        # invalid JSON (truncated) still yields the payload
        assert extract_translation('{"translation": "cut off mid senten') == "cut off mid senten"

    def test_error_carries_raw_output(self):
        with pytest.raises(TranslationExtractionError) as exc_info:
            extract_translation("no json here at all")
        assert exc_info.value.raw_output == "no json here at all"

    def test_committed_fixture_cases(self):
        cases = json.loads((FIXTURES / "postprocess_cases.json").read_text(encoding="utf-8"))
        for case in cases:
            assert extract_translation(case["raw"]) == case["expected"], case["name"]

    def test_total_on_fuzz(self):
        rng = random.Random(55)
        alphabet = '{}":\\transliation<>&#\n\r\t abcXYZ\u00e9\uac00'
        for _ in range(2000):
            raw = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 60)))
            try:
                out = extract_translation(raw)
                assert isinstance(out, str)
            except TranslationExtractionError:
                pass

    def test_round_trip_random_targets(self):
        rng = random.Random(56)
        alphabet = 'abc XYZ\u00fc\uac00"\\<>&\n\t{}'
        for _ in range(300):
            target = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 40)))
            if STOP_MARKER in target:
                continue
            text = render_training_example("English", "Korean", "src", target)
            payload = text[len(render_inference_prompt("English", "Korean", "src")):]
            assert extract_translation(payload) == postprocess_translation(target)


class TestLanguageNames:
    def test_known_tags(self):
        assert language_name("pt-BR") == "Brazilian Portuguese"
        assert language_name(KO) == "Korean"
        assert language_name("fi") == "Finnish"

    def test_unknown_tag_rejected(self):
        with pytest.raises(KeyError):
            language_name("tlh")

    def test_override_table(self):
        assert language_name("de", {"de": "Deutsch"}) == "Deutsch"


class TestPromptBatch:
    def _corpus(self):
        return Corpus([
            make_unit("a", "Hello", {DE: "Hallo"}),
            make_unit("b", "Goodbye", {DE: "Tschüss"}),
        ])

    def test_inference_batch_file(self, tmp_path):
        records = render_prompt_batch(self._corpus(), DE, "inference")
        path = tmp_path / "prompts.jsonl"
        write_prompt_batch(records, path)
        rows = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]
        assert [set(r) for r in rows] == [{"id", "prompt"}, {"id", "prompt"}]
        assert rows[0]["prompt"].endswith("assistant<|end_header_id|>\n\n")

    def test_training_batch_file(self, tmp_path):
        records = render_prompt_batch(self._corpus(), DE, "training")
        path = tmp_path / "train.jsonl"
        write_prompt_batch(records, path)
        rows = [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines()]
        assert [set(r) for r in rows] == [{"id", "text"}, {"id", "text"}]
        assert rows[0]["text"].endswith(END_OF_TEXT)

    def test_training_requires_target(self):
        corpus = Corpus([make_unit("a", "Hello", {KO: "안녕"})])
        with pytest.raises(KeyError):
            render_prompt_batch(corpus, DE, "training")

    def test_raw_output_reader(self, tmp_path):
        path = tmp_path / "raw.jsonl"
        path.write_text('{"id": "a", "output": "{\\"translation\\": \\"x\\"}"}\n', encoding="utf-8")
        assert read_raw_outputs(path) == {"a": '{"translation": "x"}'}


class TestConfigArtifacts:
    def test_training_defaults(self, tmp_path):
        path = tmp_path / "train.json"
        emit_training_config(path)
        payload = json.loads(path.read_text(encoding="utf-8"))
        assert payload["quantization"] == {
            "load_in_4bit": True,
            "bnb_4bit_quant_type": "nf4",
            "bnb_4bit_use_double_quant": True,
            "bnb_4bit_compute_dtype": "bfloat16",
        }
        assert payload["adapter"] == {
            "r": 64, "lora_alpha": 16, "lora_dropout": 0.1, "bias": "none",
        }
        assert payload["training"] == {
            "batch_size": 32, "learning_rate": 0.002,
            "lr_scheduler_type": "constant", "bf16": True,
        }
        assert "overrides" not in payload

    def test_inference_defaults(self, tmp_path):
        path = tmp_path / "infer.json"
        emit_inference_config(path)
        payload = json.loads(path.read_text(encoding="utf-8"))
        assert payload == {
            "sampling_topk": 1,
            "max_batch_size": 8096,
            "min_length": 1,
            "max_length": "2*source_length",
        }

    def test_override_recorded(self, tmp_path):
        path = tmp_path / "train.json"
        emit_training_config(path, learning_rate=1e-4)
        payload = json.loads(path.read_text(encoding="utf-8"))
        assert payload["training"]["learning_rate"] == 1e-4
        assert payload["overrides"] == {"learning_rate": 1e-4}

    def test_artifact_dataclasses(self):
        assert TrainConfigArtifact().lora_r == 64
        assert InferConfigArtifact().max_batch_size == 8096
