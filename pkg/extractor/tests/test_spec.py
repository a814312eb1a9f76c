import json

import pytest

from femb_extract.errors import ManifestError, SpecError
from femb_extract.spec import (
    ExtractorSpec,
    MODEL_HUB_IDS,
    expected_dim,
    normalize_model_id,
    read_audio_manifest,
    target_sample_rate,
)

DIM_TABLE = {
    "unispeech-sat": 768,
    "wavlm": 768,
    "wav2vec2": 768,
    "x-vector": 512,
    "mert-v1-330m": 1024,
    "mert-v1-95m": 768,
    "mert-v0-public": 768,
    "mert-v0": 768,
    "music2vec-v1": 768,
    "mfcc": 39,
}

RATE_TABLE = {
    "mert-v1-330m": 24_000,
    "mert-v1-95m": 24_000,
}


class TestTables:
    @pytest.mark.parametrize("model", sorted(MODEL_HUB_IDS))
    def test_expected_dim(self, model):
        assert expected_dim(model) == DIM_TABLE[model]

    @pytest.mark.parametrize("model", sorted(MODEL_HUB_IDS))
    def test_sample_rate(self, model):
        assert target_sample_rate(model) == RATE_TABLE.get(model, 16_000)

    def test_case_insensitive(self):
        assert normalize_model_id("MERT-V1-330M") == "mert-v1-330m"
        assert expected_dim("WavLM") == 768

    def test_unknown_model(self):
        with pytest.raises(SpecError, match="unknown model"):
            expected_dim("hubert")

    def test_spec_fills_defaults(self):
        spec = ExtractorSpec(model="mert-v1-95m")
        assert spec.sample_rate == 24_000
        assert spec.dim == 768
        assert spec.hub_id == "m-a-p/MERT-v1-95M"


class TestManifest:
    def test_valid(self, toy_manifest):
        entries = read_audio_manifest(toy_manifest)
        assert [e.id for e in entries] == ["clip-000", "clip-001", "clip-002"]
        assert entries[1].label == "deepfake"
        assert entries[0].path.exists()

    def test_relative_paths_resolve_against_manifest_dir(self, tmp_path):
        from conftest import write_tone
        write_tone(tmp_path / "x.wav")
        manifest = tmp_path / "m.jsonl"
        manifest.write_text(json.dumps(
            {"id": "u", "path": "x.wav", "label": "bonafide"}) + "\n")
        entries = read_audio_manifest(manifest)
        assert entries[0].path == tmp_path / "x.wav"

    def test_bad_json_line_numbered(self, tmp_path):
        manifest = tmp_path / "m.jsonl"
        manifest.write_text('{"id": "a", "path": "x", "label": "bonafide"}\n'
                            "not json\n")
        with pytest.raises(ManifestError, match=":2:"):
            read_audio_manifest(manifest)

    def test_missing_field(self, tmp_path):
        manifest = tmp_path / "m.jsonl"
        manifest.write_text('{"id": "a", "path": "x"}\n')
        with pytest.raises(ManifestError, match="label"):
            read_audio_manifest(manifest)

    def test_bad_label(self, tmp_path):
        manifest = tmp_path / "m.jsonl"
        manifest.write_text('{"id": "a", "path": "x", "label": "spoof"}\n')
        with pytest.raises(ManifestError, match="spoof"):
            read_audio_manifest(manifest)

    def test_duplicate_id(self, tmp_path):
        line = '{"id": "a", "path": "x", "label": "bonafide"}\n'
        manifest = tmp_path / "m.jsonl"
        manifest.write_text(line + line)
        with pytest.raises(ManifestError, match="duplicate"):
            read_audio_manifest(manifest)

    def test_empty(self, tmp_path):
        manifest = tmp_path / "m.jsonl"
        manifest.write_text("\n")
        with pytest.raises(ManifestError, match="empty"):
            read_audio_manifest(manifest)
