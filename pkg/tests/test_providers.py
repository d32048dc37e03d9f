import json

import jsonschema
import pytest

from car.jsonio import write_json
from car.providers import (
    Provider,
    ProviderRequest,
    ProviderSchemaError,
    ProviderTransportError,
    ScriptedProvider,
    StubTextureSynthesizer,
    build_prompt,
    provider_from_config,
    schema_for_stage,
)
from car.schemas import STAGE_SCHEMA_IDS, stage_schemas


def request(stage="1", schema="description", scene="roomA", iteration=0):
    return ProviderRequest(
        stage=stage,
        scene_id=scene,
        prompt=build_prompt(stage),
        response_schema=schema,
        iteration=iteration,
    )


class TestSchemas:
    def test_every_stage_has_a_schema(self):
        registry = stage_schemas()
        for stage, schema_id in STAGE_SCHEMA_IDS.items():
            assert schema_id in registry, stage

    def test_profile_missing_color_rejected(self):
        schema = stage_schemas()["profile_set"]
        payload = {
            "profiles": [
                {"id": "bed", "material": "wood", "function": "sleep",
                 "structure": "boxy", "style": "plain"}
            ],
            "room_style": {"palette": [], "style": "s", "mood": "m", "lighting": "l"},
        }
        with pytest.raises(jsonschema.ValidationError, match="color"):
            jsonschema.validate(payload, schema)

    def test_parts_reject_unknown_primitive(self):
        schema = stage_schemas()["parts"]
        payload = {
            "parts": {
                "bed": [
                    {"name": "frame", "primitive": "dodecahedron",
                     "size": [1, 1, 1], "offset": [0, 0, 0.5]}
                ]
            }
        }
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate(payload, schema)

    def test_critique_score_range(self):
        schema = stage_schemas()["critique"]
        with pytest.raises(jsonschema.ValidationError):
            jsonschema.validate({"score": 11, "issues": []}, schema)

    def test_all_shipped_fixtures_validate(self, fixtures_root):
        from car.jsonio import read_json

        registry = stage_schemas()
        checked = 0
        for scene_dir in sorted((fixtures_root / "providers").iterdir()):
            for path in sorted(scene_dir.glob("stage*.json")):
                stage = path.stem.replace("stage", "")
                schema = registry[STAGE_SCHEMA_IDS[stage]]
                data = read_json(path)
                payloads = data if isinstance(data, list) else [data]
                for payload in payloads:
                    jsonschema.validate(payload, schema)
                    checked += 1
        assert checked >= 30


class TestScriptedProvider:
    def test_table_lookup(self, tmp_path):
        write_json(
            tmp_path / "roomA" / "stage5.json",
            {
                "profiles": [
                    {"id": "bed", "color": "red", "material": "wood",
                     "function": "sleep", "structure": "boxy", "style": "plain"}
                ],
                "room_style": {"palette": ["red"], "style": "s", "mood": "m",
                               "lighting": "soft"},
            },
        )
        provider = ScriptedProvider(tmp_path)
        response = provider.call(request(stage="5", schema="profile_set"))
        assert response.payload["profiles"][0]["id"] == "bed"

    def test_malformed_fixture_names_field(self, tmp_path):
        write_json(
            tmp_path / "roomA" / "stage5.json",
            {
                "profiles": [{"id": "bed"}],
                "room_style": {"palette": [], "style": "s", "mood": "m", "lighting": "l"},
            },
        )
        provider = ScriptedProvider(tmp_path)
        with pytest.raises(ProviderSchemaError, match="color"):
            provider.call(request(stage="5", schema="profile_set"))

    def test_missing_fixture_is_transport_error(self, tmp_path):
        provider = ScriptedProvider(tmp_path)
        with pytest.raises(ProviderTransportError):
            provider.call(request())

    def test_iteration_indexing_clamps(self, tmp_path):
        write_json(
            tmp_path / "roomA" / "stage3_critique.json",
            [{"score": 3.0, "issues": []}, {"score": 9.0, "issues": []}],
        )
        provider = ScriptedProvider(tmp_path)
        r1 = provider.call(request("3_critique", "critique", iteration=1))
        r2 = provider.call(request("3_critique", "critique", iteration=2))
        r9 = provider.call(request("3_critique", "critique", iteration=9))
        assert (r1.payload["score"], r2.payload["score"], r9.payload["score"]) == (3.0, 9.0, 9.0)


class TestRetryLoop:
    def test_retries_with_error_note_then_succeeds(self):
        class Flaky(Provider):
            provider_id = "flaky"

            def __init__(self):
                self.notes = []

            def _invoke(self, req, error_note):
                self.notes.append(error_note)
                if len(self.notes) < 3:
                    return "{}", {"score": 42, "issues": []}
                return "{}", {"score": 9.0, "issues": []}

        provider = Flaky()
        response = provider.call(request("3_critique", "critique"))
        assert response.payload["score"] == 9.0
        assert self_notes_show_error(provider.notes)

    def test_gives_up_after_budget(self):
        class AlwaysBad(Provider):
            def _invoke(self, req, error_note):
                return "{}", {"score": -3, "issues": []}

        with pytest.raises(ProviderSchemaError, match="score"):
            AlwaysBad().call(request("3_critique", "critique"))


def self_notes_show_error(notes):
    return notes[0] is None and all(n and "score" in n for n in notes[1:])


class TestConfig:
    def test_scripted_requires_root(self):
        from car.providers import ProviderConfigError

        with pytest.raises(ProviderConfigError):
            provider_from_config({"kind": "scripted"})

    def test_http_requires_endpoint(self):
        from car.providers import ProviderConfigError

        with pytest.raises(ProviderConfigError):
            provider_from_config({"kind": "http"})

    def test_http_provider_id(self):
        provider = provider_from_config(
            {"kind": "http", "endpoint": "https://example.invalid/v1", "model": "m1"}
        )
        assert provider.provider_id == "http:m1"

    def test_unknown_stage_schema(self):
        from car.providers import ProviderConfigError

        with pytest.raises(ProviderConfigError):
            schema_for_stage("9")  # deterministic stage; no provider call


class TestStubTextures:
    def test_deterministic_bytes(self, tmp_path):
        synth = StubTextureSynthesizer()
        a = synth.generate("warm oak floor", tmp_path / "a.png")
        b = synth.generate("warm oak floor", tmp_path / "b.png")
        assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()

    def test_prompt_changes_pattern(self, tmp_path):
        synth = StubTextureSynthesizer()
        synth.generate("warm oak floor", tmp_path / "a.png")
        synth.generate("cold slate floor", tmp_path / "b.png")
        assert (tmp_path / "a.png").read_bytes() != (tmp_path / "b.png").read_bytes()
