"""Model-call boundary: prompt assembly, schema validation, retries.

Every stage call goes through ``Provider.call`` with a registered response
schema; malformed payloads are re-asked with the validator's complaint
appended, then rejected. The scripted provider replays fixture tables so
whole runs are deterministic; the HTTP provider targets any
chat-completions style endpoint with JSON output.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import urllib.request
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, Optional, Tuple

import jsonschema
from PIL import Image

from .jsonio import read_json
from .schemas import STAGE_SCHEMA_IDS, stage_schemas

logger = logging.getLogger(__name__)

DEFAULT_RETRIES = 2


class ProviderError(RuntimeError):
    pass


class ProviderTransportError(ProviderError):
    """The backend could not be reached or returned no usable text."""


class ProviderSchemaError(ProviderError):
    """The payload kept violating its response schema after retries."""


class ProviderConfigError(ProviderError):
    pass


@dataclass(frozen=True)
class ProviderRequest:
    stage: str
    scene_id: str
    prompt: str
    response_schema: str
    images: Tuple[str, ...] = ()
    iteration: int = 0

    @property
    def prompt_hash(self) -> str:
        return hashlib.sha256(self.prompt.encode("utf-8")).hexdigest()[:16]


@dataclass
class ProviderResponse:
    payload: dict
    raw: str
    usage: Dict[str, int] = field(default_factory=dict)


def build_prompt(stage: str, slots: Optional[Dict[str, str]] = None) -> str:
    """Render the stage's prompt template with named slots."""
    name = f"stage{stage}.txt"
    try:
        template = resources.files("car").joinpath("prompts", name).read_text("utf-8")
    except FileNotFoundError:
        template = f"[stage {stage}]\n"
    out = template
    for key, value in (slots or {}).items():
        out = out.replace("{" + key + "}", str(value))
    return out


class Provider:
    """Base provider: schema-checked calls with error-annotated retries."""

    provider_id = "base"
    retries = DEFAULT_RETRIES

    def call(self, request: ProviderRequest) -> ProviderResponse:
        registry = stage_schemas()
        if request.response_schema not in registry:
            raise ProviderConfigError(f"schema {request.response_schema!r} not registered")
        schema = registry[request.response_schema]
        note: Optional[str] = None
        last_error = "no attempt made"
        for attempt in range(self.retries + 1):
            raw, payload = self._invoke(request, note)
            try:
                jsonschema.validate(payload, schema)
            except jsonschema.ValidationError as exc:
                path = "$" + "".join(f"[{p!r}]" for p in exc.absolute_path)
                last_error = f"{path}: {exc.message}"
                note = last_error
                logger.warning(
                    "stage %s payload failed validation (attempt %d): %s",
                    request.stage,
                    attempt + 1,
                    last_error,
                )
                continue
            return ProviderResponse(payload=payload, raw=raw)
        raise ProviderSchemaError(
            f"stage {request.stage} payload invalid after {self.retries + 1} attempts: {last_error}"
        )

    def _invoke(self, request: ProviderRequest, error_note: Optional[str]) -> Tuple[str, dict]:
        raise NotImplementedError


class ScriptedProvider(Provider):
    """Replays fixture payloads keyed by (scene, stage); fully deterministic.

    A fixture file holding a list is treated as per-iteration payloads for
    looped stages, clamped to the last element.
    """

    provider_id = "scripted"

    def __init__(self, fixtures_root):
        self.fixtures_root = Path(fixtures_root)

    def fixture_path(self, scene_id: str, stage: str) -> Path:
        return self.fixtures_root / scene_id / f"stage{stage}.json"

    def _invoke(self, request: ProviderRequest, error_note: Optional[str]) -> Tuple[str, dict]:
        path = self.fixture_path(request.scene_id, request.stage)
        if not path.exists():
            raise ProviderTransportError(f"no fixture payload at {path}")
        data = read_json(path)
        if isinstance(data, list):
            if not data:
                raise ProviderTransportError(f"fixture table {path} is empty")
            index = min(max(request.iteration - 1, 0), len(data) - 1)
            data = data[index]
        return json.dumps(data, sort_keys=True), data


class HttpProvider(Provider):
    """Chat-completions style JSON-mode client (temperature 0)."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key_env: str = "CAR_API_KEY",
        temperature: float = 0.0,
        timeout: float = 120.0,
    ):
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.temperature = temperature
        self.timeout = timeout
        self.provider_id = f"http:{model}"

    def _invoke(self, request: ProviderRequest, error_note: Optional[str]) -> Tuple[str, dict]:
        key = os.environ.get(self.api_key_env, "")
        if not key:
            raise ProviderConfigError(
                f"environment variable {self.api_key_env} is not set"
            )
        prompt = request.prompt
        if error_note:
            prompt += f"\n\nYour previous reply failed validation: {error_note}\nReply with corrected JSON only."
        body = {
            "model": self.model,
            "temperature": self.temperature,
            "response_format": {"type": "json_object"},
            "messages": [{"role": "user", "content": prompt}],
        }
        data = json.dumps(body).encode("utf-8")
        req = urllib.request.Request(
            self.endpoint,
            data=data,
            headers={
                "Content-Type": "application/json",
                "Authorization": f"Bearer {key}",
            },
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                reply = json.loads(resp.read().decode("utf-8"))
        except (OSError, ValueError) as exc:
            raise ProviderTransportError(f"request to {self.endpoint} failed: {exc}") from None
        try:
            raw = reply["choices"][0]["message"]["content"]
            payload = json.loads(raw)
        except (KeyError, IndexError, ValueError) as exc:
            raise ProviderTransportError(f"unusable completion payload: {exc}") from None
        return raw, payload


def provider_from_config(config: dict, fixtures_root=None) -> Provider:
    """Build a provider from a config mapping (``kind: scripted|http``)."""
    kind = config.get("kind", "scripted")
    if kind == "scripted":
        root = config.get("fixtures_root") or fixtures_root
        if root is None:
            raise ProviderConfigError("scripted provider needs a fixtures_root")
        return ScriptedProvider(root)
    if kind == "http":
        try:
            return HttpProvider(
                endpoint=config["endpoint"],
                model=config["model"],
                api_key_env=config.get("api_key_env", "CAR_API_KEY"),
                temperature=float(config.get("temperature", 0.0)),
            )
        except KeyError as exc:
            raise ProviderConfigError(f"http provider config missing {exc}") from None
    raise ProviderConfigError(f"unknown provider kind {kind!r}")


def schema_for_stage(stage: str) -> str:
    if stage not in STAGE_SCHEMA_IDS:
        raise ProviderConfigError(f"stage {stage!r} has no registered response schema")
    return STAGE_SCHEMA_IDS[stage]


# ---------------------------------------------------------------------------
# Texture synthesis (image model stand-in)
# ---------------------------------------------------------------------------


class TextureSynthesizer:
    """Image-model contract for decorative surfaces; offline stub below."""

    def generate(self, prompt: str, out_path) -> str:
        raise NotImplementedError


class StubTextureSynthesizer(TextureSynthesizer):
    """Writes a deterministic two-tone checker image derived from the prompt."""

    def __init__(self, tile: int = 8, size: int = 256):
        self.tile = tile
        self.size = size

    def generate(self, prompt: str, out_path) -> str:
        out_path = Path(out_path)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        digest = hashlib.sha1(prompt.encode("utf-8")).digest()
        color_a = (digest[0], digest[1], digest[2])
        color_b = (255 - digest[0], 255 - digest[1], 255 - digest[2])
        image = Image.new("RGB", (self.size, self.size))
        cell = self.size // self.tile
        pixels = image.load()
        for y in range(self.size):
            for x in range(self.size):
                pixels[x, y] = color_a if ((x // cell) + (y // cell)) % 2 == 0 else color_b
        image.save(out_path)
        return str(out_path)
