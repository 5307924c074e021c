"""Transport adapters: OpenAI-compatible chat, Automatic1111 txt2img, and a
deterministic fixture store for record/replay testing without live models."""

from __future__ import annotations

import base64
import binascii
import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

import requests

from .constants import (
    DEFAULT_HEIGHT,
    DEFAULT_REFINER_DENOISE,
    DEFAULT_SAMPLER,
    DEFAULT_STEPS,
    DEFAULT_WIDTH,
    FIXTURE_SCHEMA_VERSION,
)
from .errors import BackendError, FixtureMiss, ImageDecodeError, KahaniError

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"

CHAT_TIMEOUT = 120.0
IMAGE_TIMEOUT = 600.0
MAX_TRANSPORT_ATTEMPTS = 3
BACKOFF_START = 0.5
BACKOFF_CEILING = 10.0


@dataclass(frozen=True)
class ChatRequest:
    model: str
    system: str
    user: str
    temperature: float = 0.7
    max_tokens: int | None = None
    seed: int | None = None

    def __post_init__(self):
        if not self.system or not self.user:
            raise KahaniError("chat request needs nonempty system and user messages")


@dataclass(frozen=True)
class Txt2ImgRequest:
    prompt: str
    negative_prompt: str
    steps: int = DEFAULT_STEPS
    sampler_name: str = DEFAULT_SAMPLER
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT
    denoising_strength: float = DEFAULT_REFINER_DENOISE
    seed: int | None = None

    def __post_init__(self):
        if self.steps < 1:
            raise KahaniError("steps must be >= 1")


@dataclass(frozen=True)
class Img2ImgRequest:
    prompt: str
    negative_prompt: str
    init_png: bytes
    steps: int = DEFAULT_STEPS
    sampler_name: str = DEFAULT_SAMPLER
    width: int = DEFAULT_WIDTH
    height: int = DEFAULT_HEIGHT
    denoising_strength: float = DEFAULT_REFINER_DENOISE
    seed: int | None = None


def chat_payload(req: ChatRequest) -> dict:
    """OpenAI-compatible /v1/chat/completions body."""
    payload = {
        "model": req.model,
        "messages": [
            {"role": "system", "content": req.system},
            {"role": "user", "content": req.user},
        ],
        "temperature": req.temperature,
    }
    if req.max_tokens is not None:
        payload["max_tokens"] = req.max_tokens
    if req.seed is not None:
        payload["seed"] = req.seed
    return payload


def txt2img_payload(req: Txt2ImgRequest) -> dict:
    """Automatic1111-compatible /sdapi/v1/txt2img body."""
    payload = {
        "prompt": req.prompt,
        "negative_prompt": req.negative_prompt,
        "steps": req.steps,
        "sampler_name": req.sampler_name,
        "width": req.width,
        "height": req.height,
        "denoising_strength": req.denoising_strength,
    }
    if req.seed is not None:
        payload["seed"] = req.seed
    return payload


def canonical_chat(req: ChatRequest, strict: bool = False) -> dict:
    """Digest input for a chat request; sampling knobs excluded unless strict."""
    body: dict = {"kind": "chat", "model": req.model, "system": req.system, "user": req.user}
    if req.max_tokens is not None:
        body["max_tokens"] = req.max_tokens
    if strict:
        body["temperature"] = req.temperature
        body["seed"] = req.seed
    return body


def canonical_txt2img(req: Txt2ImgRequest, strict: bool = False) -> dict:
    body: dict = {
        "kind": "txt2img",
        "prompt": req.prompt,
        "negative_prompt": req.negative_prompt,
        "steps": req.steps,
        "sampler_name": req.sampler_name,
        "width": req.width,
        "height": req.height,
        "denoising_strength": req.denoising_strength,
    }
    if strict:
        body["seed"] = req.seed
    return body


def canonical_img2img(req: Img2ImgRequest, strict: bool = False) -> dict:
    body: dict = {
        "kind": "img2img",
        "prompt": req.prompt,
        "negative_prompt": req.negative_prompt,
        "init_sha256": hashlib.sha256(req.init_png).hexdigest(),
        "steps": req.steps,
        "sampler_name": req.sampler_name,
        "width": req.width,
        "height": req.height,
        "denoising_strength": req.denoising_strength,
    }
    if strict:
        body["seed"] = req.seed
    return body


def request_digest(canonical: dict) -> str:
    blob = json.dumps(canonical, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


class ChatBackend(Protocol):
    def complete(self, req: ChatRequest) -> str: ...


class ImageBackend(Protocol):
    def txt2img(self, req: Txt2ImgRequest) -> bytes: ...

    def img2img(self, req: Img2ImgRequest) -> bytes: ...


def chat_complete(req: ChatRequest, backend: ChatBackend) -> str:
    return backend.complete(req)


def txt2img(req: Txt2ImgRequest, backend: ImageBackend) -> bytes:
    return backend.txt2img(req)


def _decode_png(b64: str) -> bytes:
    try:
        data = base64.b64decode(b64, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise ImageDecodeError(f"reply is not valid base64: {exc}") from exc
    if not data.startswith(PNG_MAGIC):
        raise ImageDecodeError("decoded reply does not start with a PNG header")
    return data


class _RetryingTransport:
    """Shared POST-with-backoff logic for the live clients."""

    def __init__(self, timeout: float, sleep=time.sleep, session: requests.Session | None = None):
        self.timeout = timeout
        self._sleep = sleep
        self._session = session or requests.Session()

    def post_json(self, url: str, payload: dict, headers: dict | None = None) -> dict:
        backoff = BACKOFF_START
        budget = BACKOFF_CEILING
        last_error: BackendError | None = None
        for attempt in range(MAX_TRANSPORT_ATTEMPTS):
            try:
                response = self._session.post(
                    url, json=payload, headers=headers or {}, timeout=self.timeout
                )
            except requests.RequestException as exc:
                last_error = BackendError(f"transport failure: {exc}")
            else:
                if response.status_code == 200:
                    try:
                        return response.json()
                    except ValueError as exc:
                        raise BackendError(f"malformed JSON reply: {exc}") from exc
                last_error = BackendError(
                    "backend rejected request", status=response.status_code, body=response.text
                )
                if response.status_code not in (429, 500, 502, 503, 504):
                    raise last_error
            if attempt < MAX_TRANSPORT_ATTEMPTS - 1 and budget > 0:
                pause = min(backoff, budget)
                self._sleep(pause)
                budget -= pause
                backoff *= 2
        raise last_error if last_error else BackendError("backend unreachable")


class OpenAIChatClient:
    """Minimal chat-completions client for any OpenAI-compatible endpoint."""

    def __init__(
        self,
        endpoint: str,
        api_key: str = "",
        timeout: float = CHAT_TIMEOUT,
        sleep=time.sleep,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self._api_key = api_key
        self._transport = _RetryingTransport(timeout, sleep=sleep, session=session)

    def complete(self, req: ChatRequest) -> str:
        headers = {}
        if self._api_key:
            headers["Authorization"] = f"Bearer {self._api_key}"
        data = self._transport.post_json(
            f"{self.endpoint}/v1/chat/completions", chat_payload(req), headers
        )
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise BackendError(f"unexpected chat reply shape: {exc}") from exc


class A1111Client:
    """txt2img/img2img client for an Automatic1111-style web UI API."""

    def __init__(
        self,
        endpoint: str,
        timeout: float = IMAGE_TIMEOUT,
        sleep=time.sleep,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self._transport = _RetryingTransport(timeout, sleep=sleep, session=session)

    def _first_image(self, data: dict) -> bytes:
        images = data.get("images") or []
        if not images:
            raise BackendError("image backend returned no images")
        return _decode_png(images[0].split(",", 1)[-1])

    def txt2img(self, req: Txt2ImgRequest) -> bytes:
        data = self._transport.post_json(f"{self.endpoint}/sdapi/v1/txt2img", txt2img_payload(req))
        return self._first_image(data)

    def img2img(self, req: Img2ImgRequest) -> bytes:
        payload = txt2img_payload(
            Txt2ImgRequest(
                prompt=req.prompt,
                negative_prompt=req.negative_prompt,
                steps=req.steps,
                sampler_name=req.sampler_name,
                width=req.width,
                height=req.height,
                denoising_strength=req.denoising_strength,
                seed=req.seed,
            )
        )
        payload["init_images"] = [base64.b64encode(req.init_png).decode("ascii")]
        data = self._transport.post_json(f"{self.endpoint}/sdapi/v1/img2img", payload)
        return self._first_image(data)


@dataclass
class FixtureStore:
    """Directory of recorded request/reply pairs keyed by request digest."""

    directory: Path
    mode: str = "replay"  # record | replay | passthrough
    strict: bool = False

    def __post_init__(self):
        self.directory = Path(self.directory)
        if self.mode not in ("record", "replay", "passthrough"):
            raise KahaniError(f"unknown fixture mode: {self.mode}")

    def path_for(self, digest: str) -> Path:
        return self.directory / f"{digest}.json"

    def load(self, digest: str) -> dict:
        path = self.path_for(digest)
        if not path.is_file():
            raise FixtureMiss(digest)
        return json.loads(path.read_text("utf-8"))

    def save(self, digest: str, canonical: dict, reply: dict) -> None:
        self.directory.mkdir(parents=True, exist_ok=True)
        record = {
            "schema_version": FIXTURE_SCHEMA_VERSION,
            "digest": digest,
            "request": canonical,
            **reply,
        }
        self.path_for(digest).write_text(
            json.dumps(record, indent=2, sort_keys=True, ensure_ascii=False) + "\n", "utf-8"
        )


@dataclass
class FixtureChatBackend:
    """Chat backend that replays recorded replies; in record mode it asks the
    live backend once and stores the result."""

    store: FixtureStore
    live: ChatBackend | None = None

    def complete(self, req: ChatRequest) -> str:
        digest = request_digest(canonical_chat(req, strict=self.store.strict))
        if self.store.mode == "replay":
            return self.store.load(digest)["reply"]
        if self.store.mode == "passthrough":
            return self._live().complete(req)
        reply = self._live().complete(req)
        self.store.save(digest, canonical_chat(req, strict=self.store.strict), {"reply": reply})
        return reply

    def _live(self) -> ChatBackend:
        if self.live is None:
            raise BackendError("no live chat backend configured for this fixture mode")
        return self.live


@dataclass
class FixtureImageBackend:
    store: FixtureStore
    live: ImageBackend | None = None

    def _roundtrip(self, canonical: dict, call) -> bytes:
        digest = request_digest(canonical)
        if self.store.mode == "replay":
            return _decode_png(self.store.load(digest)["reply_png_b64"])
        if self.store.mode == "passthrough":
            return call()
        png = call()
        self.store.save(
            digest, canonical, {"reply_png_b64": base64.b64encode(png).decode("ascii")}
        )
        return png

    def txt2img(self, req: Txt2ImgRequest) -> bytes:
        return self._roundtrip(
            canonical_txt2img(req, strict=self.store.strict), lambda: self._live().txt2img(req)
        )

    def img2img(self, req: Img2ImgRequest) -> bytes:
        return self._roundtrip(
            canonical_img2img(req, strict=self.store.strict), lambda: self._live().img2img(req)
        )

    def _live(self) -> ImageBackend:
        if self.live is None:
            raise BackendError("no live image backend configured for this fixture mode")
        return self.live
