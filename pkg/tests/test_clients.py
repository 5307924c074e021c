"""Transport adapters: payload shapes, fixture record/replay, retry bounds."""

from __future__ import annotations

import base64
import json

import pytest

from kahani.clients import (
    A1111Client,
    ChatRequest,
    FixtureChatBackend,
    FixtureImageBackend,
    FixtureStore,
    OpenAIChatClient,
    Txt2ImgRequest,
    canonical_chat,
    canonical_txt2img,
    chat_complete,
    chat_payload,
    request_digest,
    txt2img_payload,
)
from kahani.constants import NEGATIVE_PROMPT
from kahani.errors import BackendError, FixtureMiss, ImageDecodeError, KahaniError

from conftest import tiny_png


def make_chat_request(user="hello") -> ChatRequest:
    return ChatRequest(model="gpt-4-turbo", system="be brief", user=user)


def test_chat_request_requires_messages():
    with pytest.raises(KahaniError):
        ChatRequest(model="m", system="", user="u")


def test_chat_payload_shape():
    payload = chat_payload(make_chat_request())
    assert payload["model"] == "gpt-4-turbo"
    assert [m["role"] for m in payload["messages"]] == ["system", "user"]
    assert payload["temperature"] == 0.7


def test_txt2img_payload_carries_production_parameters():
    req = Txt2ImgRequest(prompt="a scene", negative_prompt=NEGATIVE_PROMPT)
    payload = txt2img_payload(req)
    assert payload["steps"] == 50
    assert payload["sampler_name"] == "DPM++ 3M SDE Karras"
    assert payload["denoising_strength"] == 0.5
    assert payload["negative_prompt"] == NEGATIVE_PROMPT
    assert payload["width"] == payload["height"] == 1024


def test_digest_stable_and_excludes_sampling_knobs():
    a = ChatRequest(model="m", system="s", user="u", temperature=0.2, seed=1)
    b = ChatRequest(model="m", system="s", user="u", temperature=0.9, seed=7)
    assert request_digest(canonical_chat(a)) == request_digest(canonical_chat(b))
    # strict mode distinguishes them
    assert request_digest(canonical_chat(a, strict=True)) != request_digest(
        canonical_chat(b, strict=True)
    )


def test_digest_differs_on_content():
    a = canonical_chat(make_chat_request("one"))
    b = canonical_chat(make_chat_request("two"))
    assert request_digest(a) != request_digest(b)


def test_fixture_replay_round_trip(tmp_path):
    store = FixtureStore(tmp_path, mode="record")

    class Live:
        calls = 0

        def complete(self, req):
            Live.calls += 1
            return "recorded reply"

    backend = FixtureChatBackend(store=store, live=Live())
    req = make_chat_request()
    assert chat_complete(req, backend) == "recorded reply"
    assert Live.calls == 1

    replay = FixtureChatBackend(store=FixtureStore(tmp_path, mode="replay"))
    assert chat_complete(req, replay) == "recorded reply"
    assert Live.calls == 1  # no live call on replay


def test_fixture_replay_miss_never_touches_network(tmp_path):
    replay = FixtureChatBackend(store=FixtureStore(tmp_path, mode="replay"))
    with pytest.raises(FixtureMiss):
        chat_complete(make_chat_request("unseen"), replay)


def test_fixture_image_round_trip(tmp_path):
    png = tiny_png()
    store = FixtureStore(tmp_path, mode="record")

    class Live:
        def txt2img(self, req):
            return png

        def img2img(self, req):
            return png

    backend = FixtureImageBackend(store=store, live=Live())
    req = Txt2ImgRequest(prompt="x", negative_prompt=NEGATIVE_PROMPT)
    assert backend.txt2img(req) == png

    replay = FixtureImageBackend(store=FixtureStore(tmp_path, mode="replay"))
    assert replay.txt2img(req) == png
    digest = request_digest(canonical_txt2img(req))
    stored = json.loads(store.path_for(digest).read_text("utf-8"))
    assert stored["request"]["steps"] == 50
    assert stored["request"]["sampler_name"] == "DPM++ 3M SDE Karras"
    assert stored["request"]["negative_prompt"] == NEGATIVE_PROMPT


class _FakeResponse:
    def __init__(self, status_code=200, body=None, text=""):
        self.status_code = status_code
        self._body = body
        self.text = text

    def json(self):
        if self._body is None:
            raise ValueError("no body")
        return self._body


class _FakeSession:
    """Stands in for requests.Session; pops scripted responses."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.calls = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.calls.append({"url": url, "json": json, "headers": headers})
        item = self.responses.pop(0)
        if isinstance(item, Exception):
            raise item
        return item


def test_chat_client_parses_reply():
    body = {"choices": [{"message": {"content": "hi there"}}]}
    session = _FakeSession([_FakeResponse(200, body)])
    client = OpenAIChatClient("http://llm.test", api_key="sk-secret", session=session, sleep=lambda s: None)
    assert client.complete(make_chat_request()) == "hi there"
    call = session.calls[0]
    assert call["url"] == "http://llm.test/v1/chat/completions"
    assert call["headers"]["Authorization"] == "Bearer sk-secret"


def test_chat_client_bounded_backoff_on_transient_errors():
    sleeps = []
    session = _FakeSession(
        [_FakeResponse(500, text="boom"), _FakeResponse(503, text="boom"), _FakeResponse(500, text="boom")]
    )
    client = OpenAIChatClient("http://llm.test", session=session, sleep=sleeps.append)
    with pytest.raises(BackendError) as exc:
        client.complete(make_chat_request())
    assert exc.value.status == 500
    assert len(session.calls) == 3  # at most 3 transport attempts
    assert sleeps == [0.5, 1.0]
    assert sum(sleeps) <= 10.0


def test_chat_client_no_retry_on_client_error():
    session = _FakeSession([_FakeResponse(401, text="denied")])
    client = OpenAIChatClient("http://llm.test", session=session, sleep=lambda s: None)
    with pytest.raises(BackendError) as exc:
        client.complete(make_chat_request())
    assert exc.value.status == 401
    assert len(session.calls) == 1


def test_image_client_decodes_base64_png():
    png = tiny_png()
    body = {"images": [base64.b64encode(png).decode("ascii")]}
    session = _FakeSession([_FakeResponse(200, body)])
    client = A1111Client("http://sd.test", session=session, sleep=lambda s: None)
    req = Txt2ImgRequest(prompt="x", negative_prompt=NEGATIVE_PROMPT)
    out = client.txt2img(req)
    assert out == png
    assert len(out) < 100  # 67-byte-class fixture
    assert session.calls[0]["url"] == "http://sd.test/sdapi/v1/txt2img"
    assert session.calls[0]["json"]["steps"] == 50


def test_image_client_rejects_bad_payloads():
    session = _FakeSession([_FakeResponse(200, {"images": ["!!!not-base64!!!"]})])
    client = A1111Client("http://sd.test", session=session, sleep=lambda s: None)
    req = Txt2ImgRequest(prompt="x", negative_prompt=NEGATIVE_PROMPT)
    with pytest.raises(ImageDecodeError):
        client.txt2img(req)

    jpeg = base64.b64encode(b"\xff\xd8\xff\xe0 fake jpeg").decode("ascii")
    session = _FakeSession([_FakeResponse(200, {"images": [jpeg]})])
    client = A1111Client("http://sd.test", session=session, sleep=lambda s: None)
    with pytest.raises(ImageDecodeError):
        client.txt2img(req)


def test_image_client_server_error_after_retries():
    session = _FakeSession([_FakeResponse(500, text="oom")] * 3)
    client = A1111Client("http://sd.test", session=session, sleep=lambda s: None)
    req = Txt2ImgRequest(prompt="x", negative_prompt=NEGATIVE_PROMPT)
    with pytest.raises(BackendError):
        client.txt2img(req)
    assert len(session.calls) == 3


def test_api_key_never_persisted_in_fixtures(tmp_path):
    secret = "sk-super-secret-key"

    class Live:
        def complete(self, req):
            return "ok"

    store = FixtureStore(tmp_path, mode="record")
    backend = FixtureChatBackend(store=store, live=Live())
    chat_complete(make_chat_request(), backend)
    for path in tmp_path.glob("*.json"):
        assert secret not in path.read_text("utf-8")
