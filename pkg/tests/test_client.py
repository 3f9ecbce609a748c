from __future__ import annotations

import json
import os

import httpx
import pytest

from shimer.client import AdapterChannel, HttpWireSession, RecordingSession, ReplaySession
from shimer.codec import Settings, decode, encode
from shimer.errors import (
    ContractViolation,
    NonDeterministicServer,
    ServerError,
    TransportError,
)
from shimer.prg import keygen

FIXTURE = os.path.join(os.path.dirname(__file__), "fixtures", "adapter_replay.jsonl")

# constants must match tests/fixtures/make_adapter_fixture.py
KEY_SEED = 4242
PAYLOAD = b"fixture roundtrip payload!"
PROMPT_TEXT = "once upon a time"
SETTINGS = Settings(q_bits=20, top_k=24, max_tokens=1024)


@pytest.fixture
def channel() -> AdapterChannel:
    return AdapterChannel(ReplaySession(FIXTURE), top_k=24)


def test_replay_health_and_model(channel):
    # the committed fixture was recorded from the tiny-LM distribution server
    assert channel.model == "tiny-byte-lm"
    assert channel.model_id == "http:tiny-byte-lm"
    assert channel.health()["determinism_mode"] == "cpu-fp32"


def test_replay_distribution_shape(channel):
    prompt = tuple(channel.tokenize(PROMPT_TEXT))
    dist = channel.next_distribution(prompt)
    assert len(dist.token_ids) == 24
    assert list(dist.probs) == sorted(dist.probs, reverse=True)
    assert abs(sum(dist.probs) - 1.0) < 1e-9


def test_replay_distribution_identical_across_calls(channel):
    prompt = tuple(channel.tokenize(PROMPT_TEXT))
    a = channel.next_distribution(prompt)
    b = channel.next_distribution(prompt)
    assert a.token_ids == b.token_ids
    assert a.probs == b.probs


def test_probe_determinism_passes_on_replay(channel):
    prompt = tuple(channel.tokenize(PROMPT_TEXT))
    channel.probe_determinism(prompt)


def test_empty_history_rejected(channel):
    with pytest.raises(ContractViolation):
        channel.next_distribution(())


def test_full_roundtrip_through_replayed_fixtures(channel):
    prompt = tuple(channel.tokenize(PROMPT_TEXT))
    key = keygen(seed=KEY_SEED)
    container = encode(key, channel, prompt, PAYLOAD, SETTINGS)
    assert not container.incomplete
    assert decode(key, channel, prompt, container) == PAYLOAD
    text = channel.detokenize(container.tokens)
    assert isinstance(text, str) and text


def test_replay_rejects_unrecorded_request(channel):
    with pytest.raises(TransportError):
        channel.next_distribution((1, 2, 3, 4, 5, 6, 7, 8, 9))


def test_recording_then_replaying_roundtrips(tmp_path):
    class Echo:
        def post(self, path, payload):
            return json.dumps({"token_ids": [0, 1], "probs": ["0.5", "0.5"]})

        def get(self, path):
            return json.dumps({"model": "echo", "determinism_mode": "cpu-fp32"})

    path = tmp_path / "rec.jsonl"
    rec = RecordingSession(Echo(), str(path))
    live = AdapterChannel(rec, top_k=2)
    live.next_distribution((5,))
    replay = AdapterChannel(ReplaySession(str(path)), top_k=2)
    dist = replay.next_distribution((5,))
    assert dist.token_ids == (0, 1)
    assert dist.probs == (0.5, 0.5)


def test_probs_parse_full_float64_precision(tmp_path):
    value = 0.1234567890123456789  # rounds to a specific float64
    class Fixed:
        def post(self, path, payload):
            return json.dumps(
                {"token_ids": [0, 1], "probs": [repr(value), repr(1.0 - value)]}
            )

        def get(self, path):
            return json.dumps({"model": "fixed", "determinism_mode": "cpu-fp32"})

    ch = AdapterChannel(Fixed(), top_k=2)
    dist = ch.next_distribution((1,))
    assert dist.probs[0] == value
    assert dist.probs[1] == 1.0 - value


def test_nondeterministic_server_detected():
    class Flaky:
        def __init__(self):
            self.calls = 0

        def post(self, path, payload):
            self.calls += 1
            return json.dumps(
                {"token_ids": [0, 1], "probs": ["0.5", "0.5"], "nonce": self.calls}
            )

        def get(self, path):
            return json.dumps({"model": "flaky", "determinism_mode": "cpu-fp32"})

    ch = AdapterChannel(Flaky(), top_k=2)
    with pytest.raises(NonDeterministicServer):
        ch.probe_determinism((1,))


def test_degraded_determinism_mode_warns():
    class Gpu:
        def post(self, path, payload):
            raise AssertionError("not used")

        def get(self, path):
            return json.dumps({"model": "gpu", "determinism_mode": "gpu-fp16"})

    with pytest.warns(UserWarning, match="determinism"):
        AdapterChannel(Gpu(), top_k=2)


def test_http_session_maps_errors():
    transport = httpx.MockTransport(
        lambda request: httpx.Response(500, text="boom")
    )
    session = HttpWireSession("http://server.invalid")
    session._client = httpx.Client(
        base_url="http://server.invalid", transport=transport
    )
    with pytest.raises(ServerError):
        session.get("/v1/health")

    def refuse(request):
        raise httpx.ConnectError("refused", request=request)

    session._client = httpx.Client(
        base_url="http://server.invalid", transport=httpx.MockTransport(refuse)
    )
    with pytest.raises(TransportError):
        session.post("/v1/tokenize", {"text": "x"})
