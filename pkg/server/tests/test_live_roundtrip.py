"""End-to-end acceptance: the codec against a live server process.

Starts the server on a local port with the tiny causal LM (CPU, fp32),
then drives the codec package's HTTP adapter through a full 32-byte
embed/recover cycle and the duplicate-request determinism probe.
"""

from __future__ import annotations

import os
import socket
import subprocess
import sys
import time

import httpx
import pytest

from shimer.client import AdapterChannel
from shimer.codec import Settings, decode, encode
from shimer.prg import keygen


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


@pytest.fixture(scope="module")
def live_server(tmp_path_factory):
    from distserver.tinymodel import build_tiny_model

    model_dir = build_tiny_model(str(tmp_path_factory.mktemp("live-model")), seed=0)
    port = _free_port()
    process = subprocess.Popen(
        [sys.executable, "-m", "distserver.main", "--model", model_dir, "--port", str(port)],
        stdout=subprocess.DEVNULL,
        stderr=subprocess.DEVNULL,
        env=dict(os.environ),
    )
    endpoint = f"http://127.0.0.1:{port}"
    try:
        for _ in range(120):
            try:
                if httpx.get(endpoint + "/v1/health", timeout=1.0).status_code == 200:
                    break
            except httpx.HTTPError:
                time.sleep(0.5)
        else:
            raise RuntimeError("server did not come up")
        yield endpoint
    finally:
        process.terminate()
        process.wait(timeout=10)


def test_live_adapter_roundtrip_32_bytes(live_server):
    channel = AdapterChannel.connect(live_server, top_k=64)
    assert channel.health()["determinism_mode"] == "cpu-fp32"
    prompt = tuple(channel.tokenize("the secret garden"))
    key = keygen(seed=31_337)
    payload = bytes(range(32))
    settings = Settings(q_bits=20, top_k=64, max_tokens=1024)
    container = encode(key, channel, prompt, payload, settings)
    assert not container.incomplete
    recovered = decode(key, channel, prompt, container)
    assert recovered == payload
    text = channel.detokenize(container.tokens)
    assert isinstance(text, str) and len(text) > 0


def test_live_duplicate_probe_byte_identical(live_server):
    channel = AdapterChannel.connect(live_server, top_k=32)
    prompt = tuple(channel.tokenize("probe"))
    channel.probe_determinism(prompt)
