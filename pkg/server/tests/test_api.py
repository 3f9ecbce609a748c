from __future__ import annotations

import math


def test_health_reports_model_and_mode(client):
    body = client.get("/v1/health").json()
    assert body["determinism_mode"] == "cpu-fp32"
    assert body["model"]


def test_distribution_schema_and_normalization(client):
    response = client.post(
        "/v1/distribution", json={"context_ids": [10, 20, 30], "top_k": 16}
    )
    assert response.status_code == 200
    body = response.json()
    assert len(body["token_ids"]) == 16
    assert all(isinstance(p, str) for p in body["probs"])
    values = [float(p) for p in body["probs"]]
    assert abs(math.fsum(values) - 1.0) < 1e-12
    assert values == sorted(values, reverse=True)
    assert len(set(body["token_ids"])) == 16


def test_distribution_tie_order_is_id_ascending(client):
    body = client.post(
        "/v1/distribution", json={"context_ids": [5], "top_k": 257}
    ).json()
    pairs = list(zip([float(p) for p in body["probs"]], body["token_ids"]))
    assert pairs == sorted(pairs, key=lambda vi: (-vi[0], vi[1]))


def test_duplicate_requests_byte_identical(client):
    payload = {"context_ids": [1, 2, 3, 4], "top_k": 32}
    first = client.post("/v1/distribution", json=payload).content
    second = client.post("/v1/distribution", json=payload).content
    assert first == second


def test_tokenize_detokenize_roundtrip(client):
    for sentence in ("hello world", "Drei Chinesen mit dem Kontrabass", "1 + 1 = 2?!"):
        ids = client.post("/v1/tokenize", json={"text": sentence}).json()["ids"]
        text = client.post("/v1/detokenize", json={"ids": ids}).json()["text"]
        assert text == sentence


def test_empty_text_tokenizes_to_nothing(client):
    assert client.post("/v1/tokenize", json={"text": ""}).json()["ids"] == []


def test_context_too_long_is_4xx(client):
    response = client.post(
        "/v1/distribution", json={"context_ids": [1] * 2000, "top_k": 8}
    )
    assert response.status_code == 413


def test_empty_context_rejected(client):
    response = client.post("/v1/distribution", json={"context_ids": [], "top_k": 8})
    assert response.status_code == 422


def test_out_of_vocab_context_rejected(client):
    response = client.post(
        "/v1/distribution", json={"context_ids": [99999], "top_k": 8}
    )
    assert response.status_code == 413


def test_wrong_model_name_is_404(client):
    response = client.post(
        "/v1/distribution",
        json={"model": "someone-else", "context_ids": [1], "top_k": 8},
    )
    assert response.status_code == 404


def test_top_k_clamped_to_vocab(client):
    body = client.post(
        "/v1/distribution", json={"context_ids": [1], "top_k": 100000}
    ).json()
    assert len(body["token_ids"]) == 257
