"""Channel adapter fetching next-token distributions over HTTP.

Wire protocol (shared with the distribution server):

    POST /v1/distribution {model, context_ids, top_k} -> {token_ids, probs}
    POST /v1/tokenize     {text}                      -> {ids}
    POST /v1/detokenize   {ids}                       -> {text}
    GET  /v1/health                                   -> {model, determinism_mode}

Probabilities travel as decimal strings carrying full float64 round-trip
precision; the client parses them and uses them exactly as received: no
renormalization happens before top-k truncation and quantization.

Every live exchange can be recorded to a fixture file and replayed later,
so codec tests run without a server.
"""

from __future__ import annotations

import hashlib
import json
import warnings

import httpx

from .channel import ChannelSource, TokenDistribution
from .errors import ContractViolation, NonDeterministicServer, ServerError, TransportError


def _canonical(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


class HttpWireSession:
    """Raw JSON-over-HTTP transport with a bounded retry budget."""

    def __init__(self, endpoint: str, timeout: float = 30.0, retries: int = 2) -> None:
        self.endpoint = endpoint.rstrip("/")
        self.retries = retries
        self._client = httpx.Client(base_url=self.endpoint, timeout=timeout)

    def _request(self, method: str, path: str, payload: dict | None) -> str:
        last: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                if method == "GET":
                    response = self._client.get(path)
                else:
                    response = self._client.post(path, json=payload)
            except httpx.HTTPError as exc:
                last = exc
                continue
            if response.status_code >= 400:
                raise ServerError(f"{path} -> HTTP {response.status_code}: {response.text[:200]}")
            return response.text
        raise TransportError(f"cannot reach {self.endpoint}{path}: {last}")

    def post(self, path: str, payload: dict) -> str:
        return self._request("POST", path, payload)

    def get(self, path: str) -> str:
        return self._request("GET", path, None)

    def close(self) -> None:
        self._client.close()


class RecordingSession:
    """Wraps a live session and appends each exchange to a fixture file."""

    def __init__(self, inner, path: str) -> None:
        self.inner = inner
        self.path = path

    def _record(self, method: str, path: str, payload: dict | None, response: str) -> None:
        entry = {
            "method": method,
            "path": path,
            "request": payload,
            "response": response,
        }
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")

    def post(self, path: str, payload: dict) -> str:
        response = self.inner.post(path, payload)
        self._record("POST", path, payload, response)
        return response

    def get(self, path: str) -> str:
        response = self.inner.get(path)
        self._record("GET", path, None, response)
        return response


class ReplaySession:
    """Serves recorded responses byte-for-byte; unknown requests fail."""

    def __init__(self, path: str) -> None:
        self.path = path
        self._table: dict[tuple[str, str, str], str] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                entry = json.loads(line)
                key = (
                    entry["method"],
                    entry["path"],
                    _canonical(entry["request"]) if entry["request"] is not None else "",
                )
                self._table[key] = entry["response"]

    def _lookup(self, method: str, path: str, payload: dict | None) -> str:
        key = (method, path, _canonical(payload) if payload is not None else "")
        try:
            return self._table[key]
        except KeyError:
            raise TransportError(
                f"no recorded response for {method} {path} with this request"
            ) from None

    def post(self, path: str, payload: dict) -> str:
        return self._lookup("POST", path, payload)

    def get(self, path: str) -> str:
        return self._lookup("GET", path, None)


class AdapterChannel(ChannelSource):
    """ChannelSource backed by the distribution server.

    Token ids and probabilities are used exactly as received; the wire is
    the determinism boundary, so encoder and decoder must target the same
    server configuration.
    """

    def __init__(
        self,
        session,
        model: str | None = None,
        top_k: int = 100,
        end_token: int | None = None,
    ) -> None:
        self.session = session
        self.top_k = top_k
        self.end_token = end_token
        health = self.health()
        self.model = model or health.get("model", "unknown")
        self.model_id = f"http:{self.model}"
        mode = health.get("determinism_mode", "")
        if mode != "cpu-fp32":
            warnings.warn(
                f"server determinism mode is {mode!r}; encoder and decoder "
                "must share an identical configuration",
                UserWarning,
                stacklevel=2,
            )

    @staticmethod
    def connect(endpoint: str, **kwargs) -> "AdapterChannel":
        return AdapterChannel(HttpWireSession(endpoint), **kwargs)

    def health(self) -> dict:
        return json.loads(self.session.get("/v1/health"))

    def next_distribution(self, history: tuple[int, ...]) -> TokenDistribution:
        if not history:
            raise ContractViolation("adapter channels need a non-empty history")
        raw = self.session.post(
            "/v1/distribution",
            {"model": self.model, "context_ids": list(history), "top_k": self.top_k},
        )
        body = json.loads(raw)
        ids = tuple(int(t) for t in body["token_ids"])
        probs = tuple(float(p) for p in body["probs"])
        digest = hashlib.sha256(
            f"{self.model}|{self.top_k}|{','.join(map(str, history))}".encode()
        ).hexdigest()[:16]
        return TokenDistribution(ids, probs, cache_key=("adapter", digest))

    def tokenize(self, text: str) -> list[int]:
        body = json.loads(self.session.post("/v1/tokenize", {"text": text}))
        return [int(t) for t in body["ids"]]

    def detokenize(self, token_ids) -> str:
        body = json.loads(
            self.session.post("/v1/detokenize", {"ids": [int(t) for t in token_ids]})
        )
        return body["text"]

    def probe_determinism(self, history: tuple[int, ...]) -> None:
        """Issue a duplicate request and require byte-identical responses."""
        payload = {
            "model": self.model,
            "context_ids": list(history),
            "top_k": self.top_k,
        }
        first = self.session.post("/v1/distribution", payload)
        second = self.session.post("/v1/distribution", payload)
        if first != second:
            raise NonDeterministicServer(
                "duplicate distribution requests returned different bytes"
            )


__all__ = [
    "HttpWireSession",
    "RecordingSession",
    "ReplaySession",
    "AdapterChannel",
]
