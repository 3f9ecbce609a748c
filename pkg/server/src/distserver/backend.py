"""Model loading and deterministic inference.

One process serves one locally stored causal language model. Requests are
serialized through a single inference lock; identical requests must yield
identical responses for the lifetime of the process and across restarts
on the same host and configuration, so the default is CPU float32 with a
single torch thread.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import torch
from transformers import AutoModelForCausalLM, AutoTokenizer


class ModelLoadError(RuntimeError):
    pass


class ContextTooLong(ValueError):
    pass


@dataclass(frozen=True)
class ServerConfig:
    model_path: str
    device: str = "cpu"
    max_context: int | None = None  # default: the model's position limit
    host: str = "127.0.0.1"
    port: int = 8731
    model_name: str | None = None  # serving alias; defaults to the load path

    @property
    def determinism_mode(self) -> str:
        return "cpu-fp32" if self.device == "cpu" else f"{self.device}-nondeterministic"


class ModelBackend:
    def __init__(self, config: ServerConfig) -> None:
        self.config = config
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(config.model_path)
            model = AutoModelForCausalLM.from_pretrained(
                config.model_path, dtype=torch.float32
            )
        except Exception as exc:  # transformers raises a zoo of types here
            raise ModelLoadError(f"cannot load model from {config.model_path}: {exc}") from exc
        if config.device == "cpu":
            torch.set_num_threads(1)
        self.model = model.to(config.device)
        self.model.eval()
        self.model_name = (
            config.model_name
            or getattr(model.config, "name_or_path", None)
            or config.model_path
        )
        limit = getattr(model.config, "n_positions", None) or getattr(
            model.config, "max_position_embeddings", 1024
        )
        self.max_context = min(config.max_context or limit, limit)
        self._lock = threading.Lock()

    def distribution(self, context_ids: list[int], top_k: int) -> tuple[list[int], list[str]]:
        """Top-k next-token probabilities, renormalized over the k entries.

        Probabilities are returned as decimal strings with full float64
        round-trip precision, ordered by descending probability then
        ascending token id.
        """
        if not context_ids:
            raise ContextTooLong("context must contain at least one token")
        if len(context_ids) > self.max_context:
            raise ContextTooLong(
                f"context of {len(context_ids)} tokens exceeds the limit {self.max_context}"
            )
        vocab = self.model.config.vocab_size
        if any(not 0 <= t < vocab for t in context_ids):
            raise ContextTooLong("context contains out-of-vocabulary token ids")
        k = max(1, min(top_k, vocab))
        with self._lock, torch.no_grad():
            ids = torch.tensor([context_ids], dtype=torch.long, device=self.config.device)
            logits = self.model(ids).logits[0, -1]
            probs = torch.softmax(logits.to(torch.float64), dim=-1)
            values, indices = torch.topk(probs, k)
        pairs = sorted(
            zip(values.tolist(), indices.tolist()), key=lambda vi: (-vi[0], vi[1])
        )
        total = sum(v for v, _ in pairs)
        return [t for _, t in pairs], [repr(v / total) for v, _ in pairs]

    def tokenize(self, text: str) -> list[int]:
        return self.tokenizer.encode(text, add_special_tokens=False)

    def detokenize(self, token_ids: list[int]) -> str:
        return self.tokenizer.decode(token_ids, skip_special_tokens=False)


__all__ = ["ModelBackend", "ServerConfig", "ModelLoadError", "ContextTooLong"]
