"""Probability sources and the deterministic quantization grid.

The float distribution handed over the channel interface is the
determinism boundary: encoder and decoder must see bit-identical floats.
Quantization onto integer weights summing to 2**Q happens after top-k
truncation, on both sides, from those same floats.
"""

from __future__ import annotations

import functools
import hashlib
import itertools
import math
import random
from dataclasses import dataclass, field

import numpy as np

from .errors import BadChannelSpec, TooManyTokens

_PROB_SUM_TOL = 1e-9


@dataclass(frozen=True)
class TokenDistribution:
    """Ordered token ids with strictly positive float probabilities."""

    token_ids: tuple[int, ...]
    probs: tuple[float, ...]
    cache_key: object = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if len(self.token_ids) != len(self.probs):
            raise ValueError("ids and probs must have equal length")
        if not self.token_ids:
            raise ValueError("distribution must be non-empty")
        if len(set(self.token_ids)) != len(self.token_ids):
            raise ValueError("token ids must be unique")
        if any(p <= 0.0 for p in self.probs):
            raise ValueError("probabilities must be strictly positive")
        if abs(math.fsum(self.probs) - 1.0) > _PROB_SUM_TOL:
            raise ValueError("probabilities must sum to 1")

    @classmethod
    def _trusted(cls, token_ids, probs, cache_key) -> "TokenDistribution":
        # internal: inputs derived from an already-validated distribution
        self = cls.__new__(cls)
        object.__setattr__(self, "token_ids", token_ids)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "cache_key", cache_key)
        return self

    @functools.cached_property
    def entropy_bits(self) -> float:
        p = np.asarray(self.probs)
        return float(-(p * np.log2(p)).sum())


class QuantizedDistribution:
    """Integer weights summing to exactly 2**q_bits, with prefix sums."""

    __slots__ = ("token_ids", "weights", "cumulative", "q_bits", "_desc", "_pos")

    def __init__(
        self,
        token_ids: tuple[int, ...],
        weights: tuple[int, ...],
        q_bits: int,
    ) -> None:
        self.token_ids = token_ids
        self.weights = weights
        self.q_bits = q_bits
        self.cumulative = tuple(itertools.accumulate(weights, initial=0))
        if self.cumulative[-1] != 1 << q_bits:
            raise ValueError("weights must sum to exactly 2**q_bits")
        if any(w <= 0 for w in weights):
            raise ValueError("weights must be positive")
        self._desc: tuple[int, ...] | None = None
        self._pos: dict[int, int] | None = None

    @classmethod
    def _trusted(cls, token_ids, weights, q_bits, cumulative) -> "QuantizedDistribution":
        # internal: inputs already validated by a prior construction
        self = cls.__new__(cls)
        self.token_ids = token_ids
        self.weights = weights
        self.q_bits = q_bits
        self.cumulative = cumulative
        self._desc = None
        self._pos = None
        return self

    def descending_order(self) -> tuple[int, ...]:
        """Indices sorted by weight descending, ties by lower token id."""
        if self._desc is None:
            self._desc = tuple(
                sorted(range(len(self.weights)), key=lambda i: (-self.weights[i], self.token_ids[i]))
            )
        return self._desc

    def position_of(self, token_id: int) -> int | None:
        if self._pos is None:
            self._pos = {t: i for i, t in enumerate(self.token_ids)}
        return self._pos.get(token_id)

    def __len__(self) -> int:
        return len(self.token_ids)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, QuantizedDistribution):
            return NotImplemented
        return (
            self.token_ids == other.token_ids
            and self.weights == other.weights
            and self.q_bits == other.q_bits
        )

    def __repr__(self) -> str:
        return f"QuantizedDistribution(n={len(self)}, q_bits={self.q_bits})"


_TOPK_CACHE: dict[tuple[object, int], TokenDistribution] = {}
_TOPK_CACHE_MAX = 4096


def top_k_truncate(dist: TokenDistribution, k: int) -> TokenDistribution:
    """Keep the k most probable entries (ties to lower id) and renormalize.

    Surviving entries keep their original relative order, so the cell
    layout both sides build from the result is reproducible.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    ids = dist.token_ids
    n = len(ids)
    if k >= n:
        return dist
    cache_key = None
    if dist.cache_key is not None:
        cache_key = (dist.cache_key, k)
        hit = _TOPK_CACHE.get(cache_key)
        if hit is not None:
            return hit
    probs_arr = np.asarray(dist.probs)
    ids_arr = np.asarray(ids, dtype=np.int64)
    ranked = np.lexsort((ids_arr, -probs_arr))[:k]
    ranked.sort()  # survivors keep their original relative order
    kept = probs_arr[ranked]
    kept = kept / kept.sum()
    out = TokenDistribution._trusted(
        tuple(int(i) for i in ids_arr[ranked]),
        tuple(kept.tolist()),
        ("topk", dist.cache_key, k) if dist.cache_key is not None else None,
    )
    if cache_key is not None:
        if len(_TOPK_CACHE) >= _TOPK_CACHE_MAX:
            _TOPK_CACHE.clear()
        _TOPK_CACHE[cache_key] = out
    return out


def quantize(dist: TokenDistribution, q_bits: int) -> QuantizedDistribution:
    """Largest-remainder apportionment of 2**q_bits among the probabilities.

    Every input token keeps weight >= 1 (an entry whose floor allotment is
    zero is lifted to one and excluded from remainder rounding); remainder
    ties break toward the lower list index.
    """
    if not 2 <= q_bits <= 32:
        raise ValueError("q_bits must be in [2, 32]")
    n = len(dist.token_ids)
    total = 1 << q_bits
    if n > total:
        raise TooManyTokens(f"{n} tokens cannot fit a 2^{q_bits} grid")

    scaled = np.asarray(dist.probs, dtype=np.float64) * float(total)
    floors = np.floor(scaled)
    rems = scaled - floors
    lifted = floors < 1.0
    floors[lifted] = 1.0
    rems[lifted] = -1.0  # lifted entries neither gain nor lose units
    weights = floors.astype(np.int64)

    deficit = total - int(weights.sum())
    if deficit > 0:
        order = np.lexsort((np.arange(n), -rems))
        weights[order[:deficit]] += 1
    elif deficit < 0:
        order = np.lexsort((-np.arange(n), rems))
        for i in order:
            if deficit == 0:
                break
            if rems[i] < 0.0:
                continue
            take = min(-deficit, int(weights[i]) - 1)
            weights[i] -= take
            deficit += take
        if deficit != 0:
            # fall back to shaving any entry above 1 (extreme float drift)
            for i in range(n):
                if deficit == 0:
                    break
                take = min(-deficit, int(weights[i]) - 1)
                weights[i] -= take
                deficit += take
    weight_list = weights.tolist()
    cumulative = [0]
    acc = 0
    for w in weight_list:
        acc += w
        cumulative.append(acc)
    if acc != total:
        raise ValueError("apportionment failed to hit the grid total")
    out = QuantizedDistribution._trusted(
        dist.token_ids, tuple(weight_list), q_bits, tuple(cumulative)
    )
    # weight-descending order (ties to lower id) falls out of the arrays here
    ids_arr = np.asarray(dist.token_ids, dtype=np.int64)
    out._desc = tuple(int(i) for i in np.lexsort((ids_arr, -weights)))
    return out


_QUANT_CACHE: dict[tuple[object, int], QuantizedDistribution] = {}
_QUANT_CACHE_MAX = 4096


def quantize_cached(dist: TokenDistribution, q_bits: int) -> QuantizedDistribution:
    """Memoized quantization for distributions that declare a cache key."""
    if dist.cache_key is None:
        return quantize(dist, q_bits)
    key = (dist.cache_key, q_bits)
    hit = _QUANT_CACHE.get(key)
    if hit is None:
        if len(_QUANT_CACHE) >= _QUANT_CACHE_MAX:
            _QUANT_CACHE.clear()
        hit = _QUANT_CACHE[key] = quantize(dist, q_bits)
    return hit


class ChannelSource:
    """Deterministic next-token distribution provider.

    Implementations must return bit-identical distributions for identical
    histories and be safe for concurrent read-only queries; one codec
    session uses a source strictly sequentially.
    """

    model_id: str = "channel"
    end_token: int | None = None

    def next_distribution(self, history: tuple[int, ...]) -> TokenDistribution:
        raise NotImplementedError

    def detokenize(self, token_ids: list[int]) -> str | None:
        """Plain-text rendering when supported; None otherwise."""
        return None


class UniformChannel(ChannelSource):
    def __init__(self, k: int) -> None:
        if k < 2:
            raise BadChannelSpec("uniform channel needs k >= 2")
        self.k = k
        self.model_id = f"uniform:{k}"
        self._dist = TokenDistribution(
            tuple(range(k)), tuple([1.0 / k] * k), cache_key=("uniform", k)
        )

    def next_distribution(self, history: tuple[int, ...]) -> TokenDistribution:
        return self._dist


class ZipfChannel(ChannelSource):
    def __init__(self, s: float, k: int) -> None:
        if k < 2 or s < 0:
            raise BadChannelSpec("zipf channel needs k >= 2 and s >= 0")
        self.s = s
        self.k = k
        self.model_id = f"zipf:{s}:{k}"
        ranks = np.arange(1, k + 1, dtype=np.float64)
        raw = ranks**-s
        probs = raw / raw.sum()
        self._dist = TokenDistribution(
            tuple(range(k)), tuple(probs.tolist()), cache_key=("zipf", s, k)
        )

    def next_distribution(self, history: tuple[int, ...]) -> TokenDistribution:
        return self._dist


class MarkovChannel(ChannelSource):
    """k-state chain with a seeded random transition table."""

    def __init__(self, k: int, seed: int = 0) -> None:
        if k < 2:
            raise BadChannelSpec("markov channel needs k >= 2")
        self.k = k
        self.seed = seed
        self.model_id = f"markov:{k}:{seed}"
        rng = random.Random(seed)
        self._rows: list[TokenDistribution] = []
        for state in range(k):
            raw = [rng.random() + 0.05 for _ in range(k)]
            total = math.fsum(raw)
            self._rows.append(
                TokenDistribution(
                    tuple(range(k)),
                    tuple(x / total for x in raw),
                    cache_key=("markov", seed, k, state),
                )
            )

    def next_distribution(self, history: tuple[int, ...]) -> TokenDistribution:
        state = history[-1] % self.k if history else 0
        return self._rows[state]


class HashModelChannel(ChannelSource):
    """History-hashed synthetic model: a fresh distribution per query.

    Unlike the closed-form channels this one performs real per-query work
    (keyed hashing plus a softmax), making it the honest stand-in for a
    model-backed channel in timing comparisons.
    """

    def __init__(self, k: int, seed: int = 0, temperature: float = 3.0) -> None:
        if k < 2:
            raise BadChannelSpec("hashlm channel needs k >= 2")
        self.k = k
        self.seed = seed
        self.temperature = temperature
        self.model_id = f"hashlm:{k}:{seed}"
        self._ids = tuple(range(k))

    def next_distribution(self, history: tuple[int, ...]) -> TokenDistribution:
        base = hashlib.sha256(
            f"{self.seed}|{','.join(map(str, history))}".encode()
        ).digest()
        raw = b"".join(
            hashlib.sha256(base + block.to_bytes(4, "big")).digest()
            for block in range((4 * self.k + 31) // 32)
        )
        scores = np.frombuffer(raw[: 4 * self.k], dtype=">u4").astype(np.float64)
        scores /= 2**32
        weights = np.exp(self.temperature * scores)
        probs = weights / weights.sum()
        return TokenDistribution._trusted(
            self._ids,
            tuple(probs.tolist()),
            ("hashlm", self.seed, self.k, base[:8].hex()),
        )


class ScriptedChannel(ChannelSource):
    """Plays back an explicit list of distributions, repeating the last."""

    def __init__(self, dists: list[TokenDistribution], base_len: int = 0) -> None:
        if not dists:
            raise BadChannelSpec("scripted channel needs at least one distribution")
        self.base_len = base_len
        fingerprint = hashlib.sha256(
            repr([(d.token_ids, d.probs) for d in dists]).encode()
        ).hexdigest()[:12]
        self.model_id = f"scripted:{fingerprint}"
        self.dists = [
            d
            if d.cache_key is not None
            else TokenDistribution(d.token_ids, d.probs, cache_key=("scripted", fingerprint, i))
            for i, d in enumerate(dists)
        ]

    def next_distribution(self, history: tuple[int, ...]) -> TokenDistribution:
        step = len(history) - self.base_len
        step = max(0, min(step, len(self.dists) - 1))
        return self.dists[step]


def load_scripted(path: str, base_len: int = 0) -> ScriptedChannel:
    """Read a scripted channel fixture: one line per step of id:prob pairs."""
    dists = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            ids, probs = [], []
            for pair in line.split():
                tok, _, prob = pair.partition(":")
                ids.append(int(tok))
                probs.append(float(prob))
            dists.append(TokenDistribution(tuple(ids), tuple(probs)))
    if not dists:
        raise BadChannelSpec(f"no distributions found in {path}")
    return ScriptedChannel(dists, base_len=base_len)


def synthetic_channel(spec: str) -> ChannelSource:
    """Build a channel from a spec string.

    Formats: ``uniform:K``, ``zipf:S:K``, ``markov:K[:SEED]``,
    ``hashlm:K[:SEED]``, ``scripted:PATH``.
    """
    kind, _, rest = spec.partition(":")
    try:
        if kind == "uniform":
            return UniformChannel(int(rest))
        if kind == "zipf":
            s, _, k = rest.partition(":")
            return ZipfChannel(float(s), int(k))
        if kind == "markov":
            k, _, seed = rest.partition(":")
            return MarkovChannel(int(k), int(seed) if seed else 0)
        if kind == "hashlm":
            k, _, seed = rest.partition(":")
            return HashModelChannel(int(k), int(seed) if seed else 0)
        if kind == "scripted":
            return load_scripted(rest)
    except (ValueError, OSError) as exc:
        raise BadChannelSpec(f"bad channel spec {spec!r}: {exc}") from exc
    raise BadChannelSpec(f"unknown channel kind {kind!r}")


def zipf_for_entropy(target_bits: float, k: int, tol: float = 1e-3) -> ZipfChannel:
    """Bisect the zipf exponent until the channel entropy hits the target."""
    lo, hi = 0.0, 8.0
    for _ in range(200):
        mid = (lo + hi) / 2
        h = ZipfChannel(mid, k)._dist.entropy_bits
        if abs(h - target_bits) <= tol:
            break
        if h > target_bits:
            lo = mid
        else:
            hi = mid
    return ZipfChannel((lo + hi) / 2, k)


__all__ = [
    "TokenDistribution",
    "QuantizedDistribution",
    "ChannelSource",
    "UniformChannel",
    "ZipfChannel",
    "MarkovChannel",
    "HashModelChannel",
    "ScriptedChannel",
    "top_k_truncate",
    "quantize",
    "quantize_cached",
    "synthetic_channel",
    "load_scripted",
    "zipf_for_entropy",
]
