"""Closed-form capacity analysis and the measurement harness.

The closed forms describe the per-step regime: a fresh uniform draw and a
pointer uniform over the interval. The harness measures both that regime
(single-step trials) and full sessions, where split-state conditioning
makes low-entropy channels strictly worse than the per-step formulas.
"""

from __future__ import annotations

import json
import math
import random
import time
from dataclasses import asdict, dataclass

from .bitstream import BitSource, frame_message
from .channel import ChannelSource, TokenDistribution, quantize_cached, top_k_truncate
from .codec import CodecSession, SessionTotals, Settings, sample_index
from .errors import ContractViolation
from .intervals import StepKind
from .prg import TAG_FINISH, TAG_SAMPLING, InjectedUniforms, PrgStream, keygen


def entropy(dist) -> float:
    """Shannon entropy in bits of a distribution or probability sequence."""
    probs = getattr(dist, "probs", dist)
    return -math.fsum(p * math.log2(p) for p in probs)


def perplexity(channel: ChannelSource, tokens, prompt: tuple[int, ...] = ()) -> float:
    """2 raised to the mean per-token log-loss under the channel."""
    history = list(prompt)
    loss = 0.0
    count = 0
    for token in tokens:
        dist = channel.next_distribution(tuple(history))
        try:
            idx = dist.token_ids.index(token)
        except ValueError:
            raise ContractViolation(f"channel assigns no probability to token {token}")
        loss += -math.log2(dist.probs[idx])
        history.append(token)
        count += 1
    if not count:
        return 1.0
    return 2.0 ** (loss / count)


def split_bound_high(p_max: float) -> float:
    """Worst-case split probability with reordering for p_max >= 1/2."""
    if not 0.5 <= p_max <= 1.0:
        raise ContractViolation("p_max must lie in [1/2, 1]")
    return 4.0 * p_max * p_max - 5.0 * p_max + 2.0


def split_bound_general(p_max: float, n: int, clamp: bool = True) -> float:
    """Printed closed form for 1/(n+1) < p_max <= 1/n, n > 2.

    The raw polynomial goes negative inside its stated domain; by default
    the value is clamped to [0, 1] and the raw value is available with
    ``clamp=False``.
    """
    if not (isinstance(n, int) and n > 2):
        raise ContractViolation("n must be an integer greater than 2")
    if not 1.0 / (n + 1) < p_max <= 1.0 / n:
        raise ContractViolation(f"p_max must lie in (1/{n + 1}, 1/{n}]")
    raw = -(n**3 + 2 * n**2 + n) * p_max * p_max + (2 * n**2 + 3 * n) * p_max - n
    if clamp:
        return min(1.0, max(0.0, raw))
    return raw


def expected_embedding_no_reorder(dist) -> float:
    """Expected per-step embedded information without reordering.

    Derivation: a token is both selected and straddled with probability
    p^2, so each entry contributes (p - p^2) * (-log2 p).
    """
    probs = getattr(dist, "probs", dist)
    return -math.fsum(p * math.log2(p) - p * p * math.log2(p) for p in probs)


def extracted_bits_bound_as_printed(i_e: float, n: int | None = None) -> float:
    """Verbatim printed closed form for expected extracted bits.

    Kept for documentation behind the analyze command's as-printed flag;
    the expression is dimensionally suspect, so measurements use Monte
    Carlo instead.
    """
    if n is None:
        n = math.ceil(i_e)
    return n + 2.0**i_e * (-n + 3.0 * 2.0 ** (n - 1) - 2.0)


@dataclass
class MetricsReport:
    """Aggregate metrics of one benchmark run."""

    channel: str
    settings: dict
    seed: int
    sessions: int
    tokens: int
    entropy_bits_per_token: float
    capacity_bits_per_token: float
    utilization_pct: float
    split_waste_pct: float
    extraction_waste_pct: float
    perplexity: float
    ms_per_token: float
    channel_query_ms_per_token: float
    baseline_ms_per_token: float
    channel_capacity_bits_per_s: float
    incomplete_sessions: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    def format_table(self) -> str:
        rows = [
            ("channel", self.channel),
            ("sessions", str(self.sessions)),
            ("tokens", str(self.tokens)),
            ("entropy (bits/token)", f"{self.entropy_bits_per_token:.4f}"),
            ("capacity (bits/token)", f"{self.capacity_bits_per_token:.4f}"),
            ("utilization (%)", f"{self.utilization_pct:.2f}"),
            ("split waste (%)", f"{self.split_waste_pct:.2f}"),
            ("extraction waste (%)", f"{self.extraction_waste_pct:.2f}"),
            ("perplexity", f"{self.perplexity:.4f}"),
            ("time (ms/token)", f"{self.ms_per_token:.4f}"),
            ("channel query (ms/token)", f"{self.channel_query_ms_per_token:.4f}"),
            ("baseline (ms/token)", f"{self.baseline_ms_per_token:.4f}"),
            ("channel capacity (bits/s)", f"{self.channel_capacity_bits_per_s:.1f}"),
            ("incomplete sessions", str(self.incomplete_sessions)),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)


class _TimedChannel:
    """Wraps a channel to separate query time from codec time."""

    def __init__(self, inner: ChannelSource) -> None:
        self.inner = inner
        self.model_id = inner.model_id
        self.end_token = inner.end_token
        self.seconds = 0.0
        self.queries = 0

    def next_distribution(self, history):
        t0 = time.perf_counter()
        dist = self.inner.next_distribution(history)
        self.seconds += time.perf_counter() - t0
        self.queries += 1
        return dist


@dataclass
class _Aggregate:
    steps: int = 0
    extracted: int = 0
    entropy_bits: float = 0.0
    split_info_bits: float = 0.0
    residual_bits: float = 0.0
    sessions: int = 0
    incomplete: int = 0
    seconds: float = 0.0

    def absorb(self, totals: SessionTotals, residual: float, complete: bool) -> None:
        self.steps += totals.steps
        self.extracted += totals.extracted_bits
        self.entropy_bits += totals.entropy_bits
        self.split_info_bits += totals.split_info_bits
        self.residual_bits += residual
        self.sessions += 1
        self.incomplete += 0 if complete else 1


def _auto_payload_bytes(channel: ChannelSource, settings: Settings) -> int:
    first = top_k_truncate(channel.next_distribution(()), settings.top_k)
    h = max(first.entropy_bits, 0.1)
    return max(4, min(1024, int(h * settings.max_tokens * 0.6 / 8) - 4))


def _run_sessions(
    channel: ChannelSource,
    settings: Settings,
    token_budget: int,
    seed: int,
    payload_bytes: int | None,
) -> tuple[_Aggregate, list[int]]:
    rng = random.Random(seed)
    agg = _Aggregate()
    size = payload_bytes if payload_bytes is not None else _auto_payload_bytes(channel, settings)
    first_tokens: list[int] = []
    while agg.steps < token_budget:
        key = keygen(seed=rng.getrandbits(63))
        payload = rng.randbytes(size)
        message = frame_message(payload, key)
        session = CodecSession(
            PrgStream(key, TAG_SAMPLING), settings, message=message, record_steps=False
        )
        t0 = time.perf_counter()
        while (
            session.extracted_bits < message.needed_bits
            and session.step < settings.max_tokens
        ):
            dist = channel.next_distribution(tuple(session.history))
            session.encode_step(dist)
        agg.seconds += time.perf_counter() - t0
        complete = session.extracted_bits >= message.needed_bits
        agg.absorb(session.totals, session.residual_bits(), complete)
        if not first_tokens:
            first_tokens = list(session.history)
    return agg, first_tokens


def _baseline_ms_per_token(channel: ChannelSource, settings: Settings, tokens: int, seed: int) -> float:
    """Autoregressive pure-sampling generation on the same machinery."""
    prg = PrgStream(keygen(seed=seed), TAG_FINISH)
    history: list[int] = []
    t0 = time.perf_counter()
    for _ in range(tokens):
        d = top_k_truncate(channel.next_distribution(tuple(history)), settings.top_k)
        q = quantize_cached(d, settings.q_bits)
        history.append(q.token_ids[sample_index(q, prg.next_u64())])
        if len(history) >= settings.max_tokens:
            history.clear()
    return (time.perf_counter() - t0) / max(tokens, 1) * 1000.0


def run_benchmark(
    channel: ChannelSource,
    settings: Settings = Settings(),
    token_budget: int = 20_000,
    seed: int = 0,
    payload_bytes: int | None = None,
) -> MetricsReport:
    """Encode random payloads under random keys until the budget is spent.

    A pure-sampling baseline runs on the same channel for the time
    comparison; all non-time fields are deterministic given the seed.
    """
    timed = _TimedChannel(channel)
    agg, sample_tokens = _run_sessions(timed, settings, token_budget, seed, payload_bytes)
    entropy_per_token = agg.entropy_bits / agg.steps
    capacity = agg.extracted / agg.steps
    utilization = 100.0 * agg.extracted / agg.entropy_bits
    split_waste = 100.0 * agg.split_info_bits / agg.entropy_bits
    extraction_waste = 100.0 * agg.residual_bits / agg.entropy_bits
    ms_per_token = agg.seconds / agg.steps * 1000.0
    ppl = perplexity(channel, sample_tokens[: min(len(sample_tokens), 512)])
    baseline_ms = _baseline_ms_per_token(channel, settings, min(token_budget, 20_000), seed + 1)
    return MetricsReport(
        channel=channel.model_id,
        settings={
            "q_bits": settings.q_bits,
            "top_k": settings.top_k,
            "reorder": settings.reorder,
            "max_tokens": settings.max_tokens,
        },
        seed=seed,
        sessions=agg.sessions,
        tokens=agg.steps,
        entropy_bits_per_token=entropy_per_token,
        capacity_bits_per_token=capacity,
        utilization_pct=utilization,
        split_waste_pct=split_waste,
        extraction_waste_pct=extraction_waste,
        perplexity=ppl,
        ms_per_token=ms_per_token,
        channel_query_ms_per_token=timed.seconds / max(timed.queries, 1) * 1000.0,
        baseline_ms_per_token=baseline_ms,
        channel_capacity_bits_per_s=agg.extracted / agg.seconds if agg.seconds else 0.0,
        incomplete_sessions=agg.incomplete,
    )


def monte_carlo_waste(
    channel: ChannelSource,
    trials: int = 10_000,
    settings: Settings = Settings(),
    seed: int = 0,
    payload_bytes: int | None = None,
) -> dict[str, float]:
    """Session-level split and extraction waste over at least ``trials`` steps."""
    agg, _ = _run_sessions(channel, settings, trials, seed, payload_bytes)
    return {
        "split_waste_pct": 100.0 * agg.split_info_bits / agg.entropy_bits,
        "extraction_waste_pct": 100.0 * agg.residual_bits / agg.entropy_bits,
        "steps": float(agg.steps),
    }


class _RandomBits(BitSource):
    """Forward-only uniform bits; pointer source for single-step trials."""

    __slots__ = ("rng",)

    def __init__(self, rng: random.Random) -> None:
        self.rng = rng

    def bit_at(self, index: int) -> int:
        raise NotImplementedError

    def read_bits_int(self, start: int, count: int) -> int:
        return self.rng.getrandbits(count) if count else 0


@dataclass
class SingleStepStats:
    trials: int
    split_rate: float
    mean_info_bits: float
    se_info_bits: float
    mean_extracted_bits: float


def single_step_stats(
    dist: TokenDistribution,
    trials: int,
    settings: Settings = Settings(),
    seed: int = 0,
) -> SingleStepStats:
    """Per-step statistics in the fresh-pointer regime the closed forms
    describe: each trial starts from the unit interval with an independent
    uniform pointer and draw."""
    rng = random.Random(seed)
    bits_src = _RandomBits(rng)
    splits = 0
    info_sum = 0.0
    info_sq = 0.0
    extracted = 0
    for _ in range(trials):
        session = CodecSession(
            InjectedUniforms([rng.getrandbits(64)]),
            settings,
            message=bits_src,
            record_steps=False,
        )
        out = session.encode_step(dist)
        if out.kind is StepKind.SPLIT:
            splits += 1
            info = 0.0
        else:
            info = session.totals.info_bits
        info_sum += info
        info_sq += info * info
        extracted += len(out.bits)
    mean = info_sum / trials
    var = max(info_sq / trials - mean * mean, 0.0)
    return SingleStepStats(
        trials=trials,
        split_rate=splits / trials,
        mean_info_bits=mean,
        se_info_bits=math.sqrt(var / trials),
        mean_extracted_bits=extracted / trials,
    )


__all__ = [
    "entropy",
    "perplexity",
    "split_bound_high",
    "split_bound_general",
    "expected_embedding_no_reorder",
    "extracted_bits_bound_as_printed",
    "MetricsReport",
    "run_benchmark",
    "monte_carlo_waste",
    "single_step_stats",
    "SingleStepStats",
]
