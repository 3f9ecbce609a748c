"""Encode/decode state machines: shifted-pointer token selection, interval
merging, prefix extraction, and session orchestration.

Both sides replay identical arithmetic. The session keeps the interval as a
raw integer triple (lo, hi, exp) for speed; the semantics are exactly those
of the interval module's compose / shift_and_classify / extract_prefix, and
a white-box test holds the two paths equal step by step. The encoder
additionally tracks the message pointer as a floor-truncated integer at the
step's working precision; every cell boundary is exactly representable
there, so truncation can never flip a selection.
"""

from __future__ import annotations

import math
import warnings
from bisect import bisect_right
from dataclasses import dataclass

from .bitstream import BitSource, deframe, frame_header_length, frame_message
from .channel import (
    ChannelSource,
    QuantizedDistribution,
    TokenDistribution,
    quantize_cached,
    top_k_truncate,
)
from .container import StegoContainer, hash_prompt
from .errors import Incomplete, PointerEscape, SettingsMismatch, UnknownToken
from .intervals import Dyadic, Interval, StepKind
from .prg import TAG_FINISH, TAG_SAMPLING, PrgStream, StegoKey
from .reorder import reordered_cells


class IntervalWidthWarning(UserWarning):
    """The interval's numerators outgrew the configured width threshold."""


@dataclass(frozen=True)
class Settings:
    """Codec configuration; encoder and decoder must agree on all of it."""

    q_bits: int = 24
    top_k: int = 100
    reorder: bool = True
    finish: str = "stop"  # "stop" | "natural"
    max_tokens: int = 512
    width_warn_bits: int = 4096

    def __post_init__(self) -> None:
        if self.finish not in ("stop", "natural"):
            raise ValueError("finish must be 'stop' or 'natural'")


@dataclass(frozen=True)
class StepOutcome:
    token_id: int
    kind: StepKind
    bits: tuple[int, ...]


@dataclass
class StepStat:
    entropy_bits: float
    kind: StepKind
    bits_extracted: int
    info_bits: float


@dataclass
class SessionTotals:
    steps: int = 0
    extracted_bits: int = 0
    entropy_bits: float = 0.0
    split_entropy_bits: float = 0.0
    split_info_bits: float = 0.0
    info_bits: float = 0.0
    splits: int = 0


def sample_index(q: QuantizedDistribution, u64: int) -> int:
    """Plain weighted sampling from the quantization grid."""
    v = u64 >> (64 - q.q_bits)
    return bisect_right(q.cumulative, v) - 1


class CodecSession:
    """One directional codec run; strictly sequential.

    A session is an encoder when constructed with a message source and a
    decoder otherwise. Sessions may move between threads but are never
    shared; the step counter always equals the uniform stream's counter.
    """

    def __init__(
        self,
        uniforms,
        settings: Settings,
        prompt: tuple[int, ...] = (),
        message: BitSource | None = None,
        record_steps: bool = True,
    ) -> None:
        self.uniforms = uniforms
        self.settings = settings
        self.history: list[int] = list(prompt)
        self.step = 0
        self.consumed_bits = 0
        self.extracted_bits = 0
        self.message = message
        self.record_steps = record_steps
        self.steps_log: list[StepStat] = []
        self.totals = SessionTotals()
        # interval [lo, hi) as integers over 2**exp; starts at [0, 1)
        self._lo = 0
        self._hi = 1
        self._exp = 0
        self._p_num = 0
        self._p_exp = 0
        self._width_warned = False

    @property
    def interval(self) -> Interval:
        return Interval(Dyadic(self._lo, self._exp), Dyadic(self._hi, self._exp))

    def residual_bits(self) -> float:
        """Information still locked in the unextracted interval."""
        return self._exp - math.log2(self._hi - self._lo)

    # -- shared plumbing --

    def _quantized(self, dist: TokenDistribution):
        d = top_k_truncate(dist, self.settings.top_k)
        return d, quantize_cached(d, self.settings.q_bits)

    def _record(self, d: TokenDistribution, kind: StepKind, nbits: int, weight: int, q_bits: int) -> None:
        entropy = d.entropy_bits
        t = self.totals
        t.steps += 1
        t.extracted_bits += nbits
        t.entropy_bits += entropy
        if kind is StepKind.SPLIT:
            info = q_bits - math.log2(weight)
            t.splits += 1
            t.split_entropy_bits += entropy
            t.split_info_bits += info
            log_info = 0.0
        else:
            log_info = q_bits - math.log2(weight)
            t.info_bits += log_info
        if self.record_steps:
            self.steps_log.append(StepStat(entropy, kind, nbits, log_info))

    def _step_core(self, cells: QuantizedDistribution, pos: int, u64: int) -> tuple[StepKind, tuple[int, ...]]:
        """Shift the selected cell, classify, merge, and extract.

        Integer mirror of compose + shift_and_classify + extract_prefix at
        working precision x >= exp + q_bits + 64.
        """
        qb = cells.q_bits
        lo, hi, w = self._lo, self._hi, self._exp
        span_w = hi - lo
        x = w + qb + 64
        if x < self._p_exp:
            x = self._p_exp
        shift = x - w
        lo_x = lo << shift
        cum = cells.cumulative
        c_lo = cum[pos]
        c_hi = cum[pos + 1]
        composed_lo = lo_x + ((c_lo * span_w) << (shift - qb))
        composed_hi = lo_x + ((c_hi * span_w) << (shift - qb))
        offset = (u64 * span_w) << (shift - 64)
        threshold = lo_x + offset
        if composed_lo >= threshold:
            new_lo = composed_lo - offset
            new_hi = composed_hi - offset
        elif composed_hi <= threshold:
            lift = (span_w << shift) - offset
            new_lo = composed_lo + lift
            new_hi = composed_hi + lift
        else:
            return StepKind.SPLIT, ()
        kind = StepKind.INSIDE if composed_lo >= threshold else StepKind.WRAPPED

        # prefix extraction: shared leading bits of the half-open interval
        bits: list[int] = []
        half = 1 << (x - 1)
        while True:
            if new_hi <= half:
                bits.append(0)
            elif new_lo >= half:
                bits.append(1)
                new_lo -= half
                new_hi -= half
            else:
                break
            x -= 1
            half >>= 1

        if bits:
            n = len(bits)
            p_int = 0
            for b in bits:
                p_int = (p_int << 1) | b
            if self.message is not None:
                self._p_num -= p_int << (self._p_exp - n)
                self._p_exp -= n
            self.consumed_bits += n
            self.extracted_bits += n

        # canonicalize: strip shared trailing zero bits
        merged = new_lo | new_hi
        tz = (merged & -merged).bit_length() - 1
        if tz:
            new_lo >>= tz
            new_hi >>= tz
            x -= tz
        self._lo = new_lo
        self._hi = new_hi
        self._exp = x
        if not self._width_warned and x > self.settings.width_warn_bits:
            self._width_warned = True
            warnings.warn(
                "interval numerator width exceeded the configured threshold",
                IntervalWidthWarning,
                stacklevel=4,
            )
        return kind, tuple(bits)

    # -- encoder --

    def _extend_pointer(self, exp: int) -> None:
        if exp > self._p_exp:
            need = exp - self._p_exp
            chunk = self.message.read_bits_int(self.consumed_bits + self._p_exp, need)
            self._p_num = (self._p_num << need) | chunk
            self._p_exp = exp

    def encode_step(self, dist: TokenDistribution) -> StepOutcome:
        """Select and emit one token, absorbing message bits when possible."""
        if self.message is None:
            raise ValueError("decoder session cannot encode")
        d, q = self._quantized(dist)
        u64 = self.uniforms.next_u64()
        if self.settings.reorder:
            order, cells = reordered_cells(q, u64)
        else:
            order, cells = None, q
        qb = cells.q_bits

        lo, hi, w = self._lo, self._hi, self._exp
        span_w = hi - lo
        x = w + qb + 64
        if x < self._p_exp:
            x = self._p_exp
        self._extend_pointer(x)
        shift = x - w
        lo_x = lo << shift
        hi_x = hi << shift
        if not lo_x <= self._p_num < hi_x:
            raise PointerEscape(f"pointer outside the interval at step {self.step}")
        offset = (u64 * span_w) << (shift - 64)
        t = self._p_num + offset
        if t >= hi_x:
            t -= hi_x - lo_x
        v = (t - lo_x) // (span_w << (shift - qb))
        pos = bisect_right(cells.cumulative, v) - 1
        token = q.token_ids[order[pos]] if order is not None else q.token_ids[pos]

        kind, bits = self._step_core(cells, pos, u64)
        if kind is not StepKind.SPLIT:
            back = self._p_exp - self._exp
            if back < 0 or not (
                (self._lo << back) <= self._p_num < (self._hi << back)
            ):
                raise PointerEscape(f"pointer left the interval at step {self.step}")

        self.history.append(token)
        self.step += 1
        self._record(d, kind, len(bits), cells.weights[pos], qb)
        return StepOutcome(token, kind, bits)

    # -- decoder --

    def decode_step(self, token_id: int, dist: TokenDistribution) -> tuple[int, ...]:
        """Mirror one encoder step from the received token."""
        if self.message is not None:
            raise ValueError("encoder session cannot decode")
        d, q = self._quantized(dist)
        u64 = self.uniforms.next_u64()
        base = q.position_of(token_id)
        if base is None:
            raise UnknownToken(
                f"token {token_id} outside the truncated distribution support"
            )
        if self.settings.reorder:
            order, cells = reordered_cells(q, u64)
            pos = order.index(base)
        else:
            cells = q
            pos = base

        kind, bits = self._step_core(cells, pos, u64)
        self.history.append(token_id)
        self.step += 1
        self._record(d, kind, len(bits), cells.weights[pos], cells.q_bits)
        return bits


def encode(
    key: StegoKey,
    channel: ChannelSource,
    prompt: tuple[int, ...],
    payload: bytes,
    settings: Settings = Settings(),
) -> StegoContainer:
    """Embed a framed payload into a token sequence sampled from the channel."""
    message = frame_message(payload, key)
    session = CodecSession(
        PrgStream(key, TAG_SAMPLING), settings, tuple(prompt), message=message
    )
    tokens: list[int] = []
    needed = message.needed_bits
    while session.extracted_bits < needed and session.step < settings.max_tokens:
        dist = channel.next_distribution(tuple(session.history))
        outcome = session.encode_step(dist)
        tokens.append(outcome.token_id)
    incomplete = session.extracted_bits < needed

    if settings.finish == "natural" and not incomplete:
        filler = PrgStream(key, TAG_FINISH)
        while len(tokens) < settings.max_tokens:
            dist = channel.next_distribution(tuple(session.history))
            _, q = session._quantized(dist)
            token = q.token_ids[sample_index(q, filler.next_u64())]
            tokens.append(token)
            session.history.append(token)
            if channel.end_token is not None and token == channel.end_token:
                break

    return StegoContainer(
        q_bits=settings.q_bits,
        top_k=settings.top_k,
        reorder=settings.reorder,
        finish=settings.finish,
        incomplete=incomplete,
        prompt_hash=hash_prompt(tuple(prompt)),
        model_id=channel.model_id,
        tokens=tuple(tokens),
    )


def decode(
    key: StegoKey,
    channel: ChannelSource,
    prompt: tuple[int, ...],
    container: StegoContainer,
) -> bytes:
    """Recover the payload from a container; settings come from its header."""
    if container.prompt_hash != hash_prompt(tuple(prompt)):
        raise SettingsMismatch("prompt does not match the container header")
    if container.model_id != channel.model_id:
        raise SettingsMismatch(
            f"channel {channel.model_id!r} does not match container {container.model_id!r}"
        )
    settings = Settings(
        q_bits=container.q_bits,
        top_k=container.top_k,
        reorder=container.reorder,
        finish=container.finish,
    )
    session = CodecSession(PrgStream(key, TAG_SAMPLING), settings, tuple(prompt))
    bits: list[int] = []
    needed: int | None = None
    for token in container.tokens:
        dist = channel.next_distribution(tuple(session.history))
        bits.extend(session.decode_step(token, dist))
        if needed is None and len(bits) >= 32:
            needed = frame_header_length(bits, key)
        if needed is not None and len(bits) >= needed:
            break
    if needed is None or len(bits) < needed:
        raise Incomplete(
            f"recovered {len(bits)} bits; frame needs {needed if needed else '>=32'}"
        )
    return deframe(bits, key)


__all__ = [
    "Settings",
    "StepOutcome",
    "StepStat",
    "SessionTotals",
    "CodecSession",
    "IntervalWidthWarning",
    "encode",
    "decode",
    "sample_index",
]
