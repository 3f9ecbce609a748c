"""Keyed deterministic randomness shared by encoder and decoder.

SHA-256 in counter mode with one-byte domain separation. The construction
is fixed: both sides must draw identical 64-bit fractions for the same
(key, tag, counter) triple, on any platform.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass

from .errors import CounterExhausted, EntropyUnavailable, KeyFormatError
from .intervals import Dyadic

TAG_SAMPLING = 0x01
TAG_PADDING = 0x02
TAG_FINISH = 0x03
TAG_FRAME_MASK = 0x04

_COUNTER_LIMIT = 1 << 64


@dataclass(frozen=True)
class StegoKey:
    """Exactly 32 bytes of shared secret key material."""

    data: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.data, bytes) or len(self.data) != 32:
            raise KeyFormatError("key must be exactly 32 bytes")

    @staticmethod
    def from_hex(text: str) -> "StegoKey":
        text = text.strip()
        if len(text) != 64:
            raise KeyFormatError("key must be 64 hex characters")
        try:
            return StegoKey(bytes.fromhex(text))
        except ValueError as exc:
            raise KeyFormatError(f"bad hex key: {exc}") from exc

    def to_hex(self) -> str:
        return self.data.hex()


def keygen(seed: int | None = None) -> StegoKey:
    """Generate a fresh key from OS entropy, or a reproducible test key.

    ``seed`` exists for test fixtures and benchmarks only; real use must
    leave it unset.
    """
    if seed is not None:
        return StegoKey(
            hashlib.sha256(b"shimer deterministic key " + seed.to_bytes(8, "big", signed=True)).digest()
        )
    try:
        return StegoKey(os.urandom(32))
    except OSError as exc:
        raise EntropyUnavailable(str(exc)) from exc


def prf_u64(key: StegoKey, tag: int, counter: int) -> int:
    """First 8 bytes, big-endian, of SHA-256(key || tag || counter)."""
    digest = hashlib.sha256(
        key.data + bytes([tag]) + counter.to_bytes(8, "big")
    ).digest()
    return int.from_bytes(digest[:8], "big")


def padding_bit(key: StegoKey, index: int) -> int:
    """Bit ``index`` of the padding stream (tag 0x02).

    Bits are consumed 64 per counter value, most significant first.
    """
    block = prf_u64(key, TAG_PADDING, index >> 6)
    return (block >> (63 - (index & 63))) & 1


class PrgStream:
    """A counter-indexed cursor over one domain-separated PRF stream.

    One stream belongs to one codec session; it is not shared between
    threads. The stateless ``prf_u64`` evaluation underneath is pure.
    """

    __slots__ = ("key", "tag", "counter")

    def __init__(self, key: StegoKey, tag: int, counter: int = 0) -> None:
        self.key = key
        self.tag = tag
        self.counter = counter

    def next_u64(self) -> int:
        if self.counter >= _COUNTER_LIMIT:
            raise CounterExhausted("64-bit draw counter exhausted")
        value = prf_u64(self.key, self.tag, self.counter)
        self.counter += 1
        return value

    def next_uniform(self) -> Dyadic:
        """Next uniform 64-bit fraction in [0, 1)."""
        return Dyadic(self.next_u64(), 64)


class InjectedUniforms:
    """Fixed sequence of draws for tests and worked examples."""

    __slots__ = ("values", "counter")

    def __init__(self, values: list[int]) -> None:
        self.values = list(values)
        self.counter = 0

    def next_u64(self) -> int:
        if self.counter >= len(self.values):
            raise CounterExhausted("injected uniforms exhausted")
        value = self.values[self.counter]
        self.counter += 1
        return value

    def next_uniform(self) -> Dyadic:
        return Dyadic(self.next_u64(), 64)


__all__ = [
    "StegoKey",
    "PrgStream",
    "InjectedUniforms",
    "keygen",
    "prf_u64",
    "padding_bit",
    "TAG_SAMPLING",
    "TAG_PADDING",
    "TAG_FINISH",
    "TAG_FRAME_MASK",
]
