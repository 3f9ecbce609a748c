"""Secret-message representation: bits, framing, and the stream pointer.

A message is consumed by the codec as an infinite bit stream: a 32-bit
big-endian byte-length header, the payload, then keyed pseudorandom
padding. Header and payload are whitened by XOR with a keyed mask stream
(tag 0x04): the codec's progress rate degrades badly when the pointer sits
in a run of structurally known bits (the header's leading zeros would pin
it to the interval's lower bound), and whitening keeps the stream
statistically uniform without touching the logical layout.
"""

from __future__ import annotations

from .errors import Incomplete, PaddingMismatch, PayloadTooLarge
from .intervals import Dyadic
from .prg import TAG_FRAME_MASK, TAG_PADDING, StegoKey, prf_u64

_MAX_PAYLOAD = (1 << 32) - 1


class BitString:
    """Immutable ordered sequence of bits."""

    __slots__ = ("bits",)

    def __init__(self, bits) -> None:
        bits = tuple(int(b) for b in bits)
        if any(b not in (0, 1) for b in bits):
            raise ValueError("bits must be 0 or 1")
        self.bits = bits

    @staticmethod
    def from_bytes(data: bytes) -> "BitString":
        out = []
        for byte in data:
            for shift in range(7, -1, -1):
                out.append((byte >> shift) & 1)
        return BitString(out)

    def to_bytes(self) -> bytes:
        if len(self.bits) % 8:
            raise ValueError("bit length is not a multiple of 8")
        out = bytearray()
        for i in range(0, len(self.bits), 8):
            byte = 0
            for b in self.bits[i : i + 8]:
                byte = (byte << 1) | b
            out.append(byte)
        return bytes(out)

    def __len__(self) -> int:
        return len(self.bits)

    def __iter__(self):
        return iter(self.bits)

    def __getitem__(self, idx):
        return self.bits[idx]

    def __eq__(self, other: object) -> bool:
        if isinstance(other, BitString):
            return self.bits == other.bits
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.bits)

    def __repr__(self) -> str:
        return "BitString(%s)" % "".join(str(b) for b in self.bits)


def bits_to_fraction(bits, precision: int) -> Dyadic:
    """Map a bit sequence to sum(b_i * 2**-i), truncated to ``precision`` bits.

    Truncation always floors; the result's denominator exponent is at most
    ``precision``.
    """
    if precision < 0:
        raise ValueError("precision must be non-negative")
    seq = list(bits)[:precision]
    num = 0
    for b in seq:
        num = (num << 1) | b
    return Dyadic(num << (precision - len(seq)), precision)


class BitSource:
    """Random-access view of a conceptually infinite bit stream."""

    def bit_at(self, index: int) -> int:
        raise NotImplementedError

    def read_bits_int(self, start: int, count: int) -> int:
        """Bits [start, start+count) packed big-endian into an int."""
        value = 0
        for i in range(start, start + count):
            value = (value << 1) | self.bit_at(i)
        return value


class RepeatingBits(BitSource):
    """Periodic bit stream; used by worked examples and tests."""

    def __init__(self, period) -> None:
        self.period = tuple(int(b) for b in period)
        if not self.period:
            raise ValueError("period must be non-empty")

    def bit_at(self, index: int) -> int:
        return self.period[index % len(self.period)]


def materialize_pointer(source: BitSource, consumed: int, precision: int) -> Dyadic:
    """Pointer value of the stream starting at ``consumed``, floor-truncated.

    With half-open token cells whose boundaries are exact at the working
    precision, the truncated pointer selects the same token as the full
    stream would, so flooring never rounds across a decision boundary.
    """
    if precision < 0:
        raise ValueError("precision must be non-negative")
    return Dyadic(source.read_bits_int(consumed, precision), precision)


class FramedMessage(BitSource):
    """Header + payload (whitened) followed by the keyed padding stream."""

    def __init__(self, payload: bytes, key: StegoKey) -> None:
        if len(payload) > _MAX_PAYLOAD:
            raise PayloadTooLarge(f"payload of {len(payload)} bytes exceeds 2^32-1")
        self.payload = bytes(payload)
        self.key = key
        self.header = len(self.payload)
        self.needed_bits = 32 + 8 * len(self.payload)
        logical = int.from_bytes(
            self.header.to_bytes(4, "big") + self.payload, "big"
        )
        self._stream = logical ^ _mask_int(key, self.needed_bits)
        self._stream_len = self.needed_bits

    def logical_bit(self, index: int) -> int:
        """Unwhitened header/payload bit (padding region unchanged)."""
        if index < self.needed_bits:
            masked = self.bit_at(index)
            return masked ^ _mask_bit(self.key, index)
        return self.bit_at(index)

    def bit_at(self, index: int) -> int:
        self._extend(index + 1)
        return (self._stream >> (self._stream_len - 1 - index)) & 1

    def read_bits_int(self, start: int, count: int) -> int:
        if count == 0:
            return 0
        self._extend(start + count)
        shift = self._stream_len - start - count
        return (self._stream >> shift) & ((1 << count) - 1)

    def _extend(self, length: int) -> None:
        # grow by whole 64-bit padding blocks
        while self._stream_len < length:
            block_index = (self._stream_len - self.needed_bits) >> 6
            block = prf_u64(self.key, TAG_PADDING, block_index)
            self._stream = (self._stream << 64) | block
            self._stream_len += 64


def _mask_bit(key: StegoKey, index: int) -> int:
    block = prf_u64(key, TAG_FRAME_MASK, index >> 6)
    return (block >> (63 - (index & 63))) & 1


def _mask_int(key: StegoKey, length: int) -> int:
    """First ``length`` bits of the whitening stream, packed big-endian."""
    blocks = (length + 63) >> 6
    value = 0
    for i in range(blocks):
        value = (value << 64) | prf_u64(key, TAG_FRAME_MASK, i)
    return value >> (blocks * 64 - length) if length else 0


def frame_message(payload: bytes, key: StegoKey) -> FramedMessage:
    """Frame a payload for embedding; deterministic given (payload, key)."""
    return FramedMessage(payload, key)


def frame_header_length(bits, key: StegoKey) -> int:
    """Total frame length in bits implied by the first 32 extracted bits."""
    seq = list(bits)[:32]
    if len(seq) < 32:
        raise Incomplete(f"{len(seq)} bits cannot hold the 32-bit header")
    header = 0
    for i, b in enumerate(seq):
        header = (header << 1) | (b ^ _mask_bit(key, i))
    return 32 + 8 * header


def deframe(extracted, key: StegoKey) -> bytes:
    """Recover the payload from extracted bits and verify trailing padding.

    Raises Incomplete when fewer than 32 + 8*length bits are available and
    PaddingMismatch when trailing bits disagree with the keyed padding
    stream (key mismatch or corruption).
    """
    bits = list(extracted)
    if len(bits) < 32:
        raise Incomplete(f"{len(bits)} bits cannot hold the 32-bit header")
    header = 0
    for i in range(32):
        header = (header << 1) | (bits[i] ^ _mask_bit(key, i))
    needed = 32 + 8 * header
    if len(bits) < needed:
        raise Incomplete(
            f"header says {header} payload bytes but only {len(bits)} bits present"
        )
    out = bytearray()
    acc = 0
    for i in range(32, needed):
        acc = (acc << 1) | (bits[i] ^ _mask_bit(key, i))
        if (i - 31) % 8 == 0:
            out.append(acc)
            acc = 0
    for j, bit in enumerate(bits[needed:]):
        block = prf_u64(key, TAG_PADDING, j >> 6)
        expect = (block >> (63 - (j & 63))) & 1
        if bit != expect:
            raise PaddingMismatch(
                f"trailing bit {j} disagrees with keyed padding"
            )
    return bytes(out)


__all__ = [
    "BitString",
    "BitSource",
    "RepeatingBits",
    "FramedMessage",
    "bits_to_fraction",
    "materialize_pointer",
    "frame_message",
    "frame_header_length",
    "deframe",
]
