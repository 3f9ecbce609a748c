"""Exception types raised across the codec."""

from __future__ import annotations


class ShimerError(Exception):
    """Base class for all library errors."""


class PayloadTooLarge(ShimerError):
    """Payload exceeds the 2**32 - 1 byte framing limit."""


class DecodeError(ShimerError):
    """Base class for errors surfaced while recovering a payload."""


class Incomplete(DecodeError):
    """Not enough embedded bits to recover the framed payload."""


class PaddingMismatch(DecodeError):
    """Trailing bits disagree with the keyed padding stream.

    Signals a key mismatch or a corrupted token sequence.
    """


class UnknownToken(DecodeError):
    """Received token is outside the truncated distribution's support."""


class ContractViolation(ShimerError):
    """An operation was called with arguments violating its preconditions."""


class PointerEscape(ShimerError):
    """Encoder invariant broken: the message pointer left the interval."""


class TooManyTokens(ShimerError):
    """Distribution has more entries than the quantization grid can hold."""


class BadChannelSpec(ShimerError):
    """Malformed or unsupported synthetic channel descriptor."""


class EntropyUnavailable(ShimerError):
    """The operating system's entropy source failed."""


class CounterExhausted(ShimerError):
    """A pseudorandom stream ran past its 64-bit counter space."""


class KeyFormatError(ShimerError):
    """Key material is not exactly 32 bytes / 64 hex characters."""


class ContainerError(ShimerError):
    """Malformed stego container bytes."""


class SettingsMismatch(ShimerError):
    """Container header disagrees with the requested decode configuration."""


class TransportError(ShimerError):
    """Could not reach the distribution server."""


class ServerError(ShimerError):
    """The distribution server answered with an error status."""


class NonDeterministicServer(ShimerError):
    """Duplicate probe requests returned different bytes."""
