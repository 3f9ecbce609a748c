"""Exact dyadic rationals and the three interval primitives of the codec.

Everything here is integer arithmetic; no floats touch the codec state.
Encoder and decoder replay the same operations independently, so every
result must be bit-identical regardless of platform or evaluation order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

from .errors import ContractViolation


class Dyadic:
    """Non-negative rational ``num / 2**exp`` restricted to [0, 1].

    Stored in canonical form: ``num`` is odd (or zero with ``exp == 0``), so
    equal values always have equal representations.
    """

    __slots__ = ("num", "exp")

    def __init__(self, num: int, exp: int) -> None:
        if num < 0 or exp < 0 or num > (1 << exp):
            raise ValueError(f"not a dyadic in [0, 1]: {num}/2^{exp}")
        if num:
            tz = (num & -num).bit_length() - 1
            if tz:
                num >>= tz
                exp -= tz
        else:
            exp = 0
        self.num = num
        self.exp = exp

    @staticmethod
    def zero() -> "Dyadic":
        return Dyadic(0, 0)

    @staticmethod
    def one() -> "Dyadic":
        return Dyadic(1, 0)

    @staticmethod
    def from_fraction(value: Fraction, exp: int) -> "Dyadic":
        """Floor-truncate an arbitrary rational in [0, 1] to ``exp`` bits."""
        if value < 0 or value > 1:
            raise ValueError("value outside [0, 1]")
        return Dyadic((value.numerator << exp) // value.denominator, exp)

    def scaled_floor(self, exp: int) -> int:
        """Return ``floor(value * 2**exp)``."""
        if exp >= self.exp:
            return self.num << (exp - self.exp)
        return self.num >> (self.exp - exp)

    def to_fraction(self) -> Fraction:
        return Fraction(self.num, 1 << self.exp)

    def binary_string(self, max_bits: int = 64) -> str:
        """Render as a binary fraction, e.g. ``0.0101``."""
        if self.num == 0:
            return "0.0"
        if self == Dyadic.one():
            return "1.0"
        digits = format(self.num, f"0{self.exp}b")[:max_bits]
        return "0." + digits

    # -- arithmetic (exact; results must stay within [0, 1]) --

    def __add__(self, other: "Dyadic") -> "Dyadic":
        e = self.exp if self.exp > other.exp else other.exp
        return Dyadic(
            (self.num << (e - self.exp)) + (other.num << (e - other.exp)), e
        )

    def __sub__(self, other: "Dyadic") -> "Dyadic":
        e = self.exp if self.exp > other.exp else other.exp
        return Dyadic(
            (self.num << (e - self.exp)) - (other.num << (e - other.exp)), e
        )

    def __mul__(self, other: "Dyadic") -> "Dyadic":
        return Dyadic(self.num * other.num, self.exp + other.exp)

    def _cmp(self, other: "Dyadic") -> int:
        e = self.exp if self.exp > other.exp else other.exp
        a = self.num << (e - self.exp)
        b = other.num << (e - other.exp)
        return (a > b) - (a < b)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dyadic):
            return NotImplemented
        return self.num == other.num and self.exp == other.exp

    def __lt__(self, other: "Dyadic") -> bool:
        return self._cmp(other) < 0

    def __le__(self, other: "Dyadic") -> bool:
        return self._cmp(other) <= 0

    def __gt__(self, other: "Dyadic") -> bool:
        return self._cmp(other) > 0

    def __ge__(self, other: "Dyadic") -> bool:
        return self._cmp(other) >= 0

    def __hash__(self) -> int:
        return hash((self.num, self.exp))

    def __float__(self) -> float:
        return self.num / (1 << self.exp)

    def __repr__(self) -> str:
        return f"{self.num}/2^{self.exp}"


_HALF = Dyadic(1, 1)
_ONE = Dyadic(1, 0)


class Interval:
    """Half-open ``[lo, hi)`` with dyadic endpoints inside [0, 1]."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: Dyadic, hi: Dyadic) -> None:
        if not lo < hi:
            raise ValueError(f"empty or inverted interval [{lo}, {hi})")
        self.lo = lo
        self.hi = hi

    @staticmethod
    def unit() -> "Interval":
        return Interval(Dyadic.zero(), Dyadic.one())

    @property
    def length(self) -> Dyadic:
        return self.hi - self.lo

    def contains(self, x: Dyadic) -> bool:
        return self.lo <= x and x < self.hi

    def width_bits(self) -> int:
        """Denominator exponent needed to express both endpoints."""
        return self.lo.exp if self.lo.exp > self.hi.exp else self.hi.exp

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Interval):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self) -> int:
        return hash((self.lo, self.hi))

    def __repr__(self) -> str:
        return f"[{self.lo}, {self.hi})"


class StepKind(enum.Enum):
    INSIDE = "inside"
    WRAPPED = "wrapped"
    SPLIT = "split"


@dataclass(frozen=True)
class StepCase:
    """Result of shifting a sub-interval against its enclosing interval."""

    kind: StepKind
    interval: Interval | None

    @staticmethod
    def inside(interval: Interval) -> "StepCase":
        return StepCase(StepKind.INSIDE, interval)

    @staticmethod
    def wrapped(interval: Interval) -> "StepCase":
        return StepCase(StepKind.WRAPPED, interval)

    @staticmethod
    def split() -> "StepCase":
        return StepCase(StepKind.SPLIT, None)


def compose(outer: Interval, inner: Interval) -> Interval:
    """Nest ``inner`` inside ``outer``; lengths multiply exactly."""
    span = outer.hi - outer.lo
    return Interval(outer.lo + inner.lo * span, outer.lo + inner.hi * span)


def shift_and_classify(composed: Interval, offset: Dyadic, outer: Interval) -> StepCase:
    """Shift ``composed`` down by ``offset`` modulo the span of ``outer``.

    Three things can happen: the shifted interval stays inside ``outer``,
    it lands entirely below ``outer.lo`` and wraps up by one span, or it
    straddles ``outer.lo`` and is declared split. Equality at the hi end
    resolves to wrapped: the shifted half-open interval lies wholly below.
    """
    if composed.lo < outer.lo or composed.hi > outer.hi:
        raise ContractViolation("composed interval not contained in outer")
    span = outer.hi - outer.lo
    if offset >= span:
        raise ContractViolation("offset must be smaller than the outer span")
    threshold = outer.lo + offset
    if composed.lo >= threshold:
        return StepCase.inside(Interval(composed.lo - offset, composed.hi - offset))
    if composed.hi <= threshold:
        lift = span - offset
        return StepCase.wrapped(Interval(composed.lo + lift, composed.hi + lift))
    return StepCase.split()


def _double(x: Dyadic) -> Dyadic:
    # valid only for x <= 1/2
    if x.num == 0:
        return x
    return Dyadic(x.num, x.exp - 1)


def _double_minus_one(x: Dyadic) -> Dyadic:
    # valid only for 1/2 <= x <= 1
    if x.num == 1 and x.exp == 0:
        return x
    return Dyadic(x.num - (1 << (x.exp - 1)), x.exp - 1)


def extract_prefix(iv: Interval) -> tuple[tuple[int, ...], Interval]:
    """Strip the maximal shared bit prefix and rescale the remainder.

    Returns the extracted bits and the renormalized interval; every point
    of ``iv`` shares the returned prefix, and no longer prefix has that
    property. Containment against half-open cells decides each bit, so a
    hi endpoint sitting exactly on a dyadic boundary still yields the bit.
    """
    lo, hi = iv.lo, iv.hi
    bits: list[int] = []
    while True:
        if hi <= _HALF:
            bits.append(0)
            lo = _double(lo)
            hi = _double(hi)
        elif lo >= _HALF:
            bits.append(1)
            lo = _double_minus_one(lo)
            hi = _double_minus_one(hi)
        else:
            break
    if not bits:
        return (), iv
    return tuple(bits), Interval(lo, hi)


__all__ = [
    "Dyadic",
    "Interval",
    "StepCase",
    "StepKind",
    "compose",
    "shift_and_classify",
    "extract_prefix",
]
