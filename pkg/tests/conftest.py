from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from shimer.bitstream import BitSource
from shimer.intervals import Dyadic, Interval

settings.register_profile(
    "ci",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


def u64_of(value) -> int:
    """Exact floor truncation of a rational in [0, 1) to 64 fraction bits."""
    fr = Fraction(value)
    assert 0 <= fr < 1
    return (fr.numerator << 64) // fr.denominator


def dy(value, exp: int = 64) -> Dyadic:
    """Dyadic floor-truncation of a decimal/fraction literal."""
    return Dyadic.from_fraction(Fraction(value), exp)


def iv(lo, hi, exp: int = 64) -> Interval:
    return Interval(dy(lo, exp), dy(hi, exp))


class RandomBits(BitSource):
    """Seeded uniform bit stream for single-step trials."""

    def __init__(self, rng: random.Random) -> None:
        self.rng = rng

    def bit_at(self, index: int) -> int:
        raise NotImplementedError("random stream is forward-only")

    def read_bits_int(self, start: int, count: int) -> int:
        return self.rng.getrandbits(count) if count else 0


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xC0DEC)
