from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from shimer.bitstream import (
    BitString,
    FramedMessage,
    RepeatingBits,
    bits_to_fraction,
    deframe,
    frame_header_length,
    frame_message,
    materialize_pointer,
)
from shimer.errors import Incomplete, PaddingMismatch, PayloadTooLarge
from shimer.prg import keygen, padding_bit


KEY_A = keygen(seed=101)
KEY_B = keygen(seed=202)


# ---- BitString ----


def test_bitstring_byte_roundtrip():
    data = bytes(range(0, 256, 7))
    assert BitString.from_bytes(data).to_bytes() == data


def test_bitstring_rejects_non_bits():
    with pytest.raises(ValueError):
        BitString([0, 2, 1])


def test_bitstring_to_bytes_requires_octets():
    with pytest.raises(ValueError):
        BitString([1, 0, 1]).to_bytes()


# ---- bits_to_fraction ----


def test_bits_to_fraction_single_bit():
    assert bits_to_fraction([1], 1) == bits_to_fraction([1], 1)
    assert float(bits_to_fraction([1], 1)) == 0.5


def test_bits_to_fraction_empty_is_zero():
    assert float(bits_to_fraction([], 16)) == 0.0
    assert float(bits_to_fraction([0, 1], 0)) == 0.0


def test_bits_to_fraction_truncates_one_third():
    # 0101 repeating at precision 32 is the 32-bit floor of 1/3
    bits = [0, 1] * 16
    got = bits_to_fraction(bits, 32)
    expected = ((1 << 32) // 3)  # floor(2^32 / 3)
    assert got.scaled_floor(32) == expected
    assert abs(float(got) - 1 / 3) < 2**-31


@given(st.lists(st.integers(0, 1), max_size=40), st.integers(0, 48))
def test_bits_to_fraction_value_matches_sum(bits, precision):
    got = bits_to_fraction(bits, precision)
    expected = sum(Fraction(b, 1 << (i + 1)) for i, b in enumerate(bits[:precision]))
    assert got.to_fraction() == expected
    # exact at the stated precision: value * 2^precision is integral
    assert got.exp <= precision
    assert Fraction(got.scaled_floor(precision), 1 << precision) == expected
    assert Fraction(0) <= expected <= 1 - Fraction(1, 1 << precision) if precision else expected == 0


def test_prefix_cell_property_exhaustive():
    # every dyadic at precision n+2 inside a prefix cell shares the n-bit prefix
    for n in range(1, 13):
        for prefix in range(1 << n):
            lo = Fraction(prefix, 1 << n)
            for extra in range(4):
                x = lo + Fraction(extra, 1 << (n + 2))
                assert (x * (1 << n)).__floor__() == prefix


# ---- pointer materialization ----


def test_pointer_periodic_stream():
    src = RepeatingBits([0, 1])
    assert materialize_pointer(src, 0, 8).scaled_floor(8) == 85  # 0.01010101b
    # periodic stream: shifting by a period changes nothing
    assert materialize_pointer(src, 2, 8) == materialize_pointer(src, 0, 8)
    assert float(materialize_pointer(src, 5, 0)) == 0.0


# ---- framing ----


def test_frame_logical_layout():
    msg = frame_message(b"\xff", KEY_A)
    header_bits = [msg.logical_bit(i) for i in range(32)]
    assert header_bits == [0] * 31 + [1]
    payload_bits = [msg.logical_bit(i) for i in range(32, 40)]
    assert payload_bits == [1] * 8
    # beyond the frame: the keyed padding stream, independent of payload
    assert msg.bit_at(40) == padding_bit(KEY_A, 0)
    assert msg.bit_at(40 + 77) == padding_bit(KEY_A, 77)


def test_frame_empty_payload():
    msg = frame_message(b"", KEY_A)
    assert msg.needed_bits == 32
    assert [msg.logical_bit(i) for i in range(32)] == [0] * 32
    assert msg.bit_at(32) == padding_bit(KEY_A, 0)


def test_frame_same_payload_different_keys():
    a = frame_message(b"hello", KEY_A)
    b = frame_message(b"hello", KEY_B)
    # logical header+payload identical under both keys
    logical_a = [a.logical_bit(i) for i in range(a.needed_bits)]
    logical_b = [b.logical_bit(i) for i in range(b.needed_bits)]
    assert logical_a == logical_b
    # padding streams differ
    pad_a = [a.bit_at(a.needed_bits + i) for i in range(128)]
    pad_b = [b.bit_at(b.needed_bits + i) for i in range(128)]
    assert pad_a != pad_b


def test_frame_deterministic():
    one = frame_message(b"abc", KEY_A).read_bits_int(0, 200)
    two = frame_message(b"abc", KEY_A).read_bits_int(0, 200)
    assert one == two


def test_frame_read_matches_bit_at():
    msg = frame_message(b"xyz", KEY_A)
    rng = random.Random(5)
    for _ in range(50):
        start = rng.randrange(0, 300)
        count = rng.randrange(0, 90)
        got = msg.read_bits_int(start, count)
        expect = 0
        for i in range(start, start + count):
            expect = (expect << 1) | msg.bit_at(i)
        assert got == expect


def test_frame_rejects_oversized():
    class FakeBytes(bytes):
        def __len__(self):
            return 1 << 32

    with pytest.raises(PayloadTooLarge):
        frame_message(FakeBytes(), KEY_A)


# ---- deframe ----


def _extracted_bits(msg: FramedMessage, count: int) -> list[int]:
    return [msg.bit_at(i) for i in range(count)]


def test_deframe_inverse_of_frame():
    payload = b"\xabsecret bytes"
    msg = frame_message(payload, KEY_A)
    bits = _extracted_bits(msg, msg.needed_bits + 37)
    assert deframe(bits, KEY_A) == payload


@given(st.binary(max_size=1024), st.integers(0, 2**32 - 1))
def test_deframe_frame_identity_random_keys(payload, key_seed):
    key = keygen(seed=key_seed)
    msg = frame_message(payload, key)
    bits = _extracted_bits(msg, msg.needed_bits + 11)
    assert deframe(bits, key) == payload


def test_deframe_too_few_bits():
    with pytest.raises(Incomplete):
        deframe([0] * 20, KEY_A)
    msg = frame_message(b"abcd", KEY_A)
    with pytest.raises(Incomplete):
        deframe(_extracted_bits(msg, 40), KEY_A)


def test_deframe_flipped_padding_bit():
    msg = frame_message(b"\xab", KEY_A)
    bits = _extracted_bits(msg, msg.needed_bits + 9)
    bits[-1] ^= 1
    with pytest.raises(PaddingMismatch):
        deframe(bits, KEY_A)


def test_frame_header_length_helper():
    msg = frame_message(b"abcdef", KEY_A)
    bits = _extracted_bits(msg, 48)
    assert frame_header_length(bits, KEY_A) == 32 + 48
    with pytest.raises(Incomplete):
        frame_header_length(bits[:10], KEY_A)


def test_padding_pure_function_of_key_and_index():
    values = [padding_bit(KEY_A, i) for i in range(256)]
    again = [padding_bit(KEY_A, i) for i in range(256)]
    assert values == again
    assert any(values)
    assert not all(values)
