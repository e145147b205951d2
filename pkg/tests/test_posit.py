import bisect
import math
from fractions import Fraction
import pytest
from hypothesis import given, settings, strategies as st
from pdpu.exact import ExactValue, NAR, ZERO
from pdpu.posit import (
    PositBits,
    PositFormat,
    decode,
    exact_alignment_width,
    fields,
    from_float,
    negate,
    quire_width,
    round_exact,
    round_fraction,
    to_exact,
    to_float,
    to_fraction,
)

EXHAUSTIVE_FORMATS = [
    (n, es) for n in range(4, 13) for es in range(0, 4) if es <= n - 2
]
P8 = PositFormat(8, 2)


def all_patterns(fmt):
    return [PositBits(fmt, b) for b in range(1 << fmt.n)]


def brute_force_round(x, fmt):
    """
    nearest pattern measured on the encoding: the tie point between two
    neighbouring patterns is the (n+1)-bit pattern between them
    """
    if x == 0:
        return fmt.zero()
    sign = -1 if x < 0 else 1
    x = abs(x)
    positives = list(range(1, fmt.maxpos_bits + 1))
    values = [to_fraction(PositBits(fmt, b)) for b in positives]
    if x >= values[-1]:
        bits = fmt.maxpos_bits
    elif x <= values[0]:
        bits = fmt.minpos_bits
    else:
        i = bisect.bisect_right(values, x) - 1
        lo = positives[i]
        if values[i] == x:
            bits = lo
        else:
            wide = PositFormat(fmt.n + 1, fmt.es)
            tie = to_fraction(PositBits(wide, 2 * lo + 1))
            if x < tie:
                bits = lo
            elif x > tie:
                bits = lo + 1
            else:
                bits = lo if lo % 2 == 0 else lo + 1
    if sign < 0:
        return negate(PositBits(fmt, bits))
    return PositBits(fmt, bits)


@pytest.mark.parametrize("n, es", [(1, 0), (33, 2), (8, 7), (4, 3), (8, -1)])
def test_invalid_format(n, es):
    with pytest.raises(ValueError):
        PositFormat(n, es)


def test_format_metadata():
    assert P8.useed == 16
    assert P8.max_scale == 24
    assert P8.frac_width == 3
    assert P8.label == "P(8,2)"
    assert PositFormat(16, 2).frac_width == 11
    assert quire_width(PositFormat(16, 2)) == 256
    assert exact_alignment_width(PositFormat(16, 2)) <= quire_width(PositFormat(16, 2))
    assert to_fraction(P8.maxpos()) == 2**24
    assert to_fraction(P8.minpos()) == Fraction(1, 2**24)


@pytest.mark.parametrize(
    "bits, value",
    [
        (0x40, Fraction(1)),
        (0x48, Fraction(2)),
        (0x0D, Fraction(3, 2048)),
        (0xF3, Fraction(-3, 2048)),
        (0x7D, Fraction(2**18)),
        (0xC0, Fraction(-1)),
    ],
)
def test_decode_examples(bits, value):
    assert to_fraction(PositBits(P8, bits)) == value


def test_decode_specials():
    assert decode(P8.zero()).is_zero
    assert decode(P8.nar()).is_nar
    assert math.isnan(to_float(P8.nar()))
    with pytest.raises(ValueError):
        fields(P8.nar())


def test_fields():
    f = fields(PositBits(P8, 0x0D))
    assert (f.sign, f.regime_run, f.k) == (0, 3, -3)
    assert (f.exponent, f.exponent_width) == (2, 2)
    assert (f.mantissa, f.mantissa_width) == (1, 1)
    # exponent crowded out by the regime
    f = fields(PositBits(P8, 0x7D))
    assert (f.regime_run, f.k, f.exponent_width, f.mantissa_width) == (5, 4, 1, 0)


def test_hex():
    p = PositBits.from_hex(PositFormat(13, 2), "0x3a")
    assert p.bits == 0x3A
    assert p.hex() == "003a"
    assert str(p) == "0x003a"
    for bad in ["", "0x", "4g", "1 2"]:
        with pytest.raises(ValueError):
            PositBits.from_hex(P8, bad)
    with pytest.raises(ValueError):
        PositBits.from_hex(P8, "100")


@pytest.mark.parametrize("n, es", EXHAUSTIVE_FORMATS)
def test_codec_exhaustive(n, es):
    """
    round trip, negation and monotonicity over every pattern of the format
    """
    fmt = PositFormat(n, es)
    patterns = all_patterns(fmt)
    for p in patterns:
        if p.is_nar:
            assert negate(p) == p
            assert round_exact(to_exact(p), fmt) == p
            continue
        assert round_fraction(to_fraction(p), fmt) == p
        assert to_fraction(negate(p)) == -to_fraction(p)
    ordered = sorted((p for p in patterns if not p.is_nar), key=lambda p: p.signed())
    values = [to_fraction(p) for p in ordered]
    assert all(x < y for x, y in zip(values, values[1:]))


def test_saturation():
    assert from_float(1e30, P8) == P8.maxpos()
    assert from_float(-1e30, P8) == negate(P8.maxpos())
    assert from_float(1e-30, P8) == P8.minpos()
    assert from_float(-1e-30, P8) == negate(P8.minpos())
    assert from_float(0.0, P8) == P8.zero()
    assert from_float(math.nan, P8) == P8.nar()
    assert from_float(math.inf, P8) == P8.nar()


def test_ties_to_even():
    fmt = PositFormat(8, 0)
    assert round_fraction(Fraction(1) + Fraction(1, 64), fmt).bits == 0x40
    assert round_fraction(Fraction(1) + Fraction(3, 64), fmt).bits == 0x42
    assert round_fraction(-(Fraction(1) + Fraction(1, 64)), fmt) == negate(PositBits(fmt, 0x40))


def test_rounding_on_encoding_near_minpos():
    # between minpos 2^-24 and 2^-20 the tie point is 2^-22, not the arithmetic midpoint
    x = Fraction(3, 2) * Fraction(1, 2**22)
    assert round_fraction(x, P8).bits == 0x02
    assert round_fraction(Fraction(1, 2**22), P8).bits == 0x02
    assert round_fraction(Fraction(3, 4) * Fraction(1, 2**22), P8).bits == 0x01
    assert round_fraction(x, P8) == brute_force_round(x, P8)


@settings(max_examples=300, deadline=None)
@given(
    st.sampled_from([(6, 0), (6, 1), (8, 2), (9, 3), (10, 1)]),
    st.integers(min_value=-(2**20), max_value=2**20),
    st.integers(min_value=-45, max_value=45),
)
def test_rounding_dyadic(fmt_pair, mantissa, exponent):
    fmt = PositFormat(*fmt_pair)
    x = Fraction(mantissa) * Fraction(2) ** exponent
    assert round_fraction(x, fmt) == brute_force_round(x, fmt)


@settings(max_examples=200, deadline=None)
@given(
    st.fractions(min_value=-1000, max_value=1000, max_denominator=10**6),
)
def test_rounding_rational(x):
    fmt = PositFormat(8, 1)
    assert round_fraction(x, fmt) == brute_force_round(x, fmt)


@settings(max_examples=200, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False, width=64))
def test_from_float_is_nearest(x):
    fmt = PositFormat(10, 2)
    assert from_float(x, fmt) == brute_force_round(Fraction(x), fmt)


def test_to_float_overflow():
    big = PositFormat(32, 7)
    assert to_float(big.maxpos()) == math.inf
    assert to_float(negate(big.maxpos())) == -math.inf


def test_exact_value():
    assert ExactValue(4, 8) == ExactValue(1, 2)
    assert ExactValue(0, 64) == ZERO
    assert ExactValue(3, 4) + ExactValue(1, 4) == ExactValue(1)
    assert ExactValue(3, 2) * ExactValue(-1, 2) == ExactValue(-3, 4)
    assert (NAR + ZERO).nar
    assert (ExactValue(5) * NAR).nar
    assert str(ExactValue(-3, 4)) == "-3/4"
    assert str(NAR) == "NaR"
    with pytest.raises(ValueError):
        ExactValue(1, 3)
    with pytest.raises(ValueError):
        NAR.to_fraction()
    assert ExactValue.from_scaled(3, -2).to_fraction() == Fraction(3, 4)
    assert ExactValue.from_fraction(Fraction(-5, 16)) == ExactValue(-5, 16)


def test_to_exact_matches_fraction():
    fmt = PositFormat(7, 1)
    for p in all_patterns(fmt):
        if p.is_nar:
            assert to_exact(p).nar
        else:
            assert to_exact(p).to_fraction() == to_fraction(p)
