import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from pdpu.exact import ExactValue, NAR, ZERO

MAX_N = 32
MAX_ES = 7
QUIRE_BITS_PER_N = 16


@dataclass(frozen=True)
class PositFormat:
    """
    the (n, es) pair defining a posit encoding P(n, es)
    """

    n: int
    es: int

    def __post_init__(self):
        for name in ("n", "es"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise ValueError("{} must be an integer, got {!r}".format(name, value))
        if not 2 <= self.n <= MAX_N:
            raise ValueError("n must be in [2, {}], got {}".format(MAX_N, self.n))
        if not 0 <= self.es <= min(MAX_ES, self.n - 2):
            raise ValueError(
                "es must be in [0, {}] for n={}, got {}".format(
                    min(MAX_ES, self.n - 2), self.n, self.es
                )
            )

    @property
    def useed(self):
        return 1 << (1 << self.es)

    @property
    def max_scale(self):
        # scale of maxpos, useed^(n-2)
        return (self.n - 2) << self.es

    @property
    def min_scale(self):
        return -self.max_scale

    @property
    def mask(self):
        return (1 << self.n) - 1

    @property
    def nar_bits(self):
        return 1 << (self.n - 1)

    @property
    def maxpos_bits(self):
        return (1 << (self.n - 1)) - 1

    @property
    def minpos_bits(self):
        return 1

    @property
    def frac_width(self):
        """
        fraction bits after the hidden bit in the fixed-width decoded form.
        shorter mantissas are zero padded to this width.
        """
        return max(1, self.n - self.es - 3)

    @property
    def hex_digits(self):
        return (self.n + 3) // 4

    @property
    def label(self):
        return "P({},{})".format(self.n, self.es)

    def __str__(self):
        return self.label

    def zero(self):
        return PositBits(self, 0)

    def nar(self):
        return PositBits(self, self.nar_bits)

    def one(self):
        return PositBits(self, 1 << (self.n - 2))

    def maxpos(self):
        return PositBits(self, self.maxpos_bits)

    def minpos(self):
        return PositBits(self, self.minpos_bits)


@dataclass(frozen=True)
class PositBits:
    """
    an n-bit pattern of a given format, only the low n bits are significant
    """

    fmt: PositFormat
    bits: int

    def __post_init__(self):
        if not isinstance(self.bits, int) or not 0 <= self.bits <= self.fmt.mask:
            raise ValueError(
                "bits {!r} do not fit in {} bits".format(self.bits, self.fmt.n)
            )

    @classmethod
    def from_hex(cls, fmt, text):
        """
        parses a hex pattern, with or without a 0x prefix
        :param fmt: the posit format
        :param text: hex digits, MSB first
        :return: the bit pattern
        """
        cleaned = text.strip().lower()
        if cleaned.startswith("0x"):
            cleaned = cleaned[2:]
        if not cleaned or any(c not in "0123456789abcdef" for c in cleaned):
            raise ValueError("malformed hex bit pattern: {!r}".format(text))
        return cls(fmt, int(cleaned, 16))

    @property
    def is_zero(self):
        return self.bits == 0

    @property
    def is_nar(self):
        return self.bits == self.fmt.nar_bits

    def signed(self):
        """
        the pattern read as an n-bit two's-complement integer, which orders
        posit values monotonically (NaR is the most negative integer)
        """
        if self.bits >> (self.fmt.n - 1):
            return self.bits - (1 << self.fmt.n)
        return self.bits

    def hex(self):
        return "{:0{}x}".format(self.bits, self.fmt.hex_digits)

    def __str__(self):
        return "0x" + self.hex()


@dataclass(frozen=True)
class PositFields:
    """
    raw field view of a normal posit pattern (after complementing negatives)
    """

    sign: int
    regime_run: int
    k: int
    exponent: int
    exponent_width: int
    mantissa: int
    mantissa_width: int


@dataclass(frozen=True)
class DecodedPosit:
    """
    unpacked sign / scale / fraction form. frac holds 1.m as an integer with
    frac_width bits after the hidden bit.
    """

    sign: int
    scale: int
    frac: int
    frac_width: int
    is_zero: bool = False
    is_nar: bool = False

    def to_unrounded(self):
        if self.is_nar:
            return UnroundedValue.nar()
        if self.is_zero:
            return UnroundedValue.zero()
        return UnroundedValue(
            sign=self.sign,
            scale=self.scale,
            mantissa=self.frac,
            width=self.frac_width + 1,
        )

    def to_fraction(self):
        if self.is_nar:
            raise ValueError("NaR has no rational value")
        if self.is_zero:
            return Fraction(0)
        exponent = self.scale - self.frac_width
        if exponent >= 0:
            return Fraction(self.sign * (self.frac << exponent))
        return Fraction(self.sign * self.frac, 1 << -exponent)


@dataclass(frozen=True)
class UnroundedValue:
    """
    a normalized value of arbitrary precision waiting to be rounded:
    (-1)^s * mantissa * 2^(scale - width + 1), with the hidden bit at
    position width-1. sticky records nonzero bits discarded below the mantissa.
    """

    sign: int = 1
    scale: int = 0
    mantissa: int = 0
    width: int = 1
    sticky: bool = False
    is_zero: bool = False
    is_nar: bool = False

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1, got {}".format(self.sign))
        if self.is_zero or self.is_nar:
            return
        if self.width < 1 or self.mantissa >> (self.width - 1) != 1:
            raise ValueError(
                "mantissa {:#x} is not normalized to width {}".format(
                    self.mantissa, self.width
                )
            )

    @classmethod
    def zero(cls):
        return cls(is_zero=True)

    @classmethod
    def nar(cls):
        return cls(is_nar=True)


def fields(p):
    """
    extracts sign, regime, exponent and mantissa fields of a pattern.
    negative patterns are two's complemented first; exponent bits crowded out
    by the regime are reported with a reduced exponent_width.
    :param p: a normal (not zero, not NaR) PositBits
    :return: PositFields
    """
    if p.is_zero or p.is_nar:
        raise ValueError("{} has no field decomposition".format(p))
    n, es = p.fmt.n, p.fmt.es
    bits = p.bits
    sign = bits >> (n - 1)
    if sign:
        bits = (-bits) & p.fmt.mask
    pos = n - 2
    r = (bits >> pos) & 1
    run = 0
    while pos >= 0 and ((bits >> pos) & 1) == r:
        run += 1
        pos -= 1
    k = run - 1 if r else -run
    pos -= 1  # skip the regime terminator
    remaining = max(pos + 1, 0)
    exponent_width = min(es, remaining)
    mantissa_width = remaining - exponent_width
    exponent = (bits >> mantissa_width) & ((1 << exponent_width) - 1)
    mantissa = bits & ((1 << mantissa_width) - 1)
    return PositFields(
        sign=sign,
        regime_run=run,
        k=k,
        exponent=exponent,
        exponent_width=exponent_width,
        mantissa=mantissa,
        mantissa_width=mantissa_width,
    )


@lru_cache(maxsize=1 << 18)
def decode(p):
    """
    decodes a posit pattern into sign, scale and fixed-width fraction.
    every pattern decodes: 0...0 is zero and 10...0 is NaR.
    :param p: PositBits
    :return: DecodedPosit
    """
    fw = p.fmt.frac_width
    if p.is_zero:
        return DecodedPosit(sign=1, scale=0, frac=0, frac_width=fw, is_zero=True)
    if p.is_nar:
        return DecodedPosit(sign=1, scale=0, frac=0, frac_width=fw, is_nar=True)
    f = fields(p)
    es = p.fmt.es
    # missing low exponent bits read as zero
    e = f.exponent << (es - f.exponent_width)
    scale = (f.k << es) + e
    frac = (1 << fw) | (f.mantissa << (fw - f.mantissa_width))
    return DecodedPosit(
        sign=-1 if f.sign else 1, scale=scale, frac=frac, frac_width=fw
    )


def _round_magnitude(v, fmt):
    # lays out regime | exponent | fraction at unbounded length and rounds the
    # string to n-1 bits with guard and sticky, ties to an even pattern
    es = fmt.es
    k = v.scale >> es
    e = v.scale & ((1 << es) - 1)
    if k >= 0:
        regime = ((1 << (k + 1)) - 1) << 1
        regime_len = k + 2
    else:
        regime = 1
        regime_len = 1 - k
    fw = v.width - 1
    frac = v.mantissa & ((1 << fw) - 1)
    body = (((regime << es) | e) << fw) | frac
    length = regime_len + es + fw
    target = fmt.n - 1
    if length <= target:
        return body << (target - length)
    shift = length - target
    magnitude = body >> shift
    guard = (body >> (shift - 1)) & 1
    sticky = v.sticky or (body & ((1 << (shift - 1)) - 1)) != 0
    if guard and (sticky or magnitude & 1):
        magnitude += 1
    return magnitude


def encode(v, fmt):
    """
    rounds an unrounded value to the nearest pattern of fmt, ties to even.
    magnitudes beyond maxpos saturate to maxpos and nonzero magnitudes below
    minpos saturate to minpos; nothing rounds to zero or NaR.
    :param v: UnroundedValue
    :param fmt: target PositFormat
    :return: PositBits
    """
    if v.is_nar:
        return fmt.nar()
    if v.is_zero:
        return fmt.zero()
    if v.scale > fmt.max_scale:
        magnitude = fmt.maxpos_bits
    elif v.scale < fmt.min_scale:
        magnitude = fmt.minpos_bits
    else:
        magnitude = _round_magnitude(v, fmt)
    if v.sign < 0:
        return PositBits(fmt, (-magnitude) & fmt.mask)
    return PositBits(fmt, magnitude)


def negate(p):
    return PositBits(p.fmt, (-p.bits) & p.fmt.mask)


def quire_width(fmt):
    """
    alignment width of the quire accumulator, 16 bits per posit bit
    """
    return QUIRE_BITS_PER_N * fmt.n


def exact_alignment_width(fmt):
    """
    smallest alignment window that holds every product of two fmt values
    without loss: products reach 2^(2*max_scale+1) and no nonzero bit lies
    below minpos^2. quire_width meets it for es <= 2.
    """
    return 4 * fmt.max_scale + 2


def from_fraction(value, width):
    """
    normalizes a rational into an UnroundedValue of the given mantissa width
    :param value: anything Fraction accepts
    :param width: mantissa width including the hidden bit
    :return: UnroundedValue with sticky set if value was not exact at that width
    """
    value = Fraction(value)
    if value == 0:
        return UnroundedValue.zero()
    sign = -1 if value < 0 else 1
    num, den = abs(value.numerator), value.denominator
    scale = num.bit_length() - den.bit_length()
    if (num << max(0, -scale)) < (den << max(0, scale)):
        scale -= 1
    shift = width - 1 - scale
    if shift >= 0:
        mantissa, rest = divmod(num << shift, den)
    else:
        mantissa, rest = divmod(num, den << -shift)
    return UnroundedValue(
        sign=sign, scale=scale, mantissa=mantissa, width=width, sticky=rest != 0
    )


def round_fraction(value, fmt):
    """
    correctly rounds any rational to fmt
    """
    return encode(from_fraction(value, fmt.n + 4), fmt)


def round_exact(value, fmt):
    if value.nar:
        return fmt.nar()
    return round_fraction(value.to_fraction(), fmt)


def to_exact(p):
    d = decode(p)
    if d.is_nar:
        return NAR
    if d.is_zero:
        return ZERO
    return ExactValue.from_scaled(d.sign * d.frac, d.scale - d.frac_width)


def to_fraction(p):
    return decode(p).to_fraction()


def to_float(p):
    """
    nearest binary64 value of a pattern; NaR maps to nan and values outside
    the binary64 range to a signed infinity
    """
    d = decode(p)
    if d.is_nar:
        return math.nan
    try:
        return float(d.to_fraction())
    except OverflowError:
        return math.copysign(math.inf, d.sign)


def from_float(x, fmt):
    """
    rounds a binary64 value to fmt; nan and infinities become NaR
    """
    if math.isnan(x) or math.isinf(x):
        return fmt.nar()
    return round_fraction(Fraction(x), fmt)
