"""
bit-accurate model of the posit dot-product unit, out = acc + sum(a_i * b_i).

the fused datapath is split into six pure stage functions (decode, multiply,
align, accumulate, normalize, encode); pdpu_dot runs them in sequence.
discrete architectures (multipliers + adder tree, cascaded FMAs) are modeled
with correctly rounded single operators built on the same datapath.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pdpu.posit import (
    PositFormat,
    UnroundedValue,
    decode,
    encode,
    exact_alignment_width,
    quire_width,
)

MIN_WM = 4


class LengthMismatchError(ValueError):
    pass


class FormatMismatchError(ValueError):
    pass


class Mode(Enum):
    FUSED = "fused"
    QUIRE = "quire"
    DISCRETE_MUL_ADD = "mul_add"
    DISCRETE_FMA = "fma"


@dataclass(frozen=True)
class PdpuConfig:
    """
    full engine configuration. quire mode forces wm to the quire width of
    the output format.
    :param in_fmt: format of V_a and V_b
    :param out_fmt: format of acc and out, at least as wide as in_fmt with the same es
    :param n_terms: dot-product size N
    :param wm: alignment width W_m in bits
    :param mode: a Mode or its string value
    :param booth: use the radix-4 Booth multiplier in S2 instead of a plain multiply
    """

    in_fmt: PositFormat
    out_fmt: PositFormat
    n_terms: int
    wm: int = 14
    mode: Mode = Mode.FUSED
    booth: bool = False

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.in_fmt.es != self.out_fmt.es:
            raise FormatMismatchError(
                "input and output formats must share es, got {} and {}".format(
                    self.in_fmt, self.out_fmt
                )
            )
        if self.in_fmt.n > self.out_fmt.n:
            raise FormatMismatchError(
                "input format {} is wider than output format {}".format(
                    self.in_fmt, self.out_fmt
                )
            )
        if not isinstance(self.n_terms, int) or self.n_terms < 1:
            raise ValueError("n_terms must be a positive integer, got {}".format(self.n_terms))
        if self.mode is Mode.QUIRE:
            object.__setattr__(self, "wm", quire_width(self.out_fmt))
        if not isinstance(self.wm, int) or self.wm < MIN_WM:
            raise ValueError("wm must be an integer >= {}, got {}".format(MIN_WM, self.wm))

    @property
    def acc_width(self):
        # wm + ceil(log2(N+1)) + 2
        return accumulator_width(self.wm, self.n_terms)

    @property
    def label(self):
        return "P({}/{},{})".format(self.in_fmt.n, self.out_fmt.n, self.out_fmt.es)

    @property
    def is_fused(self):
        return self.mode in (Mode.FUSED, Mode.QUIRE)


@dataclass(frozen=True)
class ProductTerm:
    """
    a signed addend before alignment: (-1)^sign * mantissa * 2^(exponent - frac_width).
    products carry 2*fw_in fraction bits and lie in [1, 4); the accumulator
    enters as a term with fw_out fraction bits.
    """

    sign: int
    exponent: int
    mantissa: int
    frac_width: int
    is_zero: bool = False
    is_nar: bool = False


@dataclass(frozen=True)
class AlignedTerm:
    value: int
    width: int

    @property
    def bits(self):
        return self.value & ((1 << self.width) - 1)


@dataclass(frozen=True)
class CsaPair:
    sum: int
    carry: int
    width: int

    def total(self):
        return (self.sum + self.carry) & ((1 << self.width) - 1)

    def signed_total(self):
        total = self.total()
        if total >> (self.width - 1):
            return total - (1 << self.width)
        return total


@dataclass(frozen=True)
class DecodeStage:
    a: tuple
    b: tuple
    acc: object
    s_ab: tuple
    e_ab: tuple
    zero_ab: tuple
    nar_ab: tuple

    @property
    def any_nar(self):
        return self.acc.is_nar or any(self.nar_ab)


@dataclass(frozen=True)
class MultiplyStage:
    products: tuple
    acc_term: ProductTerm
    e_max: int


@dataclass(frozen=True)
class Accumulated:
    sign: int
    magnitude: int
    width: int
    csa: CsaPair


@dataclass(frozen=True)
class DotTrace:
    cfg: PdpuConfig
    decoded: DecodeStage
    multiplied: MultiplyStage
    aligned: tuple
    accumulated: Accumulated
    normalized: UnroundedValue
    out: object


@dataclass(frozen=True)
class CodecUnits:
    decoders: int
    encoders: int


def accumulator_width(wm, n_terms):
    return wm + n_terms.bit_length() + 2


def leading_zeros(x, width):
    return width - x.bit_length()


def booth_radix4_digits(y, width):
    """
    radix-4 Booth recoding of an unsigned width-bit multiplier
    :return: digits in {-2, -1, 0, 1, 2}, least significant first
    """
    digits = []
    prev = 0
    for i in range(0, width + 1, 2):
        low = (y >> i) & 1
        high = (y >> (i + 1)) & 1
        digits.append(-2 * high + low + prev)
        prev = high
    return digits


def booth_radix4_multiply(x, y, width):
    """
    multiplies two unsigned width-bit integers by summing Booth partial
    products in a carry-save tree
    """
    if not 0 <= x < (1 << width) or not 0 <= y < (1 << width):
        raise ValueError("operands must be unsigned {}-bit integers".format(width))
    digits = booth_radix4_digits(y, width)
    partials = [(d * x) << (2 * j) for j, d in enumerate(digits)]
    return csa_compress(partials, 2 * width + 2).total()


def compress_3_2(a, b, c, mask):
    s = a ^ b ^ c
    carry = (((a & b) | (a & c) | (b & c)) << 1) & mask
    return s, carry


def compress_4_2(a, b, c, d, mask):
    # two chained full adders; the first carry vector is the lateral cin/cout chain
    s1, cout = compress_3_2(a, b, c, mask)
    return compress_3_2(s1, d, cout, mask)


def _compress_level(vectors, mask):
    out = []
    i = 0
    while len(vectors) - i >= 4:
        out.extend(compress_4_2(*vectors[i : i + 4], mask))
        i += 4
    rest = vectors[i:]
    if len(rest) == 3:
        out.extend(compress_3_2(*rest, mask))
    else:
        out.extend(rest)
    return out


def csa_compress(addends, width):
    """
    reduces addends to a sum/carry pair modulo 2^width. each level feeds groups
    of four into 4:2 compressors and a leftover group of three into a 3:2
    compressor; pairs and singles pass through to the next level.
    :param addends: signed integers, taken as width-bit two's complement
    :param width: vector width in bits
    :return: CsaPair
    """
    if not addends:
        raise ValueError("csa_compress needs at least one addend")
    mask = (1 << width) - 1
    vectors = [a & mask for a in addends]
    if len(vectors) == 1:
        return CsaPair(vectors[0], 0, width)
    if len(vectors) == 2:
        return CsaPair(vectors[0], vectors[1], width)
    return csa_compress(_compress_level(vectors, mask), width)


def s1_decode(va, vb, acc, n_terms=None):
    """
    S1: decodes every operand and forms the product signs and exponents
    """
    if len(va) != len(vb) or (n_terms is not None and len(va) != n_terms):
        raise LengthMismatchError(
            "operand lengths {} and {} do not match N={}".format(
                len(va), len(vb), n_terms if n_terms is not None else len(va)
            )
        )
    a = tuple(decode(x) for x in va)
    b = tuple(decode(x) for x in vb)
    return DecodeStage(
        a=a,
        b=b,
        acc=decode(acc),
        s_ab=tuple(x.sign * y.sign for x, y in zip(a, b)),
        e_ab=tuple(x.scale + y.scale for x, y in zip(a, b)),
        zero_ab=tuple(x.is_zero or y.is_zero for x, y in zip(a, b)),
        nar_ab=tuple(x.is_nar or y.is_nar for x, y in zip(a, b)),
    )


def s2_multiply(decoded, booth=False):
    """
    S2: multiplies the hidden-bit mantissas and finds e_max over the nonzero
    products and the accumulator (0 when everything is zero)
    """
    products = []
    for x, y, s, e, zero, nar in zip(
        decoded.a, decoded.b, decoded.s_ab, decoded.e_ab, decoded.zero_ab, decoded.nar_ab
    ):
        if zero or nar:
            mantissa = 0
        elif booth:
            mantissa = booth_radix4_multiply(x.frac, y.frac, x.frac_width + 1)
        else:
            mantissa = x.frac * y.frac
        products.append(
            ProductTerm(
                sign=s,
                exponent=e,
                mantissa=mantissa,
                frac_width=x.frac_width + y.frac_width,
                is_zero=zero and not nar,
                is_nar=nar,
            )
        )
    c = decoded.acc
    acc_term = ProductTerm(
        sign=c.sign,
        exponent=c.scale,
        mantissa=0 if c.is_zero or c.is_nar else c.frac,
        frac_width=c.frac_width,
        is_zero=c.is_zero,
        is_nar=c.is_nar,
    )
    exponents = [
        t.exponent for t in products + [acc_term] if not (t.is_zero or t.is_nar)
    ]
    e_max = max(exponents) if exponents else 0
    return MultiplyStage(products=tuple(products), acc_term=acc_term, e_max=e_max)


def s3_align(products, acc_term, e_max, wm):
    """
    S3: places each term in a wm-bit window whose MSB has weight 2^(e_max+1),
    truncating bits shifted below the window, then applies the sign in
    two's complement of the accumulator width.
    :return: tuple of N+1 AlignedTerm, accumulator last
    """
    width = accumulator_width(wm, len(products))
    lsb = e_max + 2 - wm
    aligned = []
    for t in tuple(products) + (acc_term,):
        if t.is_zero or t.is_nar or e_max - t.exponent >= wm:
            aligned.append(AlignedTerm(0, width))
            continue
        shift = t.exponent - t.frac_width - lsb
        if shift >= 0:
            magnitude = t.mantissa << shift
        else:
            magnitude = t.mantissa >> -shift
        aligned.append(AlignedTerm(-magnitude if t.sign < 0 else magnitude, width))
    return tuple(aligned)


def s4_accumulate(aligned):
    """
    S4: carry-save compression of the aligned terms and the final addition
    """
    width = aligned[0].width
    pair = csa_compress([t.value for t in aligned], width)
    total = pair.signed_total()
    return Accumulated(
        sign=-1 if total < 0 else 1, magnitude=abs(total), width=width, csa=pair
    )


def s5_normalize(sign, magnitude, e_max, wm, width, out_fmt):
    """
    S5: leading-zero count normalization. the MSB found at lzc gets its true
    weight e_max + 1 + (width - wm) - lzc; the mantissa is narrowed to the
    encoder's width and the discarded bits fold into sticky.
    """
    if magnitude == 0:
        return UnroundedValue.zero()
    lzc = leading_zeros(magnitude, width)
    f_e = e_max + 1 + (width - wm) - lzc
    keep = out_fmt.frac_width + 3
    msb = width - lzc
    if msb > keep:
        drop = msb - keep
        f_m = magnitude >> drop
        sticky = (magnitude & ((1 << drop) - 1)) != 0
    else:
        f_m = magnitude << (keep - msb)
        sticky = False
    return UnroundedValue(sign=sign, scale=f_e, mantissa=f_m, width=keep, sticky=sticky)


def s6_encode(v, out_fmt):
    """
    S6: rounding and packing
    """
    return encode(v, out_fmt)


def check_operands(cfg, va, vb, acc):
    if len(va) != cfg.n_terms or len(vb) != cfg.n_terms:
        raise LengthMismatchError(
            "expected {} terms, got {} and {}".format(cfg.n_terms, len(va), len(vb))
        )
    for p in list(va) + list(vb):
        if p.fmt != cfg.in_fmt:
            raise FormatMismatchError(
                "operand {} is {}, expected {}".format(p, p.fmt, cfg.in_fmt)
            )
    if acc.fmt != cfg.out_fmt:
        raise FormatMismatchError(
            "accumulator {} is {}, expected {}".format(acc, acc.fmt, cfg.out_fmt)
        )


def pdpu_trace(cfg, va, vb, acc):
    """
    runs the fused datapath S1..S6 and keeps every intermediate
    :param cfg: PdpuConfig in fused or quire mode
    :param va: N PositBits in cfg.in_fmt
    :param vb: N PositBits in cfg.in_fmt
    :param acc: PositBits in cfg.out_fmt
    :return: DotTrace, whose out field is the result
    """
    if not cfg.is_fused:
        raise ValueError("stage trace is only defined for fused and quire modes")
    check_operands(cfg, va, vb, acc)
    decoded = s1_decode(va, vb, acc, cfg.n_terms)
    multiplied = s2_multiply(decoded, booth=cfg.booth)
    aligned = s3_align(
        multiplied.products, multiplied.acc_term, multiplied.e_max, cfg.wm
    )
    accumulated = s4_accumulate(aligned)
    if decoded.any_nar:
        normalized = UnroundedValue.nar()
    else:
        normalized = s5_normalize(
            accumulated.sign,
            accumulated.magnitude,
            multiplied.e_max,
            cfg.wm,
            accumulated.width,
            cfg.out_fmt,
        )
    out = s6_encode(normalized, cfg.out_fmt)
    return DotTrace(
        cfg=cfg,
        decoded=decoded,
        multiplied=multiplied,
        aligned=aligned,
        accumulated=accumulated,
        normalized=normalized,
        out=out,
    )


@lru_cache(maxsize=None)
def exact_unit(in_fmt, out_fmt):
    """
    single-term configuration whose window holds every operand exactly, so the
    datapath rounds once: a correctly rounded multiply-add operator
    """
    wm = exact_alignment_width(out_fmt)
    logging.debug(
        "building exact {}->{} unit with a {}-bit window".format(in_fmt, out_fmt, wm)
    )
    return PdpuConfig(in_fmt, out_fmt, 1, wm=wm, mode=Mode.FUSED)


def posit_fma(a, b, c):
    """
    round(a * b + c) to the format of c
    """
    return pdpu_trace(exact_unit(a.fmt, c.fmt), [a], [b], c).out


def posit_mul(a, b, out_fmt):
    return posit_fma(a, b, out_fmt.zero())


def posit_add(x, y):
    return posit_fma(x, x.fmt.one(), y)


def discrete_dot_mul_add(cfg, va, vb, acc):
    """
    multipliers followed by an adder tree, rounding to out_fmt after every
    operation. the tree pairs neighbours left to right level by level, an odd
    element moves up unchanged, and acc is added last.
    """
    check_operands(cfg, va, vb, acc)
    level = [posit_mul(a, b, cfg.out_fmt) for a, b in zip(va, vb)]
    while len(level) > 1:
        paired = [posit_add(level[i], level[i + 1]) for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            paired.append(level[-1])
        level = paired
    return posit_add(level[0], acc)


def discrete_dot_fma(cfg, va, vb, acc):
    """
    cascaded fused multiply-add units, r <- round(r + a_i * b_i) starting from acc
    """
    check_operands(cfg, va, vb, acc)
    result = acc
    for a, b in zip(va, vb):
        result = posit_fma(a, b, result)
    return result


def pdpu_dot(cfg, va, vb, acc):
    """
    out = acc + V_a x V_b under the configured mode
    """
    if cfg.mode is Mode.DISCRETE_MUL_ADD:
        return discrete_dot_mul_add(cfg, va, vb, acc)
    if cfg.mode is Mode.DISCRETE_FMA:
        return discrete_dot_fma(cfg, va, vb, acc)
    return pdpu_trace(cfg, va, vb, acc).out


def chunked_dot(cfg, va, vb, acc):
    """
    chunk-based accumulation of a long dot product with a size-N unit: each
    chunk's output is fed back as the next chunk's accumulator
    """
    if len(va) != len(vb) or len(va) % cfg.n_terms:
        raise LengthMismatchError(
            "vector lengths {} and {} are not a multiple of N={}".format(
                len(va), len(vb), cfg.n_terms
            )
        )
    result = acc
    for i in range(0, len(va), cfg.n_terms):
        result = pdpu_dot(cfg, va[i : i + cfg.n_terms], vb[i : i + cfg.n_terms], result)
    return result


def codec_units(cfg):
    """
    posit decoders and encoders needed for a size-N dot product by each architecture
    """
    n = cfg.n_terms
    if cfg.mode is Mode.DISCRETE_MUL_ADD:
        tree = 1 << ((n + 1).bit_length() - 1)
        return CodecUnits(decoders=2 * n + tree, encoders=n + tree)
    if cfg.mode is Mode.DISCRETE_FMA:
        return CodecUnits(decoders=3 * n, encoders=n)
    return CodecUnits(decoders=2 * n + 1, encoders=1)
