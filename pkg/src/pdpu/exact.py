from dataclasses import dataclass
from fractions import Fraction


def _is_power_of_two(x):
    return x > 0 and (x & (x - 1)) == 0


@dataclass(frozen=True)
class ExactValue:
    """
    exact dyadic rational numerator / denominator, or the non-numeric NaR marker.
    the denominator is always a power of two and the fraction is kept reduced,
    so two equal values always compare equal field by field.
    """

    numerator: int = 0
    denominator: int = 1
    nar: bool = False

    def __post_init__(self):
        if self.nar:
            object.__setattr__(self, "numerator", 0)
            object.__setattr__(self, "denominator", 1)
            return
        if not _is_power_of_two(self.denominator):
            raise ValueError(
                "ExactValue denominator must be a positive power of two, got {}".format(
                    self.denominator
                )
            )
        num, den = self.numerator, self.denominator
        if num == 0:
            den = 1
        else:
            # strip common factors of two
            shift = min((num & -num).bit_length() - 1, den.bit_length() - 1)
            num >>= shift
            den >>= shift
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "denominator", den)

    @classmethod
    def from_fraction(cls, value):
        value = Fraction(value)
        return cls(value.numerator, value.denominator)

    @classmethod
    def from_scaled(cls, mantissa, exponent):
        """
        builds mantissa * 2^exponent
        """
        if exponent >= 0:
            return cls(mantissa << exponent, 1)
        return cls(mantissa, 1 << -exponent)

    def to_fraction(self):
        if self.nar:
            raise ValueError("NaR has no rational value")
        return Fraction(self.numerator, self.denominator)

    @property
    def is_zero(self):
        return not self.nar and self.numerator == 0

    def __add__(self, other):
        if self.nar or other.nar:
            return NAR
        den = max(self.denominator, other.denominator)
        num = self.numerator * (den // self.denominator) + other.numerator * (
            den // other.denominator
        )
        return ExactValue(num, den)

    def __neg__(self):
        if self.nar:
            return NAR
        return ExactValue(-self.numerator, self.denominator)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        if self.nar or other.nar:
            return NAR
        return ExactValue(
            self.numerator * other.numerator, self.denominator * other.denominator
        )

    def __str__(self):
        if self.nar:
            return "NaR"
        if self.denominator == 1:
            return str(self.numerator)
        return "{}/{}".format(self.numerator, self.denominator)


ZERO = ExactValue(0, 1)
NAR = ExactValue(nar=True)
