from decimal import ROUND_HALF_EVEN, Decimal
from fractions import Fraction
from typing import Sequence

_QUANTUM = Decimal("0.0001")


def format_fixed(value: Fraction | int | float, digits: int = 4) -> str:
    """
    Print a number with a fixed count of fractional digits, rounding half to even.

    Fractions are rounded exactly (no detour through float), so a value that
    sits precisely on a half step is resolved the same way on every platform.
    """
    quantum = _QUANTUM if digits == 4 else Decimal(1).scaleb(-digits)
    if isinstance(value, float):
        return str(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_EVEN))
    value = Fraction(value)
    scaled = value * 10**digits
    floor = scaled.numerator // scaled.denominator
    rest = scaled - floor
    if rest > Fraction(1, 2) or (rest == Fraction(1, 2) and floor % 2 == 1):
        floor += 1
    return str(Decimal(floor).scaleb(-digits).quantize(quantum))


def mean_fraction(values: Sequence[Fraction | int]) -> Fraction:
    assert len(values) > 0, "mean of an empty sequence"
    return sum((Fraction(v) for v in values), Fraction(0)) / len(values)
