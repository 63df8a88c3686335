"""Decimal rendering of exact rationals and golden-value comparison.

Computation is exact everywhere; this module is the only place decimals are
produced.  Reference table cells are matched by value to within one unit in
their last printed digit (the source tables mix rounding and truncation),
while ratio columns are compared as exactly rendered strings.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


def _exponent10(x: Fraction) -> int:
    """Smallest e with |x| < 10**e (so 10**(e-1) <= |x| < 10**e)."""
    ax = abs(x)
    e = 0
    while ax >= 1:
        ax /= 10
        e += 1
    while ax < Fraction(1, 10):
        ax *= 10
        e -= 1
    return e


def round_sig(x: Fraction, sig: int) -> tuple[int, int]:
    """Round to sig significant digits: returns (mantissa, e) with
    x ~ mantissa * 10**(e - sig) and 10**(sig-1) <= |mantissa| < 10**sig."""
    if x == 0:
        return 0, 0
    e = _exponent10(x)
    scaled = abs(x) * Fraction(10) ** (sig - e)
    n, rem = divmod(scaled.numerator, scaled.denominator)
    half = Fraction(rem * 2, scaled.denominator)
    if half > 1 or (half == 1 and n % 2 == 1):
        n += 1
    if n == 10 ** sig:
        n //= 10
        e += 1
    if x < 0:
        n = -n
    return n, e


def sci_string(x: Fraction, sig: int = 10) -> str:
    """Mantissa-exponent form '0.dddddddddd' or '0.dddddddddde-2'.

    Exact integers render bare ('1'), matching how the reference tables
    print them.
    """
    if x.denominator == 1:
        return str(x.numerator)
    mantissa, e = round_sig(x, sig)
    sign = "-" if mantissa < 0 else ""
    digits = str(abs(mantissa)).rjust(sig, "0")
    body = f"{sign}0.{digits}"
    return body if e == 0 else f"{body}e{e}"


def plain_sig(x: Fraction, sig: int = 10) -> str:
    """Positional decimal with sig significant digits ('124.6844211')."""
    if x.denominator == 1:
        return str(x.numerator)
    mantissa, e = round_sig(x, sig)
    sign = "-" if mantissa < 0 else ""
    digits = str(abs(mantissa)).rjust(sig, "0")
    if e >= sig:
        return f"{sign}{digits}{'0' * (e - sig)}"
    if e > 0:
        return f"{sign}{digits[:e]}.{digits[e:]}"
    return f"{sign}0.{'0' * (-e)}{digits}"


@dataclass(frozen=True)
class GoldenCell:
    text: str
    value: Fraction
    ulp: Fraction
    exact: bool


def parse_golden(cell: str) -> GoldenCell:
    """Parse a reference cell: '1', '-0.5000000000', '0.5332440874e-2'."""
    text = cell.strip()
    mantissa, _, exp = text.partition("e")
    exponent = int(exp) if exp else 0
    value = Fraction(mantissa) * Fraction(10) ** exponent
    if "." not in mantissa:
        return GoldenCell(text, value, Fraction(0), True)
    decimals = len(mantissa.split(".")[1])
    ulp = Fraction(10) ** (exponent - decimals)
    return GoldenCell(text, value, ulp, False)


def matches_golden(x: Fraction, cell: str) -> bool:
    """True iff x agrees with the cell at every printed significant digit.

    Exact cells must match exactly; decimal cells must lie within one unit
    in the last printed place, which accepts a correctly rounded or a
    correctly truncated rendering and nothing looser.
    """
    g = parse_golden(cell)
    if g.exact:
        return x == g.value
    return abs(x - g.value) <= g.ulp
