"""Exact-rational and floating scalar handling.

All quantities in the library are either `fractions.Fraction` (exact mode,
the default) or `float` (float mode, used when the rotation parameter of the
neutrally stable model is irrational).  Decimal strings parse exactly in
exact mode, so "0.42" becomes 21/50 and every downstream inequality is
decided without rounding.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Union

Scalar = Union[Fraction, float]

#: default absolute tolerance for float-mode comparisons
FLOAT_TOL = 1e-9


class ScalarFormatError(ValueError):
    """A scalar string could not be parsed."""


def parse_scalar(text: str, mode: str = "exact") -> Scalar:
    """Parse a decimal or "p/q" string into a Scalar for the given mode."""
    text = text.strip()
    if mode not in ("exact", "float"):
        raise ValueError(f"unknown mode {mode!r}")
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ScalarFormatError(f"cannot parse scalar {text!r}") from exc
    return value if mode == "exact" else float(value)


def format_scalar(value: Scalar) -> str:
    """Render a scalar exactly.

    Fractions with a terminating decimal expansion are printed as the
    shortest exact decimal; non-terminating ones as "p/q".  Floats use repr.
    """
    if isinstance(value, int):
        return str(value)
    if isinstance(value, Fraction):
        n, d = value.numerator, value.denominator
        if d == 1:
            return str(n)
        twos = fives = 0
        rest = d
        while rest % 2 == 0:
            rest //= 2
            twos += 1
        while rest % 5 == 0:
            rest //= 5
            fives += 1
        if rest != 1:
            return f"{n}/{d}"
        digits = max(twos, fives)
        scaled = n * 10**digits // d
        sign = "-" if scaled < 0 else ""
        body = str(abs(scaled)).rjust(digits + 1, "0")
        return f"{sign}{body[:-digits]}.{body[-digits:]}"
    return repr(float(value))


def is_exact(value: Scalar) -> bool:
    return isinstance(value, (Fraction, int))


def scalars_equal(x: Scalar, y: Scalar, tol: float = FLOAT_TOL) -> bool:
    """Equality test: bit-exact for rationals, absolute tolerance for floats."""
    if is_exact(x) and is_exact(y):
        return x == y
    return abs(x - y) <= tol
