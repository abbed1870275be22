"""Parsing and rendering of exact rationals.

Values are plain :class:`fractions.Fraction` objects throughout the package; this
module only handles the text forms ``"a/b"`` and ``"a"``.
"""

from __future__ import annotations

import re
from fractions import Fraction
from numbers import Rational

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")


def to_fraction(value) -> Fraction:
    """Coerce ints, Fractions and rational strings to Fraction; refuse floats."""
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, str):
        return parse_rational(value)
    raise TypeError(f"cannot use {type(value).__name__} as an exact rational")


def parse_rational(text: str) -> Fraction:
    match = _RATIONAL_RE.match(text)
    if match is None:
        raise ValueError(f"not a rational literal: {text!r}")
    num, den = match.groups()
    if den is not None and int(den) == 0:
        raise ZeroDivisionError(f"zero denominator in {text!r}")
    return Fraction(int(num), int(den) if den is not None else 1)


def format_rational(value: Fraction) -> str:
    """Canonical text: ``"a/b"`` with the sign on the numerator, or ``"a"``."""
    return str(Fraction(value))


def format_exact(value: Fraction) -> str:
    """Exact form followed by a 6-significant-digit decimal, e.g. ``1/2 (0.500000)``."""
    value = Fraction(value)
    return f"{value} ({float(value):#.6g})"
