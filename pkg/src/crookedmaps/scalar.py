"""Exact rational scalars.

All geometry runs on :class:`gmpy2.mpq`, which keeps values in lowest terms
with a positive denominator and is an order of magnitude faster than
:class:`fractions.Fraction` on the composition-heavy paths.
"""
import os
from fractions import Fraction
from numbers import Rational

from gmpy2 import mpq

Q = mpq
ZERO = mpq(0)
ONE = mpq(1)

DEFAULT_PIECE_BUDGET = 5_000_000


def default_budget():
    """Piece budget, overridable through ``CROOKEDMAPS_PIECE_BUDGET``."""
    raw = os.environ.get("CROOKEDMAPS_PIECE_BUDGET")
    if raw:
        return int(raw)
    return DEFAULT_PIECE_BUDGET


def q(x):
    """Coerce ints, Fractions, mpq and rational strings to mpq.

    Floats are refused: a float in a verdict path is a bug.
    """
    if isinstance(x, type(ZERO)):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not scalars")
    if isinstance(x, int):
        return mpq(x)
    if isinstance(x, Fraction) or isinstance(x, Rational):
        return mpq(x.numerator, x.denominator)
    if isinstance(x, str):
        s = x.strip()
        if not s or any(c in s for c in ".eE"):
            raise ValueError(f"not an exact rational: {x!r}")
        return mpq(s)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def fmt(x):
    """Render as ``"p/q"`` or a bare integer string."""
    x = q(x)
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def floor_q(x):
    x = q(x)
    return x.numerator // x.denominator


def ceil_q(x):
    x = q(x)
    return -((-x.numerator) // x.denominator)
