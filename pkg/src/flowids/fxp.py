"""Saturating Q47.16 fixed-point arithmetic on signed 64-bit words.

Every numeric value on the classification path is an ``Fx64``: a plain
``int`` holding the raw 64-bit word, interpreted as ``raw / 2**16``. Raw
ints (instead of wrapper objects) keep the per-packet path cheap; this
module is the single place where the arithmetic semantics live:

* range is [-2**47, 2**47 - 2**-16]; operations clamp at the bounds
  instead of wrapping, and every clamp bumps :data:`saturations`
* multiplication shifts right arithmetically (truncates toward -inf)
* division by a packet count truncates toward zero, mirroring signed
  integer division in the restricted compile target

Raw comparison equals value comparison, so callers compare Fx64 values
with the ordinary ``<=`` operator.
"""

from __future__ import annotations

import threading
from decimal import Decimal, InvalidOperation, localcontext
from fractions import Fraction

FRAC_BITS = 16
SCALE = 1 << FRAC_BITS
FX_ONE = SCALE

RAW_MIN = -(1 << 63)
RAW_MAX = (1 << 63) - 1

# integers i with |i| < INT_LIMIT convert exactly
INT_LIMIT = 1 << 47

Fx64 = int


class FxParseError(ValueError):
    """Input text does not parse as a finite decimal."""


class SaturationCounter:
    """Counts range clamps.

    Saturation is deliberately silent on the packet path (a clamped
    accumulator is safe, a raised exception mid-flow is not); the counter
    makes clamps observable in summaries and tests.
    """

    __slots__ = ("_lock", "_count")

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._count = 0

    def bump(self) -> None:
        with self._lock:
            self._count += 1

    @property
    def count(self) -> int:
        return self._count

    def reset(self) -> None:
        with self._lock:
            self._count = 0


saturations = SaturationCounter()


def _clamp(raw: int) -> Fx64:
    if raw > RAW_MAX:
        saturations.bump()
        return RAW_MAX
    if raw < RAW_MIN:
        saturations.bump()
        return RAW_MIN
    return raw


def fx_from_int(i: int) -> Fx64:
    """Exact conversion of an integer; saturates for |i| >= 2**47."""
    return _clamp(i << FRAC_BITS)


def fx_from_decimal(s: str) -> Fx64:
    """Parse a decimal string, rounding to the nearest Q47.16 value.

    Ties round away from zero. Raises :class:`FxParseError` for text
    that is not a finite decimal; out-of-range values saturate.
    """
    try:
        d = Decimal(s)
    except (InvalidOperation, ValueError, TypeError) as exc:
        raise FxParseError(f"not a decimal: {s!r}") from exc
    if not d.is_finite():
        raise FxParseError(f"not a finite decimal: {s!r}")
    scaled = Fraction(d) * SCALE
    num, den = scaled.numerator, scaled.denominator
    if num >= 0:
        raw = (2 * num + den) // (2 * den)
    else:
        raw = -((-2 * num + den) // (2 * den))
    return _clamp(raw)


def fx_add(a: Fx64, b: Fx64) -> Fx64:
    return _clamp(a + b)


def fx_sub(a: Fx64, b: Fx64) -> Fx64:
    return _clamp(a - b)


def fx_abs(a: Fx64) -> Fx64:
    # abs(RAW_MIN) overflows by one; clamps to RAW_MAX
    return _clamp(-a) if a < 0 else a


def fx_mul(a: Fx64, b: Fx64) -> Fx64:
    """Product in a double-width intermediate, then arithmetic shift.

    Python's ``>>`` on negative ints floors, which is exactly the
    arithmetic-shift-right the compile target performs.
    """
    return _clamp((a * b) >> FRAC_BITS)


def fx_div_uint(a: Fx64, n: int) -> Fx64:
    """Divide by a positive count, truncating toward zero."""
    if n < 1:
        raise ValueError(f"divisor must be a positive integer, got {n}")
    if a < 0:
        return -((-a) // n)
    return a // n


def fx_to_float(a: Fx64) -> float:
    return a / SCALE


def fx_to_fraction(a: Fx64) -> Fraction:
    return Fraction(a, SCALE)


def fx_to_decimal(a: Fx64) -> str:
    """Exact decimal rendering of the value (denominator is 2**16)."""
    with localcontext() as ctx:
        ctx.prec = 40
        return format(Decimal(a) / SCALE, "f")
