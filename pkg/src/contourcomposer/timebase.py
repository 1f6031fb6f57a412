"""Exact symbolic time.

All onsets, durations and off-beats are :class:`fractions.Fraction` values in
units of quarter notes. ``Fraction`` is always stored reduced with a positive
denominator, which is exactly the canonical form needed here.
"""

from fractions import Fraction

RationalTime = Fraction

#: quantization grid, in quarter notes (covers 32nds and 16th triplets)
GRID = Fraction(1, 24)


def quantize(ticks: int, ppq: int) -> Fraction:
    """Convert MIDI ticks to quarter notes snapped to the nearest grid point."""
    steps = round(Fraction(ticks, ppq) / GRID)
    return steps * GRID


def offbeat(count: Fraction) -> Fraction:
    """Position relative to the previous beat: ``count mod 1``."""
    if count < 0:
        raise ValueError(f"count must be non-negative, got {count}")
    return Fraction(count) % 1


def format_time(value: Fraction) -> str:
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def parse_time(text: str) -> Fraction:
    num, sep, den = text.partition("/")
    if not sep:
        raise ValueError(f"expected 'num/den', got {text!r}")
    return Fraction(int(num), int(den))
