"""Q4.12 fixed-point numbers and a cycle-counting serial multiplier model.

A value is a 16-bit pattern with the binary point between bit 11 and bit 12.
Unsigned values use 4 integer bits; signed values use a sign bit plus 3
integer bits and are stored in two's complement for addition and
subtraction. Multiplication works on magnitudes and fixes up the sign with
an XOR of the operand signs, as a shift-add datapath would.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

FRAC_BITS = 12
SCALE = 1 << FRAC_BITS
MASK16 = 0xFFFF
LSB = 1.0 / SCALE

# Parallel (Wallace tree) multiplier constants, used only by the throughput model.
WALLACE_CLOCKS = 1
WALLACE_GATES = 2144
SERIAL_GATES = 66


class RangeError(ValueError):
    """A real value cannot be represented in the requested Q4.12 format."""


@dataclass(frozen=True)
class Fx16:
    """A 16-bit Q4.12 word. ``signed`` selects two's-complement interpretation."""

    raw: int
    signed: bool = False

    def __post_init__(self) -> None:
        if not 0 <= self.raw <= MASK16:
            raise ValueError(f"raw pattern {self.raw!r} is not a 16-bit word")

    @property
    def int_value(self) -> int:
        """Integer count of 2^-12 units, sign applied."""
        if self.signed and self.raw & 0x8000:
            return self.raw - 0x10000
        return self.raw

    @property
    def value(self) -> float:
        return self.int_value / SCALE

    def hex(self) -> str:
        return f"{self.raw:04X}"

    def __float__(self) -> float:
        return self.value

    def __repr__(self) -> str:
        kind = "S" if self.signed else "U"
        return f"{kind}Fx16(0x{self.raw:04X}={self.value:.6f})"


class FxResult(NamedTuple):
    value: Fx16
    overflow: bool


class MulTrace(NamedTuple):
    product: Fx16
    overflow: bool
    clocks: int
    add_edges: int


def sfx(raw: int) -> Fx16:
    return Fx16(raw & MASK16, signed=True)


def ufx(raw: int) -> Fx16:
    return Fx16(raw & MASK16, signed=False)


def encode(v: float, signed: bool = False) -> Fx16:
    """Encode ``v`` by truncating ``v * 2**12`` toward zero."""
    if not math.isfinite(v):
        raise RangeError(f"cannot encode non-finite value {v!r}")
    q = math.trunc(v * SCALE)
    if signed:
        if v < -8.0 or q > 0x7FFF:
            raise RangeError(f"{v!r} is outside the signed range [-8, 8 - 2^-12]")
        return Fx16(q & MASK16, signed=True)
    if v < 0.0 or q > MASK16:
        raise RangeError(f"{v!r} is outside the unsigned range [0, 16 - 2^-12]")
    return Fx16(q, signed=False)


def decode(x: Fx16) -> float:
    return x.value


def from_hex(text: str, signed: bool = False) -> Fx16:
    """Parse the 4-digit hex form used in tables, e.g. ``"3DA7"`` or ``"0x3DA7"``."""
    t = text.strip()
    if t.lower().startswith("0x"):
        t = t[2:]
    if not 1 <= len(t) <= 4:
        raise ValueError(f"expected up to 4 hex digits, got {text!r}")
    return Fx16(int(t, 16), signed=signed)


def _check_pair(a: Fx16, b: Fx16) -> None:
    if a.signed != b.signed:
        raise TypeError("operands must have the same signedness")


def _pack(n: int, signed: bool) -> FxResult:
    if signed:
        overflow = not -0x8000 <= n <= 0x7FFF
    else:
        overflow = not 0 <= n <= MASK16
    return FxResult(Fx16(n & MASK16, signed), overflow)


def add(a: Fx16, b: Fx16) -> FxResult:
    _check_pair(a, b)
    return _pack(a.int_value + b.int_value, a.signed)


def sub(a: Fx16, b: Fx16) -> FxResult:
    _check_pair(a, b)
    return _pack(a.int_value - b.int_value, a.signed)


def _sign_magnitude(x: Fx16) -> tuple[int, int]:
    n = x.int_value
    return (1 if n < 0 else 0), abs(n)


def _truncate_product(p: int, negative: bool, signed: bool) -> FxResult:
    """Drop 12 fraction bits of a magnitude product and keep 16 bits."""
    if signed:
        # sign + 3 integer bits: anything at bit 27 or above of the
        # magnitude product does not fit in the 15-bit magnitude field
        overflow = (p >> 27) != 0
        mag = (p >> FRAC_BITS) & 0x7FFF
        n = -mag if negative else mag
        return FxResult(Fx16(n & MASK16, True), overflow)
    overflow = (p >> 28) != 0
    return FxResult(Fx16((p >> FRAC_BITS) & MASK16, False), overflow)


def mul_trunc(a: Fx16, b: Fx16) -> FxResult:
    """Single-step (parallel) truncating multiply."""
    _check_pair(a, b)
    if not a.signed:
        return _truncate_product(a.raw * b.raw, False, False)
    sa, ma = _sign_magnitude(a)
    sb, mb = _sign_magnitude(b)
    return _truncate_product(ma * mb, bool(sa ^ sb), True)


def multiplier_bits(b: Fx16) -> int:
    """Number of multiplier bits the serial datapath walks through."""
    if not b.signed:
        return 16
    # signed magnitudes fit in 15 bits, except the lone -8.0 pattern
    return 16 if abs(b.int_value) > 0x7FFF else 15


def serial_mul(a: Fx16, b: Fx16) -> MulTrace:
    """Behavioral shift-add multiplier; ``b`` is the multiplier register.

    The multiplier is scanned LSB first. Every bit costs one clock edge for
    the shift and test, and every 1-bit costs one more edge for the add. One
    clock gives two edges, and one extra clock loads the operands.
    """
    _check_pair(a, b)
    if a.signed:
        sa, ma = _sign_magnitude(a)
        sb, mb = _sign_magnitude(b)
        negative = bool(sa ^ sb)
    else:
        ma, mb, negative = a.raw, b.raw, False
    nbits = multiplier_bits(b)

    acc = 0
    sreg = ma
    slreg = mb
    edges = 0
    adds = 0
    for _ in range(nbits):
        edges += 1
        if slreg & 1:
            acc += sreg
            adds += 1
            edges += 1
        sreg <<= 1
        slreg >>= 1

    product, overflow = _truncate_product(acc, negative, a.signed)
    clocks = 1 + (edges + 1) // 2
    return MulTrace(product, overflow, clocks, adds)
