"""Multi-operand addition: carry bounds and behavioral adder modules.

Adding N digits of base b in one column gives a total Z that splits into a
column digit S and a carry C with ``Z = b*C + S``. The carry never exceeds
``N - 1``, which lets a 4-operand module get by with a 2-bit carry buffer.
Wider adders are built as trees of such 4-operand modules.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

# ------------------------------------------------------------------ theory


def _check_n(N: int) -> None:
    if N < 2:
        raise ValueError(f"N={N}: fewer than two operands is not an addition")


def carry_upper_bound(N: int) -> int:
    _check_n(N)
    return N - 1


def tight_carry_bound(N: int, b: int) -> int:
    """Largest carry of one column of N digits, each at most b - 1."""
    _check_n(N)
    if b < 2:
        raise ValueError("base must be at least 2")
    if N < b:
        return N - 1
    n, r = divmod(N, b)
    if r == 0:
        return N - n
    return N - 1 - n


def digits(value: int, b: int) -> int:
    """Number of base-b digits of a non-negative integer (0 has 1 digit)."""
    count = 1
    while value >= b:
        value //= b
        count += 1
    return count


def carry_columns(N: int, b: int) -> int:
    """Digits needed for the worst-case carry N - 1."""
    _check_n(N)
    return digits(N - 1, b)


class ColumnSum(NamedTuple):
    """``Z = base * C + S`` with ``0 <= S < base``."""

    S: int
    C: int
    base: int

    @property
    def Z(self) -> int:
        return self.base * self.C + self.S


def max_column_sum(N: int, b: int, M: int = 1) -> ColumnSum:
    """Decompose the largest possible total of N operands of M base-b digits."""
    _check_n(N)
    if M < 1:
        raise ValueError("M must be at least 1")
    base = b ** M
    C, S = divmod(N * (base - 1), base)
    return ColumnSum(S, C, base)


def column_transition(b: int, M: int, p: int) -> int:
    """First N at which the worst-case carry of an M-column sum needs p + 1 digits.

    The worst carry is ``N - ceil(N / b**M)``, so it reaches ``b**p`` once
    ``N >= b**p + ceil(b**p / (b**M - 1))``.
    """
    if b < 2 or M < 1 or p < 1:
        raise ValueError("need b >= 2, M >= 1, p >= 1")
    bp = b ** p
    q = b ** M - 1
    return bp + -(-bp // q)


# --------------------------------------------------------- adder modules


def ones_count4(bits: int) -> int:
    """Population count of 4 bits, written as the two-level logic of the LUT."""
    a = (bits >> 3) & 1
    b = (bits >> 2) & 1
    c = (bits >> 1) & 1
    d = bits & 1
    na = a ^ 1
    nb = b ^ 1
    nc = c ^ 1
    nd = d ^ 1
    bit0 = a ^ b ^ c ^ d
    bit2 = a & b & c & d
    bit1 = ((a | d) & (b ^ c)) | (na & b & c) | (a & nb & nc & d) | (a & b & c & nd)
    return (bit2 << 2) | (bit1 << 1) | bit0


class AddResult(NamedTuple):
    value: int
    clocks: int


def _check_operands(operands: Sequence[int], M: int, count: int = 4) -> None:
    if len(operands) != count:
        raise ValueError(f"expected {count} operands, got {len(operands)}")
    if M < 1:
        raise ValueError("M must be at least 1")
    for v in operands:
        if not 0 <= v < (1 << M):
            raise ValueError(f"operand {v:#x} does not fit in {M} bits")


def _column(operands: Sequence[int], i: int) -> int:
    w, x, y, z = operands
    return (((w >> i) & 1) << 3) | (((x >> i) & 1) << 2) | (((y >> i) & 1) << 1) | ((z >> i) & 1)


CARRY_BUFFER_BITS = 2


def add4xM_serial(operands: Sequence[int], M: int) -> AddResult:
    """Bit-serial 4-operand adder, one column per clock, LSB first.

    Each column's ones count is added to a 2-bit carry buffer; the low bit
    of that 3-bit sum is the output bit and the rest becomes the new carry.
    After M columns the carry buffer is appended on the left.
    """
    _check_operands(operands, M)
    carry = 0
    out = 0
    clocks = 0
    for i in range(M):
        t = ones_count4(_column(operands, i)) + carry
        assert t < 8, "3-bit adder overflow"
        out |= (t & 1) << i
        carry = t >> 1
        assert carry < (1 << CARRY_BUFFER_BITS)
        clocks += 1
    out |= carry << M
    clocks += 1
    return AddResult(out, clocks)


def add4xM_columns(operands: Sequence[int], M: int) -> AddResult:
    """Cross-check variant: every column's count is kept and weighted afterwards."""
    _check_operands(operands, M)
    counts = [ones_count4(_column(operands, i)) for i in range(M)]
    total = 0
    for i, c in enumerate(counts):
        total += c << i
    return AddResult(total, M + 1)


def add4x4_parallel(operands: Sequence[int]) -> int:
    """Combinational 4x4 adder: four column LUTs, then one carry ripple."""
    _check_operands(operands, 4)
    L = [ones_count4(_column(operands, i)) for i in range(4)]
    # column i contributes L[i] at weight 2^i; resolve as a ripple of small adds
    s0 = L[0]
    s1 = L[1] + (s0 >> 1)
    s2 = L[2] + (s1 >> 1)
    s3 = L[3] + (s2 >> 1)
    return (s3 << 3) | ((s2 & 1) << 2) | ((s1 & 1) << 1) | (s0 & 1)


# ------------------------------------------------------------------- trees


@dataclass(frozen=True)
class Module:
    """One 4-operand adder. Inputs name wires; outputs are ``S<name>`` / ``C<name>``."""

    name: str
    inputs: tuple[str, ...]
    width: int
    max_total: int

    @property
    def carry_out_zero(self) -> bool:
        """True when the input bounds rule out any carry out of ``width`` bits."""
        return self.max_total < (1 << self.width)


@dataclass(frozen=True)
class Stage:
    kind: str  # "sum" or "carry"
    modules: tuple[Module, ...]
    latency: int


@dataclass(frozen=True)
class AdderTree:
    N: int
    M: int
    padded: int
    stages: tuple[Stage, ...]
    total_carry_bits: int
    sum_wire: str
    carry_wire: str | None

    @property
    def levels(self) -> int:
        return sum(1 for s in self.stages if s.kind == "sum")

    @property
    def modules(self) -> tuple[Module, ...]:
        return tuple(m for s in self.stages for m in s.modules)

    @property
    def latency(self) -> int:
        return sum(s.latency for s in self.stages)

    @property
    def width(self) -> int:
        return self.M + self.total_carry_bits


def _levels(n: int) -> int:
    L, cap = 0, 1
    while cap < n:
        cap *= 4
        L += 1
    return L


def build_adder_tree(N: int, M: int) -> AdderTree:
    """Compose 4-operand modules into an N-operand, M-bit adder.

    Operands are padded with zeros up to a power of four. Sum modules are
    arranged in ``ceil(log4 N)`` levels; every sum module's 2-bit carry has
    weight ``2**M`` and all of them are added by a chain of carry modules of
    width ``total_carry_bits``. The result is the carry total concatenated
    with the final M-bit sum.
    """
    _check_n(N)
    if M < 1:
        raise ValueError("M must be at least 1")
    L = max(1, _levels(N))
    padded = 4 ** L
    W = carry_columns(N, 2)
    carry_cap = N - 1  # proven bound on the total carry

    stages: list[Stage] = []
    wires = [f"x{i}" for i in range(padded)]
    carries: list[tuple[str, int]] = []
    counter = 0
    for _ in range(L):
        mods = []
        nxt = []
        for g in range(0, len(wires), 4):
            counter += 1
            name = f"U{counter}"
            group = tuple(wires[g:g + 4])
            mods.append(Module(name, group, M, len(group) * ((1 << M) - 1)))
            nxt.append(f"S{name}")
            carries.append((f"C{name}", 3))
        stages.append(Stage("sum", tuple(mods), M + 1))
        wires = nxt
    sum_wire = wires[0]

    # carry chain: FIFO reduction in groups of four
    pending = list(carries)
    if len(pending) == 1:
        # a single 4-operand module: its carry is the result's high part
        return AdderTree(N, M, padded, tuple(stages), W, sum_wire, pending[0][0])
    depth: dict[str, int] = {w: 0 for w, _ in pending}
    carry_mods: list[tuple[int, Module]] = []
    while len(pending) > 1:
        group, pending = pending[:4], pending[4:]
        counter += 1
        name = f"U{counter}"
        names = tuple(w for w, _ in group)
        bound = min(sum(m for _, m in group), carry_cap)
        mod = Module(name, names, W, bound)
        d = 1 + max(depth[w] for w in names)
        depth[f"S{name}"] = d
        carry_mods.append((d, mod))
        pending.append((f"S{name}", bound))
    for d in sorted({d for d, _ in carry_mods}):
        mods = tuple(m for dd, m in carry_mods if dd == d)
        stages.append(Stage("carry", mods, W + 1))
    return AdderTree(N, M, padded, tuple(stages), W, sum_wire, pending[0][0])


def tree_add(tree: AdderTree, operands: Sequence[int]) -> int:
    """Route operands through every module of ``tree`` and return the total."""
    if len(operands) > tree.N:
        raise ValueError(f"{len(operands)} operands for a {tree.N}-operand tree")
    limit = 1 << tree.M
    values: dict[str, int] = {}
    for i in range(tree.padded):
        v = operands[i] if i < len(operands) else 0
        if not 0 <= v < limit:
            raise ValueError(f"operand {v:#x} does not fit in {tree.M} bits")
        values[f"x{i}"] = v
    for stage in tree.stages:
        for mod in stage.modules:
            ins = [values[w] for w in mod.inputs]
            ins += [0] * (4 - len(ins))
            r = add4xM_serial(ins, mod.width).value
            values[f"S{mod.name}"] = r & ((1 << mod.width) - 1)
            values[f"C{mod.name}"] = r >> mod.width
            if stage.kind == "carry" and r >> mod.width:
                raise OverflowError(f"carry module {mod.name} overflowed its width")
    high = values[tree.carry_wire] if tree.carry_wire else 0
    return (high << tree.M) | values[tree.sum_wire]
