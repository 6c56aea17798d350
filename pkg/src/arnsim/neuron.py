"""Sixteen-input neurons built from the fixed-point parts.

An ARN node feeds every input through its resonator LUT, adds the 16
outputs with a 16-operand adder tree and optionally scales the total by
``4 / (N k^2)``. A perceptron multiplies inputs by weights with serial
multipliers, adds the products with the same tree and applies a sigmoid LUT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from . import approx, fxp, moadder, resonance
from .fxp import Fx16
from .resonance import ResonatorParams

N_INPUTS = 16
ADDER_WIDTH = 16


def _as_signed(x: Fx16) -> tuple[Fx16, bool]:
    """Reinterpret an input for the signed datapath, flagging values >= 8."""
    if x.signed:
        return x, False
    return Fx16(x.raw, True), bool(x.raw & 0x8000)


def _as_unsigned(x: Fx16) -> tuple[int, bool]:
    """Raw word of a value headed into the unsigned adder; negatives are flagged."""
    if x.signed and x.int_value < 0:
        return 0, True
    return x.raw, False


@dataclass(frozen=True)
class ArnNeuron16:
    params: tuple[ResonatorParams, ...]
    method: str = "pwl"
    normalize: bool = True
    luts: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if len(self.params) != N_INPUTS:
            raise ValueError(f"an ARN node here has {N_INPUTS} resonators")
        if len({p.k for p in self.params}) != 1:
            raise ValueError("all resonators of a node share k")
        tables = {}
        for p in self.params:
            if p.rho not in tables:
                curve = approx.resonator_curve(p.rho)
                tables[p.rho] = approx.canonical_lut(curve, self.method)
        object.__setattr__(self, "luts", tables)

    @classmethod
    def uniform(cls, x_ms: Sequence[float], rho: float = 2.42, T: float = 0.9,
                method: str = "pwl", normalize: bool = True) -> "ArnNeuron16":
        return cls(tuple(ResonatorParams(rho, float(m), 1.0, T) for m in x_ms),
                   method, normalize)

    @property
    def k(self) -> float:
        return self.params[0].k

    @property
    def gain(self) -> float:
        return 4.0 / (N_INPUTS * self.k * self.k)


class ArnOutput(NamedTuple):
    y: Fx16
    clocks: int
    overflow: bool
    resonator_outputs: tuple[Fx16, ...]
    total: int


_TREE = moadder.build_adder_tree(N_INPUTS, ADDER_WIDTH)


def arn_forward(n: ArnNeuron16, xs: Sequence[Fx16]) -> ArnOutput:
    """Fixed-point forward pass of one ARN node.

    The resonators run in parallel, so their contribution to the clock count
    is the slowest one. The unnormalized output is the adder total read as a
    Q4.12 word (flagged if it needs more than 16 bits).
    """
    if len(xs) != N_INPUTS:
        raise ValueError(f"expected {N_INPUTS} inputs, got {len(xs)}")
    overflow = False
    outs = []
    worst = 0
    for x, p in zip(xs, n.params):
        xs_, o = _as_signed(x)
        overflow |= o
        xm = fxp.encode(p.x_m, signed=True)
        d, o = fxp.sub(xs_, xm)
        overflow |= o
        r = approx.eval_fx(n.luts[p.rho], d)
        overflow |= r.overflow
        outs.append(r.value)
        worst = max(worst, r.clocks)
    raws = []
    for v in outs:
        raw, o = _as_unsigned(v)
        overflow |= o
        raws.append(raw)
    total = moadder.tree_add(_TREE, raws)
    clocks = worst + _TREE.latency
    if total > fxp.MASK16:
        overflow = True
    y = fxp.ufx(total)
    if n.normalize:
        g = fxp.encode(n.gain)
        tr = fxp.serial_mul(y, g)
        y = tr.product
        overflow |= tr.overflow
        clocks += tr.clocks
    return ArnOutput(y, clocks, overflow, tuple(outs), total)


def arn_forward_exact(n: ArnNeuron16, xs: Sequence[float]) -> float:
    """Real-valued forward pass with the LUTs bypassed."""
    return resonance.aggregate(list(xs), list(n.params), n.k, normalize=n.normalize)


@dataclass(frozen=True)
class Perceptron16:
    weights: tuple[Fx16, ...]
    activation: approx.LutTable = field(
        default_factory=lambda: approx.canonical_lut(approx.SIGMOID, "pwl"))

    def __post_init__(self) -> None:
        if len(self.weights) != N_INPUTS:
            raise ValueError(f"a perceptron here has {N_INPUTS} weights")
        if any(w.signed for w in self.weights):
            raise ValueError("weights feed the unsigned adder tree; use unsigned values")

    @classmethod
    def from_floats(cls, weights: Sequence[float], method: str = "pwl") -> "Perceptron16":
        return cls(tuple(fxp.encode(w) for w in weights),
                   approx.canonical_lut(approx.SIGMOID, method))


class MlpOutput(NamedTuple):
    y: Fx16
    pre_activation: Fx16
    clocks: int
    overflow: bool
    products: tuple[Fx16, ...]


def mlp_forward(p: Perceptron16, xs: Sequence[Fx16]) -> MlpOutput:
    """All 16 products first, one tree add, then the sigmoid LUT."""
    if len(xs) != N_INPUTS:
        raise ValueError(f"expected {N_INPUTS} inputs, got {len(xs)}")
    overflow = False
    products = []
    worst = 0
    for x, w in zip(xs, p.weights):
        if x.signed:
            raise ValueError("inputs feed the unsigned adder tree; use unsigned values")
        tr = fxp.serial_mul(x, w)
        products.append(tr.product)
        overflow |= tr.overflow
        worst = max(worst, tr.clocks)
    total = moadder.tree_add(_TREE, [v.raw for v in products])
    clocks = worst + _TREE.latency
    if total > 0x7FFF:
        # the activation LUT takes a signed word
        overflow = True
    pre = fxp.ufx(total)
    act = approx.eval_fx(p.activation, fxp.sfx(min(total, 0x7FFF)))
    overflow |= act.overflow
    clocks += act.clocks
    y = fxp.ufx(act.value.raw)
    return MlpOutput(y, pre, clocks, overflow, tuple(products))


def mlp_forward_exact(weights: Sequence[float], xs: Sequence[float]) -> tuple[float, float]:
    """Exact pre-activation and sigmoid output."""
    s = math.fsum(x * w for x, w in zip(xs, weights))
    return s, 1.0 / (1.0 + math.exp(-s))


# ------------------------------------------------------------- throughput


@dataclass(frozen=True)
class ThroughputScenario:
    R_A: float
    R_T: float
    T: float

    def __post_init__(self) -> None:
        if not (self.R_A > 0 and self.R_T > 0 and self.T > 0):
            raise ValueError("R_A, R_T and T must all be positive")


class Throughput(NamedTuple):
    serial_ops: int
    parallel_ops: int
    serial_wins: bool


def throughput_compare(s: ThroughputScenario, T_p: float = fxp.WALLACE_CLOCKS) -> Throughput:
    """Operations finished in ``T`` clocks: one parallel unit versus ``R_A`` serial ones."""
    T_s = s.R_T * T_p
    parallel = math.floor(s.T / T_p)
    serial = math.floor(s.R_A) * math.floor(s.T / T_s)
    return Throughput(serial, parallel, serial > parallel)


def throughput_table(area_ratios: Sequence[float], R_T: float,
                     times: Sequence[float]) -> list[tuple]:
    """Rows of (T, parallel_ops, serial_ops for each area ratio)."""
    rows = []
    for T in times:
        ops = [throughput_compare(ThroughputScenario(ra, R_T, T)) for ra in area_ratios]
        rows.append((T, ops[0].parallel_ops, *[o.serial_ops for o in ops]))
    return rows
