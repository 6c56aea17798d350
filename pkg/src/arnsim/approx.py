"""Lookup-table approximation of sigmoid, tanh and the resonance curve.

Two interpolation schemes are supported. PWL stores, for every segment, the
left breakpoint ``x1``, the curve value ``y1`` and the local slope ``m``, and
evaluates ``m * (x - x1) + y1``. SOI fits a quadratic through three
consecutive breakpoints and evaluates it in Horner form ``(a*x + b)*x + c``.

Tables only cover the non-negative half of the input axis. Negative inputs
are folded back using the symmetry of each curve: ``1 - f(-x)`` for the
sigmoid, ``-f(-x)`` for tanh and ``f(-x)`` for the (even) resonance curve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import fxp
from .fxp import Fx16

# cycle accounting for the fixed-point evaluator
FETCH_CLOCKS = 3
ADD_CLOCKS = 1

DEFAULT_RHO_GRID = (1.0, 1.76, 2.0, 2.42, 3.0, 5.0)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=float)))


def _resonance(rho: float):
    def f(d):
        s = 1.0 / (1.0 + np.exp(-rho * np.asarray(d, dtype=float)))
        return s * (1.0 - s)

    return f


@dataclass(frozen=True)
class Curve:
    """A target function plus the facts the LUT needs about it.

    ``symmetry`` is one of ``"sigmoid"`` (f(-x) = 1 - f(x)), ``"odd"`` or
    ``"even"``. ``x_max`` is the end of the tabulated half-domain and
    ``saturation`` the value returned past it.
    """

    name: str
    fn: Callable = field(compare=False, repr=False)
    symmetry: str
    x_max: float
    saturation: float
    rho: float | None = None

    def __call__(self, x):
        return self.fn(x)

    @property
    def ident(self) -> str:
        if self.rho is None:
            return self.name
        return f"{self.name}({self.rho:g})"


SIGMOID = Curve("sigmoid", _sigmoid, "sigmoid", 5.0, 1.0)
TANH = Curve("tanh", np.tanh, "odd", 5.0, 1.0)


def resonator_curve(rho: float) -> Curve:
    """X(1-X) with X = sigmoid(rho*d), as a function of d = x - x_m on [0, 1]."""
    if rho <= 0:
        raise ValueError("rho must be positive")
    f = _resonance(rho)
    return Curve("resonator", f, "even", 1.0, float(f(1.0)), rho)


def curve_by_name(name: str, rho: float | None = None) -> Curve:
    if name == "sigmoid":
        return SIGMOID
    if name == "tanh":
        return TANH
    if name == "resonator":
        return resonator_curve(2.42 if rho is None else rho)
    raise ValueError(f"unknown curve {name!r}")


class PwlSegment(NamedTuple):
    x1: float
    y1: float
    m: float


class SoiSegment(NamedTuple):
    x_lo: float
    a: float
    b: float
    c: float


def soi_coefficients(x1, y1, x2, y2, x3, y3) -> tuple[float, float, float]:
    """Quadratic through three points, returned as (a, b, c)."""
    a = ((x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1)) / (
        (x2 - x1) * (x3 - x1) * (x3 - x2)
    )
    b = ((y2 - y1) - a * (x2 * x2 - x1 * x1)) / (x2 - x1)
    c = y1 - a * x1 * x1 - b * x1
    return a, b, c


class LutError(ValueError):
    pass


@dataclass(frozen=True)
class LutTable:
    curve: Curve
    method: str
    segments: tuple
    domain: tuple[float, float]
    sat_low: float
    sat_high: float

    @property
    def x_entries(self) -> tuple[float, ...]:
        """Stored x values: every segment start plus the closing breakpoint."""
        return tuple(s[0] for s in self.segments) + (self.domain[1],)

    def __call__(self, x):
        return eval_lut(self, x)


def _check_breakpoints(bp: Sequence[float], minimum: int) -> np.ndarray:
    arr = np.asarray(bp, dtype=float)
    if arr.ndim != 1 or arr.size < minimum:
        raise LutError(f"need at least {minimum} breakpoints, got {arr.size}")
    if np.any(np.diff(arr) <= 0):
        raise LutError("breakpoints must be strictly increasing")
    return arr


def build_lut(curve: Curve, method: str, breakpoints: Sequence[float]) -> LutTable:
    method = method.lower()
    if method == "pwl":
        xs = _check_breakpoints(breakpoints, 2)
        ys = [float(curve(x)) for x in xs]
        segs = tuple(
            PwlSegment(float(xs[i]), ys[i], (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]))
            for i in range(len(xs) - 1)
        )
    elif method == "soi":
        xs = _check_breakpoints(breakpoints, 3)
        if xs.size % 2 == 0:
            raise LutError("SOI needs an odd number of breakpoints (pairs of intervals)")
        ys = [float(curve(x)) for x in xs]
        segs = []
        for i in range(0, len(xs) - 2, 2):
            a, b, c = soi_coefficients(
                xs[i], ys[i], xs[i + 1], ys[i + 1], xs[i + 2], ys[i + 2]
            )
            segs.append(SoiSegment(float(xs[i]), a, b, c))
        segs = tuple(segs)
    else:
        raise LutError(f"unknown method {method!r}")
    lo, hi = float(xs[0]), float(xs[-1])
    if curve.symmetry == "sigmoid":
        sat_low = 1.0 - curve.saturation
    elif curve.symmetry == "odd":
        sat_low = -curve.saturation
    else:
        sat_low = curve.saturation
    return LutTable(curve, method, segs, (lo, hi), sat_low, curve.saturation)


def uniform_breakpoints(spacing: float, x_max: float) -> np.ndarray:
    n = int(round(x_max / spacing))
    return np.linspace(0.0, n * spacing, n + 1)


def nonuniform_breakpoints(x_max: float = 5.0, fine: float = 0.03125,
                           coarse: float = 0.125, knee: float = 1.0) -> np.ndarray:
    """Fine spacing up to ``knee``, coarse spacing after it."""
    a = np.arange(0.0, knee, fine)
    b = np.arange(knee, x_max + coarse / 2, coarse)
    return np.concatenate([a, b])


def canonical_breakpoints(curve: Curve, method: str, spacing: str = "nonuniform") -> np.ndarray:
    """Default breakpoint schedules.

    ``spacing`` is ``"uniform-0.5"``, ``"uniform-0.25"`` or ``"nonuniform"``.
    Uniform spacing is the distance between breakpoints for both methods.
    The resonance curve has its own default: breakpoints 0.1 apart for PWL
    and 0.05 apart for SOI (so SOI segments are 0.1 wide) on [0, 1].
    """
    method = method.lower()
    if spacing.startswith("uniform-"):
        step = float(spacing.split("-", 1)[1])
        return uniform_breakpoints(step, curve.x_max)
    if spacing != "nonuniform":
        raise ValueError(f"unknown spacing {spacing!r}")
    if curve.name == "resonator":
        step = 0.05 if method == "soi" else 0.1
        return uniform_breakpoints(step, curve.x_max)
    return nonuniform_breakpoints(curve.x_max)


def canonical_lut(curve: Curve, method: str, spacing: str = "nonuniform") -> LutTable:
    return build_lut(curve, method, canonical_breakpoints(curve, method, spacing))


def _segment_index(lut: LutTable, x: float) -> int:
    idx = 0
    for i, seg in enumerate(lut.segments):
        if seg[0] <= x:
            idx = i
        else:
            break
    return idx


def _eval_half(lut: LutTable, x: float) -> float:
    lo, hi = lut.domain
    if x > hi:
        return lut.sat_high
    if x < lo:
        return lut.sat_low
    seg = lut.segments[_segment_index(lut, x)]
    if lut.method == "pwl":
        return seg.m * (x - seg.x1) + seg.y1
    return (seg.a * x + seg.b) * x + seg.c


def eval_lut(lut: LutTable, x: float) -> float:
    x = float(x)
    if x >= 0 or lut.domain[0] < 0:
        return _eval_half(lut, x)
    y = _eval_half(lut, -x)
    if lut.curve.symmetry == "sigmoid":
        return 1.0 - y
    if lut.curve.symmetry == "odd":
        return -y
    return y


# ---------------------------------------------------------------- fixed point


class FxEval(NamedTuple):
    value: Fx16
    overflow: bool
    clocks: int


def _enc(v: float) -> Fx16:
    """Encode a stored table constant, rounding to the nearest LSB.

    Table contents are computed offline, so they are rounded rather than
    truncated like run-time values.
    """
    q = int(round(v * fxp.SCALE))
    if not -0x8000 <= q <= 0x7FFF:
        raise fxp.RangeError(f"table constant {v!r} does not fit Q4.12")
    return fxp.sfx(q)


# The datapath truncates every product, which biases results low by up to
# one LSB. Storing the additive constant half an LSB high centres that error.
TRUNCATION_BIAS = 0.5 * fxp.LSB


@dataclass(frozen=True)
class FxLut:
    """A LutTable with every stored constant encoded as a signed Q4.12 word."""

    table: LutTable
    segments: tuple
    lo: Fx16
    hi: Fx16
    sat_low: Fx16
    sat_high: Fx16
    one: Fx16

    @classmethod
    def from_table(cls, lut: LutTable) -> "FxLut":
        segs = []
        for seg in lut.segments:
            vals = list(seg)
            # additive term: y1 for PWL, c for SOI
            k = 1 if lut.method == "pwl" else 3
            vals[k] += TRUNCATION_BIAS
            segs.append(tuple(_enc(v) for v in vals))
        segs = tuple(segs)
        return cls(
            lut,
            segs,
            _enc(lut.domain[0]),
            _enc(lut.domain[1]),
            _enc(lut.sat_low),
            _enc(lut.sat_high),
            _enc(1.0),
        )


_FX_CACHE: dict[int, FxLut] = {}


def fx_table(lut: LutTable) -> FxLut:
    key = id(lut)
    hit = _FX_CACHE.get(key)
    if hit is None or hit.table is not lut:
        hit = FxLut.from_table(lut)
        _FX_CACHE[key] = hit
    return hit


def _eval_fx_half(t: FxLut, x: Fx16) -> FxEval:
    xi = x.int_value
    if xi > t.hi.int_value:
        return FxEval(t.sat_high, False, FETCH_CLOCKS)
    if xi < t.lo.int_value:
        return FxEval(t.sat_low, False, FETCH_CLOCKS)
    idx = 0
    for i, seg in enumerate(t.segments):
        if seg[0].int_value <= xi:
            idx = i
        else:
            break
    seg = t.segments[idx]
    clocks = FETCH_CLOCKS
    overflow = False
    if t.table.method == "pwl":
        x1, y1, m = seg
        dx, o1 = fxp.sub(x, x1)
        tr = fxp.serial_mul(m, dx)
        y, o2 = fxp.add(tr.product, y1)
        clocks += ADD_CLOCKS + tr.clocks + ADD_CLOCKS
        overflow = o1 or tr.overflow or o2
    else:
        _, a, b, c = seg
        t1 = fxp.serial_mul(a, x)
        s1, o1 = fxp.add(t1.product, b)
        t2 = fxp.serial_mul(s1, x)
        y, o2 = fxp.add(t2.product, c)
        clocks += t1.clocks + ADD_CLOCKS + t2.clocks + ADD_CLOCKS
        overflow = t1.overflow or o1 or t2.overflow or o2
    return FxEval(y, overflow, clocks)


def eval_fx(lut: LutTable, x: Fx16) -> FxEval:
    """Hardware-path evaluation: every constant and operation in Q4.12.

    Returns the signed result, the OR of all overflow flags and a clock
    count of 3 fetch clocks plus one per add/sub plus the serial multiplier
    clocks. Folding a negative input costs one extra add clock.
    """
    if not x.signed:
        if x.raw & 0x8000:
            raise fxp.RangeError(f"{x!r} does not fit the signed datapath")
        x = Fx16(x.raw, True)
    t = fx_table(lut)
    if x.int_value >= 0 or t.lo.int_value < 0:
        return _eval_fx_half(t, x)
    neg = fxp.sfx(-x.int_value)
    r = _eval_fx_half(t, neg)
    sym = lut.curve.symmetry
    if sym == "sigmoid":
        y, o = fxp.sub(t.one, r.value)
    elif sym == "odd":
        y, o = fxp.sub(fxp.sfx(0), r.value)
    else:
        return r
    return FxEval(y, r.overflow or o, r.clocks + ADD_CLOCKS)


# ------------------------------------------------------------------- auditing


class AuditPoint(NamedTuple):
    x: float
    exact: float
    approx: float
    error: float
    absolute: bool


@dataclass(frozen=True)
class AuditReport:
    max_rel_error: float
    argmax_x: float
    points: tuple

    @property
    def flagged(self) -> tuple:
        return tuple(p for p in self.points if p.absolute)


def audit_error(lut, exact: Callable, grid: Sequence[float]) -> AuditReport:
    """Relative error in percent, ``|approx - exact| / |exact| * 100``.

    ``lut`` may be a LutTable or any callable. Points where the exact value
    is zero get an absolute error instead and are flagged; they do not take
    part in the maximum.
    """
    points = []
    best = -1.0
    best_x = float("nan")
    for x in grid:
        x = float(x)
        e = float(exact(x))
        a = float(lut(x))
        if e == 0.0:
            points.append(AuditPoint(x, e, a, abs(a - e), True))
            continue
        err = abs(a - e) / abs(e) * 100.0
        points.append(AuditPoint(x, e, a, err, False))
        if err > best:
            best, best_x = err, x
    return AuditReport(max(best, 0.0), best_x, tuple(points))


def audit_grid(x_max: float, step: float = 0.025) -> np.ndarray:
    """Default audit grid: ``step, 2*step, ..., x_max``."""
    n = int(round(x_max / step))
    return np.arange(1, n + 1) * step


def storage_bytes(tables: Sequence[LutTable]) -> int:
    """Bytes needed for a set of tables that share one x column.

    Every stored value is 2 bytes. The x entries are stored once; each table
    adds its per-segment coefficients (2 for PWL, 3 for SOI).
    """
    if not tables:
        return 0
    xs = tables[0].x_entries
    for t in tables[1:]:
        if t.x_entries != xs:
            raise ValueError("tables do not share the same x entries")
    total = 2 * len(xs)
    for t in tables:
        per = 2 if t.method == "pwl" else 3
        total += 2 * per * len(t.segments)
    return total


# -------------------------------------------------------------- text dump/load


def dump_lut(lut: LutTable) -> str:
    c = lut.curve
    head = (
        f"# lut curve={c.name} rho={'' if c.rho is None else repr(c.rho)} "
        f"method={lut.method} domain={lut.domain[0]!r}:{lut.domain[1]!r} "
        f"sat_low={lut.sat_low!r} sat_high={lut.sat_high!r}"
    )
    cols = "x1 y1 m" if lut.method == "pwl" else "x_lo a b c"
    lines = [head, f"# columns: {cols} | Q4.12 hex of each"]
    for seg in lut.segments:
        dec = " ".join(repr(float(v)) for v in seg)
        hx = " ".join(_enc(v).hex() for v in seg)
        lines.append(f"{dec} | {hx}")
    return "\n".join(lines) + "\n"


def load_lut(text: str) -> LutTable:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("# lut "):
        raise LutError("missing '# lut' header line")
    meta = dict(tok.split("=", 1) for tok in lines[0][len("# lut "):].split())
    rho = float(meta["rho"]) if meta.get("rho") else None
    curve = curve_by_name(meta["curve"], rho)
    method = meta["method"]
    lo, hi = (float(v) for v in meta["domain"].split(":"))
    segs = []
    width = 3 if method == "pwl" else 4
    for n, ln in enumerate(lines[1:], start=2):
        if ln.startswith("#"):
            continue
        dec = ln.split("|", 1)[0].split()
        if len(dec) != width:
            raise LutError(f"line {n}: expected {width} numbers, got {len(dec)}")
        vals = [float(v) for v in dec]
        segs.append(PwlSegment(*vals) if method == "pwl" else SoiSegment(*vals))
    return LutTable(curve, method, tuple(segs), (lo, hi),
                    float(meta["sat_low"]), float(meta["sat_high"]))


def fx_error_table(lut: LutTable, xs: Sequence[float]):
    """Rows of (x, exact, interpolated, fixed-point, err_interp%, err_fx%)."""
    rows = []
    for x in xs:
        e = float(lut.curve(x))
        a = eval_lut(lut, x)
        f = eval_fx(lut, fxp.encode(x, signed=True)).value.value
        # the fixed-point error is measured at the input the datapath saw
        eq = float(lut.curve(fxp.encode(x, signed=True).value))
        rows.append((x, e, a, f, abs(a - e) / abs(e) * 100, abs(f - eq) / abs(eq) * 100))
    return rows



def tabulated_inputs() -> list[float]:
    """Probe inputs used for the fixed-point error tables."""
    return [0.0125, 0.025, 0.0375, 0.05, 0.0625, 0.5, 1.0, 2.0, 3.0, 4.0, 4.9]


def clocks_summary(lut: LutTable) -> int:
    """Worst-case clocks for one fixed-point evaluation over the table domain."""
    worst = 0
    lo = fxp.encode(lut.domain[0], signed=True).int_value
    hi = fxp.encode(lut.domain[1], signed=True).int_value
    for q in range(lo, hi + 1, max(1, (hi - lo) // 512)):
        worst = max(worst, eval_fx(lut, fxp.sfx(q)).clocks)
    return worst


def max_second_derivative(f: Callable, a: float, b: float, n: int = 64) -> float:
    xs = np.linspace(a, b, n)
    h = 1e-4
    d2 = (f(xs + h) - 2 * f(xs) + f(xs - h)) / (h * h)
    return float(np.max(np.abs(d2)))


def pwl_error_bound(f: Callable, x1: float, x2: float) -> float:
    """Classic interpolation bound max|f''| * dx^2 / 8 on one segment."""
    return max_second_derivative(f, x1, x2) * (x2 - x1) ** 2 / 8


__all__ = [
    "Curve", "SIGMOID", "TANH", "resonator_curve", "curve_by_name",
    "PwlSegment", "SoiSegment", "LutTable", "LutError", "build_lut",
    "eval_lut", "eval_fx", "FxEval", "audit_error", "audit_grid",
    "canonical_breakpoints", "canonical_lut", "uniform_breakpoints",
    "nonuniform_breakpoints", "storage_bytes", "dump_lut", "load_lut",
    "soi_coefficients", "fx_error_table",
]
