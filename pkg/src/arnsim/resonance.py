"""Exact ARN resonator mathematics.

A resonator passes its input through a shifted sigmoid
``X = 1 / (1 + exp(-rho * (x - x_m)))`` and outputs ``X * (1 - X)``, a bell
with peak 1/4 at the resonant input ``x_m``. These functions are the
reference that the fixed-point paths are checked against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Output of an unscaled resonator at its half-power points.
HALF_POWER_T = 0.176
# Exact half-power value sqrt(0.25**2 / 2), for comparison with HALF_POWER_T.
HALF_POWER_EXACT = math.sqrt(0.25 ** 2 / 2)
# z at which X(1-X) drops to HALF_POWER_T, with X = sigmoid(z):
# X(1-X) = 1 / (2 + 2 cosh z), so cosh z = 1/(2T) - 1.
COVERAGE_CONST = math.acosh(1.0 / (2.0 * HALF_POWER_T) - 1.0)  # 1.2198...
# Published rounding of COVERAGE_CONST / sqrt(ln 2); used by rho_from_sigma.
RHO_SIGMA_CONST = 1.4652
# Half-power offset of a Gaussian in units of sigma: sqrt(ln 2).
GAUSS_HALF_POWER = math.sqrt(math.log(2.0))  # 0.8325...


@dataclass(frozen=True)
class ResonatorParams:
    rho: float
    x_m: float
    k: float = 1.0
    T: float = HALF_POWER_T

    def __post_init__(self) -> None:
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho!r}")
        if not self.k > 0:
            raise ValueError(f"k must be positive, got {self.k!r}")
        if not 0 < self.T < 1:
            raise ValueError(f"threshold must lie in (0, 1), got {self.T!r}")


@dataclass(frozen=True)
class Coverage:
    lo: float
    hi: float

    @property
    def center(self) -> float:
        return (self.lo + self.hi) / 2

    @property
    def offset(self) -> float:
        return (self.hi - self.lo) / 2

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class NodeStats:
    mean: float
    sigma: float
    alpha: float = GAUSS_HALF_POWER

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")


def sigmoid(z):
    return 1.0 / (1.0 + np.exp(-np.asarray(z, dtype=float)))


def resonate_basic(x, k: float = 1.0):
    """The quadratic resonator ``x * (k - x)``, peak ``k**2 / 4`` at ``k/2``."""
    return x * (k - x)


def resonate(x, p: ResonatorParams):
    X = sigmoid(p.rho * (np.asarray(x, dtype=float) - p.x_m))
    out = X * (1.0 - X)
    return float(out) if np.ndim(out) == 0 else out


def coverage_bounds(rho: float, x_m: float = 0.0) -> Coverage:
    """Half-power coverage ``x_m -/+ 1.2198 / rho``."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    off = COVERAGE_CONST / rho
    return Coverage(x_m - off, x_m + off)


def coverage_scaled_input(T: float, t: float) -> Coverage:
    """Coverage of ``y = X(1 - X)`` with ``X = t*x``: roots of ``t*x*(1 - t*x) = T``."""
    if t == 0:
        raise ValueError("t must be nonzero")
    if not 0 < T <= 0.25:
        raise ValueError(f"no real coverage for T={T!r}; need 0 < T <= 0.25")
    r = math.sqrt(1.0 - 4.0 * T)
    a, b = (1 - r) / (2 * t), (1 + r) / (2 * t)
    return Coverage(min(a, b), max(a, b))


def rho_from_sigma(sigma: float) -> float:
    """Sharpness whose coverage matches the half-power width of a Gaussian."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return RHO_SIGMA_CONST / sigma


def coverage_from_stats(s: NodeStats) -> Coverage:
    return Coverage(s.mean - s.alpha * s.sigma, s.mean + s.alpha * s.sigma)


def gaussian(x, mean: float, sigma: float):
    x = np.asarray(x, dtype=float)
    return np.exp(-((x - mean) ** 2) / (2 * sigma * sigma)) / (sigma * math.sqrt(2 * math.pi))


def aggregate(xs: Sequence[float], params: Sequence[ResonatorParams], k: float = 1.0,
              normalize: bool = True) -> float:
    """Node output ``4/(N k^2) * sum X_i (k - X_i)``.

    With ``normalize=False`` the plain sum of the resonator outputs is
    returned instead.
    """
    if len(xs) == 0:
        raise ValueError("aggregate needs at least one input")
    if len(xs) != len(params):
        raise ValueError(f"{len(xs)} inputs but {len(params)} resonators")
    total = 0.0
    for x, p in zip(xs, params):
        X = float(sigmoid(p.rho * (x - p.x_m)))
        total += X * (k - X)
    if not normalize:
        return total
    return 4.0 * total / (len(xs) * k * k)
