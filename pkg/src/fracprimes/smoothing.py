"""C-infinity cutoff windows and a dyadic partition of unity.

The bump is exactly 1 on [1, y], exactly 0 outside [1-delta, y+delta], with
transitions built from the standard smoothstep

    S(t) = f(t) / (f(t) + f(1-t)),   f(t) = exp(-1/t) (t > 0), 0 otherwise,

so every derivative vanishes at the plateau/support boundaries.  The dyadic
partition uses a master window Psi (== 1 on [-1, 1], supported on
[-theta, theta]) and members Psi_D(x) = Psi(x/D) - Psi(theta*x/D) on the
geometric grid D = theta^l; the members telescope to 1 for every x >= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError


def soft_exp(t):
    """exp(-1/t) for t > 0, identically 0 for t <= 0 (scalar or array)."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    # cap the exponent to dodge spurious overflow warnings for tiny t
    out[pos] = np.exp(-1.0 / np.maximum(t[pos], 1e-300))
    return out


def smoothstep(t):
    """C-infinity monotone step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)
    a = soft_exp(t)
    b = soft_exp(1.0 - t)
    denom = np.where(a + b == 0.0, 1.0, a + b)
    return np.where(t <= 0.0, 0.0, np.where(t >= 1.0, 1.0, a / denom))


@dataclass(frozen=True)
class BumpWindow:
    """Smooth cutoff: 1 on [1, y], 0 outside [1-delta, y+delta].

    b0 records the exponent behind delta = (log X)^(-b0) when the window
    comes from a scaled setup; it is metadata only.
    """

    y: float
    delta: float
    b0: float = 1.0

    def __post_init__(self):
        if not self.y > 1:
            raise ArgumentError(f"need y > 1, got y={self.y}")
        if not (0 < self.delta < 0.25):
            raise ArgumentError(f"need delta in (0, 1/4), got {self.delta}")
        if not self.delta < (self.y - 1) / 2:
            raise ArgumentError(
                f"need delta < (y-1)/2 = {(self.y - 1) / 2}, got {self.delta}")
        if not self.b0 >= 1:
            raise ArgumentError(f"need b0 >= 1, got {self.b0}")

    @property
    def support(self):
        return (1.0 - self.delta, self.y + self.delta)


def make_bump(y: float, delta: float, b0: float = 1.0) -> BumpWindow:
    return BumpWindow(y=float(y), delta=float(delta), b0=float(b0))


def eval_bump(w: BumpWindow, x):
    """psi(x); scalar in -> float out, array in -> array out."""
    arr = np.asarray(x, dtype=float)
    rise = smoothstep((arr - (1.0 - w.delta)) / w.delta)
    fall = smoothstep((w.y + w.delta - arr) / w.delta)
    out = np.where(arr < 1.0, rise, np.where(arr > w.y, fall, 1.0))
    if np.ndim(x) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class GridG:
    """The geometric grid {theta^l : l = 0..max_power}."""

    theta: float
    max_power: int

    def __post_init__(self):
        if not self.theta > 1:
            raise ArgumentError(f"need theta > 1, got {self.theta}")
        if self.max_power < 1:
            raise ArgumentError(f"need max_power >= 1, got {self.max_power}")

    def values(self) -> np.ndarray:
        return self.theta ** np.arange(self.max_power + 1, dtype=float)

    def index_of(self, D: float, rtol: float = 1e-9) -> int:
        """Grid index l with theta^l == D, else ArgumentError."""
        if D <= 0:
            raise ArgumentError(f"grid values are positive, got {D}")
        l = round(math.log(D) / math.log(self.theta))
        if 0 <= l <= self.max_power and abs(self.theta ** l - D) <= rtol * D:
            return l
        raise ArgumentError(f"{D} is not on the grid theta^l, theta={self.theta}")


@dataclass(frozen=True)
class DyadicPartition:
    """Partition of unity on the grid; base_window is the master profile."""

    theta: float
    a0: float
    max_power: int
    base_window: str = "smoothstep"   # single master profile; kept for metadata

    def __post_init__(self):
        if not self.theta > 1:
            raise ArgumentError(f"need theta > 1, got {self.theta}")
        if not self.a0 >= 1:
            raise ArgumentError(f"need a0 >= 1, got {self.a0}")
        if self.max_power < 1:
            raise ArgumentError(f"need max_power >= 1, got {self.max_power}")

    @property
    def grid(self) -> GridG:
        return GridG(theta=self.theta, max_power=self.max_power)


def make_partition(theta: float, a0: float, max_power: int) -> DyadicPartition:
    return DyadicPartition(theta=float(theta), a0=float(a0), max_power=int(max_power))


def master_window(theta: float, x):
    """Psi: 1 on [-1, 1], smooth decay to 0 on theta >= |x| > 1."""
    arr = np.abs(np.asarray(x, dtype=float))
    out = smoothstep((theta - arr) / (theta - 1.0))
    out = np.where(arr <= 1.0, 1.0, out)
    if np.ndim(x) == 0:
        return float(out)
    return out


def eval_member(p: DyadicPartition, D: float, x):
    """Psi_D(x) = Psi(x/D) - Psi(theta*x/D), supported on [D/theta, D*theta]."""
    p.grid.index_of(D)  # validates D is on the grid
    arr = np.asarray(x, dtype=float)
    out = master_window(p.theta, arr / D) - master_window(p.theta, p.theta * arr / D)
    if np.ndim(x) == 0:
        return float(out)
    return out


def partition_sum(p: DyadicPartition, x: float) -> float:
    """Sum of the active members at x (direct summation, no telescoping)."""
    if x < 0:
        raise ArgumentError(f"need x >= 0, got {x}")
    if x <= 0:
        return 0.0
    l_star = math.log(x) / math.log(p.theta)
    lo = max(0, math.floor(l_star) - 2)
    hi = min(p.max_power, math.ceil(l_star) + 2)
    total = 0.0
    for l in range(lo, hi + 1):
        total += eval_member(p, p.theta ** l, x)
    return total


# ---------------------------------------------------------------------------
# numerical derivatives (Richardson-extrapolated central differences)

# central stencils of second-order accuracy; offsets symmetric around 0
_STENCILS = {
    1: ((-1, 1), (-0.5, 0.5)),
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    3: ((-2, -1, 1, 2), (-0.5, 1.0, -1.0, 0.5)),
    4: ((-2, -1, 0, 1, 2), (1.0, -4.0, 6.0, -4.0, 1.0)),
    5: ((-3, -2, -1, 1, 2, 3), (-0.5, 2.0, -2.5, 2.5, -2.0, 0.5)),
    6: ((-3, -2, -1, 0, 1, 2, 3), (1.0, -6.0, 15.0, -20.0, 15.0, -6.0, 1.0)),
}


def richardson_derivative(fn, x: float, order: int, h0: float, levels: int = 3) -> float:
    """order-th derivative of fn at x by central differences on steps
    h0, h0/2, ... with Richardson extrapolation across the levels."""
    if order == 0:
        return float(fn(x))
    offs, coefs = _STENCILS[order]
    ests = []
    h = h0
    for _ in range(levels):
        val = sum(c * float(fn(x + o * h)) for o, c in zip(offs, coefs))
        ests.append(val / h ** order)
        h /= 2.0
    # each halving gains a factor 4 in the h^2 error term
    fac = 4.0
    while len(ests) > 1:
        ests = [(fac * b - a) / (fac - 1.0) for a, b in zip(ests, ests[1:])]
        fac *= 4.0
    return ests[0]


def window_derivative(w: BumpWindow, j: int, x: float, h0: float | None = None) -> float:
    """j-th derivative of the bump at x, j <= 6 (numerical)."""
    if not (0 <= j <= 6):
        raise ArgumentError(f"derivative order {j} unsupported (need 0 <= j <= 6)")
    if j == 0:
        return eval_bump(w, float(x))
    if h0 is None:
        h0 = w.delta / 32.0
    return richardson_derivative(lambda t: eval_bump(w, t), float(x), j, h0)
