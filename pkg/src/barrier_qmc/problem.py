"""Hamming-weight cost landscape with a rectangular barrier.

The cost of an n-bit string depends only on its Hamming weight h.  The base
cost is h itself; weights strictly inside an open window centered on n/4 pay
an extra penalty of n**alpha.  The window half-width is c*n**alpha/2, so a
single exponent alpha scales both the height and the width of the barrier
while c tunes the width independently of n.

The landscape has its global minimum at h = 0 and a second, false minimum
just above the window, which an annealer has to tunnel through.  Because the
cost is symmetric under bit permutations, the interpolating Hamiltonian
(transverse mixer at s=0, cost diagonal at s=1) block-diagonalizes over
Hamming weight and is tridiagonal on the (n+1)-dimensional symmetric
subspace; `tridiagonal_coefficients` builds that operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "ProblemInstance",
    "TridiagonalOperator",
    "tridiagonal_coefficients",
    "valid_sizes",
]


@dataclass(frozen=True)
class ProblemInstance:
    """One (n, alpha, c) barrier problem.

    Any n >= 1 is constructible so that small toy systems can be fed to the
    brute-force oracles.  The size rules used by the scaling studies
    (n divisible by 4, n >= 8, barrier width below n/2) are reported by
    `validity_errors` instead of being enforced at construction; `valid_sizes`
    only ever yields sizes that pass all of them.
    """

    n: int
    alpha: float
    c: float

    def __post_init__(self) -> None:
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c!r}")

    @property
    def height(self) -> float:
        """Barrier height n**alpha."""
        return float(self.n) ** self.alpha

    @property
    def width(self) -> float:
        """Barrier width c * n**alpha."""
        return self.c * self.height

    @property
    def window_lo(self) -> float:
        return self.n / 4 - self.width / 2

    @property
    def window_hi(self) -> float:
        return self.n / 4 + self.width / 2

    def validity_errors(self) -> tuple[str, ...]:
        """Size rules for the scaling studies; empty tuple when all hold."""
        errors = []
        if self.n < 8:
            errors.append(f"n={self.n} is below the minimum size 8")
        if self.n % 4 != 0:
            errors.append(f"n={self.n} is not divisible by 4, so the barrier is not centered on an integer weight")
        if not self.width < self.n / 2:
            errors.append(
                f"barrier width c*n^alpha = {self.width:g} is not below n/2 = {self.n / 2:g}"
            )
        return tuple(errors)

    @property
    def is_valid(self) -> bool:
        return not self.validity_errors()

    def barrier(self, z: int) -> float:
        """Extra cost at weight z: height inside the open window, else 0."""
        if not 0 <= z <= self.n:
            raise ValueError(f"weight {z} outside [0, {self.n}]")
        if self.window_lo < z < self.window_hi:
            return self.height
        return 0.0

    def cost(self, h: int) -> float:
        """Total cost at weight h: h plus the barrier."""
        if not 0 <= h <= self.n:
            raise ValueError(f"weight {h} outside [0, {self.n}]")
        return h + self.barrier(h)

    @cached_property
    def cost_table(self) -> np.ndarray:
        """cost(h) for h = 0..n as a read-only float array."""
        h = np.arange(self.n + 1, dtype=np.float64)
        values = h.copy()
        inside = (h > self.window_lo) & (h < self.window_hi)
        values[inside] += self.height
        values.flags.writeable = False
        return values


@dataclass(frozen=True)
class TridiagonalOperator:
    """Symmetric tridiagonal operator, single off-diagonal band stored once."""

    diagonal: np.ndarray
    off_diagonal: np.ndarray

    def __post_init__(self) -> None:
        diag = np.ascontiguousarray(self.diagonal, dtype=np.float64)
        off = np.ascontiguousarray(self.off_diagonal, dtype=np.float64)
        if diag.ndim != 1 or off.ndim != 1 or diag.size != off.size + 1:
            raise ValueError(
                f"need len(diagonal) == len(off_diagonal) + 1, got {diag.size} and {off.size}"
            )
        object.__setattr__(self, "diagonal", diag)
        object.__setattr__(self, "off_diagonal", off)

    @property
    def size(self) -> int:
        return self.diagonal.size


def tridiagonal_coefficients(inst: ProblemInstance, s: float) -> TridiagonalOperator:
    """Symmetric-subspace Hamiltonian at interpolation parameter s.

    diagonal[h]     = (1-s) n/2 + s cost(h)
    off_diagonal[h] = -(1-s)/2 * sqrt((h+1)(n-h))
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s} outside [0, 1]")
    n = inst.n
    diag = (1.0 - s) * n / 2 + s * inst.cost_table
    h = np.arange(n, dtype=np.float64)
    off = -0.5 * (1.0 - s) * np.sqrt((h + 1.0) * (n - h))
    return TridiagonalOperator(diag, off)


def _width_steps(m: int, alpha: float, c: float) -> int:
    return math.floor(1.0 + c * float(m) ** alpha)


def valid_sizes(alpha: float, c: float, n_min: int, n_max: int) -> list[int]:
    """Problem sizes in [n_min, n_max] usable for gap-scaling studies.

    Keeps n divisible by 4 (and >= 8) where the integer barrier width has
    just increased relative to n-4 and is still below n/2.  Sampling only at
    width increments avoids the sawtooth that integer widths superimpose on
    the gap-versus-n trend.
    """
    sizes = []
    start = max(8, n_min)
    start += (-start) % 4
    for n in range(start, n_max + 1, 4):
        if _width_steps(n, alpha, c) <= _width_steps(n - 4, alpha, c):
            continue
        if not c * float(n) ** alpha < n / 2:
            continue
        sizes.append(n)
    return sizes
