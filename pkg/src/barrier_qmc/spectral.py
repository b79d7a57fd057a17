"""Low end of the spectrum of the interpolating Hamiltonian.

Only the ground energy and the first excited energy are ever needed, so the
eigensolver is Sturm-sequence bisection restricted to the two lowest
eigenvalues: each bisection step costs O(n), which keeps gap scans cheap even
for matrices with thousands of rows.  `minimize_gap` locates the minimum
spectral gap over s with a coarse scan followed by golden-section refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .problem import ProblemInstance, TridiagonalOperator, tridiagonal_coefficients

__all__ = [
    "DegenerateGapError",
    "BoundaryMinimumError",
    "GapProfile",
    "ScheduleGaps",
    "sturm_count",
    "lowest_two_eigenvalues",
    "all_eigenvalues",
    "gap_at",
    "gap_from_operator",
    "minimize_gap",
    "schedule_gap_table",
    "write_gap_profile_csv",
]

# Gap below this fraction of the spectral span is treated as a numerical
# fault: the model guarantees a strictly positive gap.
_DEGENERACY_FRACTION = 1e-13


class DegenerateGapError(RuntimeError):
    """E1 - E0 fell below the numerical degeneracy floor."""


class BoundaryMinimumError(RuntimeError):
    """Coarse-scan minimum sits on the s-grid boundary and cannot be bracketed."""


@dataclass(frozen=True)
class GapProfile:
    """Coarse gap curve of one instance plus the refined minimum."""

    s_values: np.ndarray
    ground_energy: np.ndarray
    gap: np.ndarray
    s_min: float
    g_min: float


@dataclass(frozen=True)
class ScheduleGaps:
    """Ground energy and gap tabulated on an annealing schedule grid."""

    s_values: np.ndarray
    ground: np.ndarray
    gap: np.ndarray

    def __len__(self) -> int:
        return self.s_values.size


def _spectral_span(op: TridiagonalOperator) -> float:
    radius = np.zeros(op.size)
    radius[:-1] += np.abs(op.off_diagonal)
    radius[1:] += np.abs(op.off_diagonal)
    return float(np.max(op.diagonal + radius) - np.min(op.diagonal - radius))


def sturm_count(op: TridiagonalOperator, lam: float) -> int:
    """Number of eigenvalues of op strictly below lam."""
    off2 = op.off_diagonal * op.off_diagonal
    pivmin = _kernels._SAFMIN * max(float(off2.max()) if off2.size else 0.0, 1.0)
    return int(_kernels.sturm_count(op.diagonal, off2, lam, pivmin))


def lowest_two_eigenvalues(op: TridiagonalOperator) -> tuple[float, float]:
    e0, e1 = _kernels.lowest_two(op.diagonal, op.off_diagonal)
    return float(e0), float(e1)


def all_eigenvalues(op: TridiagonalOperator) -> np.ndarray:
    """Every eigenvalue by repeated bisection; intended for small operators."""
    off2 = op.off_diagonal * op.off_diagonal
    pivmin = _kernels._SAFMIN * max(float(off2.max()) if off2.size else 0.0, 1.0)
    radius = np.zeros(op.size)
    radius[:-1] += np.abs(op.off_diagonal)
    radius[1:] += np.abs(op.off_diagonal)
    lo = float(np.min(op.diagonal - radius))
    hi = float(np.max(op.diagonal + radius))
    span = hi - lo
    if span <= 0.0:
        return np.full(op.size, op.diagonal[0])
    lo -= 1e-12 * span
    hi += 1e-12 * span
    tol = 1e-16 * span
    out = np.empty(op.size)
    for k in range(op.size):
        out[k] = _kernels._kth_eigenvalue(op.diagonal, off2, k, lo, hi, pivmin, tol)
    return np.sort(out)


class _GapEvaluator:
    """Per-instance cache so repeated s-evaluations skip array rebuilds."""

    def __init__(self, inst: ProblemInstance):
        n = inst.n
        self._cost = inst.cost_table
        self._half_n = n / 2.0
        h = np.arange(n, dtype=np.float64)
        self._off0 = -0.5 * np.sqrt((h + 1.0) * (n - h))
        self._span0 = None

    def energies(self, s: float) -> tuple[float, float]:
        diag = (1.0 - s) * self._half_n + s * self._cost
        off = (1.0 - s) * self._off0
        e0, e1 = _kernels.lowest_two(diag, off)
        return float(e0), float(e1)

    def gap(self, s: float) -> float:
        e0, e1 = self.energies(s)
        return e1 - e0


def gap_from_operator(op: TridiagonalOperator) -> tuple[float, float]:
    """Ground energy and gap of one operator, with the degeneracy guard."""
    e0, e1 = lowest_two_eigenvalues(op)
    gap = e1 - e0
    span = _spectral_span(op)
    if span <= 0.0 or gap < _DEGENERACY_FRACTION * span:
        raise DegenerateGapError(
            f"gap {gap:g} is below the degeneracy floor; "
            "the symmetric-subspace ground state should be simple"
        )
    return e0, gap


def gap_at(inst: ProblemInstance, s: float) -> tuple[float, float]:
    """Ground energy and spectral gap of the instance at s."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s} outside [0, 1]")
    return gap_from_operator(tridiagonal_coefficients(inst, s))


_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0
_INVPHI2 = (3.0 - math.sqrt(5.0)) / 2.0


def _golden_refine(f, a: float, b: float, tol: float) -> tuple[float, float]:
    """Golden-section minimum of f on [a, b]; returns the best evaluated point."""
    h = b - a
    c = a + _INVPHI2 * h
    d = a + _INVPHI * h
    fc = f(c)
    fd = f(d)
    best_s, best_g = (c, fc) if fc <= fd else (d, fd)
    while h > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            h = b - a
            c = a + _INVPHI2 * h
            fc = f(c)
            if fc < best_g:
                best_s, best_g = c, fc
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + _INVPHI * h
            fd = f(d)
            if fd < best_g:
                best_s, best_g = d, fd
    return best_s, best_g


def minimize_gap(inst: ProblemInstance, coarse_step: float = 1e-3,
                 refine_tol: float = 1e-6) -> GapProfile:
    """Locate min_s gap(s) by coarse scan plus golden-section refinement.

    The coarse grid guards against the gap curve having a secondary dip that
    a pure local search would miss; refinement then narrows the bracket
    around the grid minimum until it is tighter than refine_tol in s.
    """
    if not 0.0 < coarse_step <= 0.01:
        raise ValueError(f"coarse_step={coarse_step} outside (0, 0.01]")
    if not refine_tol > 0.0:
        raise ValueError(f"refine_tol={refine_tol} must be positive")
    ev = _GapEvaluator(inst)
    steps = round(1.0 / coarse_step)
    s_values = np.linspace(0.0, 1.0, steps + 1)
    ground = np.empty(steps + 1)
    gap = np.empty(steps + 1)
    for i, s in enumerate(s_values):
        ground[i], e1 = ev.energies(s)
        gap[i] = e1 - ground[i]
    i_min = int(np.argmin(gap))
    if i_min == 0 or i_min == steps:
        raise BoundaryMinimumError(
            f"coarse minimum at s={s_values[i_min]:g} sits on the scan boundary"
        )
    s_best, g_best = _golden_refine(ev.gap, s_values[i_min - 1], s_values[i_min + 1], refine_tol)
    if gap[i_min] < g_best:
        s_best, g_best = float(s_values[i_min]), float(gap[i_min])
    return GapProfile(s_values=s_values, ground_energy=ground, gap=gap,
                      s_min=float(s_best), g_min=float(g_best))


@lru_cache(maxsize=128)
def _schedule_gap_table(inst: ProblemInstance, steps: int) -> ScheduleGaps:
    ev = _GapEvaluator(inst)
    s_values = np.array([i / steps for i in range(steps + 1)])
    ground = np.empty(steps + 1)
    gap = np.empty(steps + 1)
    for i, s in enumerate(s_values):
        ground[i], e1 = ev.energies(s)
        gap[i] = e1 - ground[i]
    for arr in (s_values, ground, gap):
        arr.flags.writeable = False
    return ScheduleGaps(s_values=s_values, ground=ground, gap=gap)


def schedule_gap_table(inst: ProblemInstance, delta_s: float) -> ScheduleGaps:
    """Ground energy and gap at every multiple of delta_s, memoized."""
    steps = round(1.0 / delta_s)
    if steps < 1 or abs(steps * delta_s - 1.0) > 1e-9:
        raise ValueError(f"1/delta_s must be an integer, got delta_s={delta_s}")
    return _schedule_gap_table(inst, steps)


def write_gap_profile_csv(f, inst: ProblemInstance, profile: GapProfile) -> None:
    """Gap curve as CSV with a one-line instance/minimum metadata header."""
    f.write(
        f"# n={inst.n} alpha={inst.alpha!r} c={inst.c!r} "
        f"s_min={profile.s_min!r} g_min={profile.g_min!r}\n"
    )
    f.write("s,ground_energy,gap\n")
    for s, e0, g in zip(profile.s_values, profile.ground_energy, profile.gap):
        f.write(f"{float(s)!r},{float(e0)!r},{float(g)!r}\n")
