"""Path-integral Monte Carlo annealer on an n x T lattice of classical bits.

The quantum partition function at inverse temperature beta is discretized
into T imaginary-time slices with periodic boundary conditions.  Each slice
carries the diagonal cost weight exp(-(beta/T)((1-s)n/2 + s f(w))) and each
of the n*T periodic links contributes 2cosh(a) when the two adjacent bits
agree or 2sinh(a) when they differ, with a = beta(1-s)/(2T).  Both factors
are nonnegative on 0 <= s <= 1, so the weights form a proper Boltzmann
distribution that single-bit Metropolis sweeps can sample.

The annealing schedule steps s from 0 to 1 in fixed increments of delta_s
and holds each s until the energy estimate, averaged over a trailing window
of sweeps, comes within `threshold` spectral gaps of the true ground energy.
Ground energies and gaps are supplied from the exact tridiagonal solver;
that oracle information is deliberate, since the sweep counts measure how
long equilibration takes, not how the sampler would detect it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels
from .problem import ProblemInstance
from .spectral import ScheduleGaps, schedule_gap_table

__all__ = [
    "QmcParams",
    "Lattice",
    "SweepSeries",
    "AnnealStepRecord",
    "AnnealTrace",
    "link_factor",
    "log_weight",
    "flip_log_ratio",
    "metropolis_sweep",
    "run_sweeps",
    "estimate_diag_energy",
    "estimate_offdiag_energy",
    "anneal",
    "write_anneal_trace_csv",
]

# largest per-call uniform buffer for batched sweeps, in doubles
_MAX_BUFFER = 4_000_000


@dataclass(frozen=True)
class QmcParams:
    """Sampler and schedule settings for one annealing run.

    trotter_slices is usually 4n (16n when extra Trotter accuracy is
    needed); `for_size` builds that for you.  threshold is the convergence
    band in units of the spectral gap; values >= 1 make every s advance at
    the first evaluation, which is occasionally useful for smoke tests.
    """

    trotter_slices: int
    beta: float = 32.0
    delta_s: float = 0.01
    window: int = 100
    threshold: float = 0.4
    seed: int = 0
    s_report_lo: float = 0.3
    s_report_hi: float = 0.5
    sweep_cap: int = 1_000_000
    record_energy_series: bool = False

    def __post_init__(self) -> None:
        if self.trotter_slices < 2:
            raise ValueError(f"need at least 2 slices, got {self.trotter_slices}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not 0 < self.delta_s <= 0.1:
            raise ValueError(f"delta_s={self.delta_s} outside (0, 0.1]")
        steps = round(1.0 / self.delta_s)
        if steps < 1 or abs(steps * self.delta_s - 1.0) > 1e-9:
            raise ValueError(f"1/delta_s must be an integer, got delta_s={self.delta_s}")
        if self.window < 1:
            raise ValueError(f"window must be at least 1, got {self.window}")
        if not self.threshold > 0:
            raise ValueError(f"threshold must be positive, got {self.threshold}")
        if not 0.0 <= self.s_report_lo <= self.s_report_hi <= 1.0:
            raise ValueError(
                f"report window [{self.s_report_lo}, {self.s_report_hi}] invalid"
            )
        if self.sweep_cap < 1:
            raise ValueError(f"sweep_cap must be positive, got {self.sweep_cap}")

    @classmethod
    def for_size(cls, n: int, trotter_mult: int = 4, **overrides) -> "QmcParams":
        return cls(trotter_slices=trotter_mult * n, **overrides)

    @property
    def schedule_steps(self) -> int:
        return round(1.0 / self.delta_s)


class Lattice:
    """n x T bit configuration with cached per-slice Hamming weights.

    bits is stored slice-major with shape (T, n); slice tau+1 wraps to
    slice 0.  slice_weights must always equal the recomputed row sums; the
    sweep kernels maintain that incrementally.
    """

    __slots__ = ("bits", "slice_weights")

    def __init__(self, bits: np.ndarray):
        bits = np.ascontiguousarray(bits, dtype=np.uint8)
        if bits.ndim != 2 or bits.shape[0] < 2 or bits.shape[1] < 1:
            raise ValueError(f"bits must be (T>=2, n>=1), got shape {bits.shape}")
        if not np.isin(bits, (0, 1)).all():
            raise ValueError("bits must be 0/1 valued")
        self.bits = bits
        self.slice_weights = bits.sum(axis=1, dtype=np.int64)

    @classmethod
    def random(cls, n: int, trotter_slices: int, rng: np.random.Generator) -> "Lattice":
        return cls(rng.integers(0, 2, size=(trotter_slices, n), dtype=np.uint8))

    @classmethod
    def all_zero(cls, n: int, trotter_slices: int) -> "Lattice":
        return cls(np.zeros((trotter_slices, n), dtype=np.uint8))

    @property
    def n(self) -> int:
        return self.bits.shape[1]

    @property
    def trotter_slices(self) -> int:
        return self.bits.shape[0]

    def copy(self) -> "Lattice":
        return Lattice(self.bits.copy())

    def recomputed_weights(self) -> np.ndarray:
        return self.bits.sum(axis=1, dtype=np.int64)

    def unequal_links(self) -> int:
        """Total unequal bits summed over all T periodic links."""
        return int((self.bits != np.roll(self.bits, -1, axis=0)).sum())


def _a_of(s: float, params: QmcParams) -> float:
    return params.beta * (1.0 - s) / (2.0 * params.trotter_slices)


@dataclass(frozen=True)
class _SweepConstants:
    coef_diag: float   # beta*s/T, multiplies f(w') - f(w) in the flip ratio
    log_tanh_a: float
    s1_mode: bool
    ed_const: float
    ed_scale: float
    eo_equal: float
    eo_unequal: float


def _sweep_constants(inst: ProblemInstance, s: float, params: QmcParams) -> _SweepConstants:
    n, t, beta = inst.n, params.trotter_slices, params.beta
    a = _a_of(s, params)
    coef_diag = beta * s / t
    if a > 0.0:
        tanh_a = math.tanh(a)
        return _SweepConstants(
            coef_diag=coef_diag,
            log_tanh_a=math.log(tanh_a),
            s1_mode=False,
            ed_const=(1.0 - s) * n / 2,
            ed_scale=s / t,
            eo_equal=-(1.0 - s) * tanh_a / (2.0 * t),
            eo_unequal=-(1.0 - s) / (2.0 * t * tanh_a),
        )
    # a -> 0+ limit: unequal links are forbidden and each residual one
    # contributes -1/beta to the off-diagonal estimate
    return _SweepConstants(
        coef_diag=coef_diag,
        log_tanh_a=0.0,
        s1_mode=True,
        ed_const=(1.0 - s) * n / 2,
        ed_scale=s / t,
        eo_equal=0.0,
        eo_unequal=-1.0 / beta,
    )


def link_factor(equal: bool, s: float, params: QmcParams) -> float:
    """Weight of one periodic link: 2cosh(a) for equal bits, 2sinh(a) otherwise."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s} outside [0, 1]")
    a = _a_of(s, params)
    return 2.0 * math.cosh(a) if equal else 2.0 * math.sinh(a)


def log_weight(lat: Lattice, s: float, inst: ProblemInstance, params: QmcParams) -> float:
    """Log Boltzmann weight of the full lattice; -inf flags zero weight at s=1."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s} outside [0, 1]")
    n, t, beta = inst.n, params.trotter_slices, params.beta
    if (lat.n, lat.trotter_slices) != (n, t):
        raise ValueError("lattice shape does not match instance/params")
    f_sum = float(inst.cost_table[lat.slice_weights].sum())
    diag = -(beta / t) * ((1.0 - s) * n / 2 * t + s * f_sum)
    unequal = lat.unequal_links()
    n_links = n * t
    a = _a_of(s, params)
    if a > 0.0:
        log_cosh = a + math.log1p(math.exp(-2.0 * a))
        log_sinh = a + math.log1p(-math.exp(-2.0 * a))
        return diag + (n_links - unequal) * log_cosh + unequal * log_sinh
    if unequal > 0:
        return -math.inf
    return diag + n_links * math.log(2.0)


def flip_log_ratio(lat: Lattice, tau: int, d: int, s: float,
                   inst: ProblemInstance, params: QmcParams) -> float:
    """log weight(flipped) - log weight(current) for flipping bit (tau, d).

    Touches only the flipped site, its two time neighbors and the cached
    slice weight.  At s=1 the ratio is resolved in the a -> 0+ limit and can
    be +-inf.
    """
    t, n = lat.trotter_slices, lat.n
    if not (0 <= tau < t and 0 <= d < n):
        raise ValueError(f"site ({tau}, {d}) outside lattice")
    c = _sweep_constants(inst, s, params)
    w = int(lat.slice_weights[tau])
    b = int(lat.bits[tau, d])
    wnew = w - 1 if b == 1 else w + 1
    df = float(inst.cost_table[wnew] - inst.cost_table[w])
    link_delta = 0
    link_delta += 1 if lat.bits[(tau - 1) % t, d] == b else -1
    link_delta += 1 if lat.bits[(tau + 1) % t, d] == b else -1
    if c.s1_mode:
        if link_delta > 0:
            return -math.inf
        if link_delta < 0:
            return math.inf
        return -c.coef_diag * df
    return -c.coef_diag * df + c.log_tanh_a * link_delta


def _acc_from(lat: Lattice, inst: ProblemInstance) -> np.ndarray:
    """Kernel accumulator [sum_tau f(w_tau), unequal links, accepted]."""
    return np.array([
        float(inst.cost_table[lat.slice_weights].sum()),
        float(lat.unequal_links()),
        0.0,
    ])


def metropolis_sweep(lat: Lattice, s: float, inst: ProblemInstance,
                     params: QmcParams, rng: np.random.Generator) -> int:
    """One raster sweep of n*T single-bit proposals; returns accepted count."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s} outside [0, 1]")
    c = _sweep_constants(inst, s, params)
    acc = _acc_from(lat, inst)
    uniforms = rng.random(lat.n * lat.trotter_slices)
    _kernels.metropolis_sweep(lat.bits, lat.slice_weights, inst.cost_table,
                              acc, uniforms, c.coef_diag, c.log_tanh_a, c.s1_mode)
    return int(acc[2])


@dataclass(frozen=True)
class SweepSeries:
    """Per-sweep energy estimates and acceptance counts from a fixed-length run."""

    energies: np.ndarray
    accepts: np.ndarray
    configs: Optional[np.ndarray] = None


def run_sweeps(lat: Lattice, s: float, inst: ProblemInstance, params: QmcParams,
               rng: np.random.Generator, n_sweeps: int,
               record_configs: bool = False) -> SweepSeries:
    """Run a fixed number of sweeps at one s, recording per-sweep statistics.

    With record_configs the post-sweep lattice is packed into an integer per
    sweep (bit tau*n + d of the integer holds site (tau, d)), which needs
    n*T <= 62.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s} outside [0, 1]")
    n, t = lat.n, lat.trotter_slices
    if record_configs and n * t > 62:
        raise ValueError("config recording needs n*T <= 62")
    c = _sweep_constants(inst, s, params)
    acc = _acc_from(lat, inst)
    energies = np.empty(n_sweeps)
    accepts = np.empty(n_sweeps, dtype=np.int64)
    configs = np.empty(n_sweeps if record_configs else 1, dtype=np.int64)
    stride = n * t
    chunk = max(1, min(n_sweeps, _MAX_BUFFER // stride))
    done = 0
    while done < n_sweeps:
        k = min(chunk, n_sweeps - done)
        uniforms = rng.random(k * stride)
        _kernels.sweep_batch(
            lat.bits, lat.slice_weights, inst.cost_table, acc, uniforms, k,
            c.coef_diag, c.log_tanh_a, c.s1_mode,
            c.ed_const, c.ed_scale, c.eo_equal, c.eo_unequal,
            energies[done:done + k], accepts[done:done + k],
            configs[done:done + k] if record_configs else configs,
            record_configs,
        )
        done += k
    return SweepSeries(energies=energies, accepts=accepts,
                       configs=configs if record_configs else None)


def estimate_diag_energy(lat: Lattice, s: float, inst: ProblemInstance,
                         params: QmcParams) -> float:
    """Slice-averaged diagonal energy (1/T) sum_tau [(1-s)n/2 + s f(w_tau)]."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s} outside [0, 1]")
    t = params.trotter_slices
    f_sum = float(inst.cost_table[lat.slice_weights].sum())
    return (1.0 - s) * lat.n / 2 + s * f_sum / t


def estimate_offdiag_energy(lat: Lattice, s: float, inst: ProblemInstance,
                            params: QmcParams) -> float:
    """Link-averaged off-diagonal energy estimate.

    Each of the n dimensions of a link contributes tanh(a) when the adjacent
    bits agree and coth(a) when they differ, scaled by -(1-s)/2 and averaged
    over the T links.
    """
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s={s} outside [0, 1]")
    n, t = lat.n, lat.trotter_slices
    unequal = lat.unequal_links()
    a = _a_of(s, params)
    if a == 0.0:
        if unequal > 0:
            raise ValueError("zero-weight lattice: unequal links at s=1")
        return 0.0
    tanh_a = math.tanh(a)
    n_links = n * t
    return -(1.0 - s) / (2.0 * t) * ((n_links - unequal) * tanh_a + unequal / tanh_a)


@dataclass(frozen=True)
class AnnealStepRecord:
    """Outcome of one schedule step.

    sweeps is the reported equilibration count: when the convergence band is
    already met at the first evaluation (after `window` sweeps), it is
    back-extrapolated to the shortest prefix of sweeps whose running mean
    met the band, and `extrapolated` is set so analyses can exclude such
    points.  sweeps_run counts the sweeps actually executed at this s,
    which is at least `window` for converged steps; it measures the raw
    equilibration work per step, while `sweeps` is the reported cost.
    """

    s: float
    sweeps: int
    sweeps_run: int
    energy: float
    acceptance_fraction: float
    extrapolated: bool
    timed_out: bool


@dataclass(frozen=True)
class AnnealTrace:
    """Per-s records of one annealing run plus the reported total."""

    records: tuple[AnnealStepRecord, ...]
    total_report_sweeps: int
    timed_out_at: Optional[float] = None
    energy_series: Optional[dict[int, np.ndarray]] = field(default=None, repr=False)

    @property
    def completed(self) -> bool:
        return self.timed_out_at is None


def _report_index_range(params: QmcParams) -> tuple[int, int]:
    steps = params.schedule_steps
    i_lo = math.ceil(params.s_report_lo * steps - 1e-9)
    i_hi = math.floor(params.s_report_hi * steps + 1e-9)
    return i_lo, i_hi


def anneal(inst: ProblemInstance, params: QmcParams,
           gaps: Optional[ScheduleGaps] = None,
           rng: Optional[np.random.Generator] = None) -> AnnealTrace:
    """Anneal one lattice from s=0 to s=1 against the exact-gap schedule.

    The lattice starts from independent uniform random bits; the s=0 step
    doubles as thermalization because the schedule cannot advance before the
    convergence band is met.  Identical (instance, params, seed) inputs
    reproduce the trace exactly.
    """
    n, t = inst.n, params.trotter_slices
    steps = params.schedule_steps
    if gaps is None:
        gaps = schedule_gap_table(inst, params.delta_s)
    if len(gaps) != steps + 1:
        raise ValueError(
            f"gap table has {len(gaps)} entries, schedule needs {steps + 1}"
        )
    if rng is None:
        rng = np.random.Generator(np.random.Philox(params.seed))
    lat = Lattice.random(n, t, rng)
    fvals = inst.cost_table
    window = params.window
    cap = params.sweep_cap
    nT = n * t
    hist = np.empty(cap)
    ubuf = np.empty(nT)
    records: list[AnnealStepRecord] = []
    series: dict[int, np.ndarray] = {}
    timed_out_at: Optional[float] = None

    for i in range(steps + 1):
        s = i / steps
        c = _sweep_constants(inst, s, params)
        acc = _acc_from(lat, inst)
        band = params.threshold * gaps.gap[i]
        egs = gaps.ground[i]
        m = 0
        win_sum = 0.0
        sweeps_used = cap
        energy_rec = math.nan
        extrapolated = False
        converged = False
        while m < cap:
            rng.random(out=ubuf)
            _kernels.metropolis_sweep(lat.bits, lat.slice_weights, fvals, acc,
                                      ubuf, c.coef_diag, c.log_tanh_a, c.s1_mode)
            e = (c.ed_const + c.ed_scale * acc[0]
                 + c.eo_equal * (nT - acc[1]) + c.eo_unequal * acc[1])
            hist[m] = e
            m += 1
            win_sum += e
            if m > window:
                win_sum -= hist[m - window - 1]
            if m == window:
                prefix_means = np.cumsum(hist[:window]) / np.arange(1, window + 1)
                ok = np.abs(prefix_means - egs) < band
                if ok[window - 1]:
                    k0 = int(np.argmax(ok))
                    sweeps_used = k0 + 1
                    energy_rec = float(prefix_means[k0])
                    extrapolated = sweeps_used < window
                    converged = True
                    break
            elif m > window:
                mean = win_sum / window
                if abs(mean - egs) < band:
                    sweeps_used = m
                    energy_rec = float(mean)
                    converged = True
                    break
        if not converged:
            timed_out_at = s
            sweeps_used = m
            denom = min(m, window) if m else 1
            energy_rec = float(hist[max(0, m - window):m].sum() / denom) if m else math.nan
        acceptance = acc[2] / (m * nT) if m else 0.0
        records.append(AnnealStepRecord(
            s=s, sweeps=sweeps_used, sweeps_run=m, energy=energy_rec,
            acceptance_fraction=float(acceptance),
            extrapolated=extrapolated, timed_out=not converged,
        ))
        if params.record_energy_series:
            series[i] = hist[:m].copy()
        if not converged:
            break

    i_lo, i_hi = _report_index_range(params)
    total = sum(r.sweeps for j, r in enumerate(records) if i_lo <= j <= i_hi)
    return AnnealTrace(
        records=tuple(records),
        total_report_sweeps=int(total),
        timed_out_at=timed_out_at,
        energy_series=series if params.record_energy_series else None,
    )


def write_anneal_trace_csv(f, inst: ProblemInstance, params: QmcParams,
                           trace: AnnealTrace) -> None:
    """Trace as CSV with full provenance in '#' metadata lines."""
    f.write(
        f"# n={inst.n} alpha={inst.alpha!r} c={inst.c!r} beta={params.beta!r} "
        f"T={params.trotter_slices} seed={params.seed} delta_s={params.delta_s!r} "
        f"window={params.window} threshold={params.threshold!r} "
        f"s_report_lo={params.s_report_lo!r} s_report_hi={params.s_report_hi!r} "
        f"sweep_cap={params.sweep_cap}\n"
    )
    timed = "" if trace.timed_out_at is None else repr(trace.timed_out_at)
    f.write(f"# total_report_sweeps={trace.total_report_sweeps} timed_out_at={timed}\n")
    f.write("s,sweeps,energy,acceptance_fraction,extrapolated,sweeps_run\n")
    for r in trace.records:
        f.write(
            f"{r.s!r},{r.sweeps},{r.energy!r},{r.acceptance_fraction!r},"
            f"{int(r.extrapolated)},{r.sweeps_run}\n"
        )
