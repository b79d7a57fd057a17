"""Experiment driver: gap scans, scaling classification and annealing runs.

Subcommands
-----------
gap-scan     g_min versus n for one (alpha, c), with log-log fit residuals.
gap-scaling  residual-curvature classification across a list of alphas.
qmc-run      one annealing run, dumped as a per-s trace.
sweep-curve  mean sweeps-per-s curve over seeded replicas of one instance.
correlate    mean reported sweeps against 1/g_min^2 over an (alpha, c) grid.

Every output is plain CSV with '#'-prefixed metadata lines carrying the full
parameter set and master seed, so any row can be re-run on its own and
re-running a config reproduces its files byte for byte.  Options come from
built-in defaults, then an optional key=value config file, then command-line
flags; later sources win.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .problem import ProblemInstance, valid_sizes
from .qmc import QmcParams, anneal, write_anneal_trace_csv
from .scaling import (ScalingSeries, alpha_transition_scan, loglog_fit,
                      residual_curvature, scan_minimum_gaps)
from .spectral import minimize_gap, schedule_gap_table

__all__ = ["ExperimentConfig", "main", "run_gap_scan", "run_gap_scaling",
           "run_qmc_run", "run_sweep_curve", "run_correlation"]

WORKERS_ENV = "BARRIER_QMC_WORKERS"

MODES = ("gap-scan", "gap-scaling", "qmc-run", "sweep-curve", "correlate")


class CliError(ValueError):
    """User-facing configuration or execution error."""


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str
    alphas: tuple[float, ...] = ()
    cs: tuple[float, ...] = ()
    n: Optional[int] = None
    n_min: Optional[int] = None
    n_max: Optional[int] = None
    beta: float = 32.0
    trotter_mult: Optional[int] = None  # None selects the per-cell default
    replicas: int = 30
    seed: int = 1
    out: str = ""
    workers: int = 1
    delta_s: float = 0.01
    window: int = 100
    threshold: float = 0.4
    sweep_cap: int = 1_000_000
    n_per_cell: int = 0  # 0 keeps every valid size in range
    coarse_step: float = 1e-3
    refine_tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise CliError(f"unknown mode {self.mode!r}")
        if self.replicas < 1:
            raise CliError(f"replicas must be >= 1, got {self.replicas}")
        if not self.out:
            raise CliError("an output path is required (--out)")


def resolve_trotter_mult(alpha: float, c: float, override: Optional[int]) -> int:
    """Slices-per-qubit multiplier: 4 by default, 16 for the (0.5, 2) cell.

    The narrower gaps of that cell need a finer time discretization before
    the sweep counts become meaningful.
    """
    if override is not None:
        return override
    if math.isclose(alpha, 0.5, abs_tol=1e-12) and math.isclose(c, 2.0, abs_tol=1e-12):
        return 16
    return 4


def derive_seed(master: int, cell_index: int, replica_index: int) -> int:
    """Independent 64-bit stream key for one replica of one grid cell."""
    ss = np.random.SeedSequence([master, cell_index, replica_index])
    return int(ss.generate_state(1, np.uint64)[0])


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))


def _require(cfg: ExperimentConfig, **fields) -> None:
    missing = [name for name, ok in fields.items() if not ok]
    if missing:
        raise CliError(f"mode {cfg.mode!r} requires: {', '.join(missing)}")


def _single(values: tuple[float, ...], name: str) -> float:
    if len(values) != 1:
        raise CliError(f"mode needs exactly one {name}, got {list(values)}")
    return values[0]


def _validated_instance(n: int, alpha: float, c: float) -> ProblemInstance:
    inst = ProblemInstance(n=n, alpha=alpha, c=c)
    errors = inst.validity_errors()
    if errors:
        raise CliError(f"instance (n={n}, alpha={alpha}, c={c}) rejected: "
                       + "; ".join(errors))
    return inst


def _open_out(path: str):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    return open(path, "w", encoding="utf-8", newline="\n")


def _residuals_path(out: str, suffix: str = "_residuals") -> str:
    stem, ext = os.path.splitext(out)
    return f"{stem}{suffix}{ext or '.csv'}"


def run_gap_scan(cfg: ExperimentConfig) -> None:
    """Minimum gap per valid size plus the log-log fit and its residuals."""
    _require(cfg, alpha=len(cfg.alphas) > 0, c=len(cfg.cs) > 0,
             n_min=cfg.n_min is not None, n_max=cfg.n_max is not None)
    alpha = _single(cfg.alphas, "alpha")
    c = _single(cfg.cs, "c")
    sizes, s_min, g_min = scan_minimum_gaps(alpha, c, cfg.n_min, cfg.n_max,
                                            coarse_step=cfg.coarse_step,
                                            refine_tol=cfg.refine_tol,
                                            workers=cfg.workers)
    if not sizes:
        raise CliError(f"no valid sizes for alpha={alpha}, c={c} "
                       f"in [{cfg.n_min}, {cfg.n_max}]")
    series = ScalingSeries.from_data(sizes, g_min)
    slope, intercept, residuals = loglog_fit(series)
    meta = (f"# mode=gap-scan alpha={alpha!r} c={c!r} n_min={cfg.n_min} "
            f"n_max={cfg.n_max} coarse_step={cfg.coarse_step!r} "
            f"refine_tol={cfg.refine_tol!r} slope={slope!r} intercept={intercept!r}\n")
    with _open_out(cfg.out) as f:
        f.write(meta)
        f.write("n,g_min,s_min,fit_log_g\n")
        for i, n in enumerate(sizes):
            fit = float(slope * series.log_n[i] + intercept)
            f.write(f"{n},{float(g_min[i])!r},{float(s_min[i])!r},{fit!r}\n")
    with _open_out(_residuals_path(cfg.out)) as f:
        f.write(meta)
        f.write("n,log_n,residual\n")
        for i, n in enumerate(sizes):
            f.write(f"{n},{float(series.log_n[i])!r},{float(residuals[i])!r}\n")


def run_gap_scaling(cfg: ExperimentConfig) -> None:
    """Residual-curvature classification for each alpha in the list."""
    _require(cfg, alpha=len(cfg.alphas) > 0, c=len(cfg.cs) > 0,
             n_min=cfg.n_min is not None, n_max=cfg.n_max is not None)
    c = _single(cfg.cs, "c")
    results = alpha_transition_scan(cfg.alphas, c, cfg.n_min, cfg.n_max,
                                    coarse_step=cfg.coarse_step,
                                    refine_tol=cfg.refine_tol, workers=cfg.workers)
    meta = (f"# mode=gap-scaling c={c!r} n_min={cfg.n_min} n_max={cfg.n_max} "
            f"coarse_step={cfg.coarse_step!r} refine_tol={cfg.refine_tol!r}\n")
    with _open_out(cfg.out) as f:
        f.write(meta)
        for r in results:
            if r.skipped:
                f.write(f"# skipped alpha={r.alpha!r}: {r.skipped_reason}\n")
        f.write("alpha,slope,intercept,mean_curvature,std_error,classification\n")
        for r in results:
            if r.skipped:
                f.write(f"{r.alpha!r},,,,,skipped\n")
            else:
                v = r.verdict
                f.write(f"{r.alpha!r},{v.slope!r},{v.intercept!r},"
                        f"{v.mean_curvature!r},{v.std_error!r},{v.classification}\n")
    for r in results:
        if r.skipped:
            continue
        path = _residuals_path(cfg.out, f"_alpha{r.alpha:g}_residuals")
        with _open_out(path) as f:
            f.write(meta)
            f.write("n,log_n,residual\n")
            for n, logn, res in zip(r.n_values, np.log(np.array(r.n_values, dtype=float)),
                                    r.verdict.residuals):
                f.write(f"{n},{float(logn)!r},{float(res)!r}\n")


def _qmc_params(cfg: ExperimentConfig, n: int, alpha: float, c: float,
                seed: int) -> QmcParams:
    mult = resolve_trotter_mult(alpha, c, cfg.trotter_mult)
    return QmcParams(trotter_slices=mult * n, beta=cfg.beta, delta_s=cfg.delta_s,
                     window=cfg.window, threshold=cfg.threshold, seed=seed,
                     sweep_cap=cfg.sweep_cap)


def run_qmc_run(cfg: ExperimentConfig) -> None:
    """One annealing run written as a per-s trace."""
    _require(cfg, alpha=len(cfg.alphas) > 0, c=len(cfg.cs) > 0, n=cfg.n is not None)
    alpha = _single(cfg.alphas, "alpha")
    c = _single(cfg.cs, "c")
    inst = _validated_instance(cfg.n, alpha, c)
    params = _qmc_params(cfg, cfg.n, alpha, c, cfg.seed)
    trace = anneal(inst, params, rng=make_rng(cfg.seed))
    with _open_out(cfg.out) as f:
        write_anneal_trace_csv(f, inst, params, trace)


def _replica_traces(cfg: ExperimentConfig, inst: ProblemInstance, cell_index: int):
    """Anneal all replicas of one instance on the worker pool, in seed order."""
    params0 = _qmc_params(cfg, inst.n, inst.alpha, inst.c, cfg.seed)
    gaps = schedule_gap_table(inst, params0.delta_s)

    def one(rep: int):
        seed = derive_seed(cfg.seed, cell_index, rep)
        params = replace(params0, seed=seed)
        return anneal(inst, params, gaps=gaps, rng=make_rng(seed))

    if cfg.workers > 1 and cfg.replicas > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(one, range(cfg.replicas))), params0
    return [one(rep) for rep in range(cfg.replicas)], params0


def run_sweep_curve(cfg: ExperimentConfig) -> None:
    """Mean sweeps at each s over replicas of one instance."""
    _require(cfg, alpha=len(cfg.alphas) > 0, c=len(cfg.cs) > 0, n=cfg.n is not None)
    alpha = _single(cfg.alphas, "alpha")
    c = _single(cfg.cs, "c")
    inst = _validated_instance(cfg.n, alpha, c)
    traces, params = _replica_traces(cfg, inst, cell_index=0)
    timeouts = [rep for rep, tr in enumerate(traces) if not tr.completed]
    completed = [tr for tr in traces if tr.completed]
    if not completed:
        raise CliError(
            f"all {cfg.replicas} replicas timed out "
            f"(stuck s values: {sorted({tr.timed_out_at for tr in traces})})"
        )
    steps = params.schedule_steps
    sweeps = np.zeros(steps + 1)
    sweeps_run = np.zeros(steps + 1)
    for tr in completed:
        sweeps += np.array([r.sweeps for r in tr.records], dtype=np.float64)
        sweeps_run += np.array([r.sweeps_run for r in tr.records], dtype=np.float64)
    sweeps /= len(completed)
    sweeps_run /= len(completed)
    with _open_out(cfg.out) as f:
        f.write(f"# mode=sweep-curve n={inst.n} alpha={alpha!r} c={c!r} "
                f"beta={cfg.beta!r} T={params.trotter_slices} replicas={cfg.replicas} "
                f"seed={cfg.seed} window={cfg.window} threshold={cfg.threshold!r} "
                f"sweep_cap={cfg.sweep_cap}\n")
        f.write(f"# completed={len(completed)} "
                f"timeout_replicas={';'.join(map(str, timeouts))}\n")
        f.write("s,mean_sweeps,mean_sweeps_run\n")
        for i in range(steps + 1):
            f.write(f"{i / steps!r},{float(sweeps[i])!r},{float(sweeps_run[i])!r}\n")


def run_correlation(cfg: ExperimentConfig) -> None:
    """Mean reported sweeps against 1/g_min^2 across an (alpha, c) grid."""
    _require(cfg, alpha=len(cfg.alphas) > 0, c=len(cfg.cs) > 0,
             n_min=cfg.n_min is not None, n_max=cfg.n_max is not None)
    cells = [(alpha, c) for alpha in cfg.alphas for c in cfg.cs]
    jobs = []  # (cell_index, alpha, c, n)
    for cell_index, (alpha, c) in enumerate(cells):
        sizes = valid_sizes(alpha, c, cfg.n_min, cfg.n_max)
        if cfg.n_per_cell > 0:
            sizes = sizes[:cfg.n_per_cell]
        for n in sizes:
            jobs.append((cell_index, alpha, c, n))

    def one(job):
        cell_index, alpha, c, n = job
        inst = ProblemInstance(n=n, alpha=alpha, c=c)
        profile = minimize_gap(inst, coarse_step=cfg.coarse_step,
                               refine_tol=cfg.refine_tol)
        params0 = _qmc_params(cfg, n, alpha, c, cfg.seed)
        gaps = schedule_gap_table(inst, params0.delta_s)
        totals = []
        timed_out = False
        for rep in range(cfg.replicas):
            seed = derive_seed(cfg.seed, cell_index * 100_000 + n, rep)
            params = replace(params0, seed=seed)
            trace = anneal(inst, params, gaps=gaps, rng=make_rng(seed))
            if not trace.completed:
                timed_out = True
                break
            totals.append(trace.total_report_sweeps)
        mean_sweeps = float(np.mean(totals)) if totals and not timed_out else math.nan
        return (n, alpha, c, profile.g_min, params0.trotter_slices,
                mean_sweeps, "timeout" if timed_out else "ok")

    if cfg.workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(one, jobs))
    else:
        rows = [one(job) for job in jobs]

    ok = [(r[5], r[3]) for r in rows if r[6] == "ok"]
    if len(ok) >= 2:
        log_sweeps = np.log([m for m, _ in ok])
        log_invgap2 = np.log([g ** -2 for _, g in ok])
        coeff = repr(float(np.corrcoef(log_sweeps, log_invgap2)[0, 1]))
    else:
        coeff = "undefined"
    with _open_out(cfg.out) as f:
        f.write(f"# mode=correlate alphas={','.join(map(repr, cfg.alphas))} "
                f"cs={','.join(map(repr, cfg.cs))} n_min={cfg.n_min} n_max={cfg.n_max} "
                f"n_per_cell={cfg.n_per_cell} beta={cfg.beta!r} replicas={cfg.replicas} "
                f"seed={cfg.seed} window={cfg.window} threshold={cfg.threshold!r} "
                f"sweep_cap={cfg.sweep_cap}\n")
        f.write(f"# loglog_correlation={coeff}\n")
        f.write("n,alpha,c,g_min,inverse_gap_sq,mean_total_report_sweeps,"
                "trotter_slices,status\n")
        for n, alpha, c, g_min, t, mean_sweeps, status in rows:
            sweeps_field = "" if math.isnan(mean_sweeps) else repr(mean_sweeps)
            f.write(f"{n},{alpha!r},{c!r},{g_min!r},{g_min ** -2!r},"
                    f"{sweeps_field},{t},{status}\n")


_RUNNERS = {
    "gap-scan": run_gap_scan,
    "gap-scaling": run_gap_scaling,
    "qmc-run": run_qmc_run,
    "sweep-curve": run_sweep_curve,
    "correlate": run_correlation,
}

# config-file key -> parser
_FIELD_PARSERS = {
    "alpha": lambda v: tuple(float(x) for x in v.split(",")),
    "c": lambda v: tuple(float(x) for x in v.split(",")),
    "n": int,
    "n_min": int,
    "n_max": int,
    "beta": float,
    "trotter_mult": lambda v: None if v == "auto" else int(v),
    "replicas": int,
    "seed": int,
    "out": str,
    "workers": int,
    "delta_s": float,
    "window": int,
    "threshold": float,
    "sweep_cap": int,
    "n_per_cell": int,
    "coarse_step": float,
    "refine_tol": float,
}

_CONFIG_KEY_ALIASES = {"alphas": "alpha", "cs": "c"}


def load_config_file(path: str) -> dict:
    """Flat key=value manifest; '#' starts a comment."""
    values = {}
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CliError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            key = _CONFIG_KEY_ALIASES.get(key, key)
            if key not in _FIELD_PARSERS:
                raise CliError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = _FIELD_PARSERS[key](value.strip())
            except ValueError as exc:
                raise CliError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="barrier-qmc", description=__doc__)
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--config", help="key=value manifest; flags override it")
        p.add_argument("--alpha", type=str, help="barrier exponent(s), comma separated")
        p.add_argument("--c", type=str, help="width coefficient(s), comma separated")
        p.add_argument("--n", type=int)
        p.add_argument("--n-min", type=int)
        p.add_argument("--n-max", type=int)
        p.add_argument("--beta", type=float)
        p.add_argument("--trotter-mult", type=int,
                       help="slices per qubit; omit for the per-cell default")
        p.add_argument("--replicas", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", type=str)
        p.add_argument("--workers", type=int,
                       help=f"worker threads (default ${WORKERS_ENV} or CPU count)")
        p.add_argument("--delta-s", type=float)
        p.add_argument("--window", type=int)
        p.add_argument("--threshold", type=float)
        p.add_argument("--sweep-cap", type=int)
        p.add_argument("--n-per-cell", type=int)
        p.add_argument("--coarse-step", type=float)
        p.add_argument("--refine-tol", type=float)
    return parser


def build_config(argv: Sequence[str]) -> ExperimentConfig:
    args = _build_parser().parse_args(argv)
    values: dict = {}
    if args.config:
        values.update(load_config_file(args.config))
    for key in _FIELD_PARSERS:
        flag_value = getattr(args, key, None)
        if flag_value is None:
            continue
        values[key] = (_FIELD_PARSERS[key](flag_value)
                       if isinstance(flag_value, str) else flag_value)
    if "workers" not in values:
        env = os.environ.get(WORKERS_ENV)
        values["workers"] = int(env) if env else (os.cpu_count() or 1)
    values["alphas"] = values.pop("alpha", ())
    values["cs"] = values.pop("c", ())
    return ExperimentConfig(mode=args.mode, **values)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        cfg = build_config(sys.argv[1:] if argv is None else list(argv))
        _RUNNERS[cfg.mode](cfg)
    except (CliError, ValueError, OSError) as exc:
        print("error: " + json.dumps({"message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
