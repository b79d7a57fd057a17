"""Acceptance suite: one test per criterion, printing a verdict line each.

Criteria 6 and 7 anneal hundreds of replicas and carry the `slow` marker;
run `pytest -m "not slow"` for the quick tiers only.  Criterion 1 is known
to fail on two of its six alphas at the reduced size range; the ledger
entry accompanying this repository documents the analysis (alpha=0.25 has
only three valid sizes in [100, 2000], and alpha=0.34's residual curvature
at n <= 2000 is negative but not by one standard error under any unbiased
estimator we constructed).  The assertions are kept faithful rather than
loosened to force them green.
"""

import math
import os

import numpy as np
import pytest

import barrier_qmc as bq
from barrier_qmc import cli, oracle
from barrier_qmc.qmc import run_sweeps

WORKERS = min(os.cpu_count() or 1, 4)


def report(criterion, ok, detail):
    print(f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


def read_lines(path):
    with open(path, encoding="utf-8") as f:
        return f.read().splitlines()


def meta_value(lines, key):
    for line in lines:
        if line.startswith("#") and f"{key}=" in line:
            return line.split(f"{key}=", 1)[1].split()[0]
    raise KeyError(key)


def test_criterion_1_gap_transition_sign_pattern(tmp_path):
    """Classification flips from polynomial-consistent to superpolynomial
    across alpha in [0.33, 0.34] for c=1 on n in [100, 2000]."""
    out = tmp_path / "scaling.csv"
    rc = cli.main(["gap-scaling", "--alpha", "0.25,0.30,0.33,0.34,0.40,0.50",
                   "--c", "1", "--n-min", "100", "--n-max", "2000",
                   "--workers", str(WORKERS), "--out", str(out)])
    assert rc == 0
    rows = {}
    for line in read_lines(out)[1:]:
        if line.startswith("#") or line.startswith("alpha,"):
            continue
        fields = line.split(",")
        rows[float(fields[0])] = fields[5]
    expected = {0.25: "polynomial-consistent", 0.30: "polynomial-consistent",
                0.33: "polynomial-consistent", 0.34: "superpolynomial",
                0.40: "superpolynomial", 0.50: "superpolynomial"}
    failures = []
    for alpha, want in sorted(expected.items()):
        got = rows[alpha]
        ok = report(f"1[alpha={alpha}]", got == want, f"want {want}, got {got}")
        if not ok:
            failures.append((alpha, want, got))
    assert not failures, (
        f"sign-pattern deviations {failures}; see the decisions ledger: "
        "alpha=0.25 has 3 valid sizes in range (unclassifiable), and "
        "alpha=0.34's curvature is negative but within one standard error "
        "at n <= 2000"
    )


def test_criterion_1_supplement_full_range_alpha025():
    # on the full published range the thin alpha gains enough sizes
    results = bq.alpha_transition_scan([0.25], c=1.0, n_min=100, n_max=5000,
                                       coarse_step=0.002, workers=WORKERS)
    v = results[0].verdict
    assert v is not None and v.classification == "polynomial-consistent"
    report("1-supplement[alpha=0.25, n<=5000]", True, v.classification)


def test_criterion_1_supplement_full_range_alpha034():
    # the alpha=0.34 curvature turns negative at the full range, though only
    # marginally beyond its standard error; assert the sign and that no
    # upward trend is seen
    results = bq.alpha_transition_scan([0.34], c=1.0, n_min=100, n_max=5000,
                                       coarse_step=0.002, workers=WORKERS)
    v = results[0].verdict
    assert v.mean_curvature < 0
    assert v.classification != "subpolynomial-trend"
    report("1-supplement[alpha=0.34, n<=5000]", True,
           f"mean_curvature={v.mean_curvature:.5f} se={v.std_error:.5f} "
           f"({v.classification})")


def test_criterion_2_exact_gap_sanity():
    """g(0) = 1 for every instance; g(1) = 1 whenever window_lo > 1."""
    checked = 0
    for alpha in (0.3, 0.4, 0.5):
        for c in (1.0, 2.0, 3.0):
            for n in bq.valid_sizes(alpha, c, 100, 400):
                inst = bq.ProblemInstance(n=n, alpha=alpha, c=c)
                _, gap0 = bq.gap_at(inst, 0.0)
                assert abs(gap0 - 1.0) < 1e-10, (inst, gap0)
                if inst.window_lo > 1:
                    _, gap1 = bq.gap_at(inst, 1.0)
                    assert abs(gap1 - 1.0) < 1e-10, (inst, gap1)
                checked += 1
    report(2, True, f"gap endpoints exact to 1e-10 on {checked} instances")


def test_criterion_3_oracle_equivalence():
    """The symmetry-reduced dense construction matches the tridiagonal
    solver on the two lowest levels; the raw dense ground state agrees (it
    is always symmetric); s=0 and s=1 degeneracies follow binomial
    multiplicities.

    The raw 2^n spectrum's second eigenvalue is compared only where it is
    symmetric: away from the avoided crossing it can belong to a
    non-symmetric permutation multiplet below the symmetric gap (e.g.
    n=8, alpha=0.3, c=1, s=0.75), which the adiabatic dynamics never
    populate.
    """
    worst = 0.0
    cases = 0
    for n in (4, 8, 12):
        for alpha in (0.3, 0.5):
            for c in (1.0, 3.0):
                inst = bq.ProblemInstance(n=n, alpha=alpha, c=c)
                for s in (0.0, 0.25, 0.5, 0.75, 1.0):
                    reduced = oracle.dense_symmetric_spectrum(inst, s)
                    e0, e1 = bq.lowest_two_eigenvalues(
                        bq.tridiagonal_coefficients(inst, s))
                    worst = max(worst, abs(e0 - reduced[0]), abs(e1 - reduced[1]))
                    assert abs(e0 - reduced[0]) < 1e-9, (inst, s)
                    assert abs(e1 - reduced[1]) < 1e-9, (inst, s)
                    cases += 1
                    if s in (0.0, 0.5, 1.0):
                        # the full-spectrum ground state is always symmetric
                        dense = oracle.dense_spectrum(inst, s)
                        assert abs(e0 - dense[0]) < 1e-9, (inst, s)
                    if s in (0.0, 1.0):
                        tri = bq.all_eigenvalues(
                            bq.tridiagonal_coefficients(inst, s))
                        levels = (np.arange(n + 1.0) if s == 0.0
                                  else inst.cost_table)
                        for ev in np.unique(np.round(tri, 9)):
                            weights = np.nonzero(np.abs(levels - ev) < 1e-9)[0]
                            expected = sum(math.comb(n, int(h)) for h in weights)
                            assert expected > 0
                            found = int(np.sum(np.abs(dense - ev) < 1e-9))
                            assert found == expected, (inst, s, ev)
    report(3, True, f"{cases} reduced-dense/tridiagonal cases agree; "
                    f"worst |diff| = {worst:.2e}")


def test_criterion_4_sampling_correctness():
    """Empirical configuration frequencies match the enumerated path
    distribution (TV < 0.01 over 1e6 sweeps) and the sampled energy matches
    the enumeration mean within 3 standard errors."""
    inst = bq.ProblemInstance(n=2, alpha=0.5, c=0.5)
    params = bq.QmcParams(trotter_slices=3, beta=2.0)
    s = 0.5
    probs = oracle.exact_configuration_probabilities(inst, s, params)
    _, mean_ed, mean_eo = oracle.exact_trotter_partition(inst, s, params)
    rng = np.random.Generator(np.random.Philox(key=12345))
    lat = bq.Lattice.random(2, 3, rng)
    run_sweeps(lat, s, inst, params, rng, 2000)
    series = run_sweeps(lat, s, inst, params, rng, 1_000_000, record_configs=True)
    emp = np.bincount(series.configs, minlength=64) / series.configs.size
    tv = 0.5 * float(np.abs(emp - probs).sum())
    assert tv < 0.01, tv
    batches = series.energies.reshape(100, -1).mean(axis=1)
    se = float(batches.std(ddof=1) / np.sqrt(batches.size))
    dev = abs(float(series.energies.mean()) - (mean_ed + mean_eo))
    assert dev < 3 * se, (dev, se)
    report(4, True, f"TV = {tv:.4f} < 0.01; energy off by {dev / se:.2f} SE")


def test_criterion_5_trotter_convergence():
    """Z(T) approaches Tr exp(-beta H) monotonically as T doubles, ending
    below 1e-3 relative error."""
    inst = bq.ProblemInstance(n=2, alpha=0.5, c=0.5)
    beta, s = 2.0, 0.5
    z_exact = float(np.sum(np.exp(-beta * oracle.dense_spectrum(inst, s))))
    errs = [abs(oracle.trotter_partition_value(inst, s, beta, t) - z_exact)
            for t in (2, 4, 8, 16, 32, 64)]
    assert all(errs[i + 1] < errs[i] for i in range(len(errs) - 1)), errs
    rel = errs[-1] / z_exact
    assert rel < 1e-3, rel
    report(5, True, f"errors decrease {errs[0]:.2e} -> {errs[-1]:.2e}; "
                    f"final relative {rel:.2e}")


@pytest.mark.slow
def test_criterion_6_tunneling_spike(tmp_path):
    """At n=116, c=3, 30 replicas: alpha=0.5 spikes inside s in [0.3, 0.5]
    (peak > 5x the s in [0.6, 0.9] median), alpha=0.3 stays flat (< 3x).

    The ratio uses the sweeps actually run per step (mean_sweeps_run):
    back-extrapolated reported counts compress the flat baseline toward 1
    and would declare any mild mid-range structure a spike.
    """

    def curve(alpha):
        out = tmp_path / f"curve_{alpha}.csv"
        rc = cli.main(["sweep-curve", "--alpha", str(alpha), "--c", "3",
                       "--n", "116", "--replicas", "30", "--seed", "42",
                       "--workers", str(WORKERS), "--out", str(out)])
        assert rc == 0
        rows = [l.split(",") for l in read_lines(out)[3:]]
        s = np.array([float(r[0]) for r in rows])
        reported = np.array([float(r[1]) for r in rows])
        run = np.array([float(r[2]) for r in rows])
        return s, reported, run

    s, reported5, run5 = curve(0.5)
    in_rep = (s >= 0.3) & (s <= 0.5)
    high = (s >= 0.6) & (s <= 0.9)
    ratio5 = run5[in_rep].max() / np.median(run5[high])
    peak5 = reported5[in_rep].max()
    assert ratio5 > 5.0, ratio5
    assert 100 <= peak5 <= 10000, peak5
    _, _, run3 = curve(0.3)
    ratio3 = run3[in_rep].max() / np.median(run3[high])
    assert ratio3 < 3.0, ratio3
    report(6, True, f"alpha=0.5 spike ratio {ratio5:.1f} (peak {peak5:.0f}), "
                    f"alpha=0.3 ratio {ratio3:.2f}")


@pytest.mark.slow
def test_criterion_7_sweeps_gap_correlation(tmp_path):
    """Pooled over the alpha in {0.3, 0.4}, c in {1, 2, 3} grids (four
    smallest valid sizes per cell), log total reported sweeps correlates
    with log 1/g_min^2 above 0.9."""
    out = tmp_path / "corr.csv"
    rc = cli.main(["correlate", "--alpha", "0.3,0.4", "--c", "1,2,3",
                   "--n-min", "100", "--n-max", "2000", "--n-per-cell", "4",
                   "--replicas", "3", "--seed", "1",
                   "--workers", str(WORKERS), "--out", str(out)])
    assert rc == 0
    lines = read_lines(out)
    coeff = float(meta_value(lines, "loglog_correlation"))
    statuses = [l.split(",")[7] for l in lines[3:]]
    assert statuses.count("ok") >= 20, statuses
    assert coeff > 0.9, coeff
    report(7, True, f"log-log correlation {coeff:.4f} over {statuses.count('ok')} points")


def test_criterion_8_determinism(tmp_path):
    """Identical config and master seed reproduce byte-identical CSVs."""
    pairs = []
    for i in (1, 2):
        out = tmp_path / f"sweep{i}.csv"
        rc = cli.main(["sweep-curve", "--alpha", "0.4", "--c", "1", "--n", "8",
                       "--replicas", "3", "--seed", "17",
                       "--workers", str(WORKERS), "--out", str(out)])
        assert rc == 0
        pairs.append(out.read_bytes())
    assert pairs[0] == pairs[1]
    scans = []
    for i in (1, 2):
        out = tmp_path / f"scan{i}.csv"
        rc = cli.main(["gap-scan", "--alpha", "0.3", "--c", "1", "--n-min",
                       "100", "--n-max", "250", "--coarse-step", "0.01",
                       "--workers", str(WORKERS), "--out", str(out)])
        assert rc == 0
        scans.append(out.read_bytes())
    assert scans[0] == scans[1]
    report(8, True, "sweep-curve and gap-scan reruns byte-identical")


def test_criterion_9_local_update_correctness():
    """10^4 fuzzed flips: local log-ratio equals the global log-weight
    difference within 1e-10, and flip/unflip ratios cancel exactly."""
    rng = np.random.default_rng(99)
    worst = 0.0
    for _ in range(10_000):
        n = int(rng.integers(1, 5))
        t = int(rng.integers(2, 9))
        inst = bq.ProblemInstance(n=n, alpha=0.4, c=0.3)
        params = bq.QmcParams(trotter_slices=t,
                              beta=float(rng.uniform(0.5, 8.0)))
        s = float(rng.uniform(0.0, 0.999))
        lat = bq.Lattice(rng.integers(0, 2, size=(t, n), dtype=np.uint8))
        tau = int(rng.integers(t))
        d = int(rng.integers(n))
        ratio = bq.flip_log_ratio(lat, tau, d, s, inst, params)
        before = bq.log_weight(lat, s, inst, params)
        lat.bits[tau, d] ^= 1
        flipped = bq.Lattice(lat.bits)
        after = bq.log_weight(flipped, s, inst, params)
        worst = max(worst, abs(ratio - (after - before)))
        assert abs(ratio - (after - before)) < 1e-10
        assert ratio + bq.flip_log_ratio(flipped, tau, d, s, inst, params) == 0.0
    report(9, True, f"10^4 fuzz cases; worst |local - global| = {worst:.2e}")