import io

import numpy as np
import pytest

from barrier_qmc import (ProblemInstance, QmcParams, anneal,
                         schedule_gap_table, write_anneal_trace_csv)


def small_case():
    inst = ProblemInstance(n=8, alpha=0.3, c=1.0)
    params = QmcParams(trotter_slices=32, seed=7)
    return inst, params


def test_anneal_schedule_structure():
    inst, params = small_case()
    trace = anneal(inst, params)
    assert trace.completed
    assert [r.s for r in trace.records] == [i / 100 for i in range(101)]
    assert trace.total_report_sweeps == sum(
        r.sweeps for r in trace.records if 0.3 <= round(r.s, 9) <= 0.5)
    for r in trace.records:
        assert 1 <= r.sweeps <= r.sweeps_run
        assert r.sweeps_run >= min(params.window, params.sweep_cap)
        assert 0.0 <= r.acceptance_fraction <= 1.0
        if r.extrapolated:
            assert r.sweeps < params.window
    # ends in the cost ground state: energy estimate at s=1 is the minimum cost
    assert abs(trace.records[-1].energy) < 0.4


def test_anneal_reproducible():
    inst, params = small_case()
    assert anneal(inst, params).records == anneal(inst, params).records
    other = QmcParams(trotter_slices=32, seed=8)
    assert anneal(inst, other).records != anneal(inst, params).records


def test_anneal_explicit_gap_table_equivalent():
    inst, params = small_case()
    gaps = schedule_gap_table(inst, params.delta_s)
    assert anneal(inst, params, gaps=gaps).records == anneal(inst, params).records
    bad = schedule_gap_table(inst, 0.02)
    with pytest.raises(ValueError):
        anneal(inst, params, gaps=bad)


def test_huge_threshold_advances_immediately():
    inst = ProblemInstance(n=8, alpha=0.3, c=1.0)
    params = QmcParams(trotter_slices=32, seed=1, threshold=50.0)
    trace = anneal(inst, params)
    assert trace.completed
    assert all(r.sweeps == 1 and r.extrapolated for r in trace.records)
    assert all(r.sweeps_run == params.window for r in trace.records)


def test_timeout_verdict():
    inst = ProblemInstance(n=8, alpha=0.3, c=1.0)
    params = QmcParams(trotter_slices=32, seed=1, threshold=1e-12, sweep_cap=50)
    trace = anneal(inst, params)
    assert not trace.completed
    assert trace.timed_out_at == 0.0
    assert len(trace.records) == 1
    rec = trace.records[0]
    assert rec.timed_out and rec.sweeps_run == 50
    assert trace.total_report_sweeps == 0


def test_energy_series_recording():
    inst = ProblemInstance(n=8, alpha=0.3, c=1.0)
    params = QmcParams(trotter_slices=32, seed=2, record_energy_series=True)
    trace = anneal(inst, params)
    assert trace.energy_series is not None
    assert set(trace.energy_series) == set(range(101))
    for i, rec in enumerate(trace.records):
        assert trace.energy_series[i].size == rec.sweeps_run


def test_trace_csv_roundtrip():
    inst, params = small_case()
    trace = anneal(inst, params)
    buf = io.StringIO()
    write_anneal_trace_csv(buf, inst, params, trace)
    text = buf.getvalue()
    lines = text.splitlines()
    assert lines[0].startswith("# n=8 alpha=0.3 c=1.0 beta=32.0 T=32 seed=7")
    assert f"total_report_sweeps={trace.total_report_sweeps}" in lines[1]
    assert lines[2] == "s,sweeps,energy,acceptance_fraction,extrapolated,sweeps_run"
    assert len(lines) == 3 + 101
    buf2 = io.StringIO()
    write_anneal_trace_csv(buf2, inst, params, anneal(inst, params))
    assert buf2.getvalue() == text
