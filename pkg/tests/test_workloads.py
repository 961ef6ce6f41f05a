from fractions import Fraction

import pytest

from rasim.config import PlatformConfig, WorkloadConfig
from rasim.errors import ConfigError
from rasim.fel.cpu import trace_accesses, trace_compute_cycles
from rasim.workloads.apps import ConfigOutOfRange, build_app, build_audio_eq, build_corner_detection
from rasim.workloads.calibration import measure_branch
from rasim.workloads.synth import TraceParams, split_evenly, synth_trace


def test_split_evenly():
    assert split_evenly(10, 3) == [4, 3, 3]
    assert split_evenly(2, 4) == [1, 1, 0, 0]


def test_fully_parallel_work():
    traces = synth_trace(TraceParams(3000, Fraction(1), mem_accesses_per_kcycle=0, segment_count=1), 3)
    assert [trace_compute_cycles(t) for t in traces] == [1000, 1000, 1000]


def test_single_cpu_gets_everything():
    traces = synth_trace(TraceParams(123_457, Fraction(86, 100)), 1)
    assert len(traces) == 1
    assert trace_compute_cycles(traces[0]) == 123_457


def test_serial_share_on_first_cpu():
    traces = synth_trace(TraceParams(4000, Fraction(3, 4), segment_count=2), 2)
    assert [trace_compute_cycles(t) for t in traces] == [2500, 1500]
    first = traces[0]
    assert [(s.compute_cycles, s.mem_reads, s.mem_writes) for s in first] == [(1250, 1, 1), (1250, 0, 0)]
    assert trace_accesses(traces[1]) == 1


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_work_is_conserved(n):
    params = TraceParams(28_000_000, Fraction(86, 100), segment_count=16)
    traces = synth_trace(params, n)
    assert len(traces) == n
    assert sum(trace_compute_cycles(t) for t in traces) == 28_000_000
    assert all(len(t) == 16 for t in traces)
    for t in traces:
        reads = sum(s.mem_reads for s in t)
        writes = sum(s.mem_writes for s in t)
        assert reads + writes == trace_compute_cycles(t) // 1000
        assert reads == 3 * (reads + writes) // 4


def test_shipped_defaults():
    app = build_corner_detection(with_curves=False)
    assert app.period_ns == 1_000_000_000
    assert (app.demand.min_cpus, app.demand.max_cpus) == (1, 5)
    assert app.demand.app_id == "corner_detection"
    assert app.max_claim == 5


def test_trace_table_covers_every_branch(small_apps):
    audio = small_apps[0]
    assert set(audio.trace_table) == {"audio_eq_n1", "audio_eq_n2", "audio_eq_n3", "audio_eq_n4_5"}
    assert set(audio.trace_table["audio_eq_n4_5"]) == {4, 5}
    for n in range(1, 6):
        assert len(audio.branch_traces(n)) == n
    assert sum(trace_compute_cycles(t) for t in audio.traces_for("audio_eq_n1", 1)) == 1_400_000
    assert sum(trace_compute_cycles(t) for t in audio.traces_for("audio_eq_n2", 2)) == 2_100_000
    with pytest.raises(ConfigOutOfRange):
        audio.traces_for("audio_eq_n3", 4)
    with pytest.raises(ConfigOutOfRange):
        audio.branch_traces(6)


def test_curves_are_measured(small_apps):
    platform = PlatformConfig()
    for app in small_apps:
        speeds = []
        for n in range(1, 6):
            traces = app.branch_traces(n)
            makespan, _ = measure_branch(traces, platform)
            speeds.append(Fraction(sum(trace_compute_cycles(t) for t in traces), makespan))
            assert makespan < app.period_ns
        assert app.scalability.speedup == tuple(s / speeds[0] for s in speeds)


def test_speedup_follows_amdahl(small_apps, small_audio_cfg, small_corner_cfg):
    for app, cfg in zip(small_apps, [small_audio_cfg, small_corner_cfg]):
        pf = Fraction(cfg.parallel_fraction)
        for n in range(1, 6):
            amdahl = 1 / ((1 - pf) + pf / n)
            assert abs(app.scalability.at(n) - amdahl) / amdahl < Fraction(3, 100)
        assert list(app.scalability.speedup) == sorted(app.scalability.speedup)


def test_calibrated_curves_reproduce_the_two_scenarios(small_apps):
    audio, corner = small_apps
    assert abs(audio.scalability.at(3) - corner.scalability.at(3)) / corner.scalability.at(3) < Fraction(5, 100)
    for n in range(1, 6):
        assert corner.standalone_load.at(n) > audio.standalone_load.at(n)
        assert 0 < audio.standalone_load.at(n) <= 1


@pytest.mark.slow
def test_default_calibration_reproduces_the_two_scenarios():
    audio, corner = build_audio_eq(), build_corner_detection()
    assert abs(audio.scalability.at(3) - corner.scalability.at(3)) / corner.scalability.at(3) < Fraction(5, 100)
    for n in range(1, 6):
        assert corner.standalone_load.at(n) > audio.standalone_load.at(n)


def test_explicit_curves_skip_calibration():
    cfg = WorkloadConfig.bundled("audio_eq", scalability=[1, 1.8, 2.4, 2.8, 3.0], standalone_load=[0.1] * 5)
    app = build_app(cfg)
    assert app.scalability.at(2) == Fraction(9, 5)
    assert app.standalone_load.at(5) == Fraction(1, 10)


def test_bad_workloads():
    with pytest.raises(ConfigOutOfRange):
        build_app(WorkloadConfig.bundled("audio_eq", scalability=[2, 3]), with_curves=False)
    with pytest.raises(ConfigOutOfRange):
        build_app(WorkloadConfig.bundled("audio_eq", adaptation={1: "1"}), with_curves=False)
    with pytest.raises(ConfigError):
        build_app(WorkloadConfig.bundled("audio_eq"), PlatformConfig(num_cpus=4), claim_cap=3, with_curves=False)
    with pytest.raises(ConfigError):
        build_app(WorkloadConfig(kind="custom", air_path="/nonexistent/air.json"), with_curves=False)


def test_hit_rate_per_app():
    platform = PlatformConfig()
    tiny = dict(total_kcycles=280, segment_count=2)
    default = build_app(WorkloadConfig.bundled("audio_eq", **tiny), platform)
    perfect = build_app(WorkloadConfig.bundled("audio_eq", hit_rate="1/1", **tiny), platform)
    assert default.hit_rate == "3/4"
    assert perfect.hit_rate == "1/1"
    assert all(p < d for p, d in zip(perfect.standalone_load.load, default.standalone_load.load))
