import dataclasses

import pytest

from rasim.config import PlatformConfig
from rasim.report import co_request_splits
from rasim.simulator import Simulator

MS = 1_000_000


def simulate(apps, policy="scalability", seed=0, sim_time_ms=2_500, **kwargs):
    sim = Simulator(PlatformConfig(), apps, policy=policy, claim_cap=5, seed=seed, **kwargs)
    return sim, sim.run_until(sim_time_ms * MS)


def total_hits(report):
    return sum(cpu.cache_hits for cpu in report.cpus)


def total_misses(report):
    return sum(cpu.cache_accesses - cpu.cache_hits for cpu in report.cpus)


def test_scalability_policy_splits_evenly(small_apps):
    _, report = simulate(small_apps, "scalability")
    assert co_request_splits(report) == [
        {"audio_eq": 3, "corner_detection": 3},
        {"audio_eq": 3, "corner_detection": 3},
    ]
    assert [a.time_ns for a in report.allocations if a.batch_size > 1] == [0, 0, 2_000 * MS, 2_000 * MS]
    assert report.violations == []


def test_load_policy_favours_corner_detection(small_apps):
    _, report = simulate(small_apps, "load")
    assert co_request_splits(report) == [
        {"audio_eq": 1, "corner_detection": 5},
        {"audio_eq": 1, "corner_detection": 5},
    ]
    assert report.violations == []


def test_every_iteration_completes(small_apps):
    _, report = simulate(small_apps)
    per_app = {}
    for it in report.iterations:
        per_app.setdefault(it.app_id, []).append(it)
    assert [it.trigger_ns for it in per_app["audio_eq"]] == [k * 400 * MS for k in range(7)]
    assert [it.trigger_ns for it in per_app["corner_detection"]] == [0, 1_000 * MS, 2_000 * MS]
    assert all(it.end_ns is not None and it.end_ns < it.trigger_ns + 400 * MS for it in report.iterations)
    assert report.skipped == {"audio_eq": 0, "corner_detection": 0}
    assert report.in_flight == []
    started = [c for c in report.context_log if c.status == "execution_started"]
    finished = [c for c in report.context_log if c.status == "execution_finished"]
    assert len(started) == len(finished) == len(report.iterations)


def test_claims_never_exceed_the_platform(small_apps):
    sim, report = simulate(small_apps, "load")
    for t in sorted({a.time_ns for a in report.allocations}):
        assert sum(a.granted for a in report.allocations if a.time_ns == t) <= 6
    assert all(owner is None for owner in sim.rm.reserved_by)
    assert sim.rm.live_claims == {}


def test_cycle_conservation_in_full_run(small_apps):
    _, report = simulate(small_apps, sim_time_ms=1_234)
    for cpu in report.cpus:
        assert cpu.busy_cycles + cpu.idle_cycles == 123_400_000
    assert 0 < report.avg_cpu_load < 1


def test_same_seed_same_run(small_apps):
    jittery = [dataclasses.replace(app, jitter_ns=5 * MS) for app in small_apps]
    _, first = simulate(jittery, seed=7)
    _, second = simulate(jittery, seed=7)
    assert first.allocations == second.allocations
    assert [c.time_ns for c in first.context_log] == [c.time_ns for c in second.context_log]
    for a in first.allocations:
        assert a.time_ns % 10 == 0


def test_jitter_delays_requests_within_bound(small_apps):
    jittery = [dataclasses.replace(app, jitter_ns=5 * MS) for app in small_apps]
    _, report = simulate(jittery, seed=3)
    for app in jittery:
        triggers = [it.trigger_ns for it in report.iterations if it.app_id == app.app_id]
        granted = [a.time_ns for a in report.allocations if a.app_id == app.app_id]
        assert len(granted) == len(triggers)
        assert all(0 <= g - t <= 5 * MS for g, t in zip(granted, triggers))
    assert report.violations == []


def test_overrun_skips_the_next_trigger(small_apps):
    audio = dataclasses.replace(small_apps[0], period_ns=5 * MS)
    _, report = simulate([audio], sim_time_ms=100)
    assert report.skipped["audio_eq"] > 0
    assert report.violations == []
    ends = [it.end_ns for it in report.iterations if it.end_ns is not None]
    assert ends == sorted(ends)


def test_unknown_policy(small_apps):
    with pytest.raises(KeyError):
        Simulator(PlatformConfig(), small_apps, policy="random")


def test_apps_run_with_their_own_hit_rate(small_apps):
    _, default = simulate(small_apps)
    perfect_audio = [dataclasses.replace(small_apps[0], hit_rate="1/1"), small_apps[1]]
    _, mixed = simulate(perfect_audio)
    assert total_hits(mixed) > total_hits(default)
    assert total_misses(mixed) < total_misses(default)
    assert mixed.violations == []


def test_every_allocation_round_logs_a_snapshot(small_apps):
    _, report = simulate(small_apps)
    rounds = sorted({a.time_ns for a in report.allocations})
    assert sorted({s.time_ns for s in report.snapshot_log}) == rounds
    assert len(report.snapshot_log) == 6 * len(rounds)
    first = [s for s in report.snapshot_log if s.time_ns == 0]
    assert [s.cpu_id for s in first] == list(range(6))
    assert all(s.reserved_by is None and s.recent_load == 0 for s in first)
