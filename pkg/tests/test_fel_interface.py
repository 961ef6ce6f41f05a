from fractions import Fraction

import pytest

from rasim.fel.cpu import TraceSegment, make_trace
from rasim.fel_interface.execution_controller import (
    AlreadyFinished,
    ContextStatus,
    CpuNotReserved,
    ExecutionController,
    UnknownContext,
)
from rasim.fel_interface.status_collector import StatusCollector


def compute(cycles):
    return make_trace([TraceSegment(cycles)])


@pytest.fixture
def owners():
    return {0: "a", 1: "a", 2: "a", 3: "b", 4: "b"}


@pytest.fixture
def controller(kernel, fel, owners):
    return ExecutionController(kernel, fel, owners.get)


@pytest.fixture
def finished(controller):
    seen = []
    controller.on_finished(lambda c: seen.append((c.app_id, c.context_id, c.end)))
    return seen


def test_single_cpu_context(kernel, controller, finished):
    ctx = controller.dispatch_fen("f", "a", [0], [compute(100)])
    kernel.run_until(10_000)
    assert finished == [("a", ctx, 1_000)]


def test_barrier_waits_for_slowest_cpu(kernel, controller, finished):
    ctx = controller.dispatch_fen("f", "a", [0, 1, 2], [compute(100), compute(200), compute(300)])
    kernel.run_until(2_500)
    assert finished == []
    assert controller.contexts[ctx].status is ContextStatus.EXECUTION_STARTED
    kernel.run_until(10_000)
    assert finished == [("a", ctx, 3_000)]
    context = controller.contexts[ctx]
    assert context.status is ContextStatus.EXECUTION_FINISHED
    assert context.end == 3_000
    assert [(r.time_ns, r.status) for r in controller.log] == [(0, "execution_started"), (3_000, "execution_finished")]


def test_double_notification(kernel, controller):
    ctx = controller.dispatch_fen("f", "a", [0], [compute(10)])
    kernel.run_until(1_000)
    with pytest.raises(AlreadyFinished):
        controller.notify_finished(ctx)
    with pytest.raises(UnknownContext):
        controller.notify_finished(99)


def test_foreign_cpu_starts_nothing(fel, controller):
    with pytest.raises(CpuNotReserved):
        controller.dispatch_fen("f", "a", [2, 3], [compute(10), compute(10)])
    assert fel.cpu(2).run is None
    assert controller.contexts == {}
    with pytest.raises(CpuNotReserved):
        controller.dispatch_fen("f", "a", [5], [compute(10)])


def test_concurrent_contexts_are_isolated(kernel, controller, finished):
    slow = controller.dispatch_fen("f", "a", [0, 1], [compute(500), compute(50)])
    fast = controller.dispatch_fen("g", "b", [3, 4], [compute(20), compute(30)])
    kernel.run_until(100_000)
    assert finished == [("b", fast, 300), ("a", slow, 5_000)]
    assert controller.active() == []


def test_snapshot_reads_reservations_and_load(kernel, fel, owners):
    collector = StatusCollector(fel, owners.get, window_ns=100_000_000)
    first = collector.send_resource(0)
    assert [e.reserved_by for e in first.entries] == ["a", "a", "a", "b", "b", None]
    assert all(e.recent_load == 0 for e in first.entries)
    assert first.free_cpus() == (5,)

    fel.execute_trace(5, compute(4_000_000))
    kernel.run_until(100_000_000)
    pending = kernel.pending()
    snap = collector.send_resource(100_000_000)
    assert snap.entries[5].recent_load == Fraction(2, 5)
    assert collector.send_resource(100_000_000) == snap
    assert kernel.pending() == pending
    assert kernel.now == 100_000_000


def test_cache_follows_the_owning_app(kernel, fel, controller, finished):
    reads = make_trace([TraceSegment(0, mem_reads=8)])
    controller.dispatch_fen("f", "a", [0], [reads], hit_rate="1/1")
    controller.dispatch_fen("g", "b", [3], [reads], hit_rate="1/2")
    controller.dispatch_fen("h", "b", [4], [reads])
    kernel.run_until(100_000)
    assert len(finished) == 3
    assert [fel.cpu(c).cache.hit_count for c in (0, 3, 4)] == [8, 4, 6]
    assert all(fel.cpu(c).cache.access_count == 8 for c in (0, 3, 4))


def test_collect_logs_one_row_per_cpu(fel, owners):
    collector = StatusCollector(fel, owners.get, window_ns=100_000_000)
    collector.send_resource(0)
    assert collector.log == []
    snap = collector.collect(0)
    assert snap == collector.send_resource(0)
    assert [(r.time_ns, r.cpu_id, r.reserved_by, r.recent_load) for r in collector.log] == [
        (0, 0, "a", 0),
        (0, 1, "a", 0),
        (0, 2, "a", 0),
        (0, 3, "b", 0),
        (0, 4, "b", 0),
        (0, 5, None, 0),
    ]
