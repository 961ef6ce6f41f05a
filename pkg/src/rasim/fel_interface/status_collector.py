from typing import Callable, List, Optional

from rasim.fel.metrics import SnapshotRecord
from rasim.fel.platform import FunctionalLayer
from rasim.rel.demand import ResourceSnapshot, ResourceStatus


class StatusCollector:
    """Reads reservation owners and trailing-window loads for the resource manager."""

    def __init__(self, platform: FunctionalLayer, holder: Callable[[int], Optional[str]], window_ns: int):
        assert window_ns > 0, "load window must be positive"
        self.platform = platform
        self.holder = holder
        self.window_ns = window_ns
        self.log: List[SnapshotRecord] = []

    def send_resource(self, now: int) -> ResourceSnapshot:
        return ResourceSnapshot(
            taken_at=now,
            entries=tuple(
                ResourceStatus(
                    cpu_id=cpu.cpu_id,
                    reserved_by=self.holder(cpu.cpu_id),
                    recent_load=self.platform.recent_load(cpu.cpu_id, now, self.window_ns),
                )
                for cpu in self.platform.cpus
            ),
        )

    def collect(self, now: int) -> ResourceSnapshot:
        """``send_resource`` for an allocation round; the snapshot is appended to the run log."""
        snapshot = self.send_resource(now)
        self.log.extend(
            SnapshotRecord(time_ns=now, cpu_id=e.cpu_id, reserved_by=e.reserved_by, recent_load=e.recent_load)
            for e in snapshot.entries
        )
        return snapshot
