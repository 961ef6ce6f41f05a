from collections import deque
from typing import Any, Deque, List, Optional, Tuple


class SharedBus:
    """Shared bus with one outstanding line transfer and round-robin arbitration.

    Every CPU owns a FIFO of pending requests. When the bus is free the
    arbiter searches from ``grant_pointer`` for the first CPU with a pending
    request, grants its oldest request and moves the pointer past that CPU.
    The bus itself is passive; the functional layer decides when to arbitrate.
    """

    def __init__(self, num_cpus: int, transfer_cycles: int = 20):
        assert transfer_cycles >= 0, "transfer_cycles must be non-negative"
        self.num_cpus = num_cpus
        self.transfer_cycles = transfer_cycles
        self.pending: List[Deque[Any]] = [deque() for _ in range(num_cpus)]
        self.grant_pointer = 0
        self.busy_until = 0
        self.granted_count = 0
        # (grant_time, cpu_id) of every transfer, in grant order
        self.grants: List[Tuple[int, int]] = []

    def request(self, cpu_id: int, token: Any = None):
        self.pending[cpu_id].append(token)

    def has_pending(self) -> bool:
        return any(self.pending)

    def arbitrate(self, now: int, transfer_ns: int) -> Optional[Tuple[int, Any]]:
        """Grant the next request in round-robin order, or None if nothing is pending."""
        assert now >= self.busy_until, f"bus granted at {now} while busy until {self.busy_until}"
        for offset in range(self.num_cpus):
            cpu_id = (self.grant_pointer + offset) % self.num_cpus
            if self.pending[cpu_id]:
                token = self.pending[cpu_id].popleft()
                self.grant_pointer = (cpu_id + 1) % self.num_cpus
                self.busy_until = now + transfer_ns
                self.granted_count += 1
                self.grants.append((now, cpu_id))
                return cpu_id, token
        return None
