from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Tuple

from rasim.errors import SimulationError


class AlreadyReserved(SimulationError):
    pass


class ClaimNotLive(SimulationError):
    pass


class CpuStillBusy(SimulationError):
    pass


class MissingCurve(SimulationError):
    pass


@dataclass(frozen=True)
class Demand:
    """CPU count range an application asks for, plus an optional recent-load ceiling per CPU."""

    min_cpus: int = 1
    max_cpus: int = 1
    max_load: Optional[Fraction] = None
    app_id: Optional[str] = None

    def __post_init__(self):
        assert 1 <= self.min_cpus <= self.max_cpus, f"invalid CPU range in {self}"

    def for_app(self, app_id: str) -> "Demand":
        return Demand(min_cpus=self.min_cpus, max_cpus=self.max_cpus, max_load=self.max_load, app_id=app_id)


@dataclass(frozen=True)
class CandidateSet:
    resources: Tuple[int, ...] = ()

    def __post_init__(self):
        assert list(self.resources) == sorted(set(self.resources)), (
            f"candidates must be unique and ascending, got {self.resources}"
        )

    def __len__(self) -> int:
        return len(self.resources)

    def __contains__(self, cpu_id: int) -> bool:
        return cpu_id in self.resources


@dataclass
class Claim:
    app_id: str
    resources: Tuple[int, ...]
    granted_at: int
    iteration: int = 0
    # Provenance, for the invariant checker
    demand: Optional[Demand] = None
    candidates: CandidateSet = field(default_factory=CandidateSet)
    granted_count: int = 0
    claim_id: int = -1
    live: bool = True

    @property
    def size(self) -> int:
        return len(self.resources)

    @property
    def is_empty(self) -> bool:
        return len(self.resources) == 0


@dataclass(frozen=True)
class ResourceStatus:
    cpu_id: int
    reserved_by: Optional[str]
    recent_load: Fraction


@dataclass(frozen=True)
class ResourceSnapshot:
    taken_at: int
    entries: Tuple[ResourceStatus, ...]

    def free_cpus(self) -> Tuple[int, ...]:
        return tuple(e.cpu_id for e in self.entries if e.reserved_by is None)

    def reservations(self) -> Dict[int, Optional[str]]:
        return {e.cpu_id: e.reserved_by for e in self.entries}


@dataclass(frozen=True)
class ScalabilityCurve:
    """Speedup over single-CPU execution, ``speedup[n - 1]`` for ``n`` CPUs."""

    app_id: str
    speedup: Tuple[Fraction, ...]

    def __post_init__(self):
        assert len(self.speedup) > 0 and self.speedup[0] == 1, f"speedup(1) must be exactly 1 for {self.app_id}"

    def at(self, n: int) -> Fraction:
        if n == 0:
            return Fraction(0)
        return self.speedup[min(n, len(self.speedup)) - 1]


@dataclass(frozen=True)
class StandaloneLoadCurve:
    app_id: str
    load: Tuple[Fraction, ...]

    def __post_init__(self):
        assert all(0 <= v <= 1 for v in self.load), f"standalone loads of {self.app_id} must lie in [0, 1]"

    def at(self, n: int) -> Fraction:
        if n == 0:
            return Fraction(0)
        return self.load[min(n, len(self.load)) - 1]
