import dataclasses
import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional

from rasim.errors import ConfigError, IoError, SchemaError
from rasim.fel.cache import parse_hit_rate

POLICY_NAMES = ("scalability", "load", "firstfit")

NS_PER_SECOND = 1_000_000_000


def _join(path: str, key: str) -> str:
    if not path:
        return key
    return f"{path}.{key}" if key else path


def _check(cond: bool, key: str, message: str):
    if not cond:
        raise SchemaError(key, message)


def _strict_kwargs(cls, data: Any, path: str) -> Dict[str, Any]:
    """Keep only the keys ``cls`` declares; anything else is a schema error."""
    if not isinstance(data, dict):
        raise SchemaError(path, f"expected an object, got {type(data).__name__}")
    for key in data:
        if key not in cls.__dataclass_fields__.keys():
            raise SchemaError(_join(path, key), f"unknown key for {cls.__name__}")
    return dict(data)


def _build(cls, kwargs: Dict[str, Any], path: str):
    try:
        return cls(**kwargs)
    except SchemaError as e:
        raise SchemaError(_join(path, e.path), e.message)
    except TypeError as e:
        raise SchemaError(path, str(e))


@dataclass
class CacheConfig:
    size_bits: int = 32 * 1024 * 8
    line_bits: int = 1024
    hit_rate: str = "3/4"

    def __post_init__(self):
        _check(isinstance(self.size_bits, int) and self.size_bits > 0, "size_bits", "must be a positive integer")
        _check(
            isinstance(self.line_bits, int) and 0 < self.line_bits <= self.size_bits,
            "line_bits",
            "must be a positive integer no larger than size_bits",
        )
        try:
            parse_hit_rate(self.hit_rate)
        except ConfigError as e:
            raise SchemaError("hit_rate", str(e))

    @classmethod
    def from_dict(cls, data: Any, path: str = "") -> "CacheConfig":
        return _build(cls, _strict_kwargs(cls, data, path), path)


@dataclass
class BusConfig:
    transfer_cycles: int = 20

    def __post_init__(self):
        _check(
            isinstance(self.transfer_cycles, int) and self.transfer_cycles >= 0,
            "transfer_cycles",
            "must be a non-negative integer",
        )

    @classmethod
    def from_dict(cls, data: Any, path: str = "") -> "BusConfig":
        return _build(cls, _strict_kwargs(cls, data, path), path)


@dataclass
class PlatformConfig:
    """Six 100 MHz CPUs with private 32 kb L1 caches (1024 b lines) on a shared bus."""

    num_cpus: int = 6
    freq_hz: int = 100_000_000
    cache: CacheConfig = field(default_factory=CacheConfig)
    bus: BusConfig = field(default_factory=BusConfig)

    def __post_init__(self):
        _check(isinstance(self.num_cpus, int) and self.num_cpus >= 1, "num_cpus", "must be at least 1")
        _check(
            isinstance(self.freq_hz, int) and self.freq_hz > 0 and NS_PER_SECOND % self.freq_hz == 0,
            "freq_hz",
            f"must be a positive divisor of {NS_PER_SECOND}",
        )

    @classmethod
    def from_dict(cls, data: Any, path: str = "") -> "PlatformConfig":
        kwargs = _strict_kwargs(cls, data, path)
        if "cache" in kwargs:
            kwargs["cache"] = CacheConfig.from_dict(kwargs["cache"], _join(path, "cache"))
        if "bus" in kwargs:
            kwargs["bus"] = BusConfig.from_dict(kwargs["bus"], _join(path, "bus"))
        return _build(cls, kwargs, path)


# Calibrated so that the standalone load of corner detection dominates audio
# equalization at every CPU count, both speedups nearly tie at 3 CPUs, and
# every branch finishes inside its period on an idle platform.
BUNDLED_WORKLOADS: Dict[str, Dict[str, Any]] = {
    "audio_eq": {
        "period_ms": 400,
        "total_kcycles": 28_000,
        "parallel_fraction": "0.86",
        "adaptation": {1: "0.5", 2: "0.75", 3: "1", 4: "1", 5: "1"},
    },
    "corner_detection": {
        "period_ms": 1000,
        "total_kcycles": 120_000,
        "parallel_fraction": "0.87",
        "adaptation": {1: "0.5", 2: "0.55", 3: "0.62", 4: "1", 5: "1"},
    },
}


@dataclass
class WorkloadConfig:
    """One periodic adaptive application.

    ``kind`` selects a bundled application (its AIR and default parameters);
    every other key overrides that default.
    """

    kind: str = "audio_eq"
    app_id: Optional[str] = None
    air_path: Optional[str] = None  # Defaults to the AIR shipped for ``kind``
    period_ms: int = 400
    total_kcycles: int = 28_000
    parallel_fraction: str = "0.86"
    adaptation: Dict[int, str] = field(default_factory=lambda: {n: "1" for n in range(1, 6)})
    mem_accesses_per_kcycle: int = 1
    segment_count: int = 16
    first_request_ms: int = 0
    jitter_ms: int = 0
    hit_rate: Optional[str] = None  # "p/q"; the platform cache rate when None
    # Explicit curves, indexed by CPU count starting at 1; calibrated when None
    scalability: Optional[List[float]] = None
    standalone_load: Optional[List[float]] = None

    def __post_init__(self):
        if self.app_id is None:
            self.app_id = self.kind
        self.adaptation = {int(k): str(v) for k, v in self.adaptation.items()}
        self.parallel_fraction = str(self.parallel_fraction)
        integer_fields = (
            "period_ms",
            "total_kcycles",
            "mem_accesses_per_kcycle",
            "segment_count",
            "first_request_ms",
            "jitter_ms",
        )
        for name in integer_fields:
            value = getattr(self, name)
            _check(isinstance(value, int) and not isinstance(value, bool), name, f"must be an integer, got {value!r}")
        _check(self.period_ms > 0, "period_ms", "must be positive")
        _check(self.total_kcycles >= 0, "total_kcycles", "must be non-negative")
        if self.hit_rate is not None:
            try:
                parse_hit_rate(self.hit_rate)
            except ConfigError as e:
                raise SchemaError("hit_rate", str(e))
        try:
            pf = Fraction(self.parallel_fraction)
        except ValueError:
            raise SchemaError("parallel_fraction", f"not a number: {self.parallel_fraction!r}")
        _check(0 <= pf <= 1, "parallel_fraction", "must lie in [0, 1]")
        for n, scale in self.adaptation.items():
            _check(n >= 1, f"adaptation.{n}", "claim sizes start at 1")
            _check(0 < Fraction(scale) <= 1, f"adaptation.{n}", "work scale must lie in (0, 1]")
        _check(self.mem_accesses_per_kcycle >= 0, "mem_accesses_per_kcycle", "must be non-negative")
        _check(self.segment_count >= 1, "segment_count", "must be at least 1")
        _check(self.first_request_ms >= 0, "first_request_ms", "must be non-negative")
        _check(self.jitter_ms >= 0, "jitter_ms", "must be non-negative")

    @property
    def period_ns(self) -> int:
        return self.period_ms * 1_000_000

    @classmethod
    def from_dict(cls, data: Any, path: str = "") -> "WorkloadConfig":
        kwargs = _strict_kwargs(cls, data, path)
        kind = kwargs.get("kind", "audio_eq")
        if kind not in BUNDLED_WORKLOADS and kwargs.get("air_path") is None:
            raise SchemaError(_join(path, "kind"), f"unknown workload kind {kind!r} and no air_path given")
        merged = {**BUNDLED_WORKLOADS.get(kind, {}), **kwargs}
        return _build(cls, merged, path)

    @classmethod
    def bundled(cls, kind: str, **overrides) -> "WorkloadConfig":
        return cls(**{"kind": kind, **BUNDLED_WORKLOADS[kind], **overrides})


def default_workloads() -> List[WorkloadConfig]:
    return [WorkloadConfig.bundled("audio_eq"), WorkloadConfig.bundled("corner_detection")]


@dataclass
class RunnerConfig:
    seed: int = 42
    exp_name: str = "default"
    output_dir: str = "results"


@dataclass
class WandbConfig(RunnerConfig):
    log_to_wandb: bool = False
    wandb_project: str = "rasim"
    run_name: Optional[str] = None
    wandb_entity: Optional[str] = None

    def __post_init__(self):
        if self.run_name is None:
            self.run_name = self.exp_name


@dataclass
class RunConfig(WandbConfig):
    """
    Configuration of an experiment: platform, workloads, allocation policy and run protocol.
    """

    platform: PlatformConfig = field(default_factory=PlatformConfig)
    workloads: List[WorkloadConfig] = field(default_factory=default_workloads)
    policy: str = "scalability"
    sim_time_ms: int = 3500
    runs: int = 5
    claim_cap: Optional[int] = None  # If None, it will be set to num_cpus - 1
    load_window_ms: int = 100
    check_invariants: bool = True
    workers: int = 1  # Runs executed in parallel processes when > 1
    progress: bool = True

    def __post_init__(self):
        super().__post_init__()
        if self.claim_cap is None:
            self.claim_cap = max(1, self.platform.num_cpus - 1)
        _check(isinstance(self.runs, int) and self.runs >= 1, "runs", "must be at least 1")
        _check(self.sim_time_ms > 0, "sim_time_ms", "must be positive")
        _check(self.policy in POLICY_NAMES, "policy", f"must be one of {list(POLICY_NAMES)}")
        _check(
            1 <= self.claim_cap and (self.claim_cap < self.platform.num_cpus or self.platform.num_cpus == 1),
            "claim_cap",
            "must satisfy 1 <= claim_cap < num_cpus",
        )
        _check(self.load_window_ms > 0, "load_window_ms", "must be positive")
        _check(self.workers >= 1, "workers", "must be at least 1")
        _check(len(self.workloads) >= 1, "workloads", "at least one workload is required")
        ids = [w.app_id for w in self.workloads]
        _check(len(ids) == len(set(ids)), "workloads", f"duplicate app_id in {ids}")

    @property
    def sim_time_ns(self) -> int:
        return self.sim_time_ms * 1_000_000

    @property
    def load_window_ns(self) -> int:
        return self.load_window_ms * 1_000_000

    @classmethod
    def from_dict(cls, data: Any, path: str = "") -> "RunConfig":
        kwargs = _strict_kwargs(cls, data, path)
        if "platform" in kwargs:
            kwargs["platform"] = PlatformConfig.from_dict(kwargs["platform"], _join(path, "platform"))
        if "workloads" in kwargs:
            if not isinstance(kwargs["workloads"], list):
                raise SchemaError(_join(path, "workloads"), "expected a list")
            kwargs["workloads"] = [
                WorkloadConfig.from_dict(w, _join(path, f"workloads.{i}")) for i, w in enumerate(kwargs["workloads"])
            ]
        return _build(cls, kwargs, path)

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    def save_config(self, path: str):
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=4, sort_keys=True)


def load_config(path: str) -> RunConfig:
    """Read a JSON config document; missing keys take their defaults, unknown keys are rejected."""
    try:
        with open(path, "r") as f:
            text = f.read()
    except OSError as e:
        raise IoError(f"cannot read config {path}: {e}")
    try:
        data = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as e:
        raise SchemaError("", f"{os.path.basename(path)} line {e.lineno} column {e.colno}: {e.msg}")
    return RunConfig.from_dict(data)
