import dataclasses
import logging
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional

from rasim.air.graph import AirGraph, load_air
from rasim.air.validate import validate_air
from rasim.config import PlatformConfig, WorkloadConfig
from rasim.errors import ConfigError
from rasim.fel.cpu import Trace
from rasim.fel.kernel import NS_PER_MS
from rasim.rel.demand import Demand, ScalabilityCurve, StandaloneLoadCurve
from rasim.workloads.calibration import calibrate
from rasim.workloads.synth import TraceParams, synth_trace

logger = logging.getLogger(__name__)

AIR_DIR = os.path.join(os.path.dirname(__file__), "airs")

# trace_ref -> claim size -> one trace per member CPU
TraceTable = Dict[str, Dict[int, List[Trace]]]


class ConfigOutOfRange(ConfigError):
    pass


@dataclass
class AppBundle:
    app_id: str
    air: AirGraph
    period_ns: int
    trace_table: TraceTable
    demand: Demand
    max_claim: int
    first_request_ns: int = 0
    jitter_ns: int = 0
    hit_rate: Optional[str] = None
    scalability: Optional[ScalabilityCurve] = None
    standalone_load: Optional[StandaloneLoadCurve] = None

    def traces_for(self, trace_ref: str, claim_size: int) -> List[Trace]:
        try:
            return self.trace_table[trace_ref][claim_size]
        except KeyError:
            raise ConfigOutOfRange(f"{self.app_id}: no trace {trace_ref!r} for a claim of {claim_size} CPUs")

    def branch_traces(self, claim_size: int) -> List[Trace]:
        """The traces run for a claim of ``claim_size`` CPUs, whichever FEN provides them."""
        for by_size in self.trace_table.values():
            if claim_size in by_size:
                return by_size[claim_size]
        raise ConfigOutOfRange(f"{self.app_id}: no branch handles a claim of {claim_size} CPUs")


def air_path_for(cfg: WorkloadConfig) -> str:
    if cfg.air_path is not None:
        return cfg.air_path
    return os.path.join(AIR_DIR, f"{cfg.kind}.json")


def build_trace_table(cfg: WorkloadConfig, fen_claim_sizes: Dict[str, set], air: AirGraph) -> TraceTable:
    table: TraceTable = {}
    pf = Fraction(cfg.parallel_fraction)
    for node in air.fen_nodes():
        for n in sorted(fen_claim_sizes.get(node.node_id, ())):
            if n not in cfg.adaptation:
                raise ConfigOutOfRange(f"{cfg.app_id}: adaptation table has no work scale for claim size {n}")
            total = int(cfg.total_kcycles * 1000 * Fraction(cfg.adaptation[n]))
            params = TraceParams(
                total_work_cycles=total,
                parallel_fraction=pf,
                mem_accesses_per_kcycle=cfg.mem_accesses_per_kcycle,
                segment_count=cfg.segment_count,
            )
            table.setdefault(node.trace_ref, {})[n] = synth_trace(params, n)
    return table


def _curve_values(values: List[float], app_id: str, name: str) -> tuple:
    if len(values) == 0:
        raise ConfigOutOfRange(f"{app_id}: {name} curve is empty")
    return tuple(Fraction(str(v)) for v in values)


def build_app(
    cfg: WorkloadConfig,
    platform: Optional[PlatformConfig] = None,
    claim_cap: Optional[int] = None,
    with_curves: bool = True,
) -> AppBundle:
    """
    Assemble an application from its workload config: AIR, trace table, demand and curves.

    Args:
        cfg: The workload section of the run config.
        platform: Target platform; the default six-CPU platform when None.
        claim_cap: Largest claim one application may hold. Defaults to ``num_cpus - 1``.
        with_curves: Calibrate the curves the config does not give explicitly.
    """
    platform = platform if platform is not None else PlatformConfig()
    claim_cap = claim_cap if claim_cap is not None else max(1, platform.num_cpus - 1)
    try:
        air = load_air(air_path_for(cfg))
    except OSError as e:
        raise ConfigError(f"{cfg.app_id}: cannot read AIR: {e}")

    report = validate_air(air, num_cpus=platform.num_cpus, claim_cap=claim_cap)
    if not report.ok:
        raise ConfigError(f"{cfg.app_id}: invalid AIR: {report}")
    get_nodes = air.get_resource_nodes()
    if len(get_nodes) == 0:
        raise ConfigError(f"{cfg.app_id}: AIR {air.graph_id} never acquires resources")
    demand = get_nodes[0].demand
    assert demand is not None
    if demand.max_cpus > platform.num_cpus:
        raise ConfigOutOfRange(f"{cfg.app_id}: demand of {demand.max_cpus} CPUs on a {platform.num_cpus}-CPU platform")

    app = AppBundle(
        app_id=cfg.app_id,
        air=air,
        period_ns=cfg.period_ms * NS_PER_MS,
        trace_table=build_trace_table(cfg, report.fen_claim_sizes, air),
        demand=demand.for_app(cfg.app_id),
        max_claim=min(demand.max_cpus, claim_cap),
        first_request_ns=cfg.first_request_ms * NS_PER_MS,
        jitter_ns=cfg.jitter_ms * NS_PER_MS,
        hit_rate=cfg.hit_rate if cfg.hit_rate is not None else platform.cache.hit_rate,
    )
    if cfg.scalability is not None:
        speedup = _curve_values(cfg.scalability, cfg.app_id, "scalability")
        if speedup[0] != 1:
            raise ConfigOutOfRange(f"{cfg.app_id}: scalability curve must start at exactly 1, got {speedup[0]}")
        app.scalability = ScalabilityCurve(cfg.app_id, speedup)
    if cfg.standalone_load is not None:
        loads = _curve_values(cfg.standalone_load, cfg.app_id, "standalone_load")
        if not all(0 <= v <= 1 for v in loads):
            raise ConfigOutOfRange(f"{cfg.app_id}: standalone loads must lie in [0, 1]")
        app.standalone_load = StandaloneLoadCurve(cfg.app_id, loads)
    if with_curves and (app.scalability is None or app.standalone_load is None):
        scalability, standalone_load = calibrate(app, platform)
        app = dataclasses.replace(
            app,
            scalability=app.scalability or scalability,
            standalone_load=app.standalone_load or standalone_load,
        )
        logger.info(
            "%s calibrated: speedup %s, standalone load %s",
            app.app_id,
            [round(float(s), 3) for s in app.scalability.speedup],
            [round(float(v), 3) for v in app.standalone_load.load],
        )
    return app


def build_audio_eq(
    cfg: Optional[WorkloadConfig] = None, platform: Optional[PlatformConfig] = None, **kwargs
) -> AppBundle:
    """Audio equalization: 400 ms period, reduced sample rate on small claims."""
    return build_app(cfg if cfg is not None else WorkloadConfig.bundled("audio_eq"), platform, **kwargs)


def build_corner_detection(
    cfg: Optional[WorkloadConfig] = None, platform: Optional[PlatformConfig] = None, **kwargs
) -> AppBundle:
    """Corner detection: 1000 ms period, cheaper algorithm variants on small claims."""
    return build_app(cfg if cfg is not None else WorkloadConfig.bundled("corner_detection"), platform, **kwargs)


BUILDERS = {
    "audio_eq": build_audio_eq,
    "corner_detection": build_corner_detection,
}


def build_workloads(
    cfgs: List[WorkloadConfig], platform: PlatformConfig, claim_cap: int, with_curves: bool = True
) -> List[AppBundle]:
    return [
        BUILDERS.get(cfg.kind, build_app)(cfg, platform, claim_cap=claim_cap, with_curves=with_curves) for cfg in cfgs
    ]
