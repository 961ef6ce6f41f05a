import json

import pytest

from rasim.air.graph import parse_air
from rasim.config import CacheConfig, PlatformConfig, WorkloadConfig
from rasim.fel.kernel import Kernel
from rasim.fel.platform import FunctionalLayer
from rasim.workloads.apps import build_workloads

MINIMAL_AIR = {
    "id": "minimal",
    "entry": "get",
    "nodes": [
        {"id": "get", "kind": "get_resource", "demand": {"min_cpus": 1, "max_cpus": 2, "max_load": None}},
        {"id": "work", "kind": "fen", "trace": "work"},
        {"id": "release", "kind": "release_resource"},
    ],
    "edges": [
        {"from": "get", "to": "work", "guard": "always"},
        {"from": "work", "to": "release", "guard": "always"},
    ],
}


@pytest.fixture
def platform_cfg():
    return PlatformConfig()


@pytest.fixture
def kernel():
    return Kernel()


@pytest.fixture
def fel(kernel, platform_cfg):
    return FunctionalLayer(kernel, platform_cfg)


@pytest.fixture
def perfect_cache_fel(kernel):
    return FunctionalLayer(kernel, PlatformConfig(cache=CacheConfig(hit_rate="1/1")))


@pytest.fixture
def minimal_air_text():
    return json.dumps(MINIMAL_AIR)


@pytest.fixture
def minimal_air(minimal_air_text):
    return parse_air(minimal_air_text)


@pytest.fixture(scope="session")
def small_audio_cfg():
    """Audio equalization shrunk to a fraction of its work, for fast scenario tests."""
    return WorkloadConfig.bundled("audio_eq", total_kcycles=2_800, segment_count=4)


@pytest.fixture(scope="session")
def small_corner_cfg():
    return WorkloadConfig.bundled("corner_detection", total_kcycles=12_000, segment_count=4)


@pytest.fixture(scope="session")
def small_apps(small_audio_cfg, small_corner_cfg):
    """Both small applications, calibrated once for the whole session."""
    return build_workloads([small_audio_cfg, small_corner_cfg], PlatformConfig(), claim_cap=5)
