import itertools
from fractions import Fraction

import numpy as np
import pytest

from rasim.rel.demand import Demand, MissingCurve, ScalabilityCurve, StandaloneLoadCurve
from rasim.rel.policy import (
    POLICIES,
    apply_starvation_guard,
    get_policy,
    policy_firstfit,
    policy_load,
    policy_scalability,
)


def speedups(app_id, values):
    return ScalabilityCurve(app_id, tuple(Fraction(str(v)) for v in values))


def loads(app_id, values):
    return StandaloneLoadCurve(app_id, tuple(Fraction(str(v)) for v in values))


def demand(app_id, min_cpus=1, max_cpus=5):
    return Demand(min_cpus=min_cpus, max_cpus=max_cpus, app_id=app_id)


CONCAVE = [1, 1.9, 2.7, 3.0, 3.1]


def test_single_app_takes_the_cap():
    curves = {"a": speedups("a", CONCAVE)}
    assert policy_scalability(curves, [demand("a")], free=6, claim_cap=5) == {"a": 5}


def test_equal_curves_split_evenly():
    curves = {"audio": speedups("audio", CONCAVE), "corner": speedups("corner", CONCAVE)}
    grants = policy_scalability(curves, [demand("corner"), demand("audio")], free=6, claim_cap=5)
    assert grants == {"audio": 3, "corner": 3}


def test_linear_beats_flat():
    curves = {"a": speedups("a", [1, 2, 3, 4, 5]), "b": speedups("b", [1, 1, 1, 1, 1])}
    assert policy_scalability(curves, [demand("a"), demand("b")], free=6, claim_cap=5) == {"a": 5, "b": 1}


def test_scalability_respects_min_cpus():
    curves = {"a": speedups("a", [1, 2, 3]), "b": speedups("b", [1, 1.5, 2])}
    grants = policy_scalability(curves, [demand("a", 1, 3), demand("b", 3, 3)], free=4, claim_cap=3)
    assert grants["b"] in (0, 3)
    assert sum(grants.values()) <= 4


def test_tie_break_prefers_small_spread_then_app_order():
    flat = [1, 1, 1, 1, 1]
    curves = {"a": speedups("a", flat), "b": speedups("b", flat)}
    # every (x, y) with x, y >= 1 scores 2; (1, 1) has no spread and is the smallest vector
    assert policy_scalability(curves, [demand("a"), demand("b")], free=6, claim_cap=5) == {"a": 1, "b": 1}
    curves = {"a": speedups("a", [1, 2]), "b": speedups("b", [1, 2])}
    # (1, 2) and (2, 1) tie on score and spread; app order picks the smaller vector
    assert policy_scalability(curves, [demand("b", 1, 2), demand("a", 1, 2)], free=3, claim_cap=2) == {"a": 1, "b": 2}


def test_missing_curve():
    with pytest.raises(MissingCurve):
        policy_scalability({}, [demand("a")], free=6, claim_cap=5)
    with pytest.raises(MissingCurve):
        policy_load({}, [demand("a")], free=6, claim_cap=5)


def random_concave(rng, app_id, length):
    steps = sorted((int(s) for s in rng.integers(0, 10, size=length - 1)), reverse=True)
    values, total = [Fraction(1)], Fraction(1)
    for step in steps:
        total += Fraction(step, 10)
        values.append(total)
    return ScalabilityCurve(app_id, tuple(values))


def test_scalability_against_brute_force():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        n_apps = int(rng.integers(1, 4))
        num_cpus = int(rng.integers(1, 9))
        free = int(rng.integers(0, num_cpus + 1))
        claim_cap = int(rng.integers(1, num_cpus + 1))
        demands, curves = [], {}
        for i in range(n_apps):
            app_id = f"app{i}"
            lo = int(rng.integers(1, num_cpus + 1))
            hi = int(rng.integers(lo, num_cpus + 1))
            demands.append(demand(app_id, lo, hi))
            curves[app_id] = random_concave(rng, app_id, hi)

        grants = policy_scalability(curves, demands, free, claim_cap)

        feasible = []
        for vector in itertools.product(*[range(0, min(d.max_cpus, claim_cap) + 1) for d in demands]):
            if sum(vector) <= free and all(n == 0 or n >= d.min_cpus for d, n in zip(demands, vector)):
                feasible.append(vector)
        # demands are listed in app_id order, so vectors compare the way the policy breaks ties
        expected = min(
            feasible,
            key=lambda v: (-sum(curves[d.app_id].at(n) for d, n in zip(demands, v)), max(v) - min(v), v),
        )
        assert tuple(grants[d.app_id] for d in demands) == expected


def test_load_policy_favours_heavier_app():
    curves = {"corner": loads("corner", [0.9] * 5), "audio": loads("audio", [0.5] * 5)}
    assert policy_load(curves, [demand("audio"), demand("corner")], free=6, claim_cap=5) == {"corner": 5, "audio": 1}


def test_load_policy_single_app():
    curves = {"a": loads("a", [0.3, 0.3, 0.3])}
    assert policy_load(curves, [demand("a", 1, 3)], free=6, claim_cap=5) == {"a": 3}
    assert policy_load(curves, [demand("a", 1, 3)], free=2, claim_cap=5) == {"a": 2}


def test_load_policy_three_apps():
    curves = {"x": loads("x", [0.9] * 5), "y": loads("y", [0.8] * 5), "z": loads("z", [0.7] * 5)}
    grants = policy_load(curves, [demand("z"), demand("y"), demand("x")], free=6, claim_cap=5)
    assert grants == {"x": 4, "y": 1, "z": 1}


@pytest.mark.parametrize("scale", [Fraction(1, 3), Fraction(1, 10), Fraction(1)])
def test_load_policy_ignores_the_scale_of_loads(scale):
    profile = {"x": 0.9, "y": 0.8, "z": 0.7}
    scaled = {
        app_id: StandaloneLoadCurve(app_id, tuple(Fraction(str(v)) * scale for _ in range(5)))
        for app_id, v in profile.items()
    }
    demands = [demand("z"), demand("y"), demand("x")]
    assert policy_load(scaled, demands, free=6, claim_cap=5) == {"x": 4, "y": 1, "z": 1}
    assert policy_load(scaled, demands, free=4, claim_cap=5) == {"x": 2, "y": 1, "z": 1}


def test_load_policy_ties_by_app_id():
    curves = {"b": loads("b", [0.5] * 5), "a": loads("a", [0.5] * 5)}
    assert policy_load(curves, [demand("b"), demand("a")], free=6, claim_cap=5) == {"a": 5, "b": 1}


def test_firstfit_keeps_arrival_order():
    grants = policy_firstfit([demand("b"), demand("a")], free=6, claim_cap=5)
    assert grants == {"b": 5, "a": 1}
    assert policy_firstfit([demand("b", 2, 5), demand("a", 2, 5)], free=3, claim_cap=5) == {"b": 2, "a": 0}


def test_registry():
    assert set(POLICIES) == {"scalability", "load", "firstfit"}
    with pytest.raises(KeyError):
        get_policy("random")


def test_starvation_guard_takes_from_largest_grant():
    demands = [demand("a"), demand("b"), demand("c")]
    assert apply_starvation_guard(demands, {"a": 4, "b": 2, "c": 0}, free=6) == {"a": 3, "b": 2, "c": 1}
    # not enough CPUs for everyone: left alone
    assert apply_starvation_guard(demands, {"a": 2, "b": 0, "c": 0}, free=2) == {"a": 2, "b": 0, "c": 0}
    # an app that needs more than one CPU is not topped up
    demands = [demand("a"), demand("b", 2, 5)]
    assert apply_starvation_guard(demands, {"a": 5, "b": 0}, free=5) == {"a": 5, "b": 0}
