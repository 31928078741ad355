"""SINR engine tests, including the from-scratch interference oracle."""

import math
import random

import pytest

from crnsim.radio import (
    INFINITE,
    OFF,
    GainMatrix,
    InvalidStrategyError,
    NetworkState,
    Strategy,
    level_power,
    path_gain,
)
from crnsim.scenario import default_params, generate_scenario
from tests.util import build_line_scenario, interferer_distance


def make_state(scenario):
    return NetworkState(scenario, GainMatrix(scenario))


def from_scratch_interference(state, link_id, channel):
    """Independent recomputation of the co-channel interference sum."""
    scenario = state.scenario
    gamma = scenario.params.path_loss_exp
    total = 0.0
    for m, s in enumerate(state.strategies):
        if m == link_id or s.level == 0 or s.channel != channel:
            continue
        link_m = scenario.links[m]
        link_l = scenario.links[link_id]
        d = scenario.distance(link_m.tx, link_l.rx)
        g = INFINITE if d == 0.0 else d ** (-gamma)
        total += state.power[s.level] * g
    return total


# --- path gain ---------------------------------------------------------------


def test_path_gain_unit_distance():
    assert path_gain(1.0, 4.0) == 1.0


def test_path_gain_100m():
    assert path_gain(100.0, 4.0) == 1e-8


def test_path_gain_zero_distance_is_infinite():
    assert path_gain(0.0, 4.0) == INFINITE


def test_path_gain_underflowing_distance_is_infinite():
    assert path_gain(1e-300, 4.0) == INFINITE


def test_path_gain_rejects_negative_distance():
    with pytest.raises(ValueError):
        path_gain(-1.0, 4.0)


def test_level_power_endpoints():
    assert level_power(0, 0.1, 16) == 0.0
    assert level_power(15, 0.1, 16) == 0.1


# --- sinr and activity --------------------------------------------------------


def test_sinr_link_budget_at_100m():
    # full power over 100 m against noise alone gives exactly the threshold
    scenario = build_line_scenario([(0.0, 0.0), (100.0, 0.0)], routes=[(0, 1)])
    state = make_state(scenario)
    state.apply(0, Strategy(15, 0))
    assert state.sinr(0) == pytest.approx(10.0, rel=1e-9)
    assert state.is_active(0)  # SINR equal to the threshold counts


def test_sinr_off_link_is_zero():
    scenario = build_line_scenario([(0.0, 0.0), (100.0, 0.0)], routes=[(0, 1)])
    state = make_state(scenario)
    assert state.sinr(0) == 0.0
    assert not state.is_active(0)


def test_sinr_with_single_interferer():
    # a co-channel interferer delivering exactly the noise power (1e-10 W)
    # cuts the 100 m link budget from 10.0 down to 5.0
    d = interferer_distance(1e-10)  # full-power tx delivering 1e-10 W
    scenario = build_line_scenario(
        [(0.0, 0.0), (100.0, 0.0), (100.0 + d, 0.0), (100.0 + d, 80.0)],
        routes=[(0, 1), (2, 3)],
    )
    state = make_state(scenario)
    state.apply(0, Strategy(15, 0))
    state.apply(1, Strategy(15, 0))
    assert state.sinr(0) == pytest.approx(5.0, rel=1e-9)


def test_adjacent_links_same_channel_jam_the_earlier_one():
    # consecutive hops share a node: infinite gain, the first link dies
    scenario = build_line_scenario(
        [(0.0, 0.0), (60.0, 0.0), (120.0, 0.0)], routes=[(0, 1, 2)]
    )
    state = make_state(scenario)
    state.apply(0, Strategy(15, 0))
    state.apply(1, Strategy(15, 0))
    assert state.sinr(0) == 0.0
    assert not state.is_active(0)
    # the later link hears only the distant first tx: 0.1*60^-4 over
    # (1e-10 + 0.1*120^-4) is comfortably above the threshold
    assert state.is_active(1)


def test_apply_rejects_inadmissible_channel():
    scenario = build_line_scenario([(0.0, 0.0), (100.0, 0.0)], routes=[(0, 1)])
    state = make_state(scenario)
    with pytest.raises(InvalidStrategyError):
        state.apply(0, Strategy(3, 9))  # channel 9 not in the line fixture
    with pytest.raises(InvalidStrategyError):
        state.apply(0, Strategy(0, 2))  # OFF carries no channel
    with pytest.raises(InvalidStrategyError):
        state.apply(0, Strategy(16, 0))  # level out of range


def test_apply_then_revert_restores_state():
    scenario = generate_scenario(default_params(n_flows=6, seed=5))
    state = make_state(scenario)
    rng = random.Random(1)
    for link in scenario.links:
        channels = sorted(link.channels)
        state.apply(link.id, Strategy(rng.randrange(1, 16), rng.choice(channels)))
    snapshot = state._finite.copy()
    link = scenario.links[0]
    old = state.strategies[0]
    state.apply(0, Strategy(7, sorted(link.channels)[-1]))
    state.apply(0, old)
    assert (abs(state._finite - snapshot) <= 1e-12).all()


def test_incremental_cache_matches_from_scratch_after_random_applies():
    scenario = generate_scenario(default_params(n_flows=8, seed=11))
    state = make_state(scenario)
    rng = random.Random(42)
    n = len(scenario.links)
    for _ in range(1000):
        link = scenario.links[rng.randrange(n)]
        if rng.random() < 0.25:
            state.apply(link.id, OFF)
        else:
            state.apply(
                link.id,
                Strategy(rng.randrange(1, 16), rng.choice(sorted(link.channels))),
            )
    for link in scenario.links:
        for c in range(scenario.params.n_channels):
            cached = state.interference_at(link.id, c)
            scratch = from_scratch_interference(state, link.id, c)
            if math.isinf(scratch):
                assert math.isinf(cached)
            else:
                assert math.isclose(cached, scratch, rel_tol=1e-9, abs_tol=1e-18)


def test_off_links_contribute_nothing():
    scenario = generate_scenario(default_params(n_flows=6, seed=3))
    state = make_state(scenario)
    link = scenario.links[0]
    state.apply(0, Strategy(15, sorted(link.channels)[0]))
    baseline = {
        (l.id, c): state.interference_at(l.id, c)
        for l in scenario.links
        for c in range(scenario.params.n_channels)
    }
    # turning other links on and off again must not disturb anything
    for other in scenario.links[1:4]:
        state.apply(other.id, Strategy(8, sorted(other.channels)[0]))
        state.apply(other.id, OFF)
    for (lid, c), value in baseline.items():
        assert state.interference_at(lid, c) == pytest.approx(value, abs=1e-15)


def test_sinr_monotone_in_interferer_power():
    scenario = build_line_scenario(
        [(0.0, 0.0), (90.0, 0.0), (20.0, 60.0), (90.0, 80.0)],
        routes=[(0, 1), (2, 3)],
    )
    state = make_state(scenario)
    state.apply(0, Strategy(15, 0))
    previous = state.sinr(0)
    for level in range(1, 16):
        state.apply(1, Strategy(level, 0))
        current = state.sinr(0)
        assert current <= previous
        previous = current
    # moving the interferer to another channel cannot decrease the victim SINR
    jammed = state.sinr(0)
    state.apply(1, Strategy(15, 1))
    assert state.sinr(0) >= jammed


def test_sinr_scale_invariance():
    params = default_params(n_flows=8, seed=7)
    scenario = generate_scenario(params)
    scaled_params = default_params(
        n_flows=8, seed=7, p_max=params.p_max * 37.0, noise_power=params.noise_power * 37.0
    )
    scaled = generate_scenario(scaled_params)
    state = make_state(scenario)
    state_scaled = make_state(scaled)
    rng = random.Random(9)
    for link in scenario.links:
        strategy = Strategy(rng.randrange(1, 16), rng.choice(sorted(link.channels)))
        state.apply(link.id, strategy)
        state_scaled.apply(link.id, strategy)
    for link in scenario.links:
        a, b = state.sinr(link.id), state_scaled.sinr(link.id)
        if math.isinf(a) or a == 0.0:
            assert a == b
        else:
            assert math.isclose(a, b, rel_tol=1e-12)
