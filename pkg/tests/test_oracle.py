"""Exhaustive-oracle tests: known optima and equilibrium checks."""

import pytest

from crnsim.games import GameConfig, GameKind, run_game
from crnsim.oracle import (
    OracleSizeError,
    global_optimum,
    is_pure_nash,
    profile_sinrs,
)
from crnsim.radio import OFF, Strategy
from crnsim.scenario import default_params, generate_scenario
from tests.util import build_line_scenario


def tiny_scenario(seed, n_flows=3):
    return generate_scenario(
        default_params(
            n_nodes=12,
            side_length=200.0,
            n_channels=2,
            region_size=100.0,
            channel_subset_min=1,
            channel_subset_max=2,
            q_levels=2,
            max_hops=2,
            n_flows=n_flows,
            seed=seed,
        )
    )


def test_profile_sinrs_match_engine():
    from crnsim.radio import GainMatrix, NetworkState

    scenario = tiny_scenario(seed=2)
    state = NetworkState(scenario, GainMatrix(scenario))
    profile = []
    for link in scenario.links:
        s = Strategy(1, sorted(link.channels)[0]) if link.id % 2 == 0 else OFF
        state.apply(link.id, s)
        profile.append(s)
    sinrs = profile_sinrs(scenario, tuple(profile))
    for link in scenario.links:
        assert sinrs[link.id] == pytest.approx(state.sinr(link.id), rel=1e-9, abs=1e-15)


def test_global_optimum_single_feasible_flow():
    scenario = build_line_scenario(
        [(0.0, 0.0), (50.0, 0.0)], routes=[(0, 1)], channels=(0,), q_levels=2
    )
    best, witness = global_optimum(scenario)
    assert best == 1
    assert witness[0].level > 0


def test_global_optimum_mutual_jam_allows_only_one():
    # single shared channel, both receivers within each other's kill radius
    scenario = build_line_scenario(
        [(0.0, 0.0), (60.0, 0.0), (90.0, 0.0), (30.0, 0.0)],
        routes=[(0, 1), (2, 3)],
        channels=(0,),
        q_levels=2,
    )
    best, witness = global_optimum(scenario)
    assert best == 1
    on = [s for s in witness if s.level > 0]
    assert len(on) == 1


def test_global_optimum_zero_flows():
    scenario = generate_scenario(default_params(n_flows=0, seed=1))
    best, witness = global_optimum(scenario)
    assert best == 0 and witness == ()


def test_global_optimum_guard():
    scenario = generate_scenario(default_params(n_flows=10, seed=1))
    with pytest.raises(OracleSizeError):
        global_optimum(scenario, guard=1000)


def test_all_off_is_not_lfg_nash_when_a_flow_can_activate():
    scenario = build_line_scenario(
        [(0.0, 0.0), (50.0, 0.0)], routes=[(0, 1)], channels=(0, 1), q_levels=4
    )
    profile = (OFF,)
    assert not is_pure_nash(profile, GameKind.LFG, scenario)
    assert not is_pure_nash(profile, GameKind.LLG, scenario)
    assert not is_pure_nash(profile, GameKind.PFG, scenario)


def test_global_optimum_witness_is_pfg_nash():
    for seed in range(5):
        scenario = tiny_scenario(seed=seed)
        _, witness = global_optimum(scenario)
        assert is_pure_nash(witness, GameKind.PFG, scenario)


def test_converged_lfg_profile_is_nash():
    for seed in range(5):
        scenario = tiny_scenario(seed=seed)
        state, trajectory, _ = run_game(scenario, GameConfig(game=GameKind.LFG))
        if trajectory.converged:
            assert is_pure_nash(tuple(state.strategies), GameKind.LFG, scenario)


def test_is_pure_nash_rejects_clg():
    scenario = tiny_scenario(seed=1)
    profile = tuple([OFF] * len(scenario.links))
    with pytest.raises(ValueError, match="CLG"):
        is_pure_nash(profile, GameKind.CLG, scenario)


def test_is_pure_nash_guard():
    scenario = generate_scenario(default_params(n_flows=10, seed=1))
    profile = tuple([OFF] * len(scenario.links))
    with pytest.raises(OracleSizeError):
        is_pure_nash(profile, GameKind.LFG, scenario, guard=10)
