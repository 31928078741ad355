"""Game-theoretic channel and power allocation in multihop cognitive radio
networks under the physical (SINR) interference model."""

from .games import (
    GameConfig,
    GameKind,
    RunMetrics,
    Trajectory,
    run_game,
)
from .radio import OFF, GainMatrix, NetworkState, Strategy
from .scenario import (
    Scenario,
    ScenarioError,
    ScenarioParams,
    default_params,
    generate_scenario,
    load_scenario,
    save_scenario,
)

__all__ = [
    "GameConfig",
    "GameKind",
    "RunMetrics",
    "Trajectory",
    "run_game",
    "OFF",
    "GainMatrix",
    "NetworkState",
    "Strategy",
    "Scenario",
    "ScenarioError",
    "ScenarioParams",
    "default_params",
    "generate_scenario",
    "load_scenario",
    "save_scenario",
]
