"""Exhaustive ground truth for tiny instances.

Everything here is deliberately brute force: joint profiles are enumerated
without pruning and SINRs are summed from scratch, so results are trivially
auditable and independent of the incremental engine and the pruned searches.
Size guards keep accidental use on large instances from hanging.
"""

from __future__ import annotations

import itertools
import math

from .games import GameKind, strategy_space
from .radio import Strategy, level_power, path_gain
from .scenario import Scenario


class OracleSizeError(ValueError):
    """Joint space too large for exhaustive enumeration."""


def _gain_table(scenario: Scenario) -> list[list[float]]:
    links = scenario.links
    gamma = scenario.params.path_loss_exp
    table = []
    for m in links:
        row = []
        for l in links:
            d = scenario.distance(m.tx, l.rx)
            row.append(path_gain(d, gamma))
        table.append(row)
    return table


def profile_sinrs(scenario: Scenario, profile: tuple[Strategy, ...]) -> list[float]:
    """From-scratch SINR of every link under a joint profile (0.0 for OFF)."""
    params = scenario.params
    gains = _gain_table(scenario)
    powers = [level_power(q, params.p_max, params.q_levels) for q in range(params.q_levels)]
    sinrs = []
    for l, s in enumerate(profile):
        if s.level == 0:
            sinrs.append(0.0)
            continue
        interference = 0.0
        for m, sm in enumerate(profile):
            if m == l or sm.level == 0 or sm.channel != s.channel:
                continue
            interference += powers[sm.level] * gains[m][l]
        if math.isinf(interference):
            sinrs.append(0.0)
            continue
        signal = powers[s.level] * gains[l][l]
        sinrs.append(signal / (params.noise_power + interference))
    return sinrs


def _active_flow_count(scenario: Scenario, profile: tuple[Strategy, ...]) -> int:
    sinrs = profile_sinrs(scenario, profile)
    alpha = scenario.params.sinr_threshold
    count = 0
    for flow in scenario.flows:
        if all(
            profile[l].level > 0 and sinrs[l] >= alpha for l in flow.links
        ):
            count += 1
    return count


def _spaces(scenario: Scenario) -> list[tuple[Strategy, ...]]:
    return [strategy_space(l, scenario.params.q_levels) for l in scenario.links]


def global_optimum(
    scenario: Scenario, guard: int = 10**7
) -> tuple[int, tuple[Strategy, ...]]:
    """Exact maximum number of simultaneously active flows, with the first
    joint profile (in enumeration order) attaining it."""
    spaces = _spaces(scenario)
    size = math.prod(len(s) for s in spaces)
    if size > guard:
        raise OracleSizeError(f"joint space has {size} profiles, guard is {guard}")
    best = -1
    witness: tuple[Strategy, ...] = ()
    for profile in itertools.product(*spaces):
        count = _active_flow_count(scenario, profile)
        if count > best:
            best = count
            witness = profile
    return best, witness


def _utility(
    scenario: Scenario,
    profile: tuple[Strategy, ...],
    game: GameKind,
    player: int,
) -> int:
    sinrs = profile_sinrs(scenario, profile)
    alpha = scenario.params.sinr_threshold

    def link_active(l: int) -> bool:
        return profile[l].level > 0 and sinrs[l] >= alpha

    if game is GameKind.LLG:
        if profile[player].level == 0:
            return 0
        return 1 if link_active(player) else -1
    if game is GameKind.LFG:
        links = scenario.flows[player].links
        if all(profile[l].level == 0 for l in links):
            return 0
        return 1 if all(link_active(l) for l in links) else -1
    if game is GameKind.PFG:
        count = 0
        for flow in scenario.flows:
            if all(link_active(l) for l in flow.links):
                count += 1
        return count
    raise ValueError(
        "pure-NE checks are defined for LLG, LFG and PFG only; the CLG "
        "stopping rule does not certify an equilibrium"
    )


def is_pure_nash(
    profile: tuple[Strategy, ...],
    game: GameKind,
    scenario: Scenario,
    guard: int = 10**7,
) -> bool:
    """True iff no player has a strictly improving unilateral deviation.

    Link players deviate over their full strategy space; flow players over
    the full joint space of their links.
    """
    spaces = _spaces(scenario)
    if game is GameKind.LLG:
        players = [(l.id, (l.id,)) for l in scenario.links]
    else:
        players = [(f.id, f.links) for f in scenario.flows]
    profile = tuple(profile)
    for player, links in players:
        size = math.prod(len(spaces[l]) for l in links)
        if size > guard:
            raise OracleSizeError(
                f"player {player} has {size} deviations, guard is {guard}"
            )
        current = _utility(scenario, profile, game, player)
        for deviation in itertools.product(*(spaces[l] for l in links)):
            candidate = list(profile)
            for l, s in zip(links, deviation):
                candidate[l] = s
            if _utility(scenario, tuple(candidate), game, player) > current:
                return False
    return True
