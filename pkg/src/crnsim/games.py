"""Better-response dynamics for the four allocation games.

Four game kinds share one engine: links or flows take turns in a fixed round
robin, each picking the first strictly-improving strategy in its scan order.
The scan runs power levels ascending within a channel and rotates the channel
starting point per turn (deterministically, from the config seed), which
keeps runs reproducible while letting players in a better-response standoff
escape instead of repeating the same conflicting picks forever. Flow players
search their joint link space with a backtracking search that prunes any
partial assignment in which an already-assigned link of the flow drops below
the SINR threshold; that prune is sound because the links assigned later can
only add interference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

from .radio import OFF, GainMatrix, NetworkState, Strategy
from .scenario import DirectedLink, Flow, Scenario


class GameKind(Enum):
    LLG = "llg"  # each link selfishly tries to establish itself
    LFG = "lfg"  # each flow jointly allocates its own links
    PFG = "pfg"  # each flow maximizes the network-wide count of active flows
    CLG = "clg"  # links cooperate along their flow in two-step turns

    @property
    def players_are_flows(self) -> bool:
        return self in (GameKind.LFG, GameKind.PFG)


@dataclass(frozen=True)
class GameConfig:
    """``seed`` drives the per-turn rotation of the channel scan order; runs
    are bit-reproducible for a fixed (scenario, config)."""

    game: GameKind
    max_cycles: int = 50
    search_node_cap: int = 10**6
    seed: int = 0

    def __post_init__(self) -> None:
        if self.max_cycles < 1:
            raise ValueError("max_cycles must be >= 1")
        if self.search_node_cap < 1:
            raise ValueError("search_node_cap must be >= 1")


_MASK64 = 0xFFFFFFFFFFFFFFFF


def _mix(a: int, b: int, c: int) -> int:
    """splitmix64-style mixer; cheap, stable across platforms."""
    x = (
        a * 0x9E3779B97F4A7C15 + b * 0xBF58476D1CE4E5B9 + c * 0x94D049BB133111EB
    ) & _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x


def _rotate(seq: list, offset: int) -> list:
    """Rotate a scan order; identical strategies are reachable either way.

    Strictly fixed scan orders lock opposing players into repeating the same
    conflicting better responses, producing limit cycles; rotating the start
    point per turn lets them escape while staying fully reproducible.
    """
    if len(seq) < 2 or offset == 0:
        return seq
    k = offset % len(seq)
    return seq[k:] + seq[:k]


@dataclass
class MoveRecord:
    """One accepted strategy change. ``old``/``new`` are a single Strategy for
    link players and a tuple of Strategies (route order) for flow players."""

    player: str
    old: object
    new: object
    utility_before: int
    utility_after: int
    potential: int | None = None


@dataclass
class Trajectory:
    records: list[MoveRecord] = field(default_factory=list)
    link_steps: int = 0
    flow_steps: int = 0
    converged: bool = False
    termination: str = ""
    capped_searches: int = 0


@dataclass
class RunMetrics:
    """Outcome of one game run on one instance."""

    instance_id: int
    game: GameKind
    flows_requested: int
    flows_active: int
    mean_links_per_active_flow: float | None
    normalized_flow_steps: float
    converged: bool


# --- strategy spaces and utilities -----------------------------------------


def strategy_space(link: DirectedLink, q_levels: int) -> tuple[Strategy, ...]:
    """Deterministic enumeration of a link's actions: OFF first, then channels
    ascending with power levels ascending within each channel."""
    return (OFF,) + tuple(
        Strategy(q, c) for c in sorted(link.channels) for q in range(1, q_levels)
    )


def llg_utility(link_id: int, state: NetworkState) -> int:
    """1 established, 0 off, -1 transmitting but failing."""
    if state.strategies[link_id].level == 0:
        return 0
    return 1 if state.sinr(link_id) >= state.alpha else -1


def lfg_utility(flow_id: int, state: NetworkState) -> int:
    """1 if every link of the flow is active, 0 if all are off, -1 otherwise."""
    links = state.scenario.flows[flow_id].links
    if all(state.strategies[l].level == 0 for l in links):
        return 0
    return 1 if all(state.is_active(l) for l in links) else -1


def potential(state: NetworkState) -> int:
    """Count of active flows; identical-interest utility of every flow player."""
    return state.active_flow_count()


def clg_utility(link_id: int, state: NetworkState, phase: int) -> int:
    """Phase 1 judges the flow's links up to and including this one; phase 2
    judges the whole flow. 0 whenever the link itself is off."""
    if phase not in (1, 2):
        raise ValueError(f"phase must be 1 or 2, got {phase}")
    if state.strategies[link_id].level == 0:
        return 0
    link = state.scenario.links[link_id]
    flow = state.scenario.flows[link.flow]
    checked = flow.links[: link.index_in_flow + 1] if phase == 1 else flow.links
    return 1 if all(state.is_active(l) for l in checked) else -1


# --- level arithmetic -------------------------------------------------------
#
# Feasible power levels on a channel always form an interval: the link's own
# SINR requirement gives a lower bound and the tolerance of already-active
# co-channel links an upper one. Both bounds are located with a closed-form
# hint and then fixed up against the same division predicate the utilities
# use, so boundary cases agree exactly with a brute-force scan.


def _min_level(state: NetworkState, own_gain: float, interference: float) -> int | None:
    """Smallest level whose SINR meets the threshold, or None."""
    if math.isinf(interference):
        return None
    if math.isinf(own_gain):
        return 1
    qmax = state.q_levels - 1
    denom = state.noise + interference
    alpha = state.alpha
    power = state.power
    hint = alpha * denom / own_gain / power[1]
    q = min(max(int(hint), 1), qmax)
    while q <= qmax and power[q] * own_gain / denom < alpha:
        q += 1
    if q > qmax:
        return None
    while q > 1 and power[q - 1] * own_gain / denom >= alpha:
        q -= 1
    return q


def _max_tolerated(
    state: NetworkState, victim_signal: float, base_interference: float, cross_gain: float
) -> int:
    """Largest interferer level (possibly 0) keeping the victim at or above
    the threshold; assumes the victim passes at level 0."""
    qmax = state.q_levels - 1
    if math.isinf(cross_gain):
        return 0
    if math.isinf(victim_signal):
        return qmax
    denom0 = state.noise + base_interference
    alpha = state.alpha
    power = state.power
    if victim_signal / (denom0 + power[qmax] * cross_gain) >= alpha:
        return qmax
    slack = victim_signal / alpha - denom0
    q = int(slack / cross_gain / power[1]) if cross_gain > 0.0 and slack > 0.0 else 0
    q = min(max(q, 0), qmax)
    while q > 0 and victim_signal / (denom0 + power[q] * cross_gain) < alpha:
        q -= 1
    while q < qmax and victim_signal / (denom0 + power[q + 1] * cross_gain) >= alpha:
        q += 1
    return q


# --- link moves (LLG and CLG phase 1) ---------------------------------------


def llg_move(link_id: int, state: NetworkState, rotation: int = 0) -> Strategy | None:
    """First activating strategy in scan order; OFF as the improving fallback
    from -1; None when nothing improves."""
    u = llg_utility(link_id, state)
    if u == 1:
        return None
    own_gain = float(state.gains.m[link_id, link_id])
    for c in _rotate(sorted(state.scenario.links[link_id].channels), rotation):
        q = _min_level(state, own_gain, state.interference_at(link_id, c))
        if q is not None:
            return Strategy(q, c)
    return OFF if u == -1 else None


def clg_phase1_move(
    link_id: int, state: NetworkState, rotation: int = 0
) -> Strategy | None:
    """First strategy activating this link while keeping every earlier link of
    the flow active; OFF as the improving fallback from -1; None otherwise."""
    u = clg_utility(link_id, state, phase=1)
    if u == 1:
        return None
    link = state.scenario.links[link_id]
    flow = state.scenario.flows[link.flow]
    gains = state.gains
    # earlier links must survive once this link's current transmission is
    # removed, otherwise no own strategy can reach utility 1
    victims = []
    feasible = True
    for m in flow.links[: link.index_in_flow]:
        sm = state.strategies[m]
        if sm.level == 0:
            feasible = False
            break
        base = state.interference_at(m, sm.channel, exclude=(link_id,))
        signal = state.power[sm.level] * float(gains.m[m, m])
        if math.isinf(base) or signal / (state.noise + base) < state.alpha:
            feasible = False
            break
        victims.append((m, sm.channel, base, signal))
    if feasible:
        own_gain = float(gains.m[link_id, link_id])
        qmax = state.q_levels - 1
        for c in _rotate(sorted(link.channels), rotation):
            lo = _min_level(state, own_gain, state.interference_at(link_id, c))
            if lo is None:
                continue
            hi = qmax
            for m, cm, base, signal in victims:
                if cm == c:
                    hi = min(
                        hi,
                        _max_tolerated(state, signal, base, float(gains.m[link_id, m])),
                    )
                    if hi < lo:
                        break
            if lo <= hi:
                return Strategy(lo, c)
    return OFF if u == -1 else None


# --- joint activation search (LFG and PFG) ----------------------------------


@dataclass
class SearchBudget:
    remaining: int
    exhausted: bool = False

    def spend(self) -> bool:
        if self.remaining <= 0:
            self.exhausted = True
            return False
        self.remaining -= 1
        return True


class _VictimTracker:
    """Links of other flows that are active with the searching flow removed.

    The joint search feeds every tentative assignment through ``push``; a
    False return means some previously surviving flow just dropped below the
    threshold, and since deeper assignments only add interference the whole
    branch can be abandoned.
    """

    def __init__(self, state: NetworkState, survivors) -> None:
        self.links: list[int] = []
        self.signal: list[float] = []
        self.base: list[float] = []
        self.flow_of: list[int] = []
        by_channel: dict[int, list[int]] = {}
        for fi, (_, entries) in enumerate(survivors):
            for link_id, channel, base, signal in entries:
                vi = len(self.links)
                self.links.append(link_id)
                self.signal.append(signal)
                self.base.append(base)
                self.flow_of.append(fi)
                by_channel.setdefault(channel, []).append(vi)
        self.by_channel = by_channel
        self.extra = [0.0] * len(self.links)
        self.failed = [False] * len(self.links)
        self.flow_fails = [0] * len(survivors)
        self.flows_broken = 0
        self.noise = state.noise
        self.alpha = state.alpha
        self._frames: list[list[tuple[int, float, bool]]] = []

    def push(self, contribution: float, channel: int, cross_row: list[float]) -> bool:
        """Add one tentative transmission; True while no flow is broken."""
        frame = []
        for vi in self.by_channel.get(channel, ()):
            g = cross_row[vi]
            if g == 0.0:
                continue
            frame.append((vi, self.extra[vi], self.failed[vi]))
            self.extra[vi] += contribution * g
            if not self.failed[vi]:
                sinr = self.signal[vi] / (self.noise + self.base[vi] + self.extra[vi])
                if sinr < self.alpha:
                    self.failed[vi] = True
                    fi = self.flow_of[vi]
                    self.flow_fails[fi] += 1
                    if self.flow_fails[fi] == 1:
                        self.flows_broken += 1
        self._frames.append(frame)
        return self.flows_broken == 0

    def pop(self) -> None:
        for vi, extra, failed in reversed(self._frames.pop()):
            self.extra[vi] = extra
            if self.failed[vi] and not failed:
                fi = self.flow_of[vi]
                self.flow_fails[fi] -= 1
                if self.flow_fails[fi] == 0:
                    self.flows_broken -= 1
            self.failed[vi] = failed


def iter_activations(
    flow: Flow,
    state: NetworkState,
    budget: SearchBudget,
    victims: _VictimTracker | None = None,
    rotation: int = 0,
) -> Iterator[tuple[Strategy, ...]]:
    """Yield full activations of the flow in lexicographic enumeration order.

    A full activation assigns every flow link a non-OFF strategy such that all
    of them meet the SINR threshold under external interference plus the
    flow's own intra-flow interference. External interference is the current
    state with the flow's own transmissions removed. With a victim tracker,
    branches that break a surviving external flow are pruned as well. Stops
    early once the expansion budget is spent.
    """
    own = flow.links
    k = len(own)
    gains = state.gains
    power = state.power
    qmax = state.q_levels - 1
    scenario = state.scenario
    channels = [_rotate(sorted(scenario.links[l].channels), rotation) for l in own]
    own_gain = [float(gains.m[l, l]) for l in own]
    ext = [
        {c: state.interference_at(l, c, exclude=own) for c in channels[j]}
        for j, l in enumerate(own)
    ]
    # a link that cannot reach the threshold even against external
    # interference alone can never be activated; adding own links only hurts
    for j in range(k):
        if all(_min_level(state, own_gain[j], ext[j][c]) is None for c in channels[j]):
            return

    cross = [[float(gains.m[own[a], own[b]]) for b in range(k)] for a in range(k)]
    if victims is not None:
        vcross = [
            [float(gains.m[l, v]) for v in victims.links] for l in own
        ]
    assigned: list[tuple[int, int]] = []  # (level, channel) per assigned link
    interference = [0.0] * k  # current interference at each assigned link

    def descend(depth: int) -> Iterator[tuple[Strategy, ...]]:
        if depth == k:
            yield tuple(Strategy(q, c) for q, c in assigned)
            return
        for c in channels[depth]:
            total = ext[depth][c]
            for i, (_, ci) in enumerate(assigned):
                if ci == c:
                    total += power[assigned[i][0]] * cross[i][depth]
            lo = _min_level(state, own_gain[depth], total)
            if lo is None:
                continue
            hi = qmax
            for i, (qi, ci) in enumerate(assigned):
                if ci != c:
                    continue
                hi = min(
                    hi,
                    _max_tolerated(
                        state,
                        power[qi] * own_gain[i],
                        interference[i],
                        cross[depth][i],
                    ),
                )
                if hi < lo:
                    break
            if hi < lo:
                continue
            for q in range(lo, hi + 1):
                if not budget.spend():
                    return
                if victims is not None and not victims.push(
                    power[q], c, vcross[depth]
                ):
                    victims.pop()
                    break  # higher levels break the same flow
                assigned.append((q, c))
                interference[depth] = total
                touched = []
                for i in range(depth):
                    if assigned[i][1] == c:
                        touched.append((i, interference[i]))
                        interference[i] += power[q] * cross[depth][i]
                yield from descend(depth + 1)
                for i, old in touched:
                    interference[i] = old
                assigned.pop()
                if victims is not None:
                    victims.pop()
                if budget.exhausted:
                    return

    yield from descend(0)


def lfg_move(
    flow_id: int, state: NetworkState, budget: SearchBudget, rotation: int = 0
) -> tuple[Strategy, ...] | None:
    """First full activation of the flow, all-OFF as the improving fallback
    from -1, None when nothing improves."""
    u = lfg_utility(flow_id, state)
    if u == 1:
        return None
    flow = state.scenario.flows[flow_id]
    for assignment in iter_activations(flow, state, budget, rotation=rotation):
        return assignment
    return (OFF,) * len(flow.links) if u == -1 else None


def _external_flows_under(
    flow: Flow, state: NetworkState
) -> tuple[int, list[tuple[int, list[tuple[int, int, float, float]]]]]:
    """Survey the other flows with this flow's transmissions removed.

    Returns (count of other flows active at that baseline, per-flow list of
    (victim link, channel, baseline interference, signal) for the flows in
    that count). Flows not in the count stay inactive under any action of
    this flow, because its transmissions only add interference.
    """
    own = flow.links
    active = 0
    survivors = []
    for other in state.scenario.flows:
        if other.id == flow.id:
            continue
        entries = []
        alive = True
        for l in other.links:
            s = state.strategies[l]
            if s.level == 0:
                alive = False
                break
            base = state.interference_at(l, s.channel, exclude=own)
            signal = state.power[s.level] * float(state.gains.m[l, l])
            if math.isinf(base) or signal / (state.noise + base) < state.alpha:
                alive = False
                break
            entries.append((l, s.channel, base, signal))
        if alive:
            active += 1
            survivors.append((other.id, entries))
    return active, survivors


def pfg_move(
    flow_id: int, state: NetworkState, budget: SearchBudget, rotation: int = 0
) -> tuple[Strategy, ...] | None:
    """First candidate (all-OFF, then full activations in scan order) that
    strictly raises the count of active flows; None otherwise."""
    flow = state.scenario.flows[flow_id]
    p_cur = state.active_flow_count()
    ext_active, survivors = _external_flows_under(flow, state)
    if ext_active > p_cur:
        return (OFF,) * len(flow.links)
    if 1 + ext_active <= p_cur:
        return None  # even a harmless activation cannot beat the current count
    # Here ext_active == p_cur, so an activation improves the count exactly
    # when it breaks none of the surviving flows; the tracker prunes every
    # branch that does. An activation breaking b survivors scores
    # 1 + ext_active - b, so only b = 0 beats p_cur.
    victims = _VictimTracker(state, survivors)
    for assignment in iter_activations(
        flow, state, budget, victims=victims, rotation=rotation
    ):
        return assignment
    return None


# --- round-robin engine -----------------------------------------------------


def clg_flow_turn(
    flow_id: int,
    state: NetworkState,
    trajectory: Trajectory,
    seed: int = 0,
    cycle: int = 0,
) -> bool:
    """Play one CLG turn for a flow: phase-1 link scans source to destination,
    then the all-or-nothing phase-2 update. Returns True if any link's
    whole-flow utility improved over the turn."""
    flow = state.scenario.flows[flow_id]
    before = [clg_utility(l, state, phase=2) for l in flow.links]
    for link_id in flow.links:
        trajectory.link_steps += 1
        u_before = clg_utility(link_id, state, phase=1)
        new = clg_phase1_move(link_id, state, rotation=_mix(seed, cycle, link_id))
        if new is not None and new != state.strategies[link_id]:
            old = state.strategies[link_id]
            state.apply(link_id, new)
            trajectory.records.append(
                MoveRecord(
                    player=f"link:{link_id}",
                    old=old,
                    new=new,
                    utility_before=u_before,
                    utility_after=clg_utility(link_id, state, phase=1),
                )
            )
    if not state.flow_active(flow_id):
        for link_id in flow.links:
            if state.strategies[link_id].level > 0:
                u_before = clg_utility(link_id, state, phase=2)
                old = state.strategies[link_id]
                state.apply(link_id, OFF)
                trajectory.records.append(
                    MoveRecord(
                        player=f"link:{link_id}",
                        old=old,
                        new=OFF,
                        utility_before=u_before,
                        utility_after=clg_utility(link_id, state, phase=2),
                    )
                )
    after = [clg_utility(l, state, phase=2) for l in flow.links]
    return any(a > b for a, b in zip(after, before))


def run_game(
    scenario: Scenario, config: GameConfig
) -> tuple[NetworkState, Trajectory, RunMetrics]:
    """Run one game to its stopping rule from the all-OFF profile.

    LLG, LFG and PFG stop after a full round-robin cycle without any strategy
    change; CLG stops after a full cycle in which no link improved its
    utility. Hitting max_cycles reports converged=False.
    """
    gains = GainMatrix(scenario)
    state = NetworkState(scenario, gains)
    trajectory = Trajectory()
    kind = config.game
    flows = scenario.flows
    # A failed activation search can be skipped on later turns as long as the
    # interference landscape it saw is untouched: LFG searches depend only on
    # the channels admissible to the flow's links, PFG searches on the whole
    # profile. The version counters make that check exact.
    lfg_memo: dict[int, tuple[int, ...]] = {}
    pfg_memo: dict[int, int] = {}
    flow_channels = {
        f.id: sorted({c for l in f.links for c in scenario.links[l].channels})
        for f in flows
    }
    for cycle in range(config.max_cycles):
        progress = False
        if kind is GameKind.LLG:
            for flow in flows:
                for link_id in flow.links:
                    trajectory.link_steps += 1
                    u_before = llg_utility(link_id, state)
                    new = llg_move(
                        link_id, state, rotation=_mix(config.seed, cycle, link_id)
                    )
                    if new is not None and new != state.strategies[link_id]:
                        old = state.strategies[link_id]
                        state.apply(link_id, new)
                        trajectory.records.append(
                            MoveRecord(
                                player=f"link:{link_id}",
                                old=old,
                                new=new,
                                utility_before=u_before,
                                utility_after=llg_utility(link_id, state),
                            )
                        )
                        progress = True
        elif kind is GameKind.CLG:
            for flow in flows:
                if clg_flow_turn(flow.id, state, trajectory, config.seed, cycle):
                    progress = True
        else:
            for flow in flows:
                trajectory.flow_steps += 1
                rotation = _mix(config.seed, cycle, flow.id)
                # a failed (uncapped) search proves the improving set empty,
                # which no scan rotation can change, so it can be skipped
                # until the relevant interference landscape moves
                if kind is GameKind.LFG:
                    u_before = lfg_utility(flow.id, state)
                    fingerprint = None
                    if u_before == 0:
                        fingerprint = tuple(
                            state.channel_version[c] for c in flow_channels[flow.id]
                        )
                        if lfg_memo.get(flow.id) == fingerprint:
                            continue
                    budget = SearchBudget(config.search_node_cap)
                    new = lfg_move(flow.id, state, budget, rotation)
                    if budget.exhausted:
                        trajectory.capped_searches += 1
                    if new is None and fingerprint is not None and not budget.exhausted:
                        lfg_memo[flow.id] = fingerprint
                else:
                    if pfg_memo.get(flow.id) == state.version:
                        continue
                    budget = SearchBudget(config.search_node_cap)
                    u_before = potential(state)
                    new = pfg_move(flow.id, state, budget, rotation)
                    if budget.exhausted:
                        trajectory.capped_searches += 1
                    if new is None and not budget.exhausted:
                        pfg_memo[flow.id] = state.version
                if new is not None:
                    old = tuple(state.strategies[l] for l in flow.links)
                    for link_id, strat in zip(flow.links, new):
                        state.apply(link_id, strat)
                    if kind is GameKind.LFG:
                        u_after = lfg_utility(flow.id, state)
                        pot = None
                    else:
                        u_after = potential(state)
                        pot = u_after
                    trajectory.records.append(
                        MoveRecord(
                            player=f"flow:{flow.id}",
                            old=old,
                            new=tuple(new),
                            utility_before=u_before,
                            utility_after=u_after,
                            potential=pot,
                        )
                    )
                    progress = True
        if not progress:
            trajectory.converged = True
            trajectory.termination = (
                "no_improvement_cycle" if kind is GameKind.CLG else "no_change_cycle"
            )
            break
    else:
        trajectory.termination = "max_cycles"
    metrics = compute_metrics(scenario, state, trajectory, config.game)
    return state, trajectory, metrics


def compute_metrics(
    scenario: Scenario,
    state: NetworkState,
    trajectory: Trajectory,
    game: GameKind,
    instance_id: int = 0,
) -> RunMetrics:
    active_sizes = [
        len(f.links) for f in scenario.flows if state.flow_active(f.id)
    ]
    mean_links = sum(active_sizes) / len(active_sizes) if active_sizes else None
    if game.players_are_flows:
        normalized = float(trajectory.flow_steps)
    elif scenario.flows:
        mean_links_per_flow = len(scenario.links) / len(scenario.flows)
        normalized = trajectory.link_steps / mean_links_per_flow
    else:
        normalized = 0.0
    return RunMetrics(
        instance_id=instance_id,
        game=game,
        flows_requested=len(scenario.flows),
        flows_active=len(active_sizes),
        mean_links_per_active_flow=mean_links,
        normalized_flow_steps=normalized,
        converged=trajectory.converged,
    )
