"""SINR engine under the physical interference model.

A link's received SINR is p*g_direct / (noise + sum of co-channel interference
from every other transmitting link). Interference totals per (receiver link,
channel) are maintained incrementally so that repeated strategy evaluation is
cheap; infinite gains (co-located transmitter and receiver) are tracked with a
separate contributor count so they can be added and removed exactly.
"""

from __future__ import annotations

import math
from typing import Iterable, NamedTuple

import numpy as np

from .scenario import Scenario

INFINITE = math.inf


class InvalidStrategyError(ValueError):
    """Strategy not in the link's admissible space."""


class Strategy(NamedTuple):
    """One link's action: a power level in [0, Q-1] and a channel.

    Level 0 is the OFF action and carries no channel.
    """

    level: int
    channel: int | None


OFF = Strategy(0, None)


def path_gain(distance: float, path_loss_exp: float) -> float:
    """Power gain over ``distance`` meters: d**-gamma, INFINITE at d = 0."""
    if distance < 0.0:
        raise ValueError(f"distance must be nonnegative, got {distance}")
    if distance == 0.0:
        return INFINITE
    try:
        return distance ** (-path_loss_exp)
    except OverflowError:
        return INFINITE


def level_power(level: int, p_max: float, q_levels: int) -> float:
    """Transmit power of a quantization level: p_max * level / (Q-1)."""
    return p_max * (level / (q_levels - 1))


class GainMatrix:
    """Cross gains between every (transmitter, receiver) link pair.

    ``m[t, r]`` is the gain from the transmitter of link t to the receiver of
    link r; the diagonal holds direct gains. ``finite`` replaces INFINITE
    entries with 0 so it can be used in vector arithmetic, and
    ``inf_rx_by_tx[t]`` lists the receivers that hear t at infinite gain
    (i.e. share t's transmit node).
    """

    def __init__(self, scenario: Scenario) -> None:
        links = scenario.links
        n = len(links)
        tx_x = np.array([scenario.nodes[l.tx].x for l in links])
        tx_y = np.array([scenario.nodes[l.tx].y for l in links])
        rx_x = np.array([scenario.nodes[l.rx].x for l in links])
        rx_y = np.array([scenario.nodes[l.rx].y for l in links])
        dx = tx_x[:, None] - rx_x[None, :]
        dy = tx_y[:, None] - rx_y[None, :]
        dist = np.sqrt(dx * dx + dy * dy)
        with np.errstate(divide="ignore", over="ignore"):
            m = dist ** (-scenario.params.path_loss_exp)
        m[dist == 0.0] = np.inf
        # use the exact scalar direct gains so the diagonal matches the links
        for l in links:
            m[l.id, l.id] = l.direct_gain
        self.m = m
        self.finite = np.where(np.isinf(m), 0.0, m)
        self.inf_rx_by_tx = tuple(
            tuple(int(r) for r in np.nonzero(np.isinf(m[t]))[0]) for t in range(n)
        )
        self.n_links = n


class NetworkState:
    """Mutable strategy profile plus cached per-(receiver, channel) totals.

    The cache stores, for every link l and channel c, the summed received
    power at l's receiver from *all* transmitters on c (including l itself
    when transmitting); interference queries subtract the excluded links'
    own contributions. Single-owner mutable: one game run per state.
    """

    def __init__(self, scenario: Scenario, gains: GainMatrix) -> None:
        params = scenario.params
        self.scenario = scenario
        self.gains = gains
        self.noise = params.noise_power
        self.alpha = params.sinr_threshold
        self.q_levels = params.q_levels
        self.power = tuple(
            level_power(q, params.p_max, params.q_levels) for q in range(params.q_levels)
        )
        n, c = gains.n_links, params.n_channels
        self.strategies: list[Strategy] = [OFF] * n
        self._finite = np.zeros((n, c))
        self._inf = np.zeros((n, c), dtype=np.int64)
        # bumped on every apply, per touched channel and globally; lets game
        # engines detect that a neighborhood has not changed between turns
        self.version = 0
        self.channel_version = [0] * c

    # -- profile updates ----------------------------------------------------

    def apply(self, link_id: int, strategy: Strategy) -> None:
        """Replace one link's strategy, updating the interference cache."""
        link = self.scenario.links[link_id]
        level, channel = strategy
        if level == 0:
            if channel is not None:
                raise InvalidStrategyError("level 0 must have no channel")
        else:
            if not 0 < level < self.q_levels:
                raise InvalidStrategyError(
                    f"level {level} outside [1, {self.q_levels - 1}] for link {link_id}"
                )
            if channel not in link.channels:
                raise InvalidStrategyError(
                    f"channel {channel} not admissible for link {link_id}"
                )
        old = self.strategies[link_id]
        if old.level > 0:
            self._shift(link_id, old, -1.0)
            self.channel_version[old.channel] += 1
        if level > 0:
            self._shift(link_id, strategy, +1.0)
            self.channel_version[channel] += 1
        self.strategies[link_id] = strategy
        self.version += 1

    def _shift(self, link_id: int, strategy: Strategy, sign: float) -> None:
        p = self.power[strategy.level]
        col = strategy.channel
        self._finite[:, col] += sign * p * self.gains.finite[link_id]
        step = 1 if sign > 0 else -1
        for r in self.gains.inf_rx_by_tx[link_id]:
            self._inf[r, col] += step

    def set_profile(self, strategies: Iterable[Strategy]) -> None:
        for link_id, strategy in enumerate(strategies):
            self.apply(link_id, strategy)

    # -- queries --------------------------------------------------------------

    def interference_at(
        self, link_id: int, channel: int, exclude: Iterable[int] = ()
    ) -> float:
        """Total co-channel interference at ``link_id``'s receiver.

        The link's own transmission never interferes with its own receiver;
        ``exclude`` removes the current contributions of further links (used
        when evaluating joint deviations of a flow).
        """
        fin = float(self._finite[link_id, channel])
        ninf = int(self._inf[link_id, channel])
        gains = self.gains
        excluded = {link_id, *exclude}
        for m in sorted(excluded):
            s = self.strategies[m]
            if s.level == 0 or s.channel != channel:
                continue
            g = float(gains.m[m, link_id])
            if math.isinf(g):
                ninf -= 1
            else:
                fin -= self.power[s.level] * g
        if ninf > 0:
            return INFINITE
        return fin

    def sinr(self, link_id: int) -> float:
        """Received SINR of a transmitting link; 0 for OFF links and for
        receivers swamped by infinite interference."""
        s = self.strategies[link_id]
        if s.level == 0:
            return 0.0
        interference = self.interference_at(link_id, s.channel)
        if math.isinf(interference):
            return 0.0
        signal = self.power[s.level] * float(self.gains.m[link_id, link_id])
        return signal / (self.noise + interference)

    def is_active(self, link_id: int) -> bool:
        s = self.strategies[link_id]
        return bool(s.level > 0 and self.sinr(link_id) >= self.alpha)

    def flow_active(self, flow_id: int) -> bool:
        return all(self.is_active(l) for l in self.scenario.flows[flow_id].links)

    def active_flow_count(self) -> int:
        return sum(self.flow_active(f.id) for f in self.scenario.flows)
