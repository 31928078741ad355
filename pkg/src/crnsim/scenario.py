"""Random multihop cognitive-radio network instances.

Generates node deployments with per-region channel subsets, routes flows with
minimum-hop paths, and (de)serializes instances to a JSON file format in which
powers are expressed in dBm. Internally everything is linear: watts, meters,
dimensionless gains.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from random import Random

import numpy as np

# Resampling budget for each flow whose (source, destination) pair turns out
# to be unroutable or too long.
FLOW_ATTEMPTS = 1000


class ScenarioError(ValueError):
    """Invalid parameters, unroutable instance, or malformed scenario file."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(value: float) -> float:
    return 10.0 * math.log10(value)


@dataclass(frozen=True)
class ScenarioParams:
    """Immutable generation parameters. Powers in watts, distances in meters."""

    n_nodes: int
    side_length: float
    n_channels: int
    region_size: float
    channel_subset_min: int
    channel_subset_max: int
    p_max: float
    q_levels: int
    path_loss_exp: float
    sinr_threshold: float
    noise_power: float
    max_hops: int
    n_flows: int
    seed: int

    def __post_init__(self) -> None:
        if self.n_nodes <= 0:
            raise ScenarioError(f"n_nodes must be positive, got {self.n_nodes}")
        if not (1 <= self.channel_subset_min <= self.channel_subset_max <= self.n_channels):
            raise ScenarioError(
                "need 1 <= channel_subset_min <= channel_subset_max <= n_channels, got "
                f"{self.channel_subset_min}/{self.channel_subset_max}/{self.n_channels}"
            )
        if self.q_levels < 2:
            raise ScenarioError(f"q_levels must be >= 2, got {self.q_levels}")
        if self.p_max <= 0.0:
            raise ScenarioError(f"p_max must be positive, got {self.p_max}")
        if self.noise_power <= 0.0:
            raise ScenarioError(f"noise_power must be positive, got {self.noise_power}")
        if self.sinr_threshold <= 1.0:
            raise ScenarioError(
                f"sinr_threshold must exceed 1 (linear), got {self.sinr_threshold}"
            )
        if self.max_hops < 1:
            raise ScenarioError(f"max_hops must be >= 1, got {self.max_hops}")
        if self.n_flows < 0:
            raise ScenarioError(f"n_flows must be >= 0, got {self.n_flows}")
        if self.side_length <= 0.0 or self.region_size <= 0.0:
            raise ScenarioError("side_length and region_size must be positive")
        if self.regions_per_side * self.region_size != self.side_length:
            raise ScenarioError(
                f"side_length {self.side_length} is not a whole multiple of "
                f"region_size {self.region_size}"
            )

    @property
    def regions_per_side(self) -> int:
        return int(round(self.side_length / self.region_size))

    @property
    def max_range(self) -> float:
        """Distance at which a link at full power reaches exactly the SINR threshold
        against noise alone."""
        return (self.p_max / (self.sinr_threshold * self.noise_power)) ** (
            1.0 / self.path_loss_exp
        )


def default_params(**overrides) -> ScenarioParams:
    """Baseline parameter set: 200 nodes in a 1 km square, 10 channels with
    per-region subsets of 3..8, 20 dBm max power over 16 levels, path loss
    exponent 4, 10 dB SINR threshold, -70 dBm noise, flows of at most 6 hops.
    """
    values = dict(
        n_nodes=200,
        side_length=1000.0,
        n_channels=10,
        region_size=100.0,
        channel_subset_min=3,
        channel_subset_max=8,
        p_max=dbm_to_watts(20.0),
        q_levels=16,
        path_loss_exp=4.0,
        sinr_threshold=db_to_linear(10.0),
        noise_power=dbm_to_watts(-70.0),
        max_hops=6,
        n_flows=10,
        seed=0,
    )
    values.update(overrides)
    return ScenarioParams(**values)


@dataclass(frozen=True)
class Node:
    id: int
    x: float
    y: float
    channels: frozenset[int]


@dataclass(frozen=True)
class Flow:
    """End-to-end route; ``links`` are link ids ordered source to destination."""

    id: int
    source: int
    destination: int
    links: tuple[int, ...]


@dataclass(frozen=True)
class DirectedLink:
    """One hop of a flow: a (tx -> rx) node pair with its direct gain and the
    channels admissible on it (intersection of the endpoint subsets)."""

    id: int
    tx: int
    rx: int
    direct_gain: float
    channels: frozenset[int]
    flow: int
    index_in_flow: int


@dataclass(frozen=True)
class Scenario:
    """Immutable network instance; safe to share across concurrent game runs."""

    params: ScenarioParams
    nodes: tuple[Node, ...]
    flows: tuple[Flow, ...]
    links: tuple[DirectedLink, ...]
    # adjacency[u] = node ids reachable in one hop from u, ascending
    adjacency: tuple[tuple[int, ...], ...] = field(compare=False, repr=False)

    def node(self, node_id: int) -> Node:
        return self.nodes[node_id]

    def link(self, link_id: int) -> DirectedLink:
        return self.links[link_id]

    def flow(self, flow_id: int) -> Flow:
        return self.flows[flow_id]

    def distance(self, a: int, b: int) -> float:
        na, nb = self.nodes[a], self.nodes[b]
        return math.hypot(na.x - nb.x, na.y - nb.y)


def _build_adjacency(
    nodes: tuple[Node, ...], max_range: float
) -> tuple[tuple[int, ...], ...]:
    """Connectivity edges join node pairs within range that share a channel."""
    xs = np.array([n.x for n in nodes])
    ys = np.array([n.y for n in nodes])
    dx = xs[:, None] - xs[None, :]
    dy = ys[:, None] - ys[None, :]
    in_range = dx * dx + dy * dy <= max_range * max_range
    adj: list[tuple[int, ...]] = []
    for u, nu in enumerate(nodes):
        row = [
            v
            for v in np.nonzero(in_range[u])[0]
            if v != u and nu.channels & nodes[v].channels
        ]
        adj.append(tuple(int(v) for v in row))
    return tuple(adj)


def shortest_route(
    scenario: Scenario, source: int, destination: int
) -> tuple[int, ...] | None:
    """Minimum-hop route on the connectivity graph, or None if unreachable.

    Among all minimum-hop routes the lexicographically smallest node-id
    sequence is returned, so routing is reproducible.
    """
    if source == destination:
        raise ScenarioError("source and destination must differ")
    adj = scenario.adjacency
    # hop distance to the destination, then greedy lexicographic descent
    dist = {destination: 0}
    frontier = [destination]
    while frontier:
        nxt = []
        for u in frontier:
            for v in adj[u]:
                if v not in dist:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    if source not in dist:
        return None
    route = [source]
    current = source
    remaining = dist[source]
    while current != destination:
        current = min(v for v in adj[current] if dist.get(v, -1) == remaining - 1)
        route.append(current)
        remaining -= 1
    return tuple(route)


def _materialize_links(
    nodes: tuple[Node, ...],
    route: tuple[int, ...],
    flow_id: int,
    next_link_id: int,
    path_loss_exp: float,
) -> list[DirectedLink]:
    links = []
    for hop, (tx, rx) in enumerate(zip(route, route[1:])):
        d = math.hypot(nodes[tx].x - nodes[rx].x, nodes[tx].y - nodes[rx].y)
        links.append(
            DirectedLink(
                id=next_link_id + hop,
                tx=tx,
                rx=rx,
                direct_gain=d ** (-path_loss_exp) if d > 0.0 else math.inf,
                channels=nodes[tx].channels & nodes[rx].channels,
                flow=flow_id,
                index_in_flow=hop,
            )
        )
    return links


def generate_flows(
    scenario: Scenario, n_flows: int, rng: Random
) -> tuple[tuple[Flow, ...], tuple[DirectedLink, ...]]:
    """Sample ``n_flows`` random source/destination pairs and route them.

    Pairs that are unroutable or need more than ``max_hops`` hops are
    discarded and resampled; after FLOW_ATTEMPTS failures for one flow the
    instance is declared over-constrained.
    """
    params = scenario.params
    flows: list[Flow] = []
    links: list[DirectedLink] = []
    for flow_id in range(n_flows):
        route = None
        for _ in range(FLOW_ATTEMPTS):
            src = rng.randrange(params.n_nodes)
            dst = rng.randrange(params.n_nodes)
            if src == dst:
                continue
            candidate = shortest_route(scenario, src, dst)
            if candidate is not None and len(candidate) - 1 <= params.max_hops:
                route = candidate
                break
        if route is None:
            raise ScenarioError(
                f"could not route flow {flow_id} after {FLOW_ATTEMPTS} attempts; "
                "scenario is over-constrained"
            )
        flow_links = _materialize_links(
            scenario.nodes, route, flow_id, len(links), params.path_loss_exp
        )
        links.extend(flow_links)
        flows.append(
            Flow(
                id=flow_id,
                source=route[0],
                destination=route[-1],
                links=tuple(l.id for l in flow_links),
            )
        )
    return tuple(flows), tuple(links)


def generate_scenario(params: ScenarioParams) -> Scenario:
    """Generate a random instance; a pure function of ``params`` (incl. seed).

    Draw order is fixed: node positions, then one channel subset per region
    (row-major), then flow endpoint pairs.
    """
    rng = Random(params.seed)
    positions = [
        (rng.uniform(0.0, params.side_length), rng.uniform(0.0, params.side_length))
        for _ in range(params.n_nodes)
    ]
    n_regions = params.regions_per_side
    region_channels: list[frozenset[int]] = []
    for _ in range(n_regions * n_regions):
        size = rng.randint(params.channel_subset_min, params.channel_subset_max)
        region_channels.append(frozenset(rng.sample(range(params.n_channels), size)))
    nodes = []
    for node_id, (x, y) in enumerate(positions):
        rx = min(int(x // params.region_size), n_regions - 1)
        ry = min(int(y // params.region_size), n_regions - 1)
        nodes.append(Node(id=node_id, x=x, y=y, channels=region_channels[ry * n_regions + rx]))
    nodes = tuple(nodes)
    skeleton = Scenario(
        params=params,
        nodes=nodes,
        flows=(),
        links=(),
        adjacency=_build_adjacency(nodes, params.max_range),
    )
    flows, links = generate_flows(skeleton, params.n_flows, rng)
    return Scenario(
        params=params,
        nodes=nodes,
        flows=flows,
        links=links,
        adjacency=skeleton.adjacency,
    )


# --- file format -----------------------------------------------------------
#
# JSON with top-level keys "params", "nodes", "flows". Powers are stored in
# dBm (pmax_dbm, noise_dbm) and the SINR threshold in dB (alpha_db); they are
# converted to linear units on load. Links are not stored: they are rebuilt
# from the routes, node positions and channel subsets.

_PARAM_KEYS = (
    "n_nodes",
    "side_length",
    "n_channels",
    "region_size",
    "channel_subset_min",
    "channel_subset_max",
    "pmax_dbm",
    "q_levels",
    "path_loss_exp",
    "alpha_db",
    "noise_dbm",
    "max_hops",
    "n_flows",
    "seed",
)


def save_scenario(scenario: Scenario, path: str) -> None:
    params = scenario.params
    doc = {
        "params": {
            "n_nodes": params.n_nodes,
            "side_length": params.side_length,
            "n_channels": params.n_channels,
            "region_size": params.region_size,
            "channel_subset_min": params.channel_subset_min,
            "channel_subset_max": params.channel_subset_max,
            "pmax_dbm": watts_to_dbm(params.p_max),
            "q_levels": params.q_levels,
            "path_loss_exp": params.path_loss_exp,
            "alpha_db": linear_to_db(params.sinr_threshold),
            "noise_dbm": watts_to_dbm(params.noise_power),
            "max_hops": params.max_hops,
            "n_flows": params.n_flows,
            "seed": params.seed,
        },
        "nodes": [
            {"id": n.id, "x": n.x, "y": n.y, "channels": sorted(n.channels)}
            for n in scenario.nodes
        ],
        "flows": [
            {
                "id": f.id,
                "src": f.source,
                "dst": f.destination,
                "route": list(_flow_route(scenario, f)),
            }
            for f in scenario.flows
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _flow_route(scenario: Scenario, flow: Flow) -> tuple[int, ...]:
    links = [scenario.links[lid] for lid in flow.links]
    return tuple([links[0].tx] + [l.rx for l in links])


def load_scenario(path: str) -> Scenario:
    """Load and validate a scenario file; raises ScenarioError on any defect."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc

    for key in ("params", "nodes", "flows"):
        if key not in doc:
            raise ScenarioError(f"{path}: missing top-level key '{key}'")
    raw = doc["params"]
    missing = [k for k in _PARAM_KEYS if k not in raw]
    if missing:
        raise ScenarioError(f"{path}: params missing fields {missing}")
    params = ScenarioParams(
        n_nodes=raw["n_nodes"],
        side_length=raw["side_length"],
        n_channels=raw["n_channels"],
        region_size=raw["region_size"],
        channel_subset_min=raw["channel_subset_min"],
        channel_subset_max=raw["channel_subset_max"],
        p_max=dbm_to_watts(raw["pmax_dbm"]),
        q_levels=raw["q_levels"],
        path_loss_exp=raw["path_loss_exp"],
        sinr_threshold=db_to_linear(raw["alpha_db"]),
        noise_power=dbm_to_watts(raw["noise_dbm"]),
        max_hops=raw["max_hops"],
        n_flows=raw["n_flows"],
        seed=raw["seed"],
    )
    if len(doc["nodes"]) != params.n_nodes:
        raise ScenarioError(
            f"{path}: expected {params.n_nodes} nodes, found {len(doc['nodes'])}"
        )
    nodes = []
    for i, entry in enumerate(doc["nodes"]):
        if entry.get("id") != i:
            raise ScenarioError(f"{path}: node ids must be consecutive from 0; entry {i}")
        x, y = entry["x"], entry["y"]
        if not (0.0 <= x <= params.side_length and 0.0 <= y <= params.side_length):
            raise ScenarioError(f"{path}: node {i} position ({x}, {y}) outside area")
        channels = frozenset(entry["channels"])
        if not all(0 <= c < params.n_channels for c in channels):
            raise ScenarioError(f"{path}: node {i} has out-of-range channel ids")
        if not (params.channel_subset_min <= len(channels) <= params.channel_subset_max):
            raise ScenarioError(
                f"{path}: node {i} has {len(channels)} channels, outside "
                f"[{params.channel_subset_min}, {params.channel_subset_max}]"
            )
        nodes.append(Node(id=i, x=x, y=y, channels=channels))
    nodes = tuple(nodes)

    flows: list[Flow] = []
    links: list[DirectedLink] = []
    max_range = params.max_range
    for i, entry in enumerate(doc["flows"]):
        if entry.get("id") != i:
            raise ScenarioError(f"{path}: flow ids must be consecutive from 0; entry {i}")
        route = tuple(entry["route"])
        if len(route) < 2:
            raise ScenarioError(f"{path}: flow {i} route must have at least 2 nodes")
        if len(route) - 1 > params.max_hops:
            raise ScenarioError(
                f"{path}: flow {i} has {len(route) - 1} hops, max is {params.max_hops}"
            )
        if len(set(route)) != len(route):
            raise ScenarioError(f"{path}: flow {i} route revisits a node")
        if route[0] != entry["src"] or route[-1] != entry["dst"]:
            raise ScenarioError(f"{path}: flow {i} route does not match src/dst")
        if not all(0 <= u < params.n_nodes for u in route):
            raise ScenarioError(f"{path}: flow {i} route names an unknown node")
        for tx, rx in zip(route, route[1:]):
            d = math.hypot(nodes[tx].x - nodes[rx].x, nodes[tx].y - nodes[rx].y)
            if d > max_range:
                raise ScenarioError(
                    f"{path}: flow {i} hop {tx}->{rx} spans {d:.1f} m, "
                    f"beyond range {max_range:.1f} m"
                )
            if not nodes[tx].channels & nodes[rx].channels:
                raise ScenarioError(
                    f"{path}: flow {i} hop {tx}->{rx} has no common channel"
                )
        flow_links = _materialize_links(nodes, route, i, len(links), params.path_loss_exp)
        links.extend(flow_links)
        flows.append(
            Flow(id=i, source=route[0], destination=route[-1],
                 links=tuple(l.id for l in flow_links))
        )
    if len(flows) != params.n_flows:
        raise ScenarioError(
            f"{path}: params declare {params.n_flows} flows, file has {len(flows)}"
        )
    return Scenario(
        params=params,
        nodes=nodes,
        flows=tuple(flows),
        links=tuple(links),
        adjacency=_build_adjacency(nodes, max_range),
    )
