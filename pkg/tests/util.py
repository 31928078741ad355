"""Hand-built scenario fixtures for the test suite."""

import json
import os
import tempfile

from crnsim.scenario import Scenario, load_scenario


def build_line_scenario(
    positions,
    routes,
    channels=(0, 1, 2),
    n_channels=10,
    max_hops=6,
    pmax_dbm=20.0,
    alpha_db=10.0,
    noise_dbm=-70.0,
    q_levels=16,
) -> Scenario:
    """Scenario with explicitly placed nodes and explicit routes; goes through
    the JSON loader so it is validated. ``channels`` is one subset shared by
    all nodes, or a per-node list of subsets."""
    if channels and isinstance(channels[0], (tuple, list, set, frozenset)):
        node_channels = [sorted(c) for c in channels]
    else:
        node_channels = [sorted(channels)] * len(positions)
    side = 4000.0
    doc = {
        "params": {
            "n_nodes": len(positions),
            "side_length": side,
            "n_channels": n_channels,
            "region_size": side,
            "channel_subset_min": min(len(c) for c in node_channels),
            "channel_subset_max": max(len(c) for c in node_channels),
            "pmax_dbm": pmax_dbm,
            "q_levels": q_levels,
            "path_loss_exp": 4.0,
            "alpha_db": alpha_db,
            "noise_dbm": noise_dbm,
            "max_hops": max_hops,
            "n_flows": len(routes),
            "seed": 0,
        },
        "nodes": [
            {"id": i, "x": float(x), "y": float(y), "channels": node_channels[i]}
            for i, (x, y) in enumerate(positions)
        ],
        "flows": [
            {"id": i, "src": route[0], "dst": route[-1], "route": list(route)}
            for i, route in enumerate(routes)
        ],
    }
    fd, path = tempfile.mkstemp(suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
        return load_scenario(path)
    finally:
        os.unlink(path)


def interferer_distance(delivered_watts, p_watts=0.1, gamma=4.0) -> float:
    """Distance at which a transmitter at ``p_watts`` delivers the given power."""
    return (p_watts / delivered_watts) ** (1.0 / gamma)
