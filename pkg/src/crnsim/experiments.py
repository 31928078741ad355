"""Monte-Carlo batch runner: flow-count sweeps over random instances.

Every (flow_count, instance) cell generates one scenario from a seed derived
from the master seed, and every requested game runs on that same scenario so
the games are compared paired. Results and aggregates are persisted as CSV
(UTF-8, LF, '.' decimal separator).
"""

from __future__ import annotations

import csv
import hashlib
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

from .games import GameConfig, GameKind, RunMetrics, run_game
from .scenario import ScenarioError, ScenarioParams, generate_scenario

logger = logging.getLogger(__name__)

RESULTS_HEADER = (
    "instance_id",
    "game",
    "flows_requested",
    "flows_active",
    "mean_links_per_active_flow",
    "normalized_flow_steps",
    "converged",
)
AGGREGATE_HEADER = ("game", "flows_requested", "metric", "mean", "std", "n")

# column -> metric name used in the aggregate table; converged aggregates to
# the fraction of converged runs
AGGREGATED_METRICS = (
    "flows_active",
    "mean_links_per_active_flow",
    "normalized_flow_steps",
    "converged",
)


def instance_seed(master_seed: int, flow_count: int, instance: int) -> int:
    """Derive the scenario seed of one sweep cell from the master seed.

    SHA-256 over "master:flow_count:instance", truncated to 64 bits, so any
    subset of the sweep can be regenerated independently.
    """
    digest = hashlib.sha256(f"{master_seed}:{flow_count}:{instance}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def _run_cell(
    params: ScenarioParams,
    flow_count: int,
    instance: int,
    games: tuple[GameKind, ...],
    max_cycles: int,
    search_node_cap: int,
) -> list[RunMetrics]:
    cell_params = replace(
        params,
        n_flows=flow_count,
        seed=instance_seed(params.seed, flow_count, instance),
    )
    scenario = generate_scenario(cell_params)
    rows = []
    for game in games:
        config = GameConfig(
            game=game, max_cycles=max_cycles, search_node_cap=search_node_cap
        )
        _, _, metrics = run_game(scenario, config)
        rows.append(replace(metrics, instance_id=instance))
    return rows


def run_batch(
    params: ScenarioParams,
    flow_counts: list[int],
    n_instances: int,
    games: list[GameKind],
    max_cycles: int = 50,
    search_node_cap: int = 10**6,
    jobs: int = 1,
) -> list[RunMetrics]:
    """Run the full sweep; returns rows sorted by (flow count, instance, game
    position in ``games``). A cell whose scenario cannot be generated is
    logged and skipped; the rest of the batch proceeds."""
    games = tuple(games)
    cells = [(fc, i) for fc in flow_counts for i in range(n_instances)]
    results: dict[tuple[int, int], list[RunMetrics]] = {}
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {
                pool.submit(
                    _run_cell, params, fc, i, games, max_cycles, search_node_cap
                ): (fc, i)
                for fc, i in cells
            }
            for future, cell in futures.items():
                try:
                    results[cell] = future.result()
                except ScenarioError as exc:
                    logger.warning("skipping cell %s: %s", cell, exc)
    else:
        for fc, i in cells:
            try:
                results[(fc, i)] = _run_cell(
                    params, fc, i, games, max_cycles, search_node_cap
                )
            except ScenarioError as exc:
                logger.warning("skipping cell (%d, %d): %s", fc, i, exc)
    rows: list[RunMetrics] = []
    for fc, i in cells:
        rows.extend(results.get((fc, i), []))
    return rows


# --- CSV persistence ---------------------------------------------------------


def write_results_csv(rows: list[RunMetrics], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULTS_HEADER)
        for r in rows:
            writer.writerow(
                [
                    r.instance_id,
                    r.game.value,
                    r.flows_requested,
                    r.flows_active,
                    "" if r.mean_links_per_active_flow is None
                    else repr(r.mean_links_per_active_flow),
                    repr(r.normalized_flow_steps),
                    "true" if r.converged else "false",
                ]
            )


def read_results_csv(path: str) -> list[RunMetrics]:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != RESULTS_HEADER:
            raise ValueError(f"{path}: unexpected results header {header}")
        for record in reader:
            rows.append(
                RunMetrics(
                    instance_id=int(record[0]),
                    game=GameKind(record[1]),
                    flows_requested=int(record[2]),
                    flows_active=int(record[3]),
                    mean_links_per_active_flow=(
                        None if record[4] == "" else float(record[4])
                    ),
                    normalized_flow_steps=float(record[5]),
                    converged=record[6] == "true",
                )
            )
    return rows


@dataclass(frozen=True)
class AggregateRow:
    game: str
    flows_requested: int
    metric: str
    mean: float
    std: float
    n: int


def _mean_std(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    std = math.sqrt(sum((v - mean) ** 2 for v in values) / n)
    return mean, std


def aggregate(rows: list[RunMetrics]) -> list[AggregateRow]:
    """Per-(game, flow count) mean and population standard deviation of each
    metric; rows with an undefined metric are excluded from that metric only.
    Converged aggregates to the fraction of converged runs."""
    if not rows:
        raise ValueError("cannot aggregate an empty results table")
    games: list[str] = []
    for r in rows:
        if r.game.value not in games:
            games.append(r.game.value)
    flow_counts = sorted({r.flows_requested for r in rows})
    out = []
    for game in games:
        for fc in flow_counts:
            group = [r for r in rows if r.game.value == game and r.flows_requested == fc]
            if not group:
                continue
            for metric in AGGREGATED_METRICS:
                if metric == "converged":
                    values = [1.0 if r.converged else 0.0 for r in group]
                elif metric == "mean_links_per_active_flow":
                    values = [
                        r.mean_links_per_active_flow
                        for r in group
                        if r.mean_links_per_active_flow is not None
                    ]
                else:
                    values = [float(getattr(r, metric)) for r in group]
                if not values:
                    continue
                mean, std = _mean_std(values)
                out.append(AggregateRow(game, fc, metric, mean, std, len(values)))
    return out


def write_aggregate_csv(rows: list[AggregateRow], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(AGGREGATE_HEADER)
        for r in rows:
            writer.writerow(
                [r.game, r.flows_requested, r.metric, repr(r.mean), repr(r.std), r.n]
            )


def read_aggregate_csv(path: str) -> list[AggregateRow]:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != AGGREGATE_HEADER:
            raise ValueError(f"{path}: unexpected aggregate header {header}")
        for record in reader:
            rows.append(
                AggregateRow(
                    game=record[0],
                    flows_requested=int(record[1]),
                    metric=record[2],
                    mean=float(record[3]),
                    std=float(record[4]),
                    n=int(record[5]),
                )
            )
    return rows
