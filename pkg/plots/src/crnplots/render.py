"""Render sweep results into the two summary figures and the steps table.

Consumes the simulator's CSV files only: either the per-run results CSV
(aggregated here with the same population statistics the simulator writes) or
an already aggregated CSV. Emits an error-bar chart of mean active flows, a
chart of mean links per active flow, and a text table of normalized
convergence steps with "mean (std)" cells.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

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

FIG_ACTIVE = "fig_active_flows.svg"
FIG_LINKS = "fig_links_per_flow.svg"
STEPS_TABLE = "steps_table.txt"


class SchemaError(ValueError):
    """Input CSV does not match either documented schema."""


@dataclass(frozen=True)
class Aggregate:
    game: str
    flows_requested: int
    metric: str
    mean: float
    std: float
    n: int


def _check_header(found: tuple[str, ...], expected: tuple[str, ...], path: str) -> None:
    for i, column in enumerate(expected):
        if i >= len(found) or found[i] != column:
            offending = found[i] if i < len(found) else "<missing>"
            raise SchemaError(
                f"{path}: column {i + 1} is '{offending}', expected '{column}'"
            )
    if len(found) > len(expected):
        raise SchemaError(f"{path}: unexpected extra column '{found[len(expected)]}'")


def _aggregate_results(records: list[dict], path: str) -> list[Aggregate]:
    """Population mean/std per (game, flow count, metric), matching the
    simulator's own aggregation: undefined links-per-flow entries are skipped,
    converged becomes a fraction."""
    games: list[str] = []
    for r in records:
        if r["game"] not in games:
            games.append(r["game"])
    flow_counts = sorted({r["flows_requested"] for r in records})
    out = []
    for game in games:
        for fc in flow_counts:
            group = [
                r for r in records if r["game"] == game and r["flows_requested"] == fc
            ]
            if not group:
                continue
            columns = {
                "flows_active": [float(r["flows_active"]) for r in group],
                "mean_links_per_active_flow": [
                    r["mean_links_per_active_flow"]
                    for r in group
                    if r["mean_links_per_active_flow"] is not None
                ],
                "normalized_flow_steps": [
                    r["normalized_flow_steps"] for r in group
                ],
                "converged": [1.0 if r["converged"] else 0.0 for r in group],
            }
            for metric, values in columns.items():
                if not values:
                    continue
                n = len(values)
                mean = sum(values) / n
                std = math.sqrt(sum((v - mean) ** 2 for v in values) / n)
                out.append(Aggregate(game, fc, metric, mean, std, n))
    return out


def _parse_results(rows: list[list[str]], path: str) -> list[Aggregate]:
    records = []
    for i, row in enumerate(rows, start=2):
        if len(row) != len(RESULTS_HEADER):
            raise SchemaError(f"{path}: line {i} has {len(row)} fields")
        records.append(
            {
                "game": row[1],
                "flows_requested": int(row[2]),
                "flows_active": int(row[3]),
                "mean_links_per_active_flow": float(row[4]) if row[4] else None,
                "normalized_flow_steps": float(row[5]),
                "converged": row[6] == "true",
            }
        )
    return _aggregate_results(records, path)


def load_aggregates(path: str) -> list[Aggregate]:
    """Read a results or aggregate CSV into aggregate rows."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        rows = [r for r in reader if r]
    if not header:
        raise SchemaError(f"{path}: empty file")
    if header == AGGREGATE_HEADER:
        if not rows:
            raise SchemaError(f"{path}: no data rows")
        return [
            Aggregate(r[0], int(r[1]), r[2], float(r[3]), float(r[4]), int(r[5]))
            for r in rows
        ]
    _check_header(header, RESULTS_HEADER, path)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return _parse_results(rows, path)


def _series(aggregates: list[Aggregate], metric: str):
    games: list[str] = []
    for a in aggregates:
        if a.game not in games:
            games.append(a.game)
    flow_counts = sorted({a.flows_requested for a in aggregates})
    table = {(a.game, a.flows_requested, a.metric): a for a in aggregates}
    out = {}
    for game in games:
        points = [
            table.get((game, fc, metric)) for fc in flow_counts
        ]
        out[game] = (
            [fc for fc, p in zip(flow_counts, points) if p is not None],
            [p.mean for p in points if p is not None],
            [p.std for p in points if p is not None],
        )
    return out


_MARKERS = ("o", "s", "^", "d", "v", "*")


def _plot(aggregates, metric, ylabel, errorbars, path):
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for i, (game, (xs, means, stds)) in enumerate(_series(aggregates, metric).items()):
        marker = _MARKERS[i % len(_MARKERS)]
        if errorbars:
            ax.errorbar(xs, means, yerr=stds, marker=marker, capsize=3,
                        label=game.upper())
        else:
            ax.plot(xs, means, marker=marker, label=game.upper())
    ax.set_xlabel("competing flows")
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def format_steps_table(aggregates: list[Aggregate]) -> str:
    """Normalized convergence steps, flow counts as rows and games as columns,
    each cell "mean (std)" at one decimal, exactly as aggregated."""
    games: list[str] = []
    for a in aggregates:
        if a.game not in games:
            games.append(a.game)
    flow_counts = sorted({a.flows_requested for a in aggregates})
    table = {
        (a.game, a.flows_requested): a
        for a in aggregates
        if a.metric == "normalized_flow_steps"
    }
    width = 16
    lines = ["flows".ljust(8) + "".join(g.upper().ljust(width) for g in games)]
    for fc in flow_counts:
        cells = []
        for game in games:
            a = table.get((game, fc))
            cells.append(f"{a.mean:.1f} ({a.std:.1f})" if a else "-")
        lines.append(str(fc).ljust(8) + "".join(c.ljust(width) for c in cells))
    return "\n".join(lines) + "\n"


def render(results_csv: str, out_dir: str) -> list[str]:
    """Render both figures and the steps table; returns the written paths."""
    aggregates = load_aggregates(results_csv)
    os.makedirs(out_dir, exist_ok=True)
    active = os.path.join(out_dir, FIG_ACTIVE)
    links = os.path.join(out_dir, FIG_LINKS)
    steps = os.path.join(out_dir, STEPS_TABLE)
    _plot(aggregates, "flows_active", "mean active flows", True, active)
    _plot(aggregates, "mean_links_per_active_flow", "mean links per active flow",
          False, links)
    with open(steps, "w", encoding="utf-8") as fh:
        fh.write(format_steps_table(aggregates))
    return [active, links, steps]
