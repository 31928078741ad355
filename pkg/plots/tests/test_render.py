"""Rendering tests: file outputs, schema errors, and exact table values."""

import math
import os
import shutil
import subprocess

import pytest

from crnplots import SchemaError, format_steps_table, load_aggregates, render
from crnplots.cli import main

RESULTS_HEADER = (
    "instance_id,game,flows_requested,flows_active,mean_links_per_active_flow,"
    "normalized_flow_steps,converged"
)

GAMES = ("llg", "clg", "lfg", "pfg")


def write_results(path, games=GAMES, flow_counts=(10, 20), instances=3):
    lines = [RESULTS_HEADER]
    for fc in flow_counts:
        for inst in range(instances):
            for g in games:
                active = 2 + inst + (0 if g == "llg" else 2)
                links = 2.5 + 0.1 * inst
                steps = 10.0 * (inst + 1) + fc + (5.0 if g == "lfg" else 0.0)
                lines.append(
                    f"{inst},{g},{fc},{active},{links},{steps},true"
                )
    path.write_text("\n".join(lines) + "\n")


def population_stats(values):
    n = len(values)
    mean = sum(values) / n
    return mean, math.sqrt(sum((v - mean) ** 2 for v in values) / n)


def test_render_writes_two_figures_and_table(tmp_path):
    results = tmp_path / "results.csv"
    write_results(results)
    out = tmp_path / "figs"
    paths = render(str(results), str(out))
    assert [os.path.basename(p) for p in paths] == [
        "fig_active_flows.svg",
        "fig_links_per_flow.svg",
        "steps_table.txt",
    ]
    for p in paths:
        assert os.path.getsize(p) > 0
    svg = (out / "fig_active_flows.svg").read_text()
    for g in GAMES:
        assert g.upper() in svg  # one legend entry per game


def test_render_single_game_single_series(tmp_path):
    results = tmp_path / "results.csv"
    write_results(results, games=("clg",))
    out = tmp_path / "figs"
    render(str(results), str(out))
    svg = (out / "fig_active_flows.svg").read_text()
    assert "CLG" in svg
    assert "LLG" not in svg and "PFG" not in svg


def test_render_rejects_empty_csv(tmp_path):
    results = tmp_path / "results.csv"
    results.write_text(RESULTS_HEADER + "\n")
    out = tmp_path / "figs"
    with pytest.raises(SchemaError, match="no data rows"):
        render(str(results), str(out))
    assert not out.exists()  # no output files on error


def test_render_rejects_wrong_column(tmp_path):
    results = tmp_path / "results.csv"
    results.write_text("instance_id,game,flows,active\n1,llg,10,2\n")
    with pytest.raises(SchemaError, match="'flows'"):
        render(str(results), str(tmp_path / "figs"))


def test_table_matches_handwritten_aggregate(tmp_path):
    results = tmp_path / "results.csv"
    write_results(results)
    aggregates = load_aggregates(str(results))
    table = format_steps_table(aggregates)
    lines = table.splitlines()
    assert lines[0].split() == ["flows", "LLG", "CLG", "LFG", "PFG"]
    # recompute the expected cells directly from the fixture definition
    for row, fc in zip(lines[1:], (10, 20)):
        cells = row.split()
        assert cells[0] == str(fc)
        for g, cell_mean_std in zip(GAMES, zip(cells[1::2], cells[2::2])):
            steps = [10.0 * (i + 1) + fc + (5.0 if g == "lfg" else 0.0) for i in range(3)]
            mean, std = population_stats(steps)
            assert cell_mean_std[0] == f"{mean:.1f}"
            assert cell_mean_std[1] == f"({std:.1f})"


def test_accepts_aggregate_csv_input(tmp_path):
    agg = tmp_path / "agg.csv"
    agg.write_text(
        "game,flows_requested,metric,mean,std,n\n"
        "llg,10,flows_active,4.5,1.5,20\n"
        "llg,10,mean_links_per_active_flow,2.5,0.5,20\n"
        "llg,10,normalized_flow_steps,44.0,11.0,20\n"
        "llg,10,converged,1.0,0.0,20\n"
    )
    out = tmp_path / "figs"
    render(str(agg), str(out))
    table = (out / "steps_table.txt").read_text()
    assert "44.0 (11.0)" in table


def test_cli_render(tmp_path):
    results = tmp_path / "results.csv"
    write_results(results)
    out = tmp_path / "figs"
    assert main(["render", "--in", str(results), "--out", str(out)]) == 0
    assert (out / "steps_table.txt").exists()


def test_cli_reports_schema_error(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    assert main(["render", "--in", str(bad), "--out", str(tmp_path / "figs")]) == 1
    assert "column" in capsys.readouterr().err


@pytest.mark.skipif(shutil.which("crnsim") is None, reason="simulator CLI not installed")
def test_end_to_end_numbers_match_simulator_aggregate(tmp_path):
    # consume the simulator purely through its CLI and CSV interfaces
    results = tmp_path / "results.csv"
    agg = tmp_path / "agg.csv"
    subprocess.run(
        [
            "crnsim", "sweep", "--nodes", "80", "--side", "500", "--region", "100",
            "--flows", "4,6", "--instances", "3", "--games", "llg,clg,lfg,pfg",
            "--seed", "13", "--out", str(results), "--aggregate-out", str(agg),
        ],
        check=True,
        capture_output=True,
    )
    out = tmp_path / "figs"
    render(str(results), str(out))
    table = (out / "steps_table.txt").read_text()
    # every steps cell must equal the simulator's aggregate at 1 decimal
    expected = {}
    with open(agg) as fh:
        next(fh)
        for line in fh:
            game, fc, metric, mean, std, _ = line.strip().split(",")
            if metric == "normalized_flow_steps":
                expected[(game, int(fc))] = f"{float(mean):.1f} ({float(std):.1f})"
    lines = table.splitlines()
    games = [g.lower() for g in lines[0].split()[1:]]
    checked = 0
    for row in lines[1:]:
        cells = row.split()
        fc = int(cells[0])
        for g, mean_cell, std_cell in zip(games, cells[1::2], cells[2::2]):
            assert f"{mean_cell} {std_cell}" == expected[(g, fc)]
            checked += 1
    assert checked == len(expected) == 8
