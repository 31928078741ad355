"""Command-line entry point.

Subcommands: ``gen`` writes a scenario file, ``run`` plays games on a saved
scenario, ``sweep`` runs the Monte-Carlo batch, ``verify`` cross-checks the
dynamics against the exhaustive oracle on tiny instances. Powers are given in
dBm and the SINR threshold in dB on the command line; everything is linear
inside.
"""

from __future__ import annotations

import argparse
import json
import sys

from .experiments import (
    aggregate,
    run_batch,
    write_aggregate_csv,
    write_results_csv,
)
from .games import GameConfig, GameKind, run_game
from .oracle import global_optimum, is_pure_nash
from .scenario import (
    ScenarioError,
    ScenarioParams,
    db_to_linear,
    dbm_to_watts,
    default_params,
    generate_scenario,
    load_scenario,
    save_scenario,
)


def _add_scenario_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--nodes", type=int, default=200, help="number of nodes")
    parser.add_argument("--side", type=float, default=1000.0, help="area side (m)")
    parser.add_argument("--channels", type=int, default=10, help="number of channels")
    parser.add_argument("--region", type=float, default=100.0, help="region side (m)")
    parser.add_argument("--subset-min", type=int, default=3, help="min channels per region")
    parser.add_argument("--subset-max", type=int, default=8, help="max channels per region")
    parser.add_argument("--pmax-dbm", type=float, default=20.0, help="max power (dBm)")
    parser.add_argument("--levels", type=int, default=16, help="power quantization levels")
    parser.add_argument("--gamma", type=float, default=4.0, help="path loss exponent")
    parser.add_argument("--alpha-db", type=float, default=10.0, help="SINR threshold (dB)")
    parser.add_argument("--noise-dbm", type=float, default=-70.0, help="noise power (dBm)")
    parser.add_argument("--max-hops", type=int, default=6, help="max hops per flow")
    parser.add_argument("--seed", type=int, default=0, help="master seed")


def _params_from_args(args: argparse.Namespace, n_flows: int) -> ScenarioParams:
    return ScenarioParams(
        n_nodes=args.nodes,
        side_length=args.side,
        n_channels=args.channels,
        region_size=args.region,
        channel_subset_min=args.subset_min,
        channel_subset_max=args.subset_max,
        p_max=dbm_to_watts(args.pmax_dbm),
        q_levels=args.levels,
        path_loss_exp=args.gamma,
        sinr_threshold=db_to_linear(args.alpha_db),
        noise_power=dbm_to_watts(args.noise_dbm),
        max_hops=args.max_hops,
        n_flows=n_flows,
        seed=args.seed,
    )


def _parse_games(text: str) -> list[GameKind]:
    games = []
    for name in text.split(","):
        name = name.strip().lower()
        if not name:
            continue
        try:
            games.append(GameKind(name))
        except ValueError:
            raise argparse.ArgumentTypeError(
                f"unknown game '{name}' (choose from llg, clg, lfg, pfg)"
            ) from None
    if not games:
        raise argparse.ArgumentTypeError("no games given")
    return games


def _parse_int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list '{text}'") from None
    if not values:
        raise argparse.ArgumentTypeError("empty integer list")
    return values


def _strategy_json(strategy) -> list:
    return [strategy.level, strategy.channel]


def _dump_trajectory(trajectory, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in trajectory.records:
            if rec.player.startswith("flow:"):
                old = [_strategy_json(s) for s in rec.old]
                new = [_strategy_json(s) for s in rec.new]
            else:
                old = _strategy_json(rec.old)
                new = _strategy_json(rec.new)
            fh.write(
                json.dumps(
                    {
                        "player": rec.player,
                        "old": old,
                        "new": new,
                        "utility_before": rec.utility_before,
                        "utility_after": rec.utility_after,
                        "potential": rec.potential,
                    }
                )
                + "\n"
            )


def _cmd_gen(args: argparse.Namespace) -> int:
    params = _params_from_args(args, args.flows)
    scenario = generate_scenario(params)
    save_scenario(scenario, args.out)
    print(
        f"wrote {args.out}: {params.n_nodes} nodes, {len(scenario.flows)} flows, "
        f"{len(scenario.links)} links",
        file=sys.stderr,
    )
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    games = args.games
    if args.trajectory and len(games) != 1:
        print("--trajectory requires exactly one game", file=sys.stderr)
        return 2
    rows = []
    for game in games:
        config = GameConfig(
            game=game, max_cycles=args.max_cycles, search_node_cap=args.search_cap
        )
        _, trajectory, metrics = run_game(scenario, config)
        rows.append(metrics)
        if args.trajectory:
            _dump_trajectory(trajectory, args.trajectory)
    if args.out:
        write_results_csv(rows, args.out)
    else:
        from .experiments import RESULTS_HEADER

        print(",".join(RESULTS_HEADER))
        for r in rows:
            mean_links = (
                "" if r.mean_links_per_active_flow is None
                else repr(r.mean_links_per_active_flow)
            )
            print(
                f"{r.instance_id},{r.game.value},{r.flows_requested},{r.flows_active},"
                f"{mean_links},{repr(r.normalized_flow_steps)},"
                f"{'true' if r.converged else 'false'}"
            )
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    params = _params_from_args(args, args.flows[0])
    rows = run_batch(
        params,
        flow_counts=args.flows,
        n_instances=args.instances,
        games=args.games,
        max_cycles=args.max_cycles,
        search_node_cap=args.search_cap,
        jobs=args.jobs,
    )
    write_results_csv(rows, args.out)
    print(f"wrote {args.out}: {len(rows)} rows", file=sys.stderr)
    if args.aggregate_out:
        write_aggregate_csv(aggregate(rows), args.aggregate_out)
        print(f"wrote {args.aggregate_out}", file=sys.stderr)
    return 0


def _tiny_params(seed: int) -> ScenarioParams:
    return default_params(
        n_nodes=12,
        side_length=200.0,
        n_channels=2,
        region_size=100.0,
        channel_subset_min=1,
        channel_subset_max=2,
        q_levels=2,
        max_hops=2,
        n_flows=3,
        seed=seed,
    )


def verify_oracle_suite(seed: int, count: int, report) -> bool:
    """Check the dynamics against the exhaustive oracle on tiny instances.

    Generates ``count`` instances (skipping unroutable seeds), runs LLG, LFG
    and PFG on each, and checks: converged terminal profiles are pure Nash
    equilibria, PFG converges with strictly increasing potential on accepted
    moves, and the global-optimum witness is a PFG equilibrium.
    """
    failed = False

    def check(condition: bool, label: str) -> None:
        nonlocal failed
        if condition:
            report(f"ok   {label}")
        else:
            report(f"FAIL {label}")
            failed = True

    produced = 0
    attempt = 0
    while produced < count and attempt < count * 10:
        params = _tiny_params(seed + attempt)
        attempt += 1
        try:
            scenario = generate_scenario(params)
        except ScenarioError:
            continue
        produced += 1
        label = f"seed={params.seed}"
        for game in (GameKind.LLG, GameKind.LFG, GameKind.PFG):
            state, trajectory, _ = run_game(scenario, GameConfig(game=game))
            if game is GameKind.PFG:
                check(trajectory.converged, f"{label}: pfg converged")
                values = [r.potential for r in trajectory.records]
                check(
                    all(b > a for a, b in zip(values, values[1:])),
                    f"{label}: pfg potential strictly increasing",
                )
            if trajectory.converged:
                check(
                    is_pure_nash(tuple(state.strategies), game, scenario),
                    f"{label}: {game.value} terminal profile is a pure NE",
                )
            else:
                report(f"ok   {label}: {game.value} hit max_cycles (not checked)")
        optimum, witness = global_optimum(scenario)
        check(
            is_pure_nash(witness, GameKind.PFG, scenario),
            f"{label}: optimum witness ({optimum} flows) is a PFG equilibrium",
        )
    check(produced >= count, f"generated {produced}/{count} instances")
    return not failed


def _cmd_verify(args: argparse.Namespace) -> int:
    ok = verify_oracle_suite(args.seed, args.count, report=print)
    print("all checks passed" if ok else "CHECKS FAILED", file=sys.stderr)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crnsim",
        description="Channel and power allocation games in multihop cognitive radio networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate and save a random scenario")
    _add_scenario_flags(p_gen)
    p_gen.add_argument("--flows", type=int, default=10, help="number of flows")
    p_gen.add_argument("--out", required=True, help="output scenario file")
    p_gen.set_defaults(func=_cmd_gen)

    p_run = sub.add_parser("run", help="run games on a saved scenario")
    p_run.add_argument("--scenario", required=True, help="scenario file")
    p_run.add_argument("--games", type=_parse_games, default=[GameKind.CLG])
    p_run.add_argument("--max-cycles", type=int, default=50)
    p_run.add_argument("--search-cap", type=int, default=10**6)
    p_run.add_argument("--trajectory", help="write accepted moves as JSON lines")
    p_run.add_argument("--out", help="write metrics CSV here instead of stdout")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="Monte-Carlo sweep over flow counts")
    _add_scenario_flags(p_sweep)
    p_sweep.add_argument("--flows", type=_parse_int_list, default=[10, 20, 30, 40])
    p_sweep.add_argument("--instances", type=int, default=100)
    p_sweep.add_argument(
        "--games",
        type=_parse_games,
        default=[GameKind.LLG, GameKind.CLG, GameKind.LFG, GameKind.PFG],
    )
    p_sweep.add_argument("--max-cycles", type=int, default=50)
    p_sweep.add_argument("--search-cap", type=int, default=10**6)
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_sweep.add_argument("--out", default="results.csv", help="results CSV path")
    p_sweep.add_argument("--aggregate-out", help="also write the aggregate CSV here")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_verify = sub.add_parser("verify", help="oracle checks on tiny instances")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--count", type=int, default=10)
    p_verify.set_defaults(func=_cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
