"""Command-line harness: gen-dataset, run, report, replay, inspect.

Flags mirror the suite config fields. Benchmark knobs keep their short
names: -e manipulation effort (seconds), -d clutter density multiplier,
-g tasks per episode, --history prior decisions shown to the reasoner.
LLM endpoint and key come only from CLUTTERNAV_LLM_* environment variables.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .dataset import EpisodeFormatError, load_episode
from .executor import load_transcript, replay_transcript
from .grid import CellState
from .metrics import aggregate
from .report import console_table, write_reports
from .suite import SuiteConfig, gen_dataset, load_results, run_suite


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON config file; flags override it")
    parser.add_argument("--rooms", type=str, help="room counts, e.g. '1-10' or '3,5,7'")
    parser.add_argument("--episodes-per-room", type=int, dest="episodes_per_room")
    parser.add_argument("--base-fraction", type=float, dest="base_fraction")
    parser.add_argument("-d", "--density", type=float, help="clutter density multiplier")
    parser.add_argument("-g", "--horizon", type=int, help="tasks per episode")
    parser.add_argument("-e", "--effort", type=float, help="manipulation effort, seconds")
    parser.add_argument("--beta", type=float, help="centrality weight, seconds")
    parser.add_argument("--history", type=int, dest="history_length",
                        help="prior decisions included in reasoner context")
    parser.add_argument("--sensor-range", type=int, dest="sensor_range")
    parser.add_argument("--mode", choices=("known", "unknown"))
    parser.add_argument("--methods", type=str, help="comma-separated policy names")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--max-steps-per-task", type=int, dest="max_steps_per_task")
    parser.add_argument("--llm", type=str, help="none | http | mock:<reply>|<reply>")


def _parse_rooms(text: str) -> tuple[int, ...]:
    if "-" in text and "," not in text:
        lo, hi = text.split("-")
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(part) for part in text.split(",") if part)


def _build_config(args: argparse.Namespace) -> SuiteConfig:
    data: dict = {}
    if args.config:
        data.update(json.loads(args.config.read_text()))
    overrides = {
        "episodes_per_room": args.episodes_per_room,
        "base_fraction": args.base_fraction,
        "density": args.density,
        "horizon": args.horizon,
        "effort": args.effort,
        "beta": args.beta,
        "history_length": args.history_length,
        "sensor_range": args.sensor_range,
        "mode": args.mode,
        "seed": args.seed,
        "workers": args.workers,
        "max_steps_per_task": args.max_steps_per_task,
        "llm": args.llm,
    }
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    if args.rooms:
        data["rooms"] = list(_parse_rooms(args.rooms))
    if args.methods:
        data["methods"] = [m.strip() for m in args.methods.split(",") if m.strip()]
    return SuiteConfig.from_dict(data)


def cmd_gen_dataset(args: argparse.Namespace) -> int:
    config = _build_config(args)
    manifest = gen_dataset(config, args.out)
    print(f"wrote {len(manifest['files'])} episodes to {args.out}")
    print(f"config hash {manifest['config_hash']}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = _build_config(args)
    results = run_suite(
        config,
        args.dataset,
        args.out,
        resume=not args.no_resume,
        allow_hash_mismatch=args.force,
    )
    print(f"{len(results)} result files in {args.out}")
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    results = load_results(args.results)
    if not results:
        print("no results found", file=sys.stderr)
        return 1
    report = aggregate(results)
    files = write_reports(report, args.out, figures=not args.no_figures)
    print(console_table(report))
    for path in files:
        print(f"wrote {path}")
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    episode = load_episode(args.episode)
    records = load_transcript(args.transcript)
    outcome = replay_transcript(episode, records)
    if not outcome.ok:
        print(outcome.detail, file=sys.stderr)
        return 1
    print(outcome.detail)
    if args.result:
        expected = json.loads(Path(args.result).read_text())
        final = sorted(map(list, outcome.final_obstacle_cells))
        if (
            expected["tasks_completed"] != outcome.tasks_completed
            or expected["final_obstacle_cells"] != final
        ):
            print("replay result does not match the recorded result", file=sys.stderr)
            return 1
        print("recorded result verified")
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    try:
        episode = load_episode(args.episode)
    except EpisodeFormatError as exc:
        print(f"bad episode file: {exc}", file=sys.stderr)
        return 1
    plan = episode.floorplan
    print(f"{plan.width}x{plan.height} cells, {len(plan.rooms)} rooms, seed {episode.seed}")
    for room in plan.rooms:
        print(f"  {room.id}: {room.type} ({len(room.cells)} cells)")
    print(f"{len(episode.clutter_cells)} obstacles, {len(episode.drop_zones)} drop zones, "
          f"{episode.horizon} tasks")
    graph = episode.ground_graph()
    glyphs = {
        CellState.FREE: ".",
        CellState.WALL: "#",
        CellState.OBSTACLE: "o",
        CellState.FIXTURE: "R",
    }
    zone_cells = {z.cell for z in episode.drop_zones}
    for y in range(plan.height):
        row = []
        for x in range(plan.width):
            cell = (x, y)
            if cell == episode.start:
                row.append("S")
            elif cell in zone_cells and graph.is_free(cell):
                row.append("z")
            else:
                row.append(glyphs[graph.state(cell)])
        print("".join(row))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="clutternav", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-dataset", help="generate episode files and a manifest")
    _add_config_args(p)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("run", help="run configured methods over a dataset")
    _add_config_args(p)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--no-resume", action="store_true", help="recompute existing results")
    p.add_argument("--force", action="store_true", help="ignore manifest hash mismatch")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="aggregate results into tables and figures")
    p.add_argument("--results", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("replay", help="re-execute a transcript and verify it")
    p.add_argument("--episode", type=Path, required=True)
    p.add_argument("--transcript", type=Path, required=True)
    p.add_argument("--result", type=Path)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("inspect", help="print an episode summary and map")
    p.add_argument("--episode", type=Path, required=True)
    p.set_defaults(func=cmd_inspect)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
