"""Command-line front end: run, batch, partition, render."""

import argparse
import json
import sys

from .batch import expand_sweep, run_batch
from .config import MissionConfig, load_config
from .grid import load_map


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="monplan",
                                     description="Monitoring-mission planner and simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one mission")
    p_run.add_argument("--map", required=True)
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--out", default=None, help="output file prefix")

    p_batch = sub.add_parser("batch", help="run a sweep of missions")
    p_batch.add_argument("--sweep", required=True, help="sweep JSON file")
    p_batch.add_argument("--out", required=True, help="output directory")
    p_batch.add_argument("--jobs", type=int, default=1)

    p_part = sub.add_parser("partition", help="partition a map and dump the graph")
    p_part.add_argument("--map", required=True)
    p_part.add_argument("--out", required=True, help="output file prefix")

    p_render = sub.add_parser("render", help="render PGM frames from a trace")
    p_render.add_argument("--trace", required=True)
    p_render.add_argument("--every", type=int, default=50)
    p_render.add_argument("--out", required=True, help="output directory")

    args = parser.parse_args(argv)
    return {"run": _cmd_run, "batch": _cmd_batch,
            "partition": _cmd_partition, "render": _cmd_render}[args.command](args)


def _cmd_run(args) -> int:
    from .sim import run_mission_files
    config = load_config(args.config)
    metrics = run_mission_files(args.map, config, args.seed, out_prefix=args.out)
    json.dump(metrics.to_dict(), sys.stdout, indent=2)
    print()
    return 0


def _cmd_batch(args) -> int:
    with open(args.sweep) as fh:
        sweep = json.load(fh)
    specs = expand_sweep(sweep)
    records = run_batch(specs, args.out, jobs=args.jobs)
    failed = sum(1 for r in records if r.get("status") == "Error")
    print(f"{len(records)} runs ({failed} failed) -> {args.out}")
    return 0


def _cmd_partition(args) -> int:
    from .fmm import distance_transform
    from .partition import (build_adjacency_graph, compute_partitions,
                            extract_partition_seeds, label_map)

    with open(args.map) as fh:
        gmap = load_map(fh.read())
    dso = distance_transform(gmap)
    seeds = [cell for cell, _ in extract_partition_seeds(dso)]
    partitions = compute_partitions(seeds, dso, gmap)
    graph = build_adjacency_graph(partitions, gmap, MissionConfig().limits.v_max)
    labels = label_map(partitions, gmap)
    with open(f"{args.out}.labels.txt", "w") as fh:
        for r in range(gmap.height):
            fh.write(" ".join(str(int(v)) for v in labels[r]) + "\n")
    with open(f"{args.out}.graph.txt", "w") as fh:
        for (i, j), cost in sorted(graph.edges.items()):
            fh.write(f"{i} {j} {cost:.6f}\n")
    print(f"{len(partitions)} partitions, {len(graph.edges)} edges -> {args.out}.*")
    return 0


def _cmd_render(args) -> int:
    from .render import render_trace
    n = render_trace(args.trace, args.out, every=args.every)
    print(f"{n} frames -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
