"""Batch experiment runner: config sweeps over seeds, with aggregation.

A sweep file is JSON with a base config, a factor grid (each key a list of
values to cross), one or more maps, and a seed count or list. Runs execute
in parallel worker processes with zero shared state; per-run records land in
a JSONL file and a CSV, and factor-level quartile summaries in a second CSV.
"""

import csv
import itertools
import json
import os
from multiprocessing import get_context

import numpy as np

from .config import MissionConfig
from .grid import load_map
from .sim import run_mission

CSV_COLUMNS = ["map", "strategy", "o_th", "safety", "memory_mode", "projections",
               "n_obstacles", "speed", "seed", "observed_ratio", "collided",
               "path_length", "mission_time", "max_plan_ms",
               "mean_min_obstacle_dist", "status"]

FACTOR_KEYS = ["map", "strategy", "o_th", "safety", "memory_mode", "projections",
               "n_obstacles", "speed"]

AGG_METRICS = ["observed_ratio", "collided", "path_length", "mission_time",
               "mean_min_obstacle_dist"]


def expand_sweep(sweep: dict) -> list[dict]:
    """Cartesian product of maps x grid values x seeds into run specs."""
    maps = sweep.get("maps") or [sweep["map"]]
    base = sweep.get("base_config", {})
    grid = sweep.get("grid", {})
    seeds = sweep.get("seeds", 1)
    if isinstance(seeds, int):
        seeds = list(range(seeds))
    keys = sorted(grid)
    combos = list(itertools.product(*(grid[k] for k in keys))) if keys else [()]
    specs = []
    for map_path in maps:
        for combo in combos:
            cfg = dict(base)
            cfg.update(dict(zip(keys, combo)))
            for seed in seeds:
                specs.append({"map": map_path, "config": cfg, "seed": int(seed)})
    return specs


def _run_one(spec: dict) -> dict:
    config = MissionConfig.from_dict(spec["config"])
    try:
        with open(spec["map"]) as fh:
            gmap = load_map(fh.read())
        metrics = run_mission(gmap, config, spec["seed"])
        record = metrics.to_dict()
    except Exception as exc:  # record the failure, keep the batch going
        record = {"status": "Error", "error": f"{type(exc).__name__}: {exc}"}
    record.update({
        "map": os.path.basename(spec["map"]),
        "strategy": config.strategy.value,
        "o_th": config.o_th,
        "safety": config.safety_factor,
        "memory_mode": config.memory_mode.value,
        "projections": config.projections,
        "n_obstacles": config.n_obstacles,
        "speed": config.obstacle_speed,
        "seed": spec["seed"],
    })
    return record


def run_batch(specs: list[dict], out_dir: str, jobs: int = 1) -> list[dict]:
    """Execute all run specs and write runs.jsonl, runs.csv, aggregate.csv."""
    os.makedirs(out_dir, exist_ok=True)
    if jobs > 1 and len(specs) > 1:
        with get_context("spawn").Pool(jobs) as pool:
            records = pool.map(_run_one, specs)
    else:
        records = [_run_one(s) for s in specs]

    with open(os.path.join(out_dir, "runs.jsonl"), "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
    with open(os.path.join(out_dir, "runs.csv"), "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for rec in records:
            writer.writerow(rec)
    write_aggregate(records, os.path.join(out_dir, "aggregate.csv"))
    return records


def write_aggregate(records: list[dict], path: str):
    """Mean / median / quartiles per factor level per metric."""
    groups: dict[tuple, list[dict]] = {}
    for rec in records:
        if rec.get("status") == "Error":
            continue
        key = tuple(rec.get(k) for k in FACTOR_KEYS)
        groups.setdefault(key, []).append(rec)
    rows = []
    for key in sorted(groups, key=str):
        recs = groups[key]
        row = dict(zip(FACTOR_KEYS, key))
        row["runs"] = len(recs)
        for metric in AGG_METRICS:
            values = [float(r[metric]) for r in recs
                      if r.get(metric) is not None]
            if not values:
                continue
            arr = np.asarray(values)
            row[f"{metric}_mean"] = round(float(arr.mean()), 6)
            row[f"{metric}_median"] = round(float(np.median(arr)), 6)
            row[f"{metric}_q1"] = round(float(np.percentile(arr, 25)), 6)
            row[f"{metric}_q3"] = round(float(np.percentile(arr, 75)), 6)
        rows.append(row)
    fields = FACTOR_KEYS + ["runs"] + [f"{m}_{s}" for m in AGG_METRICS
                                       for s in ("mean", "median", "q1", "q3")]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
