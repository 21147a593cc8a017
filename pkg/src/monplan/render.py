"""Grayscale PGM snapshots of a mission trace for visual inspection.

Shading: black walls, dark unseen space, light seen space, mid-gray
discarded cells, near-black moving-obstacle hull outlines, white robot
trail. One frame every K trace records.
"""

import json
import os

import numpy as np

from .geometry import segment_cells
from .grid import Cell

SHADE_UNSEEN = 80
SHADE_SEEN = 220
SHADE_DISCARDED = 150
SHADE_WALL = 0
SHADE_HULL = 30
SHADE_TRAIL = 255
SHADE_ROBOT = 10


def write_pgm(path: str, img: np.ndarray):
    with open(path, "wb") as fh:
        fh.write(f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode())
        fh.write(img.astype(np.uint8).tobytes())


def render_trace(trace_path: str, out_dir: str, every: int = 50):
    """Replay a trace file and write numbered PGM frames."""
    os.makedirs(out_dir, exist_ok=True)
    with open(trace_path) as fh:
        header = json.loads(fh.readline())
        if header.get("type") != "header":
            raise ValueError("trace file lacks a header record")
        occupied = np.array([[ch == "#" for ch in row] for row in header["map"]])
        res = float(header["resolution"])
        H, W = occupied.shape
        trail: list[Cell] = []
        frame_idx = 0
        for i, line in enumerate(fh):
            rec = json.loads(line)
            trail.append(Cell(int(rec["x"] / res), int(rec["y"] / res)))
            if i % every != 0:
                continue
            img = np.full((H, W), SHADE_UNSEEN, dtype=np.uint8)
            img[occupied] = SHADE_WALL
            img = _shade_frame(img, occupied, rec, res, trail)
            write_pgm(os.path.join(out_dir, f"frame_{frame_idx:05d}.pgm"), img)
            frame_idx += 1
    return frame_idx


def _shade_frame(img: np.ndarray, occupied: np.ndarray, rec: dict, res: float,
                 trail: list[Cell]) -> np.ndarray:
    H, W = img.shape
    for area in rec.get("areas", []):
        hull = area.get("hull", [])
        if len(hull) < 2:
            continue
        shade = SHADE_HULL if area.get("active", True) else SHADE_DISCARDED
        for k in range(len(hull)):
            x0, y0 = hull[k]
            x1, y1 = hull[(k + 1) % len(hull)]
            for cell in segment_cells(x0, y0, x1, y1, res, W, H):
                img[cell.row, cell.col] = shade
    for cell in trail:
        if 0 <= cell.row < H and 0 <= cell.col < W and not occupied[cell.row, cell.col]:
            img[cell.row, cell.col] = SHADE_TRAIL
    goal = rec.get("goal")
    if goal:
        gc, gr = int(goal[0]), int(goal[1])
        if 0 <= gr < H and 0 <= gc < W:
            img[gr, gc] = SHADE_ROBOT
    rr = min(max(int(rec["y"] / res), 0), H - 1)
    rc = min(max(int(rec["x"] / res), 0), W - 1)
    img[rr, rc] = SHADE_ROBOT
    return img


def render_world(gmap, mask_states=None, labels=None) -> np.ndarray:
    """Static snapshot helper used by the partition subcommand and demos."""
    H, W = gmap.height, gmap.width
    img = np.full((H, W), SHADE_UNSEEN, dtype=np.uint8)
    if labels is not None:
        n = max(int(labels.max()), 1)
        band = np.where(labels >= 0, 60 + (labels * 160) // max(n, 1), SHADE_UNSEEN)
        img = band.astype(np.uint8)
    if mask_states is not None:
        img[mask_states == 1] = SHADE_SEEN
        img[mask_states == 2] = SHADE_DISCARDED
    img[gmap.occupied] = SHADE_WALL
    return img
