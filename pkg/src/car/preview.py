"""Fast top-down orthographic preview of a scene program.

Rasterizes object footprints as category-colored oriented rectangles over
the room shell (walls, door gaps, window marks) without Blender, plus a
label map pairing pixels with object ids. Deterministic: same program,
same bytes.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Tuple

import numpy as np
from PIL import Image

from . import geometry
from .program import SceneProgram

FLOOR_COLOR = (235, 232, 226)
WALL_COLOR = (52, 50, 48)
WINDOW_COLOR = (150, 200, 235)
DOOR_COLOR = FLOOR_COLOR  # doors read as gaps in the wall line

PALETTE = (
    (31, 119, 180),
    (255, 127, 14),
    (44, 160, 44),
    (214, 39, 40),
    (148, 103, 189),
    (140, 86, 75),
    (227, 119, 194),
    (127, 127, 127),
    (188, 189, 34),
    (23, 190, 207),
    (174, 199, 232),
    (255, 187, 120),
    (152, 223, 138),
    (255, 152, 150),
    (197, 176, 213),
    (196, 156, 148),
    (247, 182, 210),
    (199, 199, 199),
    (219, 219, 141),
    (158, 218, 229),
    (57, 59, 121),
    (140, 162, 82),
    (189, 158, 57),
    (173, 73, 74),
)


def category_color(category: str) -> Tuple[int, int, int]:
    """Stable category color so renders compare across runs."""
    digest = hashlib.sha1(category.encode("utf-8")).digest()
    return PALETTE[digest[0] % len(PALETTE)]


@dataclass
class PreviewResult:
    image: np.ndarray      # (H, W, 3) uint8
    label_map: np.ndarray  # (H, W) int32, 0 = background
    legend: Dict[str, int]
    px_per_m: float

    def save(self, path, with_labels: bool = False) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(self.image).save(path)
        if with_labels:
            label_path = path.with_suffix(".labels.png")
            Image.fromarray(self.label_map.astype(np.uint16)).save(label_path)
        return path


def _grid(shell, px_per_m: float):
    width_px = max(1, int(round(shell.width * px_per_m)))
    depth_px = max(1, int(round(shell.depth * px_per_m)))
    cols = (np.arange(width_px) + 0.5) / px_per_m
    # Row 0 is the far (max-y) side so the image reads like a plan.
    rows = shell.depth - (np.arange(depth_px) + 0.5) / px_per_m
    xs, ys = np.meshgrid(cols, rows)
    return width_px, depth_px, xs, ys


def _footprint_mask(xs, ys, footprint: geometry.Footprint) -> np.ndarray:
    dx = xs - footprint.center[0]
    dy = ys - footprint.center[1]
    c, s = math.cos(-footprint.yaw), math.sin(-footprint.yaw)
    lx = c * dx - s * dy
    ly = s * dx + c * dy
    hx, hy = footprint.half_extent
    # Half-open intervals: pixel centers exactly on the max edge belong to
    # the neighbor, so counts stay proportional to areas.
    mask = (lx >= -hx) & (lx < hx) & (ly >= -hy) & (ly < hy)
    return mask, lx, ly


def _draw_walls(image, xs, ys, shell, px_per_m):
    thickness = max(shell.wall_thickness, 2.0 / px_per_m)
    for wall in shell.walls:
        ax, ay = wall.start
        bx, by = wall.end
        vx, vy = bx - ax, by - ay
        length = math.hypot(vx, vy)
        if length == 0:
            continue
        t = ((xs - ax) * vx + (ys - ay) * vy) / (length * length)
        t = np.clip(t, 0.0, 1.0)
        px = ax + t * vx
        py = ay + t * vy
        dist = np.hypot(xs - px, ys - py)
        band = dist <= thickness
        along = t * length
        color = np.full(xs.shape + (3,), 0, dtype=np.uint8)
        color[...] = WALL_COLOR
        for cut in shell.cutouts:
            if cut.wall != wall.id:
                continue
            span = (along >= cut.center - cut.width / 2.0) & (
                along <= cut.center + cut.width / 2.0
            )
            if cut.kind == "door":
                band = band & ~span
            else:
                color[span] = WINDOW_COLOR
        image[band] = color[band]


def render_preview(program: SceneProgram, px_per_m: float = 50.0) -> PreviewResult:
    """Rasterize footprints and shell into an image plus an id label map.

    A pixel belongs to an object when its center lies inside the oriented
    footprint (closed boundary); later statements draw over earlier ones.
    """
    shell = program.shell
    width_px, depth_px, xs, ys = _grid(shell, px_per_m)
    image = np.empty((depth_px, width_px, 3), dtype=np.uint8)
    image[...] = FLOOR_COLOR
    label_map = np.zeros((depth_px, width_px), dtype=np.int32)
    legend: Dict[str, int] = {}

    for statement in program.objects():
        footprint = geometry.footprint_of(statement)
        mask, lx, ly = _footprint_mask(xs, ys, footprint)
        if statement.id not in legend:
            legend[statement.id] = len(legend) + 1
        index = legend[statement.id]
        color = category_color(statement.category)
        image[mask] = color
        label_map[mask] = index
        # Border and a front tick (local +Y edge) inside the footprint.
        hx, hy = footprint.half_extent
        inset = min(2.0 / px_per_m, 0.4 * min(hx, hy))
        border = mask & ~((np.abs(lx) <= hx - inset) & (np.abs(ly) <= hy - inset))
        dark = tuple(int(c * 0.55) for c in color)
        image[border] = dark
        tick = mask & (ly >= hy - 3.0 * inset) & (np.abs(lx) <= 0.25 * hx)
        image[tick] = dark

    _draw_walls(image, xs, ys, shell, px_per_m)
    return PreviewResult(image=image, label_map=label_map, legend=legend, px_per_m=px_per_m)


def save_preview(program: SceneProgram, path, px_per_m: float = 50.0) -> Path:
    return render_preview(program, px_per_m).save(path)
