"""Scene libraries: the physical contents of every bin and of the tote.

A library maps a bin name (``bin_A`` ... ``bin_L``) or ``"tote"`` to a list
of SceneObjects. On disk it is a directory of ``<name>.json`` files in the
SceneDescription format; bins without a file are empty.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from ..perception.catalog import get_item, place_in_bin, place_in_tote
from ..perception.scene import SceneDescription, SceneObject
from ..rack import BIN_NAMES, RackModel, bin_index
from ..seeding import derive_seed

TOTE = "tote"
SceneLibrary = dict[str, list[SceneObject]]

_TOTE_GRID = [(x, y) for y in (-0.08, 0.08) for x in (-0.15, 0.0, 0.15)]


def load_scene_library(directory) -> SceneLibrary:
    root = Path(directory)
    if not root.is_dir():
        raise OSError(f"scene directory {root} does not exist")
    library: SceneLibrary = {}
    for name in (*BIN_NAMES, TOTE):
        path = root / f"{name}.json"
        if path.exists():
            library[name] = list(SceneDescription.load(path).objects)
    return library


def save_scene_library(library: SceneLibrary, directory) -> None:
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    for name, objects in library.items():
        SceneDescription(tuple(objects)).save(root / f"{name}.json")


def bin_slots(count: int, bin_size) -> list[tuple[float, float]]:
    """(depth, lateral) slots for ``count`` items: up to three per row, rows
    spread from the face towards the back wall."""
    depth_total, width, _ = bin_size
    per_row = min(count, 3)
    rows = max(1, math.ceil(count / 3))
    depths = np.linspace(0.08, min(0.24, depth_total - 0.06), rows) if rows > 1 else [0.09]
    slots = []
    for k in range(count):
        r, c = divmod(k, per_row)
        in_row = min(per_row, count - r * per_row)
        spread = min(0.075, width / 2 - 0.05)
        lateral = 0.0 if in_row == 1 else np.linspace(-spread, spread, in_row)[c]
        slots.append((float(depths[r]), float(lateral)))
    return slots


def populate_bin(rack: RackModel, name: str, items, rng: np.random.Generator | None = None,
                 yaw_jitter: float = 0.2) -> list[SceneObject]:
    b = bin_index(name)
    frame, size = rack.bin_frame(b), rack.bin_size(b)
    objects = []
    for item_id, (depth, lateral) in zip(items, bin_slots(len(items), size)):
        yaw = rng.uniform(-yaw_jitter, yaw_jitter) if rng is not None and yaw_jitter else 0.0
        objects.append(place_in_bin(get_item(item_id), frame, size, depth, lateral, yaw))
    return objects


def populate_tote(tote_pose: np.ndarray, items, rng: np.random.Generator | None = None,
                  yaw_jitter: float = 0.2) -> list[SceneObject]:
    """Fill a 3x2 floor grid with items lying flat; further items are stacked
    on the earlier ones, which may partially or fully hide them from the
    overhead camera."""
    objects: list[SceneObject] = []
    heights = [0.0] * len(_TOTE_GRID)
    for k, item_id in enumerate(items):
        item = get_item(item_id).lying_flat()
        cell = k % len(_TOTE_GRID)
        x, y = _TOTE_GRID[cell]
        yaw = rng.uniform(-yaw_jitter, yaw_jitter) if rng is not None and yaw_jitter else 0.0
        objects.append(place_in_tote(item, tote_pose, x, y, yaw, heights[cell]))
        heights[cell] += 2 * item.resting_half_height()
    return objects


def generate_scene_library(order, rack: RackModel, tote_pose: np.ndarray, seed: int = 0,
                           yaw_jitter: float = 0.2) -> SceneLibrary:
    """Synthesise scenes consistent with a work order's bin and tote contents."""
    library: SceneLibrary = {}
    for name, items in order.bin_contents.items():
        rng = np.random.default_rng(derive_seed(seed, "scene", name))
        library[name] = populate_bin(rack, name, items, rng, yaw_jitter)
    if order.tote_contents:
        rng = np.random.default_rng(derive_seed(seed, "scene", TOTE))
        library[TOTE] = populate_tote(tote_pose, order.tote_contents, rng, yaw_jitter)
    return library
