"""Training data for the one-vs-all forests.

Each catalog item is rendered alone in a reference bin a few times with
random placement, and optionally lying in a container seen from above;
window descriptors of its pixels form that item's samples. Rack and
container pixels form a shared background class. A forest for item X
uses X's samples as positives and everything else as negatives.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ..rack import RackModel
from ..seeding import derive_seed
from .catalog import CATALOG, get_item, place_in_bin, place_in_tote
from .features import window_features
from .forest import RandomForest, train_forest
from .normals import estimate_normals, has_normal
from .scene import LABEL_RACK, RenderSettings, render_bin_cloud, render_cloud

BACKGROUND = "__rack__"


@dataclass(frozen=True, eq=False)
class TopDownStage:
    """A container floor seen by an overhead camera (both 4x4 world poses)."""

    floor_pose: np.ndarray
    camera_pose: np.ndarray
    walls: tuple = ()
    spread: float = 0.08      # random offset of the item on the floor


@dataclass(frozen=True, eq=False)
class FeatureBank:
    samples: dict[str, np.ndarray] = field(default_factory=dict)

    def labels(self) -> list[str]:
        return list(self.samples)

    def split(self, item_id: str, max_negatives: int | None = None,
              rng: np.random.Generator | None = None):
        if item_id not in self.samples:
            raise KeyError(f"no training samples for {item_id!r}")
        pos = self.samples[item_id]
        neg = np.vstack([v for k, v in self.samples.items() if k != item_id])
        if max_negatives is not None and len(neg) > max_negatives:
            rng = rng if rng is not None else np.random.default_rng(0)
            neg = neg[np.sort(rng.choice(len(neg), max_negatives, replace=False))]
        return pos, neg


def _pixel_samples(cloud, normals, mask, limit, rng, window, shape_radius):
    idx = np.flatnonzero(mask & has_normal(normals))
    if idx.size > limit:
        idx = np.sort(rng.choice(idx, limit, replace=False))
    w = cloud.organized_shape[0]
    px = np.column_stack([idx % w, idx // w])
    return window_features(cloud, normals, px, window, shape_radius)


def build_feature_bank(rack: RackModel, items: Iterable[str] | None = None,
                       views: int = 2, per_view: int = 150, background: int = 600,
                       bin_index: int = 4, settings: RenderSettings = RenderSettings(),
                       window: int = 7, shape_radius: float = 0.02, seed: int = 0,
                       normal_k: int = 12, normal_radius: float = 0.03,
                       top_down: TopDownStage | None = None) -> FeatureBank:
    items = list(CATALOG) if items is None else list(items)
    frame, size = rack.bin_frame(bin_index), rack.bin_size(bin_index)
    samples: dict[str, list[np.ndarray]] = {i: [] for i in items}
    bg: list[np.ndarray] = []
    for item_id in items:
        item = get_item(item_id)
        for view in range(views):
            rng = np.random.default_rng(derive_seed(seed, "bank", item_id, view))
            lateral = rng.uniform(-0.04, 0.04)
            yaw = rng.uniform(-0.4, 0.4)
            obj = place_in_bin(item, frame, size, lateral=lateral, yaw=yaw)
            cloud = render_bin_cloud(rack, bin_index, [obj], settings=settings, rng=rng)
            normals = estimate_normals(cloud, normal_k, normal_radius)
            samples[item_id].append(_pixel_samples(cloud, normals, cloud.labels == 0, per_view,
                                                   rng, window, shape_radius))
            if len(bg) < views:
                bg.append(_pixel_samples(cloud, normals, cloud.labels == LABEL_RACK,
                                         background // views, rng, window, shape_radius))
        if top_down is not None:
            for view in range(views):
                rng = np.random.default_rng(derive_seed(seed, "bank-top", item_id, view))
                x, y = rng.uniform(-top_down.spread, top_down.spread, 2)
                obj = place_in_tote(item.lying_flat(), top_down.floor_pose, x, y,
                                    rng.uniform(-np.pi, np.pi))
                cloud = render_cloud([obj], top_down.walls, top_down.camera_pose, settings, rng)
                normals = estimate_normals(cloud, normal_k, normal_radius)
                samples[item_id].append(_pixel_samples(cloud, normals, cloud.labels == 0,
                                                       per_view, rng, window, shape_radius))
                if len(bg) < 2 * views:
                    bg.append(_pixel_samples(cloud, normals, cloud.labels == LABEL_RACK,
                                             background // views, rng, window, shape_radius))
    bank = {k: np.vstack(v) for k, v in samples.items() if v}
    if bg:
        bank[BACKGROUND] = np.vstack(bg)
    return FeatureBank(bank)


def train_item_forest(bank: FeatureBank, item_id: str, tree_count: int = 100,
                      max_depth: int = 30, seed: int = 0, max_negatives: int | None = 2000,
                      workers: int = 1) -> RandomForest:
    rng = np.random.default_rng(derive_seed(seed, "negatives", item_id))
    pos, neg = bank.split(item_id, max_negatives, rng)
    return train_forest(pos, neg, tree_count, max_depth, derive_seed(seed, "forest", item_id),
                        workers=workers)
