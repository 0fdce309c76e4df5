"""Verification stage of object recognition: detector stub, per-pixel forest
scoring, adaptive mean shift and suction-point extraction."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

from ..errors import InvalidDepthError, ItemNotFoundError, NoEvidenceError
from .features import window_features
from .forest import RandomForest
from .normals import estimate_normals, has_normal
from .scene import PointCloud, SceneObject

THRESHOLD = 0.5


@dataclass(frozen=True)
class Detection:
    item_id: str
    box: tuple[float, float, float, float]  # u0, v0, u1, v1 (inclusive pixel coords)
    score: float

    @property
    def area(self) -> float:
        u0, v0, u1, v1 = self.box
        return max(u1 - u0, 0.0) * max(v1 - v0, 0.0)

    def pixels(self, width: int, height: int) -> np.ndarray:
        """(u, v) of every pixel whose centre lies inside the box."""
        u0, v0, u1, v1 = self.box
        us = np.arange(max(int(np.ceil(u0)), 0), min(int(np.floor(u1)), width - 1) + 1)
        vs = np.arange(max(int(np.ceil(v0)), 0), min(int(np.floor(v1)), height - 1) + 1)
        uu, vv = np.meshgrid(us, vs)
        return np.column_stack([uu.ravel(), vv.ravel()])


@dataclass(frozen=True, eq=False)
class ProbabilityMap:
    values: np.ndarray    # (H, W) in [0, 1]; zero outside the ROI
    flagged: np.ndarray   # (H, W) ROI pixels that could not be scored
    roi: Detection


@dataclass(frozen=True)
class SuctionTarget:
    point: np.ndarray
    normal: np.ndarray
    centroid: np.ndarray
    confidence: float
    pixel: tuple[int, int] = (-1, -1)

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        norm = np.linalg.norm(n)
        if norm == 0:
            raise ValueError("suction normal must be non-zero")
        object.__setattr__(self, "normal", n / norm)
        object.__setattr__(self, "point", np.asarray(self.point, dtype=float))
        object.__setattr__(self, "centroid", np.asarray(self.centroid, dtype=float))


def silhouette_box(cloud: PointCloud, label: int):
    mask = cloud.image(cloud.labels) == label
    if not mask.any():
        return None
    vs, us = np.nonzero(mask)
    return float(us.min()), float(vs.min()), float(us.max()), float(vs.max())


def detect_stub(cloud: PointCloud, objects: Sequence[SceneObject], query_item: str,
                inflation: float = 0.0, jitter: float = 0.0,
                rng: np.random.Generator | None = None,
                score_range: tuple[float, float] = (0.7, 1.0)) -> Detection:
    """Stand-in for the deep detector: the ground-truth silhouette box of the
    most visible instance, grown by ``inflation`` of its size on each side,
    corners jittered by up to ``jitter`` px and clipped to the image."""
    rng = rng if rng is not None else np.random.default_rng(0)
    instances = [k for k, o in enumerate(objects) if o.id == query_item]
    if not instances:
        raise ItemNotFoundError(f"{query_item!r} is not in the scene")
    counts = [int(np.sum(cloud.labels == k)) for k in instances]
    if max(counts) == 0:
        raise ItemNotFoundError(f"{query_item!r} is fully occluded")
    label = instances[int(np.argmax(counts))]
    u0, v0, u1, v1 = silhouette_box(cloud, label)
    du, dv = inflation * (u1 - u0), inflation * (v1 - v0)
    box = np.array([u0 - du, v0 - dv, u1 + du, v1 + dv])
    if jitter > 0:
        box = box + rng.uniform(-jitter, jitter, size=4)
    w, h = cloud.organized_shape
    box = np.clip(box, 0, [w - 1, h - 1, w - 1, h - 1])
    box[2] = max(box[2], box[0])
    box[3] = max(box[3], box[1])
    score = float(rng.uniform(*score_range))
    return Detection(query_item, tuple(float(b) for b in box), score)


def classify_pixels(forest: RandomForest, cloud: PointCloud, normals: np.ndarray,
                    roi: Detection, window: int = 7,
                    shape_radius: float = 0.02) -> ProbabilityMap:
    w, h = cloud.organized_shape
    probs = np.zeros((h, w))
    flagged = np.zeros((h, w), dtype=bool)
    px = roi.pixels(w, h)
    if len(px) == 0:
        return ProbabilityMap(probs, flagged, roi)
    flat = px[:, 1] * w + px[:, 0]
    ok = cloud.valid[flat] & has_normal(normals[flat])
    flagged[px[~ok, 1], px[~ok, 0]] = True
    if ok.any():
        feats = window_features(cloud, normals, px[ok], window, shape_radius)
        probs[px[ok, 1], px[ok, 0]] = forest.predict_proba(feats)
    return ProbabilityMap(probs, flagged, roi)


@dataclass(frozen=True)
class MeanShiftResult:
    pixel: tuple[int, int]        # (u, v) snapped onto the supporting pixels
    position: tuple[float, float]  # converged continuous location
    confidence: float
    iterations: int


def mean_shift_mode(probability_map, bandwidth: float = 20.0, adaptivity: float = 0.9,
                    min_bandwidth: float = 5.0, start=None, max_iterations: int = 200,
                    threshold: float = THRESHOLD) -> MeanShiftResult:
    """Probability-weighted flat-kernel mean shift over pixels above threshold.

    The bandwidth shrinks geometrically by ``adaptivity`` each iteration down
    to ``min_bandwidth``; iteration stops once the bandwidth is at its floor
    and the shift drops below half a pixel. The default start is the
    weighted mean of the supporting pixels.
    """
    P = probability_map.values if isinstance(probability_map, ProbabilityMap) else probability_map
    P = np.asarray(P, dtype=float)
    vs, us = np.nonzero(P > threshold)
    if us.size == 0:
        raise NoEvidenceError(f"no pixel has probability above {threshold}")
    coords = np.column_stack([us, vs]).astype(float)
    weights = P[vs, us]

    x = np.average(coords, axis=0, weights=weights) if start is None else np.asarray(start, float)
    h = max(float(bandwidth), min_bandwidth)
    it = 0
    for it in range(1, max_iterations + 1):
        d2 = np.sum((coords - x) ** 2, axis=1)
        inside = d2 <= h * h
        if not inside.any():
            # kernel fell off the support: jump to the nearest supporting pixel
            x_new = coords[np.argmin(d2)]
        else:
            x_new = np.average(coords[inside], axis=0, weights=weights[inside])
        shift = np.linalg.norm(x_new - x)
        x = x_new
        at_floor = h <= min_bandwidth
        h = max(h * adaptivity, min_bandwidth)
        if at_floor and shift < 0.5:
            break

    nearest = int(np.argmin(np.sum((coords - x) ** 2, axis=1)))
    pixel = (int(coords[nearest, 0]), int(coords[nearest, 1]))
    inside = np.sum((coords - x) ** 2, axis=1) <= h * h
    conf = float(weights[inside].mean()) if inside.any() else float(weights[nearest])
    return MeanShiftResult(pixel, (float(x[0]), float(x[1])), conf, it)


def support_region(probability_map, pixel, threshold: float = THRESHOLD) -> np.ndarray:
    """Flat indices of the connected above-threshold region containing ``pixel``."""
    P = probability_map.values if isinstance(probability_map, ProbabilityMap) else probability_map
    labels, _ = ndimage.label(np.asarray(P) > threshold)
    u, v = pixel
    lab = labels[v, u]
    if lab == 0:
        return np.zeros(0, dtype=int)
    return np.flatnonzero((labels == lab).ravel())


def suction_target(cloud: PointCloud, normals: np.ndarray, mode_pixel, region,
                   confidence: float = 1.0, patch_radius: float | None = None) -> SuctionTarget:
    """3D point and normal at the mode pixel plus the region centroid.

    With ``patch_radius`` the normal is refit as the PCA plane of the region
    points within that radius (the cup footprint) and the point is projected
    onto that plane, which averages out per-pixel depth noise.
    """
    u, v = mode_pixel
    i = cloud.pixel_index(u, v)
    if not cloud.valid[i]:
        raise InvalidDepthError(f"no depth at pixel {(u, v)}")
    if not has_normal(normals[i:i + 1])[0]:
        raise InvalidDepthError(f"no surface normal at pixel {(u, v)}")
    region = np.asarray(region)
    region = np.flatnonzero(region) if region.dtype == bool else region.astype(int)
    region = region[cloud.valid[region]]
    centroid = cloud.points[region].mean(axis=0) if region.size else cloud.points[i]
    point, normal = cloud.points[i].copy(), normals[i].copy()
    if patch_radius is not None and region.size:
        point, normal = _patch_plane(cloud.points[region], point, normal, patch_radius)
    return SuctionTarget(point, normal, centroid, confidence, (int(u), int(v)))


def _patch_plane(points: np.ndarray, point: np.ndarray, normal: np.ndarray, radius: float):
    patch = points[np.sum((points - point) ** 2, axis=1) <= radius * radius]
    if len(patch) < 5:
        return point, normal
    center = patch.mean(axis=0)
    _, _, vt = np.linalg.svd(patch - center, full_matrices=False)
    n = vt[2]
    if n @ normal < 0:
        n = -n
    return point - ((point - center) @ n) * n, n


@dataclass(frozen=True)
class PerceptionSettings:
    normal_k: int = 12
    normal_radius: float = 0.03
    window: int = 7
    shape_radius: float = 0.02
    inflation: float = 0.25
    jitter_px: float = 2.0
    bandwidth_px: float = 20.0
    adaptivity: float = 0.9
    min_bandwidth_px: float = 5.0
    suction_patch_radius: float | None = 0.015

    @classmethod
    def from_dict(cls, doc: dict) -> "PerceptionSettings":
        return cls(**doc)


@dataclass(frozen=True, eq=False)
class PerceptionResult:
    detection: Detection
    probability: ProbabilityMap
    target: SuctionTarget
    support: np.ndarray  # flat pixel indices of the segmented object
    normals: np.ndarray


def locate_suction_target(cloud: PointCloud, objects: Sequence[SceneObject], item_id: str,
                          forest: RandomForest,
                          settings: PerceptionSettings = PerceptionSettings(),
                          rng: np.random.Generator | None = None,
                          normals: np.ndarray | None = None) -> PerceptionResult:
    """Detector stub -> forest -> mean shift -> suction point, for one item."""
    rng = rng if rng is not None else np.random.default_rng(0)
    det = detect_stub(cloud, objects, item_id, settings.inflation, settings.jitter_px, rng)
    if normals is None:
        normals = estimate_normals(cloud, settings.normal_k, settings.normal_radius)
    pmap = classify_pixels(forest, cloud, normals, det, settings.window, settings.shape_radius)
    ms = mean_shift_mode(pmap, settings.bandwidth_px, settings.adaptivity,
                         settings.min_bandwidth_px)
    region = support_region(pmap, ms.pixel)
    target = suction_target(cloud, normals, ms.pixel, region, ms.confidence,
                            settings.suction_patch_radius)
    return PerceptionResult(det, pmap, target, region, normals)
