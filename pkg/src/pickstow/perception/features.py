"""37-d shape/colour descriptor: 15-bin normal-angle histogram, 16-bin hue
histogram and 6-bin grey-level histogram, each L1-normalised.

The shape block histograms the angle between the normals of every pair of
region points closer than ``shape_radius`` (angle of unoriented normals,
so it lies in [0, pi/2]). Hue is only defined for chromatic points
(chroma above ``CHROMA_MIN``); achromatic points are left out of that block.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from ..errors import EmptyRegionError
from .normals import has_normal
from .scene import PointCloud

SHAPE_BINS, HUE_BINS, GRAY_BINS = 15, 16, 6
N_FEATURES = SHAPE_BINS + HUE_BINS + GRAY_BINS
SHAPE_SLICE = slice(0, SHAPE_BINS)
HUE_SLICE = slice(SHAPE_BINS, SHAPE_BINS + HUE_BINS)
GRAY_SLICE = slice(SHAPE_BINS + HUE_BINS, N_FEATURES)
CHROMA_MIN = 0.05
DEFAULT_SHAPE_RADIUS = 0.02


def hue_chroma(colors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """HSV hue in [0, 1) via the max/min construction, plus chroma."""
    c = np.asarray(colors, dtype=float).reshape(-1, 3)
    r, g, b = c[:, 0], c[:, 1], c[:, 2]
    mx = c.max(axis=1)
    mn = c.min(axis=1)
    chroma = mx - mn
    safe = np.where(chroma > 0, chroma, 1.0)
    h = np.where(mx == r, ((g - b) / safe) % 6.0,
                 np.where(mx == g, (b - r) / safe + 2.0, (r - g) / safe + 4.0))
    h = np.where(chroma > 0, h / 6.0, 0.0)
    return h % 1.0, chroma


def gray_level(colors: np.ndarray) -> np.ndarray:
    c = np.asarray(colors, dtype=float).reshape(-1, 3)
    return 0.299 * c[:, 0] + 0.587 * c[:, 1] + 0.114 * c[:, 2]


def _bin(values: np.ndarray, lo: float, hi: float, n: int) -> np.ndarray:
    b = np.floor((values - lo) / (hi - lo) * n).astype(int)
    return np.clip(b, 0, n - 1)


def _normalise(counts: np.ndarray) -> np.ndarray:
    total = counts.sum(axis=-1, keepdims=True)
    return np.divide(counts, total, out=np.zeros_like(counts, dtype=float), where=total > 0)


def pair_angles(n_a: np.ndarray, n_b: np.ndarray) -> np.ndarray:
    dots = np.abs(np.sum(n_a * n_b, axis=-1))
    return np.arccos(np.clip(dots, 0.0, 1.0))


def color_blocks(colors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    hue, chroma = hue_chroma(colors)
    chromatic = chroma > CHROMA_MIN
    hue_counts = np.bincount(_bin(hue[chromatic], 0.0, 1.0, HUE_BINS), minlength=HUE_BINS)
    gray_counts = np.bincount(_bin(gray_level(colors), 0.0, 1.0, GRAY_BINS), minlength=GRAY_BINS)
    return _normalise(hue_counts.astype(float)), _normalise(gray_counts.astype(float))


def extract_features(cloud: PointCloud, normals: np.ndarray, region,
                     shape_radius: float = DEFAULT_SHAPE_RADIUS) -> np.ndarray:
    """Descriptor of the points in ``region`` (flat point indices or a mask)."""
    region = np.asarray(region)
    region = np.flatnonzero(region) if region.dtype == bool else region.astype(int)
    region = np.unique(region)
    region = region[cloud.valid[region]]
    if region.size == 0:
        raise EmptyRegionError("feature region has no valid points")

    out = np.zeros(N_FEATURES)
    with_n = region[has_normal(normals[region])]
    if with_n.size >= 2:
        pairs = cKDTree(cloud.points[with_n]).query_pairs(shape_radius, output_type="ndarray")
        if len(pairs):
            ang = pair_angles(normals[with_n[pairs[:, 0]]], normals[with_n[pairs[:, 1]]])
            counts = np.bincount(_bin(ang, 0.0, np.pi / 2, SHAPE_BINS), minlength=SHAPE_BINS)
            out[SHAPE_SLICE] = _normalise(counts.astype(float))
    out[HUE_SLICE], out[GRAY_SLICE] = color_blocks(cloud.colors[region])
    return out


def window_indices(width: int, height: int, pixels: np.ndarray, window: int):
    """Flat indices of the ``window`` x ``window`` patch around each (u, v)
    pixel, with a mask for positions falling outside the image."""
    r = window // 2
    du, dv = np.meshgrid(np.arange(-r, r + 1), np.arange(-r, r + 1))
    u = pixels[:, 0:1] + du.ravel()[None]
    v = pixels[:, 1:2] + dv.ravel()[None]
    inside = (u >= 0) & (u < width) & (v >= 0) & (v < height)
    idx = np.where(inside, v * width + u, 0)
    return idx, inside


def window_features(cloud: PointCloud, normals: np.ndarray, pixels, window: int = 7,
                    shape_radius: float = DEFAULT_SHAPE_RADIUS, chunk: int = 512) -> np.ndarray:
    """Local descriptor for each (u, v) pixel from its organised neighbourhood.

    Equivalent to ``extract_features`` on each window, but vectorised.
    Windows with no valid point yield an all-zero row.
    """
    pixels = np.asarray(pixels, dtype=int).reshape(-1, 2)
    w, h = cloud.organized_shape
    out = np.zeros((len(pixels), N_FEATURES))
    valid_pt = cloud.valid
    normal_ok = has_normal(normals)
    hue, chroma = hue_chroma(cloud.colors)
    hue_bin = _bin(hue, 0.0, 1.0, HUE_BINS)
    gray_bin = _bin(gray_level(cloud.colors), 0.0, 1.0, GRAY_BINS)
    chromatic = chroma > CHROMA_MIN

    for start in range(0, len(pixels), chunk):
        px = pixels[start:start + chunk]
        idx, inside = window_indices(w, h, px, window)
        m = inside & valid_pt[idx]
        rows = np.arange(len(px))[:, None]
        p = len(px)

        hue_counts = np.zeros((p, HUE_BINS))
        np.add.at(hue_counts, (np.broadcast_to(rows, idx.shape)[m & chromatic[idx]],
                               hue_bin[idx][m & chromatic[idx]]), 1.0)
        gray_counts = np.zeros((p, GRAY_BINS))
        np.add.at(gray_counts, (np.broadcast_to(rows, idx.shape)[m], gray_bin[idx][m]), 1.0)

        mn = m & normal_ok[idx]
        P = np.where(mn[..., None], cloud.points[idx], 0.0)
        N = normals[idx]
        d2 = np.sum((P[:, :, None, :] - P[:, None, :, :]) ** 2, axis=-1)
        ang = pair_angles(N[:, :, None, :], N[:, None, :, :])
        k = idx.shape[1]
        upper = np.triu(np.ones((k, k), dtype=bool), 1)
        pm = mn[:, :, None] & mn[:, None, :] & upper[None] & (d2 <= shape_radius**2)
        shape_counts = np.zeros((p, SHAPE_BINS))
        prow = np.broadcast_to(rows[:, :, None], pm.shape)[pm]
        np.add.at(shape_counts, (prow, _bin(ang[pm], 0.0, np.pi / 2, SHAPE_BINS)), 1.0)

        out[start:start + p, SHAPE_SLICE] = _normalise(shape_counts)
        out[start:start + p, HUE_SLICE] = _normalise(hue_counts)
        out[start:start + p, GRAY_SLICE] = _normalise(gray_counts)
    return out
