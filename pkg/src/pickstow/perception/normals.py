from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .scene import PointCloud


def estimate_normals(cloud: PointCloud, k: int = 12, max_radius: float = 0.03) -> np.ndarray:
    """Per-point PCA normals over the k nearest neighbours.

    Neighbours farther than ``max_radius`` are ignored; points left with
    fewer than 3 neighbours (and invalid pixels) get a zero normal, which
    downstream code treats as "no normal". Normals face the viewpoint.
    """
    if k < 3:
        raise ValueError("k must be >= 3")
    n_pts = len(cloud)
    normals = np.zeros((n_pts, 3))
    valid = np.flatnonzero(cloud.valid)
    if valid.size < 3:
        return normals
    pts = cloud.points[valid]
    kk = min(k, valid.size)
    dist, idx = cKDTree(pts).query(pts, k=kk)
    dist = dist.reshape(len(pts), kk)
    idx = idx.reshape(len(pts), kk)
    mask = dist <= max_radius
    count = mask.sum(axis=1)

    nb = pts[idx]  # (P, k, 3)
    w = mask[..., None].astype(float)
    mean = (nb * w).sum(axis=1) / np.maximum(count, 1)[:, None]
    centred = (nb - mean[:, None, :]) * w
    cov = np.einsum("pki,pkj->pij", centred, centred)
    _, vecs = np.linalg.eigh(cov)
    n = vecs[:, :, 0]

    to_view = cloud.viewpoint - pts
    flip = np.sum(n * to_view, axis=1) < 0
    n[flip] *= -1.0
    n[count < 3] = 0.0
    normals[valid] = n
    return normals


def has_normal(normals: np.ndarray) -> np.ndarray:
    return np.any(normals != 0.0, axis=1)
