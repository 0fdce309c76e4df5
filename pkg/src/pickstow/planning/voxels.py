"""Occupancy voxels built from point clouds."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from ..geometry import Box


@dataclass(frozen=True, eq=False)
class VoxelGrid:
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))
    voxel_size: float = 0.01
    occupied: frozenset = frozenset()

    def __post_init__(self):
        if not self.voxel_size > 0:
            raise ValueError("voxel_size must be positive")
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float).reshape(3))
        object.__setattr__(self, "occupied", frozenset(tuple(int(v) for v in k)
                                                       for k in self.occupied))

    def __len__(self) -> int:
        return len(self.occupied)

    def indices(self) -> np.ndarray:
        if not self.occupied:
            return np.zeros((0, 3), dtype=int)
        return np.array(sorted(self.occupied), dtype=int)

    def box_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(lo, hi) corner arrays of every occupied voxel, in sorted index order."""
        lo = self.origin + self.indices() * self.voxel_size
        return lo, lo + self.voxel_size

    def union(self, other: "VoxelGrid") -> "VoxelGrid":
        if other.voxel_size != self.voxel_size or not np.array_equal(other.origin, self.origin):
            raise ValueError("voxel grids must share origin and size")
        return VoxelGrid(self.origin, self.voxel_size, self.occupied | other.occupied)

    def to_dict(self) -> dict:
        return {"origin": self.origin.tolist(), "voxel_size": self.voxel_size,
                "occupied": self.indices().tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "VoxelGrid":
        return cls(np.array(doc["origin"], dtype=float), float(doc["voxel_size"]),
                   frozenset(map(tuple, doc["occupied"])))


def voxelize(points, voxel_size: float = 0.01, exclusion_regions: Iterable[Box] = (),
             origin=(0.0, 0.0, 0.0)) -> VoxelGrid:
    """Floor-quantise points to voxel indices, skipping points inside any
    exclusion box. ``points`` may be a PointCloud (invalid pixels ignored)
    or an (N, 3) array."""
    if not voxel_size > 0:
        raise ValueError("voxel_size must be positive")
    pts = getattr(points, "points", points)
    pts = np.asarray(pts, dtype=float).reshape(-1, 3)
    pts = pts[np.all(np.isfinite(pts), axis=1)]
    keep = np.ones(len(pts), dtype=bool)
    for box in exclusion_regions:
        keep &= ~box.contains(pts)
    origin = np.asarray(origin, dtype=float)
    idx = np.floor((pts[keep] - origin) / voxel_size).astype(int)
    occupied = frozenset(map(tuple, np.unique(idx, axis=0).tolist())) if len(idx) else frozenset()
    return VoxelGrid(origin, voxel_size, occupied)
