"""Small rigid-body and box-geometry helpers shared by the other modules.

Poses are plain 4x4 homogeneous ``numpy`` arrays, rotations 3x3 arrays.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def rot_x(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def rpy_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Fixed-axis roll/pitch/yaw, i.e. ``Rz(yaw) @ Ry(pitch) @ Rx(roll)``."""
    return rot_z(yaw) @ rot_y(pitch) @ rot_x(roll)


def make_transform(rotation=None, translation=None) -> np.ndarray:
    T = np.eye(4)
    if rotation is not None:
        T[:3, :3] = rotation
    if translation is not None:
        T[:3, 3] = translation
    return T


def invert_transform(T: np.ndarray) -> np.ndarray:
    R = T[:3, :3]
    out = np.eye(4)
    out[:3, :3] = R.T
    out[:3, 3] = -R.T @ T[:3, 3]
    return out


def transform_points(T: np.ndarray, points: np.ndarray) -> np.ndarray:
    points = np.asarray(points, dtype=float)
    return points @ T[:3, :3].T + T[:3, 3]


def is_rotation(R: np.ndarray, tol: float = 1e-9) -> bool:
    R = np.asarray(R, dtype=float)
    return (
        R.shape == (3, 3)
        and np.allclose(R.T @ R, np.eye(3), atol=tol, rtol=0)
        and abs(np.linalg.det(R) - 1.0) <= tol
    )


def pose_from_json(value) -> np.ndarray:
    """Accept a 4x4 nested list or ``{"position": [...], "rpy": [...]}``."""
    if isinstance(value, dict):
        rpy = value.get("rpy", (0.0, 0.0, 0.0))
        return make_transform(rpy_matrix(*rpy), value.get("position", (0.0, 0.0, 0.0)))
    T = np.asarray(value, dtype=float)
    if T.shape != (4, 4):
        raise ValueError(f"pose must be 4x4, got shape {T.shape}")
    return T


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by its min and max corners (m)."""

    lo: tuple[float, float, float]
    hi: tuple[float, float, float]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if any(h <= l for l, h in zip(lo, hi)):
            raise ValueError(f"box must have positive extents: lo={lo} hi={hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def from_center(cls, center, size) -> "Box":
        c = np.asarray(center, dtype=float)
        h = np.asarray(size, dtype=float) / 2.0
        return cls(tuple(c - h), tuple(c + h))

    @property
    def center(self) -> np.ndarray:
        return (np.array(self.lo) + np.array(self.hi)) / 2.0

    @property
    def size(self) -> np.ndarray:
        return np.array(self.hi) - np.array(self.lo)

    def inflated(self, margin: float) -> "Box":
        return Box(tuple(np.array(self.lo) - margin), tuple(np.array(self.hi) + margin))

    def contains(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all((p >= self.lo) & (p <= self.hi), axis=1)

    def to_json(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}

    @classmethod
    def from_json(cls, d: dict) -> "Box":
        return cls(tuple(d["lo"]), tuple(d["hi"]))


def boxes_to_arrays(boxes) -> tuple[np.ndarray, np.ndarray]:
    if len(boxes) == 0:
        return np.zeros((0, 3)), np.zeros((0, 3))
    lo = np.array([b.lo for b in boxes], dtype=float)
    hi = np.array([b.hi for b in boxes], dtype=float)
    return lo, hi


def point_box_distance(points, lo, hi) -> np.ndarray:
    """Euclidean distance from each point to each box (0 inside).

    ``points`` is (P, 3), ``lo``/``hi`` are (M, 3); returns (P, M).
    """
    p = np.atleast_2d(points)[:, None, :]
    excess = np.maximum(np.maximum(lo[None] - p, p - hi[None]), 0.0)
    return np.sqrt(np.sum(excess**2, axis=-1))


def segment_box_distance(a, b, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Exact distance from segment ``a``-``b`` to each of M boxes.

    The squared distance from ``a + t(b - a)`` to a box is piecewise quadratic
    in t, with breakpoints where a coordinate crosses a box face plane. Each
    piece is minimised in closed form, so no sampling is involved.
    """
    a = np.asarray(a, dtype=float)
    d = np.asarray(b, dtype=float) - a
    lo = np.atleast_2d(lo)
    hi = np.atleast_2d(hi)
    m = lo.shape[0]
    if m == 0:
        return np.zeros(0)

    with np.errstate(divide="ignore", invalid="ignore"):
        t_lo = np.where(d != 0.0, (lo - a) / d, 0.0)
        t_hi = np.where(d != 0.0, (hi - a) / d, 0.0)
    knots = np.concatenate(
        [np.zeros((m, 1)), np.clip(t_lo, 0.0, 1.0), np.clip(t_hi, 0.0, 1.0), np.ones((m, 1))],
        axis=1,
    )
    knots.sort(axis=1)
    t0 = knots[:, :-1]
    t1 = knots[:, 1:]
    mid = 0.5 * (t0 + t1)

    # per-axis residual e = alpha + beta * t on each piece (zero when inside the slab)
    p_mid = a[None, None, :] + mid[..., None] * d[None, None, :]
    below = p_mid < lo[:, None, :]
    above = p_mid > hi[:, None, :]
    alpha = np.where(below, lo[:, None, :] - a, np.where(above, a - hi[:, None, :], 0.0))
    beta = np.where(below, -d, np.where(above, d, 0.0))

    qa = np.sum(beta * beta, axis=-1)
    qb = 2.0 * np.sum(alpha * beta, axis=-1)
    qc = np.sum(alpha * alpha, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_star = np.where(qa > 0.0, -qb / (2.0 * qa), t0)
    t_star = np.clip(t_star, t0, t1)
    f = qa * t_star**2 + qb * t_star + qc
    return np.sqrt(np.maximum(f.min(axis=1), 0.0))
