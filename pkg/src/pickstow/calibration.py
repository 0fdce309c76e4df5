"""Camera-to-robot rigid transform from paired 3D points (SVD least squares)."""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import DegenerateGeometryError
from .geometry import make_transform


@dataclass(frozen=True, eq=False)
class PointPairSet:
    camera_points: np.ndarray
    robot_points: np.ndarray

    def __post_init__(self):
        cam = np.array(self.camera_points, dtype=float).reshape(-1, 3)
        rob = np.array(self.robot_points, dtype=float).reshape(-1, 3)
        if cam.shape != rob.shape:
            raise ValueError(f"point sets differ in size: {cam.shape} vs {rob.shape}")
        if cam.shape[0] < 3:
            raise ValueError("need at least 3 point pairs")
        if not (np.all(np.isfinite(cam)) and np.all(np.isfinite(rob))):
            raise ValueError("points must be finite")
        object.__setattr__(self, "camera_points", cam)
        object.__setattr__(self, "robot_points", rob)

    def __len__(self):
        return self.camera_points.shape[0]

    @classmethod
    def from_json(cls, text: str) -> "PointPairSet":
        doc = json.loads(text)
        return cls(doc["camera"], doc["robot"])

    @classmethod
    def load(cls, path) -> "PointPairSet":
        return cls.from_json(Path(path).read_text())

    def to_json(self) -> str:
        return json.dumps({"camera": self.camera_points.tolist(),
                           "robot": self.robot_points.tolist()})


@dataclass(frozen=True, eq=False)
class CalibrationResult:
    transform: np.ndarray
    rms_error: float
    per_point_residuals: np.ndarray

    @property
    def rotation(self) -> np.ndarray:
        return self.transform[:3, :3]

    @property
    def translation(self) -> np.ndarray:
        return self.transform[:3, 3]


def estimate_rigid_transform(pairs: PointPairSet) -> CalibrationResult:
    """Least-squares ``R, t`` with ``robot ~= R @ camera + t``.

    Raises DegenerateGeometryError when the camera points are (nearly)
    collinear or coincident, i.e. the two largest singular values of the
    cross-covariance fall below 1e-12.
    """
    P_k = pairs.camera_points
    P_b = pairs.robot_points
    c_k = P_k.mean(axis=0)
    c_b = P_b.mean(axis=0)
    C = (P_k - c_k).T @ (P_b - c_b)
    U, S, Vt = np.linalg.svd(C)
    if S[1] < 1e-12:
        raise DegenerateGeometryError(
            f"cross-covariance singular values {S} too small; points collinear or coincident"
        )
    V = Vt.T
    R = V @ U.T
    if np.linalg.det(R) < 0:
        # reflection: flip the axis of least spread
        V[:, -1] *= -1.0
        R = V @ U.T
    t = -R @ c_k + c_b
    residuals = np.linalg.norm(P_b - (P_k @ R.T + t), axis=1)
    rms = float(np.sqrt(np.mean(residuals**2)))
    return CalibrationResult(make_transform(R, t), rms, residuals)


def apply_calibration(result: CalibrationResult, camera_point) -> np.ndarray:
    p = np.asarray(camera_point, dtype=float)
    return p @ result.rotation.T + result.translation


@dataclass(frozen=True)
class NoiseModel:
    """Synthetic calibration data: camera points uniform in a cube, robot
    points related by a random proper rigid motion plus Gaussian noise."""

    sigma: float = 0.005
    extent: float = 0.5
    max_translation: float = 1.0

    def sample(self, n: int, rng: np.random.Generator):
        cam = rng.uniform(-self.extent / 2, self.extent / 2, size=(n, 3))
        R = Rotation.random(random_state=rng).as_matrix()
        t = rng.uniform(-self.max_translation, self.max_translation, size=3)
        rob = cam @ R.T + t + rng.normal(0.0, self.sigma, size=(n, 3))
        return PointPairSet(cam, rob), R, t


def rms_vs_sample_size(generator: NoiseModel, sizes: Sequence[int], trials: int = 100,
                       seed: int = 0, workers: int = 1,
                       metric: Literal["truth", "residual"] = "truth") -> list[tuple[int, float]]:
    """Mean RMS over Monte-Carlo trials for each sample size.

    ``truth`` measures the fitted transform against the noise-free mapping
    of the sampled camera points; it falls roughly as sigma*sqrt(6/N).
    ``residual`` is the fit's own RMS, which instead rises towards
    sigma*sqrt(3) because small samples absorb part of the noise.

    Every (size, trial) owns a child seed of ``seed``, so results do not
    depend on ``workers``.
    """
    if any(n < 3 for n in sizes):
        raise ValueError("sample sizes must be >= 3")
    if metric not in ("truth", "residual"):
        raise ValueError(f"unknown metric {metric!r}")
    root = np.random.SeedSequence(seed)
    children = root.spawn(len(sizes))

    def run(idx_n):
        idx, n = idx_n
        rms = []
        for child in children[idx].spawn(trials):
            pairs, R, t = generator.sample(n, np.random.default_rng(child))
            fit = estimate_rigid_transform(pairs)
            if metric == "residual":
                rms.append(fit.rms_error)
                continue
            truth = pairs.camera_points @ R.T + t
            err = apply_calibration(fit, pairs.camera_points) - truth
            rms.append(float(np.sqrt(np.mean(np.sum(err ** 2, axis=1)))))
        return int(n), float(np.mean(rms))

    items = list(enumerate(sizes))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(run, items))
    return [run(it) for it in items]


def write_sweep_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N", "mean_rms_m"])
        for n, rms in rows:
            w.writerow([n, f"{rms:.9g}"])


def subset_sweep(pairs: PointPairSet, sizes: Sequence[int], trials: int = 100,
                 seed: int = 0) -> list[tuple[int, float]]:
    """Mean RMS over all of ``pairs`` when fitting on random N-subsets."""
    rng = np.random.default_rng(seed)
    rows = []
    for n in sizes:
        if not 3 <= n <= len(pairs):
            raise ValueError(f"subset size {n} outside [3, {len(pairs)}]")
        rms = []
        for _ in range(trials):
            idx = rng.choice(len(pairs), n, replace=False)
            fit = estimate_rigid_transform(
                PointPairSet(pairs.camera_points[idx], pairs.robot_points[idx]))
            resid = pairs.robot_points - apply_calibration(fit, pairs.camera_points)
            rms.append(float(np.sqrt(np.mean(np.sum(resid ** 2, axis=1)))))
        rows.append((int(n), float(np.mean(rms))))
    return rows
