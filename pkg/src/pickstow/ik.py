"""Differential inverse kinematics: pseudo-inverse, null-space joint-limit
avoidance, closed-loop (CLIK) integration and damped least squares.

All solvers share one iteration loop and differ only in the joint update.
Orientation error is the rotation vector of ``R_desired @ R_current.T``,
expressed in the base frame so that it pairs with the angular rows of the
geometric Jacobian.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from typing import Callable, Literal, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import SingularityError
from .kinematics import RobotModel, forward_kinematics, geometric_jacobian

PinvMode = Literal["least_square", "minimum_norm", "auto"]

_COND_LIMIT = 1e12
_SVD_RTOL = 1e-8


@dataclass(frozen=True)
class IKSettings:
    max_iterations: int = 200
    position_tolerance: float = 1e-4
    orientation_tolerance: float = 1e-3
    step_scale: float = 0.5
    k0: float = 0.0
    kp_gain: np.ndarray = field(default_factory=lambda: np.ones(6))
    lam: float = 0.05
    position_only: bool = False
    # null-space solver keeps iterating until its self-motion step is this small
    nullspace_tolerance: float = 1e-6

    def __post_init__(self):
        kp = np.array(self.kp_gain, dtype=float)
        if kp.ndim == 2:
            kp = np.diag(kp)
        kp = np.broadcast_to(kp, (6,)).copy()
        kp.setflags(write=False)
        object.__setattr__(self, "kp_gain", kp)
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.position_tolerance <= 0 or self.orientation_tolerance <= 0:
            raise ValueError("tolerances must be positive")
        if self.lam < 0 or self.k0 < 0:
            raise ValueError("lambda and k0 must be non-negative")
        if np.any(kp <= 0):
            raise ValueError("kp_gain diagonal must be positive")

    @classmethod
    def from_dict(cls, doc: dict) -> "IKSettings":
        doc = dict(doc)
        if "lambda" in doc:
            doc["lam"] = doc.pop("lambda")
        return cls(**doc)


@dataclass(frozen=True)
class PoseError:
    linear: np.ndarray
    angular: np.ndarray

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.linear, self.angular])

    @property
    def position_norm(self) -> float:
        return float(np.linalg.norm(self.linear))

    @property
    def orientation_norm(self) -> float:
        return float(np.linalg.norm(self.angular))


@dataclass(frozen=True)
class IKResult:
    q: np.ndarray
    converged: bool
    iterations: int
    final_position_error: float
    final_orientation_error: float
    trajectory: tuple[np.ndarray, ...]

    def to_csv(self, model: RobotModel, desired: np.ndarray) -> str:
        """One row per trajectory sample: index, six angles, both error norms."""
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["iteration", "q1", "q2", "q3", "q4", "q5", "q6",
                    "position_error_m", "orientation_error_rad"])
        for i, q in enumerate(self.trajectory):
            e = pose_error(forward_kinematics(model, q), desired)
            w.writerow([i, *(f"{v:.10g}" for v in q),
                        f"{e.position_norm:.10g}", f"{e.orientation_norm:.10g}"])
        return buf.getvalue()


def pose_error(current: np.ndarray, desired: np.ndarray) -> PoseError:
    linear = desired[:3, 3] - current[:3, 3]
    R_err = desired[:3, :3] @ current[:3, :3].T
    angular = Rotation.from_matrix(R_err).as_rotvec()
    return PoseError(linear, angular)


def pseudoinverse(J: np.ndarray, mode: PinvMode = "auto") -> np.ndarray:
    J = np.asarray(J, dtype=float)
    if not np.all(np.isfinite(J)):
        raise ValueError("Jacobian must be finite")
    if mode == "least_square":
        G = J.T @ J
        if np.linalg.cond(G) > _COND_LIMIT:
            raise SingularityError("J^T J is singular; least-square inverse undefined")
        return np.linalg.solve(G, J.T)
    if mode == "minimum_norm":
        G = J @ J.T
        if np.linalg.cond(G) > _COND_LIMIT:
            raise SingularityError("J J^T is singular; minimum-norm inverse undefined")
        return J.T @ np.linalg.inv(G)
    if mode == "auto":
        U, s, Vt = np.linalg.svd(J, full_matrices=False)
        if s.size == 0 or s[0] == 0.0:
            return np.zeros(J.T.shape)
        keep = s > _SVD_RTOL * s[0]
        s_inv = np.zeros_like(s)
        s_inv[keep] = 1.0 / s[keep]
        return (Vt.T * s_inv) @ U.T
    raise ValueError(f"unknown pseudo-inverse mode {mode!r}")


def dls_step(J: np.ndarray, e: np.ndarray, lam: float) -> np.ndarray:
    """Minimiser of ``|J dq - e|^2 + lam^2 |dq|^2``."""
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    J = np.asarray(J, dtype=float)
    A = J @ J.T + lam**2 * np.eye(J.shape[0])
    if lam == 0 and np.linalg.cond(A) > _COND_LIMIT:
        raise SingularityError("J J^T is singular and no damping was given")
    return J.T @ np.linalg.solve(A, e)


def joint_limit_cost(model: RobotModel, q) -> float:
    """Mean squared distance from the joint-range midpoints, range-normalised."""
    q = np.asarray(q, dtype=float)
    mid = model.joint_limits.mean(axis=1)
    span = model.upper - model.lower
    return float(np.mean(((q - mid) / span) ** 2))


def joint_limit_gradient(model: RobotModel, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    mid = model.joint_limits.mean(axis=1)
    span = model.upper - model.lower
    return (2.0 / q.size) * (q - mid) / span**2


# -- shared iteration ---------------------------------------------------------

Update = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def _task(model: RobotModel, q, desired, settings: IKSettings):
    err = pose_error(forward_kinematics(model, q), desired)
    J = geometric_jacobian(model, q)
    if settings.position_only:
        return err, J[:3], err.linear
    return err, J, err.vector


def _satisfied(err: PoseError, settings: IKSettings) -> bool:
    if err.position_norm > settings.position_tolerance:
        return False
    return settings.position_only or err.orientation_norm <= settings.orientation_tolerance


def _final(model, q, desired, iterations, trajectory, settings) -> IKResult:
    T = forward_kinematics(model, q)
    pos_err = float(np.linalg.norm(T[:3, 3] - desired[:3, 3]))
    ori_err = float(np.linalg.norm(pose_error(T, desired).angular))
    ok = pos_err <= settings.position_tolerance and (
        settings.position_only or ori_err <= settings.orientation_tolerance
    )
    return IKResult(q, ok, iterations, pos_err, ori_err, tuple(trajectory))


def _iterate(model, desired, seed, settings: IKSettings, update: Update,
             extra_motion: Callable | None = None) -> IKResult:
    q = np.array(seed, dtype=float)
    trajectory = [q.copy()]
    it = 0
    while True:
        err, J, e = _task(model, q, desired, settings)
        done = _satisfied(err, settings)
        self_motion = None
        if extra_motion is not None:
            self_motion = extra_motion(J, q)
            done = done and np.linalg.norm(self_motion) < settings.nullspace_tolerance
        if done or it >= settings.max_iterations:
            break
        dq = settings.step_scale * update(J, e, q)
        if self_motion is not None:
            dq = dq + self_motion
        q = q + dq
        trajectory.append(q.copy())
        it += 1
    return _final(model, q, desired, it, trajectory, settings)


def solve_ik_pinv(model: RobotModel, desired: np.ndarray, seed,
                  settings: IKSettings = IKSettings()) -> IKResult:
    return _iterate(model, desired, seed, settings,
                    lambda J, e, q: pseudoinverse(J, "auto") @ e)


def solve_ik_nullspace(model: RobotModel, desired: np.ndarray, seed,
                       settings: IKSettings = IKSettings()) -> IKResult:
    """Pseudo-inverse IK plus a self-motion that descends the joint-limit cost.

    With ``k0 == 0`` this runs exactly the pseudo-inverse iteration.
    """
    if settings.k0 == 0:
        return solve_ik_pinv(model, desired, seed, settings)

    def self_motion(J, q):
        P = np.eye(J.shape[1]) - pseudoinverse(J, "auto") @ J
        return P @ (-settings.k0 * joint_limit_gradient(model, q))

    return _iterate(model, desired, seed, settings,
                    lambda J, e, q: pseudoinverse(J, "auto") @ e, self_motion)


def solve_ik_dls(model: RobotModel, desired: np.ndarray, seed,
                 settings: IKSettings = IKSettings()) -> IKResult:
    return _iterate(model, desired, seed, settings,
                    lambda J, e, q: dls_step(J, e, settings.lam))


def solve_ik_clik(model: RobotModel, desired: np.ndarray, seed,
                  settings: IKSettings = IKSettings(), duration: float = 5.0,
                  dt: float = 0.01) -> IKResult:
    """Euler integration of ``qdot = J^+ K_p e`` for a static target.

    ``iterations`` counts integration steps, so time-to-tolerance is
    ``iterations * dt``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    steps = int(np.ceil(duration / dt))
    kp = settings.kp_gain[:3] if settings.position_only else settings.kp_gain
    s = replace(settings, max_iterations=max(steps, 1), step_scale=dt)
    return _iterate(model, desired, seed, s,
                    lambda J, e, q: pseudoinverse(J, "auto") @ (kp * e))


SOLVERS = {
    "pinv": solve_ik_pinv,
    "nullspace": solve_ik_nullspace,
    "dls": solve_ik_dls,
    "clik": solve_ik_clik,
}


def reach_bin_centres(model: RobotModel, bin_centers: Sequence, approach: np.ndarray,
                      seed, settings: IKSettings = IKSettings(),
                      method: str = "pinv") -> list[IKResult]:
    """One IK solve per bin centre with a fixed approach orientation.

    ``bin_centers`` may be a RackModel (its lifted centres are used) or an
    (N, 3) array. Each solve is seeded from ``seed``.
    """
    centers = getattr(bin_centers, "bin_centers_3d", bin_centers)
    solver = SOLVERS[method]
    out = []
    for c in np.asarray(centers, dtype=float):
        T = np.eye(4)
        T[:3, :3] = approach
        T[:3, 3] = c
        out.append(solver(model, T, seed, settings))
    return out


def mean_position_error(results: Sequence[IKResult]) -> float:
    return float(np.mean([r.final_position_error for r in results]))
