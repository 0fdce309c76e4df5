"""Forward and differential kinematics of a 6R arm described by standard DH rows."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

N_JOINTS = 6


@dataclass(frozen=True)
class DHRow:
    """One standard DH row; the joint variable is added to ``theta_offset``."""

    a: float
    d: float
    alpha: float
    theta_offset: float = 0.0

    def __post_init__(self):
        vals = (self.a, self.d, self.alpha, self.theta_offset)
        if not all(np.isfinite(vals)):
            raise ValueError(f"DH row must be finite: {vals}")
        if not -np.pi < self.alpha <= np.pi:
            raise ValueError(f"alpha must lie in (-pi, pi], got {self.alpha}")


@dataclass(frozen=True, eq=False)
class RobotModel:
    dh_rows: tuple[DHRow, ...]
    joint_limits: np.ndarray = field(
        default_factory=lambda: np.tile([-2 * np.pi, 2 * np.pi], (N_JOINTS, 1))
    )
    link_radii: np.ndarray = field(default_factory=lambda: np.full(N_JOINTS, 0.05))

    def __post_init__(self):
        rows = tuple(self.dh_rows)
        limits = np.array(self.joint_limits, dtype=float).reshape(-1, 2)
        radii = np.array(self.link_radii, dtype=float).reshape(-1)
        if len(rows) != N_JOINTS:
            raise ValueError(f"expected {N_JOINTS} DH rows, got {len(rows)}")
        if limits.shape != (N_JOINTS, 2) or np.any(limits[:, 0] >= limits[:, 1]):
            raise ValueError("joint limits must be 6 (min, max) pairs with min < max")
        if radii.shape != (N_JOINTS,) or np.any(radii <= 0):
            raise ValueError("need 6 positive link radii")
        limits.setflags(write=False)
        radii.setflags(write=False)
        object.__setattr__(self, "dh_rows", rows)
        object.__setattr__(self, "joint_limits", limits)
        object.__setattr__(self, "link_radii", radii)

    @property
    def lower(self) -> np.ndarray:
        return self.joint_limits[:, 0]

    @property
    def upper(self) -> np.ndarray:
        return self.joint_limits[:, 1]

    def within_limits(self, q) -> bool:
        q = np.asarray(q, dtype=float)
        return bool(np.all(q >= self.lower) and np.all(q <= self.upper))

    def with_overrides(self, *, joint_limits=None, link_radii=None) -> "RobotModel":
        return RobotModel(
            self.dh_rows,
            self.joint_limits if joint_limits is None else joint_limits,
            self.link_radii if link_radii is None else link_radii,
        )

    def to_dict(self) -> dict:
        return {
            "dh": [
                {"a": r.a, "d": r.d, "alpha": r.alpha, "theta_offset": r.theta_offset}
                for r in self.dh_rows
            ],
            "joint_limits": self.joint_limits.tolist(),
            "link_radii": self.link_radii.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "RobotModel":
        rows = tuple(
            DHRow(r["a"], r["d"], r["alpha"], r.get("theta_offset", 0.0)) for r in doc["dh"]
        )
        kwargs = {}
        if "joint_limits" in doc:
            kwargs["joint_limits"] = doc["joint_limits"]
        if "link_radii" in doc:
            kwargs["link_radii"] = doc["link_radii"]
        return cls(rows, **kwargs)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RobotModel":
        return cls.from_dict(json.loads(text))


def ur5_model() -> RobotModel:
    """UR5 with the DH table values used verbatim (1.5708, not pi/2)."""
    table = [
        (0.0, 0.0895, 1.5708),
        (-0.425, 0.0, 0.0),
        (-0.3923, 0.0, 0.0),
        (0.0, 0.1092, 1.5708),
        (0.0, 0.0947, -1.5708),
        (0.0, 0.0823, 0.0),
    ]
    return RobotModel(tuple(DHRow(a, d, alpha) for a, d, alpha in table))


def dh_transform(row: DHRow, q: float) -> np.ndarray:
    """Rz(theta) Tz(d) Tx(a) Rx(alpha) for one joint."""
    theta = q + row.theta_offset
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(row.alpha), np.sin(row.alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, row.a * ct],
            [st, ct * ca, -ct * sa, row.a * st],
            [0.0, sa, ca, row.d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def _check_q(q) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.shape != (N_JOINTS,):
        raise ValueError(f"expected {N_JOINTS} joint angles, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError("joint angles must be finite")
    return q


def link_frames(model: RobotModel, q) -> list[np.ndarray]:
    """Base frame followed by the frame of every joint; the last one is the flange."""
    q = _check_q(q)
    frames = [np.eye(4)]
    T = frames[0]
    for row, qi in zip(model.dh_rows, q):
        T = T @ dh_transform(row, qi)
        frames.append(T)
    return frames


def forward_kinematics(model: RobotModel, q) -> np.ndarray:
    return link_frames(model, q)[-1]


def frame_origins(model: RobotModel, q) -> np.ndarray:
    """(7, 3) origins of the link frames, used as capsule end points."""
    return np.array([T[:3, 3] for T in link_frames(model, q)])


def geometric_jacobian(model: RobotModel, q) -> np.ndarray:
    """6x6 Jacobian, linear rows first, expressed in the base frame."""
    frames = link_frames(model, q)
    p_e = frames[-1][:3, 3]
    J = np.zeros((6, N_JOINTS))
    for i in range(N_JOINTS):
        z = frames[i][:3, 2]
        p = frames[i][:3, 3]
        J[:3, i] = np.cross(z, p_e - p)
        J[3:, i] = z
    return J
