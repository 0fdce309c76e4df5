"""Synthetic RGBD scenes: primitive objects in a rack bin, ray cast from a
pinhole camera into an organised point cloud.

Camera frame: x right, y down, z forward (same axes as the rack frame, so
a camera with the rack's rotation looks straight into the bins).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from ..geometry import Box, invert_transform, make_transform, pose_from_json, transform_points

ShapeKind = Literal["box", "cylinder", "sphere"]

LABEL_RACK = -1
LABEL_NONE = -2
WALL_COLOR = (0.55, 0.55, 0.55)


@dataclass(frozen=True, eq=False)
class SceneObject:
    """A primitive item. ``dims`` are full box extents, (radius, height) for a
    cylinder (axis = local z) or (radius,) for a sphere."""

    id: str
    shape: ShapeKind
    dims: tuple[float, ...]
    pose: np.ndarray
    base_color: tuple[float, float, float]
    deformable: bool = False

    def __post_init__(self):
        dims = tuple(float(v) for v in np.atleast_1d(self.dims))
        need = {"box": 3, "cylinder": 2, "sphere": 1}.get(self.shape)
        if need is None:
            raise ValueError(f"unknown shape {self.shape!r}")
        if len(dims) != need or min(dims) <= 0:
            raise ValueError(f"{self.shape} needs {need} positive dims, got {dims}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "pose", np.array(self.pose, dtype=float))
        object.__setattr__(self, "base_color", tuple(float(c) for c in self.base_color))

    @property
    def center(self) -> np.ndarray:
        return self.pose[:3, 3]

    def half_extents(self) -> np.ndarray:
        if self.shape == "box":
            return np.array(self.dims) / 2
        if self.shape == "cylinder":
            r, h = self.dims
            return np.array([r, r, h / 2])
        return np.full(3, self.dims[0])

    def aabb(self) -> Box:
        """World-aligned bounding box of the (possibly rotated) primitive."""
        h = self.half_extents()
        R = self.pose[:3, :3]
        ext = np.abs(R) @ h
        return Box(tuple(self.center - ext), tuple(self.center + ext))

    def with_pose(self, pose) -> "SceneObject":
        return SceneObject(self.id, self.shape, self.dims, pose, self.base_color,
                           self.deformable)

    def to_dict(self) -> dict:
        return {"id": self.id, "shape": self.shape, "dims_m": list(self.dims),
                "pose": self.pose.tolist(), "color": list(self.base_color),
                "deformable": self.deformable}

    @classmethod
    def from_dict(cls, d: dict) -> "SceneObject":
        return cls(d["id"], d["shape"], tuple(d["dims_m"]), pose_from_json(d["pose"]),
                   tuple(d["color"]), bool(d.get("deformable", False)))


@dataclass(frozen=True)
class SurfaceQuery:
    distance: np.ndarray       # unsigned distance to the surface
    normal: np.ndarray         # outward world normal at the nearest surface point
    edge_distance: np.ndarray  # distance from that point to the nearest crease or rim


def surface_query(obj: SceneObject, points) -> SurfaceQuery:
    """Nearest-surface information for world points against one primitive."""
    p = np.atleast_2d(np.asarray(points, dtype=float))
    R = obj.pose[:3, :3]
    local = (p - obj.center) @ R
    if obj.shape == "sphere":
        r = obj.dims[0]
        rad = np.linalg.norm(local, axis=1)
        n = np.divide(local, rad[:, None], out=np.tile([0.0, 0.0, 1.0], (len(p), 1)),
                      where=rad[:, None] > 0)
        return SurfaceQuery(np.abs(rad - r), n @ R.T, np.full(len(p), np.inf))

    if obj.shape == "box":
        half = np.array(obj.dims) / 2
        gap = np.abs(local) - half
        outside = np.maximum(gap, 0.0)
        inside = np.all(gap <= 0, axis=1)
        dist = np.where(inside, -gap.max(axis=1), np.linalg.norm(outside, axis=1))
        # face whose plane the nearest surface point lies on
        axis = np.argmax(gap, axis=1)
        rows = np.arange(len(p))
        n = np.zeros_like(local)
        n[rows, axis] = np.sign(local[rows, axis])
        n[n[rows, axis] == 0, axis[n[rows, axis] == 0]] = 1.0
        nearest = np.clip(local, -half, half)
        nearest[rows, axis] = n[rows, axis] * half[axis]
        margins = half - np.abs(nearest)
        margins[rows, axis] = np.inf
        return SurfaceQuery(dist, n @ R.T, margins.min(axis=1))

    r, h = obj.dims[0], obj.dims[1] / 2
    rho = np.hypot(local[:, 0], local[:, 1])
    d_side = rho - r
    d_cap = np.abs(local[:, 2]) - h
    inside = (d_side <= 0) & (d_cap <= 0)
    dist = np.where(inside, -np.maximum(d_side, d_cap),
                    np.hypot(np.maximum(d_side, 0), np.maximum(d_cap, 0)))
    on_cap = d_cap > d_side
    radial = np.divide(local[:, :2], rho[:, None], out=np.tile([1.0, 0.0], (len(p), 1)),
                       where=rho[:, None] > 0)
    n = np.zeros_like(local)
    n[:, :2] = np.where(on_cap[:, None], 0.0, radial)
    n[:, 2] = np.where(on_cap, np.where(local[:, 2] >= 0, 1.0, -1.0), 0.0)
    edge = np.where(on_cap, r - np.minimum(rho, r), h - np.minimum(np.abs(local[:, 2]), h))
    return SurfaceQuery(dist, n @ R.T, edge)


@dataclass(frozen=True)
class CameraModel:
    width: int = 80
    height: int = 60
    fov_x_deg: float = 60.0

    @property
    def focal(self) -> float:
        return (self.width / 2) / np.tan(np.deg2rad(self.fov_x_deg) / 2)

    def ray_directions(self) -> np.ndarray:
        """(H*W, 3) unit rays in the camera frame, row-major over pixels."""
        u = np.arange(self.width) + 0.5 - self.width / 2
        v = np.arange(self.height) + 0.5 - self.height / 2
        uu, vv = np.meshgrid(u, v)
        d = np.stack([uu / self.focal, vv / self.focal, np.ones_like(uu)], axis=-1).reshape(-1, 3)
        return d / np.linalg.norm(d, axis=1, keepdims=True)

    def project(self, camera_pose: np.ndarray, points) -> np.ndarray:
        """World points to (u, v) pixel coordinates (column, row)."""
        p = transform_points(invert_transform(camera_pose), points)
        u = p[:, 0] / p[:, 2] * self.focal + self.width / 2 - 0.5
        v = p[:, 1] / p[:, 2] * self.focal + self.height / 2 - 0.5
        return np.column_stack([u, v])


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Organised cloud. Pixels without a return hold NaN and ``valid=False``;
    ``labels`` carry ground truth (object index, LABEL_RACK or LABEL_NONE)
    for simulation bookkeeping only; the perception pipeline never reads them."""

    points: np.ndarray
    colors: np.ndarray
    organized_shape: tuple[int, int] | None = None  # (width, height)
    viewpoint: np.ndarray = field(default_factory=lambda: np.zeros(3))
    labels: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        cols = np.asarray(self.colors, dtype=float).reshape(-1, 3)
        if pts.shape != cols.shape:
            raise ValueError("colors must match points")
        if self.organized_shape is not None:
            w, h = self.organized_shape
            if w * h != pts.shape[0]:
                raise ValueError("organized shape does not match point count")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "colors", cols)
        object.__setattr__(self, "viewpoint", np.asarray(self.viewpoint, dtype=float))

    def __len__(self):
        return self.points.shape[0]

    @property
    def valid(self) -> np.ndarray:
        return np.all(np.isfinite(self.points), axis=1)

    @property
    def width(self) -> int:
        return self.organized_shape[0]

    @property
    def height(self) -> int:
        return self.organized_shape[1]

    def pixel_index(self, u: int, v: int) -> int:
        return int(v) * self.width + int(u)

    def image(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values).reshape(self.height, self.width, *np.shape(values)[1:])

    def to_ascii(self) -> str:
        """``x y z r g b`` per point with a width/height header; NaN for misses."""
        w, h = self.organized_shape or (len(self), 1)
        lines = [f"# width {w}", f"# height {h}", "# x y z r g b"]
        for p, c in zip(self.points, self.colors):
            lines.append(" ".join(f"{v:.6g}" for v in (*p, *c)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_ascii(cls, text: str) -> "PointCloud":
        w = h = None
        rows = []
        for line in text.splitlines():
            if line.startswith("#"):
                parts = line[1:].split()
                if parts[:1] == ["width"]:
                    w = int(parts[1])
                elif parts[:1] == ["height"]:
                    h = int(parts[1])
                continue
            if line.strip():
                rows.append([float(x) for x in line.split()])
        arr = np.array(rows, dtype=float).reshape(-1, 6)
        shape = (w, h) if w is not None and h is not None and w * h == len(arr) else None
        return cls(arr[:, :3], arr[:, 3:], shape)


@dataclass(frozen=True)
class RenderSettings:
    camera: CameraModel = CameraModel()
    noise_sigma_m: float = 0.002
    color_jitter: float = 0.0
    wall_color: tuple[float, float, float] = WALL_COLOR


# -- ray casting -------------------------------------------------------------


def _ray_box_local(o, d, half):
    """Slab test in the box frame; returns (t, normal) with inf on miss."""
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / d
        t1 = (-half - o) * inv
        t2 = (half - o) * inv
    tmin_ax = np.minimum(t1, t2)
    tmax_ax = np.maximum(t1, t2)
    tmin_ax = np.where(np.isnan(tmin_ax), -np.inf, tmin_ax)
    tmax_ax = np.where(np.isnan(tmax_ax), np.inf, tmax_ax)
    tmin = tmin_ax.max(axis=1)
    tmax = tmax_ax.min(axis=1)
    hit = (tmax >= tmin) & (tmin > 1e-9)
    t = np.where(hit, tmin, np.inf)
    axis = np.argmax(tmin_ax, axis=1)
    n = np.zeros_like(o)
    rows = np.arange(len(o))
    n[rows, axis] = -np.sign(d[rows, axis])
    return t, n


def _ray_sphere(o, d, center, r):
    oc = o - center
    b = np.sum(oc * d, axis=1)
    c = np.sum(oc * oc, axis=1) - r * r
    disc = b * b - c
    with np.errstate(invalid="ignore"):
        t = -b - np.sqrt(disc)
    t = np.where((disc >= 0) & (t > 1e-9), t, np.inf)
    p = o + np.where(np.isfinite(t), t, 0.0)[:, None] * d
    return t, (p - center) / r


def _ray_cylinder_local(o, d, r, half_h):
    a = d[:, 0] ** 2 + d[:, 1] ** 2
    b = o[:, 0] * d[:, 0] + o[:, 1] * d[:, 1]
    c = o[:, 0] ** 2 + o[:, 1] ** 2 - r * r
    disc = b * b - a * c
    with np.errstate(invalid="ignore", divide="ignore"):
        t_side = (-b - np.sqrt(disc)) / a
    z = o[:, 2] + t_side * d[:, 2]
    side_ok = (disc >= 0) & (a > 1e-15) & (t_side > 1e-9) & (np.abs(z) <= half_h)
    t_side = np.where(side_ok, t_side, np.inf)

    with np.errstate(divide="ignore", invalid="ignore"):
        t_top = (half_h - o[:, 2]) / d[:, 2]
        t_bot = (-half_h - o[:, 2]) / d[:, 2]
    t_cap = np.where(d[:, 2] < 0, t_top, t_bot)
    cap_z = np.where(d[:, 2] < 0, 1.0, -1.0)
    pc = o + np.where(np.isfinite(t_cap), t_cap, 0.0)[:, None] * d
    cap_ok = np.isfinite(t_cap) & (t_cap > 1e-9) & (pc[:, 0] ** 2 + pc[:, 1] ** 2 <= r * r)
    t_cap = np.where(cap_ok, t_cap, np.inf)

    use_cap = t_cap < t_side
    t = np.where(use_cap, t_cap, t_side)
    ps = o + np.where(np.isfinite(t), t, 0.0)[:, None] * d
    n = np.zeros_like(o)
    n[:, 0] = np.where(use_cap, 0.0, ps[:, 0] / r)
    n[:, 1] = np.where(use_cap, 0.0, ps[:, 1] / r)
    n[:, 2] = np.where(use_cap, cap_z, 0.0)
    return t, n


def ray_cast_object(obj: SceneObject, origins: np.ndarray, dirs: np.ndarray):
    """Distance along each ray to ``obj`` (inf on miss) and the world normal."""
    if obj.shape == "sphere":
        return _ray_sphere(origins, dirs, obj.center, obj.dims[0])
    R = obj.pose[:3, :3]
    o_l = (origins - obj.center) @ R
    d_l = dirs @ R
    if obj.shape == "box":
        t, n = _ray_box_local(o_l, d_l, np.array(obj.dims) / 2)
    else:
        t, n = _ray_cylinder_local(o_l, d_l, obj.dims[0], obj.dims[1] / 2)
    return t, n @ R.T


def ray_cast_box(box: Box, origins, dirs):
    half = box.size / 2
    return _ray_box_local(origins - box.center, dirs, half)


def render_cloud(objects: Sequence[SceneObject], obstacles: Sequence[Box],
                 camera_pose: np.ndarray, settings: RenderSettings = RenderSettings(),
                 rng: np.random.Generator | None = None) -> PointCloud:
    """Nearest-hit ray cast of objects and static boxes into an organised cloud."""
    cam = settings.camera
    dirs = cam.ray_directions() @ camera_pose[:3, :3].T
    n = dirs.shape[0]
    origin = camera_pose[:3, 3]
    origins = np.broadcast_to(origin, (n, 3))

    best_t = np.full(n, np.inf)
    labels = np.full(n, LABEL_NONE, dtype=int)
    colors = np.zeros((n, 3))
    for box in obstacles:
        t, _ = ray_cast_box(box, origins, dirs)
        closer = t < best_t
        best_t[closer] = t[closer]
        labels[closer] = LABEL_RACK
        colors[closer] = settings.wall_color
    for k, obj in enumerate(objects):
        t, _ = ray_cast_object(obj, origins, dirs)
        closer = t < best_t
        best_t[closer] = t[closer]
        labels[closer] = k
        colors[closer] = obj.base_color

    hit = np.isfinite(best_t)
    rng = rng if rng is not None else np.random.default_rng(0)
    t = best_t.copy()
    if settings.noise_sigma_m > 0:
        t[hit] += rng.normal(0.0, settings.noise_sigma_m, size=int(hit.sum()))
    if settings.color_jitter > 0:
        colors[hit] = np.clip(
            colors[hit] + rng.normal(0.0, settings.color_jitter, size=(int(hit.sum()), 3)), 0, 1
        )
    points = np.full((n, 3), np.nan)
    points[hit] = origin + t[hit, None] * dirs[hit]
    return PointCloud(points, colors, (cam.width, cam.height), origin.copy(), labels)


def bin_view_camera(rack, bin_index: int, standoff: float = 0.25) -> np.ndarray:
    """Camera looking straight into a bin from ``standoff`` in front of its face."""
    R = rack.dims.rack_pose[:3, :3]
    pos = rack.bin_centers_3d[bin_index] - standoff * R[:, 2]
    return make_transform(R, pos)


def render_bin_cloud(rack, bin_index: int, objects: Sequence[SceneObject],
                     camera_pose: np.ndarray | None = None,
                     settings: RenderSettings = RenderSettings(),
                     rng: np.random.Generator | None = None) -> PointCloud:
    """Render a bin's contents plus the rack walls. Without an explicit
    camera pose the default bin-view camera for ``bin_index`` is used."""
    if camera_pose is None:
        camera_pose = bin_view_camera(rack, bin_index)
    return render_cloud(objects, rack.wall_boxes, camera_pose, settings, rng)


# -- scene files -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SceneDescription:
    objects: tuple[SceneObject, ...]
    camera_pose: np.ndarray | None = None
    noise_sigma_m: float | None = None

    def to_dict(self) -> dict:
        d = {"objects": [o.to_dict() for o in self.objects]}
        if self.camera_pose is not None:
            d["camera_pose"] = np.asarray(self.camera_pose).tolist()
        if self.noise_sigma_m is not None:
            d["noise_sigma_m"] = self.noise_sigma_m
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SceneDescription":
        cam = d.get("camera_pose")
        return cls(tuple(SceneObject.from_dict(o) for o in d.get("objects", [])),
                   None if cam is None else pose_from_json(cam),
                   d.get("noise_sigma_m"))

    @classmethod
    def load(cls, path) -> "SceneDescription":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


def write_pgm(values: np.ndarray, path, max_value: int = 255) -> None:
    """Binary PGM (P5) of a [0, 1] map."""
    img = np.clip(np.nan_to_num(np.asarray(values, dtype=float)), 0.0, 1.0)
    data = np.rint(img * max_value).astype(np.uint8)
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{max_value}\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    fields, pos = [], 0
    while len(fields) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        end = pos
        while not raw[end:end + 1].isspace():
            end += 1
        fields.append(raw[pos:end])
        pos = end
    if fields[0] != b"P5":
        raise ValueError("not a binary PGM file")
    w, h, mx = int(fields[1]), int(fields[2]), int(fields[3])
    data = np.frombuffer(raw[pos + 1: pos + 1 + w * h], dtype=np.uint8).reshape(h, w)
    return data / mx
