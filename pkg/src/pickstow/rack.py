"""Rack detection: Hough lines over edge points, bin corners from line
intersections, missing-line inference from known rack spacing, and the
3D wall boxes that become planning obstacles.

Plane coordinates follow the image convention: x to the right, y down.
Rack frame: x right, y down, z into the rack; its origin is the top-left
outer corner of the rack face.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .errors import InsufficientLinesError, ParallelLinesError
from .geometry import Box, make_transform, transform_points

ROWS, COLS = 4, 3
N_BINS = ROWS * COLS
BIN_NAMES = tuple(f"bin_{chr(ord('A') + i)}" for i in range(N_BINS))

_CLASS_CUTOFF = np.deg2rad(20.0)
_SPACING_WARN = 0.15


def bin_index(name: str) -> int:
    try:
        return BIN_NAMES.index(name)
    except ValueError:
        raise KeyError(f"unknown bin {name!r}") from None


@dataclass(frozen=True)
class LineSegment2D:
    p1: tuple[float, float]
    p2: tuple[float, float]
    orientation_tag: Literal["vertical", "horizontal"]
    votes: int = 0

    def __post_init__(self):
        if np.allclose(self.p1, self.p2, rtol=0, atol=0):
            raise ValueError("segment end points coincide")

    def x_at(self, y: float) -> float:
        (x1, y1), (x2, y2) = self.p1, self.p2
        return x1 + (x2 - x1) * (y - y1) / (y2 - y1)

    def y_at(self, x: float) -> float:
        (x1, y1), (x2, y2) = self.p1, self.p2
        return y1 + (y2 - y1) * (x - x1) / (x2 - x1)


@dataclass(frozen=True)
class EdgePointSet:
    points: np.ndarray
    extent: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if pts.shape[0] == 0:
            raise ValueError("edge point set is empty")
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_points(cls, points, pad: float = 0.0) -> "EdgePointSet":
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        lo = pts.min(axis=0) - pad
        hi = pts.max(axis=0) + pad
        return cls(pts, (lo[0], lo[1], hi[0], hi[1]))


# -- Hough transform ---------------------------------------------------------


def _theta_grid(theta_resolution: float) -> np.ndarray:
    n = int(np.ceil(np.pi / theta_resolution))
    return -np.pi / 2 + np.arange(n) * (np.pi / n)


def hough_accumulator(points: np.ndarray, rho_resolution: float, theta_resolution: float):
    """Vote over (rho, theta) with ``rho = x cos(theta) + y sin(theta)``.

    Returns ``(acc, rhos, thetas)``; ``rhos`` are bin centres.
    """
    thetas = _theta_grid(theta_resolution)
    rmax = float(np.max(np.linalg.norm(points, axis=1))) + rho_resolution
    n_rho = 2 * int(np.ceil(rmax / rho_resolution)) + 1
    rho0 = -(n_rho // 2) * rho_resolution
    rho = points[:, :1] * np.cos(thetas) + points[:, 1:2] * np.sin(thetas)
    idx = np.rint((rho - rho0) / rho_resolution).astype(int)
    acc = np.zeros((n_rho, thetas.size), dtype=np.int64)
    cols = np.broadcast_to(np.arange(thetas.size), idx.shape)
    np.add.at(acc, (idx.ravel(), cols.ravel()), 1)
    rhos = rho0 + np.arange(n_rho) * rho_resolution
    return acc, rhos, thetas


def _local_peaks(acc: np.ndarray, threshold: int, window: tuple[int, int]):
    """Cells that clear the threshold and are maximal within the window.

    The theta axis wraps with a rho flip (theta and theta + pi describe the
    same line), so the accumulator is padded accordingly before comparison.
    """
    wr, wt = window
    n_rho, n_t = acc.shape
    flipped = acc[::-1]
    padded = np.concatenate([flipped[:, n_t - wt:], acc, flipped[:, :wt]], axis=1)
    padded = np.pad(padded, ((wr, wr), (0, 0)), constant_values=-1)
    peaks = []
    cand = np.argwhere(acc >= threshold)
    order = np.argsort(-acc[cand[:, 0], cand[:, 1]], kind="stable")
    taken = np.zeros_like(acc, dtype=bool)
    for r, t in cand[order]:
        v = acc[r, t]
        patch = padded[r: r + 2 * wr + 1, t: t + 2 * wt + 1]
        if v < patch.max():
            continue
        # plateau: keep only the first (highest-vote, then lowest index) cell
        lo_r, hi_r = max(r - wr, 0), min(r + wr + 1, n_rho)
        lo_t, hi_t = max(t - wt, 0), min(t + wt + 1, n_t)
        if taken[lo_r:hi_r, lo_t:hi_t].any():
            continue
        taken[r, t] = True
        peaks.append((r, t))
    return peaks


def _clip_to_extent(rho: float, theta: float, extent) -> tuple[np.ndarray, np.ndarray] | None:
    xmin, ymin, xmax, ymax = extent
    c, s = np.cos(theta), np.sin(theta)
    pts = []
    if abs(s) > 1e-12:
        for x in (xmin, xmax):
            y = (rho - x * c) / s
            if ymin - 1e-9 <= y <= ymax + 1e-9:
                pts.append((x, y))
    if abs(c) > 1e-12:
        for y in (ymin, ymax):
            x = (rho - y * s) / c
            if xmin - 1e-9 <= x <= xmax + 1e-9:
                pts.append((x, y))
    if len(pts) < 2:
        return None
    pts = np.array(pts)
    # farthest pair, so duplicated corner hits collapse
    d = np.linalg.norm(pts[:, None] - pts[None], axis=-1)
    i, j = np.unravel_index(np.argmax(d), d.shape)
    if d[i, j] == 0:
        return None
    return pts[i], pts[j]


def classify_theta(theta: float) -> str | None:
    """Line orientation from its normal angle (theta = 0 is a vertical line)."""
    t = (theta + np.pi / 2) % np.pi - np.pi / 2
    if abs(t) < _CLASS_CUTOFF:
        return "vertical"
    if np.pi / 2 - abs(t) < _CLASS_CUTOFF:
        return "horizontal"
    return None


def hough_lines(edges: EdgePointSet, rho_resolution: float = 1.0,
                theta_resolution: float = np.deg2rad(1.0), threshold: int = 50,
                peak_window: tuple[int, int] = (5, 5)) -> list[LineSegment2D]:
    """Detect lines as accumulator peaks and clip them to the edge extent.

    Lines more than 20 degrees from both vertical and horizontal are dropped.
    """
    if rho_resolution <= 0 or theta_resolution <= 0:
        raise ValueError("resolutions must be positive")
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    acc, rhos, thetas = hough_accumulator(edges.points, rho_resolution, theta_resolution)
    lines = []
    for r, t in _local_peaks(acc, threshold, peak_window):
        tag = classify_theta(thetas[t])
        if tag is None:
            continue
        ends = _clip_to_extent(rhos[r], thetas[t], edges.extent)
        if ends is None:
            continue
        p1, p2 = ends
        key = 1 if tag == "vertical" else 0
        if p1[key] > p2[key]:
            p1, p2 = p2, p1
        lines.append(LineSegment2D(tuple(map(float, p1)), tuple(map(float, p2)), tag,
                                   int(acc[r, t])))
    return lines


def line_params(line: LineSegment2D) -> tuple[float, float]:
    """(rho, theta) of the infinite line through a segment, theta in [-pi/2, pi/2)."""
    (x1, y1), (x2, y2) = line.p1, line.p2
    theta = np.arctan2(x1 - x2, y2 - y1)  # normal direction
    theta = (theta + np.pi / 2) % np.pi - np.pi / 2
    rho = x1 * np.cos(theta) + y1 * np.sin(theta)
    return float(rho), float(theta)


# -- intersections -----------------------------------------------------------


def intersect_lines(v: LineSegment2D, h: LineSegment2D) -> np.ndarray:
    """Intersection of the two infinite lines (determinant form)."""
    (x1v, y1v), (x2v, y2v) = v.p1, v.p2
    (x1h, y1h), (x2h, y2h) = h.p1, h.p2
    den = (x1v - x2v) * (y1h - y2h) - (y1v - y2v) * (x1h - x2h)
    if abs(den) <= 1e-12:
        raise ParallelLinesError(f"lines are parallel (denominator {den:.3g})")
    cv = x1v * y2v - y1v * x2v
    ch = x1h * y2h - y1h * x2h
    xi = (cv * (x1h - x2h) - (x1v - x2v) * ch) / den
    yi = (cv * (y1h - y2h) - (y1v - y2v) * ch) / den
    return np.array([xi, yi])


# -- rack model --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RackDims:
    """Known rack geometry: line spacing, depth, walls and face pose.

    ``plane_scale`` converts metres to plane units (1.0 when the plane is
    already metric); ``rack_pose`` maps rack-frame metres to the world.
    """

    column_widths_m: tuple[float, ...] = (0.25, 0.25, 0.25)
    row_heights_m: tuple[float, ...] = (0.22, 0.22, 0.22, 0.22)
    depth_m: float = 0.30
    wall_thickness_m: float = 0.01
    plane_scale: float = 1.0
    rack_pose: np.ndarray = field(default_factory=lambda: np.eye(4))

    def __post_init__(self):
        if len(self.column_widths_m) != COLS or len(self.row_heights_m) != ROWS:
            raise ValueError(f"rack must be {ROWS} rows x {COLS} columns")
        if min(self.column_widths_m) <= 0 or min(self.row_heights_m) <= 0:
            raise ValueError("column widths and row heights must be positive")
        if self.depth_m <= 0 or self.wall_thickness_m <= 0 or self.plane_scale <= 0:
            raise ValueError("depth, wall thickness and plane scale must be positive")
        object.__setattr__(self, "column_widths_m", tuple(map(float, self.column_widths_m)))
        object.__setattr__(self, "row_heights_m", tuple(map(float, self.row_heights_m)))
        object.__setattr__(self, "rack_pose", np.array(self.rack_pose, dtype=float))

    @property
    def vertical_positions(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.column_widths_m)])

    @property
    def horizontal_positions(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.row_heights_m)])

    @classmethod
    def from_dict(cls, doc: dict) -> "RackDims":
        if doc.get("columns", COLS) != COLS or doc.get("rows", ROWS) != ROWS:
            raise ValueError(f"only {ROWS}x{COLS} racks are supported")
        kw = {}
        for key in ("column_widths_m", "row_heights_m", "depth_m", "wall_thickness_m",
                    "plane_scale"):
            if key in doc:
                kw[key] = tuple(doc[key]) if isinstance(doc[key], list) else doc[key]
        if "rack_pose" in doc:
            kw["rack_pose"] = np.array(doc["rack_pose"], dtype=float)
        return cls(**kw)

    def to_dict(self) -> dict:
        return {
            "columns": COLS,
            "rows": ROWS,
            "column_widths_m": list(self.column_widths_m),
            "row_heights_m": list(self.row_heights_m),
            "depth_m": self.depth_m,
            "wall_thickness_m": self.wall_thickness_m,
            "plane_scale": self.plane_scale,
            "rack_pose": self.rack_pose.tolist(),
        }

    def ideal_lines(self, offset=(0.0, 0.0), margin: float = 0.0):
        """Plane-space lines of a perfectly detected rack (for tests and demos)."""
        s = self.plane_scale
        xs = self.vertical_positions * s + offset[0]
        ys = self.horizontal_positions * s + offset[1]
        m = margin * s
        vert = [LineSegment2D((x, ys[0] - m), (x, ys[-1] + m), "vertical") for x in xs]
        horiz = [LineSegment2D((xs[0] - m, y), (xs[-1] + m, y), "horizontal") for y in ys]
        return vert, horiz


@dataclass(frozen=True, eq=False)
class RackModel:
    corners: np.ndarray            # (5, 4, 2) plane points, [horizontal, vertical]
    bin_corners: np.ndarray        # (12, 4, 2) tl, tr, br, bl
    bin_centers: np.ndarray        # (12, 2)
    bin_centers_3d: np.ndarray     # (12, 3) world, on the face plane
    wall_boxes: tuple[Box, ...]
    dims: RackDims
    warnings: tuple[str, ...] = ()
    grid_shape: tuple[int, int] = (ROWS, COLS)

    def bin_frame(self, index: int) -> np.ndarray:
        """World pose of a bin: origin at its face centre, x into the rack,
        z up (against the rack's y), y completing the right-handed frame."""
        R_rack = self.dims.rack_pose[:3, :3]
        x = R_rack[:, 2]
        z = -R_rack[:, 1]
        y = np.cross(z, x)
        return make_transform(np.column_stack([x, y, z]), self.bin_centers_3d[index])

    def bin_size(self, index: int) -> tuple[float, float, float]:
        """Interior (depth, width, height) of a bin in metres."""
        r, c = divmod(index, COLS)
        t = self.dims.wall_thickness_m
        return (self.dims.depth_m - t, self.dims.column_widths_m[c] - t,
                self.dims.row_heights_m[r] - t)

    def to_dict(self) -> dict:
        return {
            "grid_shape": list(self.grid_shape),
            "corners": self.corners.tolist(),
            "bin_corners": self.bin_corners.tolist(),
            "bin_centers": self.bin_centers.tolist(),
            "bin_centers_3d": self.bin_centers_3d.tolist(),
            "wall_boxes": [b.to_json() for b in self.wall_boxes],
            "dims": self.dims.to_dict(),
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, doc: dict) -> "RackModel":
        return cls(
            corners=np.array(doc["corners"], dtype=float),
            bin_corners=np.array(doc["bin_corners"], dtype=float),
            bin_centers=np.array(doc["bin_centers"], dtype=float),
            bin_centers_3d=np.array(doc["bin_centers_3d"], dtype=float),
            wall_boxes=tuple(Box.from_json(b) for b in doc["wall_boxes"]),
            dims=RackDims.from_dict(doc["dims"]),
            warnings=tuple(doc.get("warnings", ())),
        )


def _line_key(line: LineSegment2D, ref: float) -> float:
    """Position of a line across its family, measured at a reference level."""
    if line.orientation_tag == "vertical":
        return line.x_at(ref)
    return line.y_at(ref)


def _assign_indices(positions: np.ndarray, expected: np.ndarray, scale: float):
    """Match sorted detected positions to rack line indices.

    The offset is free, the scale known: pick the increasing index subset
    whose least-squares fit ``pos = scale * expected + offset`` has the
    smallest residual. Uniform spacing leaves shifted subsets tied; the tie
    goes to the most central subset, since partial detections are the
    middle lines. Returns (indices, fitted scale, relative deviation).
    """
    m = positions.size
    cands = []
    for subset in itertools.combinations(range(expected.size), m):
        X = expected[list(subset)]
        offset = float(np.mean(positions - scale * X))
        resid = float(np.sqrt(np.mean((positions - scale * X - offset) ** 2)))
        centrality = abs(np.mean(subset) - (expected.size - 1) / 2)
        cands.append((resid, centrality, subset))
    tol = 1e-9 * scale * float(expected[-1])
    r_min = min(c[0] for c in cands)
    subset = min((c for c in cands if c[0] <= r_min + tol), key=lambda c: c[1])[2]
    X = expected[list(subset)]
    if m >= 2:
        s_fit = float(np.polyfit(X, positions, 1)[0])
    else:
        s_fit = scale
    spacing = np.diff(positions)
    expected_spacing = scale * np.diff(X)
    rel = float(np.max(np.abs(spacing - expected_spacing) / expected_spacing)) if m >= 2 else 0.0
    return list(subset), s_fit, rel


def _complete_family(lines: list[LineSegment2D], indices: list[int], expected: np.ndarray,
                     tag: str) -> list[LineSegment2D]:
    """Fill missing lines of one family.

    Each line is parametrised by two points at fixed reference levels; those
    coordinates are fitted as affine functions of the known rack position,
    which is exact for an undistorted fronto-parallel rack.
    """
    axis = 1 if tag == "vertical" else 0  # the coordinate that runs along the line
    levels = np.array([min(min(l.p1[axis], l.p2[axis]) for l in lines),
                       max(max(l.p1[axis], l.p2[axis]) for l in lines)])
    at = (lambda l, s: l.x_at(s)) if tag == "vertical" else (lambda l, s: l.y_at(s))
    pos = np.array([[at(l, s) for s in levels] for l in lines])  # (m, 2)
    X = expected[indices]
    A = np.column_stack([X, np.ones_like(X)])
    coef, *_ = np.linalg.lstsq(A, pos, rcond=None)
    out = []
    given = dict(zip(indices, lines))
    for j, Xj in enumerate(expected):
        if j in given:
            out.append(given[j])
            continue
        c = np.array([Xj, 1.0]) @ coef
        if tag == "vertical":
            p1, p2 = (c[0], levels[0]), (c[1], levels[1])
        else:
            p1, p2 = (levels[0], c[0]), (levels[1], c[1])
        out.append(LineSegment2D(tuple(map(float, p1)), tuple(map(float, p2)), tag))
    return out


def build_rack(lines: Sequence[LineSegment2D], rack_dims: RackDims) -> RackModel:
    """Corners, bins and wall boxes from detected lines plus known geometry.

    Requires at least 2 vertical and 3 horizontal lines; the rest are
    inferred from the spacing in ``rack_dims``. Spacing that deviates more
    than 15% from the expected value is recorded in ``warnings``.
    """
    vert = [l for l in lines if l.orientation_tag == "vertical"]
    horiz = [l for l in lines if l.orientation_tag == "horizontal"]
    if len(vert) < 2 or len(horiz) < 3:
        raise InsufficientLinesError(
            f"need >= 2 vertical and >= 3 horizontal lines, got {len(vert)} and {len(horiz)}"
        )
    if len(vert) > COLS + 1 or len(horiz) > ROWS + 1:
        raise InsufficientLinesError("more lines than the rack has; filter detections first")

    # order-independent reference levels
    y_ref = float(np.mean([0.5 * (l.p1[1] + l.p2[1]) for l in vert]))
    x_ref = float(np.mean([0.5 * (l.p1[0] + l.p2[0]) for l in horiz]))
    vert = sorted(vert, key=lambda l: (_line_key(l, y_ref), l.p1, l.p2))
    horiz = sorted(horiz, key=lambda l: (_line_key(l, x_ref), l.p1, l.p2))

    s = rack_dims.plane_scale
    warnings = []
    v_idx, _, v_dev = _assign_indices(np.array([_line_key(l, y_ref) for l in vert]),
                                      rack_dims.vertical_positions, s)
    h_idx, _, h_dev = _assign_indices(np.array([_line_key(l, x_ref) for l in horiz]),
                                      rack_dims.horizontal_positions, s)
    for name, dev in (("vertical", v_dev), ("horizontal", h_dev)):
        if dev > _SPACING_WARN:
            warnings.append(f"{name} line spacing deviates {dev:.0%} from rack geometry")

    vert = _complete_family(vert, v_idx, rack_dims.vertical_positions, "vertical")
    horiz = _complete_family(horiz, h_idx, rack_dims.horizontal_positions, "horizontal")

    corners = np.array([[intersect_lines(v, h) for v in vert] for h in horiz])
    bin_corners = np.zeros((N_BINS, 4, 2))
    for r in range(ROWS):
        for c in range(COLS):
            bin_corners[r * COLS + c] = [corners[r, c], corners[r, c + 1],
                                         corners[r + 1, c + 1], corners[r + 1, c]]
    centers = bin_corners.mean(axis=1)
    return _assemble(corners, bin_corners, centers, rack_dims, tuple(warnings))


def _plane_to_rack(points_2d: np.ndarray, dims: RackDims) -> np.ndarray:
    p = np.asarray(points_2d, dtype=float).reshape(-1, 2) / dims.plane_scale
    return np.column_stack([p, np.zeros(len(p))])


def _assemble(corners, bin_corners, centers, dims: RackDims, warnings) -> RackModel:
    T = dims.rack_pose
    centers_3d = transform_points(T, _plane_to_rack(centers, dims))
    return RackModel(corners, bin_corners, centers, centers_3d,
                     tuple(_wall_boxes(corners, dims)), dims, warnings)


def _wall_boxes(corners: np.ndarray, dims: RackDims) -> list[Box]:
    """Vertical walls, shelves (top and bottom included) and the back panel.

    Boxes are built in the rack frame and mapped to world axis-aligned boxes;
    for rack poses that are not axis-aligned the result is the enclosing AABB.
    """
    t = dims.wall_thickness_m
    D = dims.depth_m
    c3 = _plane_to_rack(corners.reshape(-1, 2), dims).reshape(corners.shape[0], corners.shape[1], 3)
    boxes = []

    def emit(lo, hi):
        pts = np.array(list(itertools.product(*zip(lo, hi))))
        w = transform_points(dims.rack_pose, pts)
        boxes.append(Box(tuple(w.min(axis=0)), tuple(w.max(axis=0))))

    for j in range(c3.shape[1]):
        col = c3[:, j]
        lo = [col[:, 0].min() - t / 2, col[:, 1].min() - t / 2, 0.0]
        hi = [col[:, 0].max() + t / 2, col[:, 1].max() + t / 2, D]
        emit(lo, hi)
    for k in range(c3.shape[0]):
        row = c3[k]
        lo = [row[:, 0].min() - t / 2, row[:, 1].min() - t / 2, 0.0]
        hi = [row[:, 0].max() + t / 2, row[:, 1].max() + t / 2, D]
        emit(lo, hi)
    flat = c3.reshape(-1, 3)
    emit([flat[:, 0].min() - t / 2, flat[:, 1].min() - t / 2, D],
         [flat[:, 0].max() + t / 2, flat[:, 1].max() + t / 2, D + t])
    return boxes


def ideal_rack(dims: RackDims) -> RackModel:
    vert, horiz = dims.ideal_lines()
    return build_rack(vert + horiz, dims)


def bin_roi(rack: RackModel, bin_index: int, margin: float = 0.0):
    """(xmin, ymin, xmax, ymax) of a bin's corners, grown by ``margin``."""
    if not 0 <= bin_index < N_BINS:
        raise IndexError(f"bin index {bin_index} outside 0..{N_BINS - 1}")
    c = rack.bin_corners[bin_index]
    lo = c.min(axis=0) - margin
    hi = c.max(axis=0) + margin
    return (float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))


def rack_silhouette_points(dims: RackDims, spacing: float = 1.0, jitter: float = 0.0,
                           offset=(0.0, 0.0), rng: np.random.Generator | None = None):
    """Synthetic edge points sampled along every rack line (plane units)."""
    rng = rng or np.random.default_rng(0)
    vert, horiz = dims.ideal_lines(offset)
    pts = []
    for line in vert + horiz:
        p1, p2 = np.array(line.p1), np.array(line.p2)
        n = int(np.floor(np.linalg.norm(p2 - p1) / spacing)) + 1
        t = np.linspace(0.0, 1.0, n)[:, None]
        pts.append(p1 + t * (p2 - p1))
    pts = np.concatenate(pts)
    if jitter > 0:
        pts = pts + rng.uniform(-jitter, jitter, size=pts.shape)
    return pts
