"""Parallel-beam scan geometry: ellipse phantoms, ray tracing, system assembly.

Physical frame: x axis points right (along raster columns), y axis points up
(against raster rows, so row 0 sits at the top of the grid), the grid is
centered on the origin and all lengths are millimetres.  A view at angle
theta (counterclockwise from +x) shoots parallel rays with direction
(cos theta, sin theta); detector offsets run along (-sin theta, cos theta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ImageVector, SparseLinearSystem, SparseRow

__all__ = [
    "Ellipse",
    "PhantomSpec",
    "ScanGeometry",
    "rasterize_phantom",
    "trace_ray",
    "build_system",
]


@dataclass(frozen=True)
class Ellipse:
    """Additive ellipse: center (mm), semi-axes (mm), rotation (radians), value."""

    center_x: float
    center_y: float
    semi_x: float
    semi_y: float
    rotation: float
    value: float

    def __post_init__(self):
        if self.semi_x <= 0.0 or self.semi_y <= 0.0:
            raise ValueError("ellipse semi-axes must be positive")

    def contains(self, x, y):
        """Membership test for points (arrays allowed), boundary inclusive."""
        dx = np.asarray(x, dtype=np.float64) - self.center_x
        dy = np.asarray(y, dtype=np.float64) - self.center_y
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        xr = dx * c + dy * s
        yr = -dx * s + dy * c
        return (xr / self.semi_x) ** 2 + (yr / self.semi_y) ** 2 <= 1.0


@dataclass(frozen=True)
class PhantomSpec:
    """Grid dimensions plus the additive ellipse table."""

    rows: int
    cols: int
    pixel_size: float
    ellipses: tuple

    def __post_init__(self):
        if self.rows <= 0 or self.cols <= 0:
            raise ValueError("grid dimensions must be positive")
        if self.pixel_size <= 0.0:
            raise ValueError("pixel_size must be positive")
        object.__setattr__(self, "ellipses", tuple(self.ellipses))
        for e in self.ellipses:
            if not isinstance(e, Ellipse):
                raise TypeError("ellipses must be Ellipse instances")

    @property
    def extent_x(self) -> float:
        return self.cols * self.pixel_size

    @property
    def extent_y(self) -> float:
        return self.rows * self.pixel_size

    @property
    def diagonal(self) -> float:
        return math.hypot(self.extent_x, self.extent_y)


def pixel_centers(rows: int, cols: int, pixel_size: float):
    """Meshgrid of pixel-center coordinates, shapes (rows, cols)."""
    xs = (np.arange(cols) - (cols - 1) / 2.0) * pixel_size
    ys = ((rows - 1) / 2.0 - np.arange(rows)) * pixel_size
    return np.meshgrid(xs, ys, indexing="xy")


def rasterize_phantom(spec: PhantomSpec) -> ImageVector:
    """Sum the ellipse values at every pixel center, clamped to [0, 1]."""
    xx, yy = pixel_centers(spec.rows, spec.cols, spec.pixel_size)
    grid = np.zeros((spec.rows, spec.cols), dtype=np.float64)
    for e in spec.ellipses:
        grid[e.contains(xx, yy)] += e.value
    np.clip(grid, 0.0, 1.0, out=grid)
    return ImageVector(grid.ravel(), spec.rows, spec.cols)


@dataclass(frozen=True)
class ScanGeometry:
    """Parallel-beam views at equal angular increments.

    num_rays_per_view = None means "enough centered rays to cover the grid
    diagonal", resolved against the grid when the system is built.
    """

    num_views: int
    angle_increment: float
    detector_spacing: float
    num_rays_per_view: int | None = None

    def __post_init__(self):
        if self.num_views < 1:
            raise ValueError("num_views must be at least 1")
        if self.angle_increment <= 0.0:
            raise ValueError("angle_increment must be positive")
        if self.detector_spacing <= 0.0:
            raise ValueError("detector_spacing must be positive")
        if self.num_rays_per_view is not None and self.num_rays_per_view < 1:
            raise ValueError("num_rays_per_view must be positive when given")
        # parallel views repeat after half a turn
        if self.num_views * self.angle_increment > math.pi + self.angle_increment + 1e-9:
            raise ValueError("views sweep more than a half turn")

    def view_angle(self, view: int) -> float:
        return view * self.angle_increment

    def rays_for_grid(self, rows: int, cols: int, pixel_size: float) -> int:
        if self.num_rays_per_view is not None:
            return self.num_rays_per_view
        diagonal = math.hypot(rows * pixel_size, cols * pixel_size)
        return int(math.ceil(diagonal / self.detector_spacing)) + 1


_PARALLEL_EPS = 1e-14


def trace_ray(origin, direction, rows: int, cols: int, pixel_size: float):
    """Intersection lengths of one straight ray with the centered pixel grid.

    origin is any point on the ray (mm) and direction a unit vector; the
    whole line is traced, both directions.  Returns (indices, lengths) in
    entry-to-exit order along the direction: flat zero-based pixel indices
    (row * cols + col) and the matching chord lengths.  Rays missing the
    grid give two empty arrays.  Segment lengths telescope, so their sum is
    the in-grid chord length up to roundoff.
    """
    ox, oy = float(origin[0]), float(origin[1])
    dx, dy = float(direction[0]), float(direction[1])
    if abs(math.hypot(dx, dy) - 1.0) > 1e-9:
        raise ValueError("direction must be a unit vector")
    if rows <= 0 or cols <= 0 or pixel_size <= 0.0:
        raise ValueError("grid dimensions and pixel size must be positive")

    half_w = cols * pixel_size / 2.0
    half_h = rows * pixel_size / 2.0
    empty = (np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))

    t_enter, t_exit = -math.inf, math.inf
    for o, d, lo, hi in ((ox, dx, -half_w, half_w), (oy, dy, -half_h, half_h)):
        if abs(d) < _PARALLEL_EPS:
            if not (lo < o < hi):
                return empty
        else:
            ta, tb = (lo - o) / d, (hi - o) / d
            if ta > tb:
                ta, tb = tb, ta
            t_enter = max(t_enter, ta)
            t_exit = min(t_exit, tb)
    if t_exit - t_enter <= 1e-12 * pixel_size:
        return empty

    crossings = [np.array([t_enter, t_exit])]
    if abs(dx) >= _PARALLEL_EPS:
        tx = (-half_w + pixel_size * np.arange(cols + 1) - ox) / dx
        crossings.append(tx[(tx > t_enter) & (tx < t_exit)])
    if abs(dy) >= _PARALLEL_EPS:
        ty = (-half_h + pixel_size * np.arange(rows + 1) - oy) / dy
        crossings.append(ty[(ty > t_enter) & (ty < t_exit)])
    ts = np.sort(np.concatenate(crossings))

    lengths = np.diff(ts)
    keep = lengths > 1e-12 * pixel_size
    if not keep.any():
        return empty
    mids = ts[:-1][keep] + lengths[keep] / 2.0
    lengths = lengths[keep]
    mx = ox + dx * mids
    my = oy + dy * mids
    col = np.clip(np.floor((mx + half_w) / pixel_size).astype(np.int64), 0, cols - 1)
    row = np.clip(np.floor((half_h - my) / pixel_size).astype(np.int64), 0, rows - 1)
    flat = row * cols + col

    if np.unique(flat).size != flat.size:
        # corner-grazing ties can split a cell's chord; merge, keeping ray order
        first_seen = {}
        for pos, idx in enumerate(flat):
            key = int(idx)
            if key in first_seen:
                lengths[first_seen[key]] += lengths[pos]
                lengths[pos] = 0.0
            else:
                first_seen[key] = pos
        keep = lengths > 0.0
        flat, lengths = flat[keep], lengths[keep]
    return flat, lengths


def build_system(
    phantom: ImageVector,
    pixel_size: float,
    geometry: ScanGeometry,
) -> SparseLinearSystem:
    """Trace every scheduled ray and assemble the linear system A x = b.

    Rows are ordered view-major, detector index ascending within a view.
    The right-hand side is the exact forward projection of the phantom
    (noiseless data).  Rays that miss the grid, or graze it with a total
    chord below 1e-9 * pixel_size, are dropped; the count lands in
    metadata["dropped_rays"].  Within each row the weights are sorted by
    ascending pixel index.
    """
    values = phantom.values
    rays_per_view = geometry.rays_for_grid(phantom.rows, phantom.cols, pixel_size)
    rows_out = []
    dropped = 0
    tiny = 1e-9 * pixel_size
    for view in range(geometry.num_views):
        theta = geometry.view_angle(view)
        dx, dy = math.cos(theta), math.sin(theta)
        nx, ny = -dy, dx
        for m in range(rays_per_view):
            offset = (m - (rays_per_view - 1) / 2.0) * geometry.detector_spacing
            idx, lengths = trace_ray(
                (offset * nx, offset * ny), (dx, dy), phantom.rows, phantom.cols, pixel_size
            )
            if idx.size == 0 or float(lengths.sum()) < tiny:
                dropped += 1
                continue
            order = np.argsort(idx)
            rhs = float(np.dot(lengths, values[idx]))
            rows_out.append(SparseRow(idx[order], lengths[order], rhs))
    if not rows_out:
        raise ValueError("every scheduled ray missed the grid")
    metadata = {
        "num_views": geometry.num_views,
        "rays_per_view": rays_per_view,
        "dropped_rays": dropped,
        "pixel_size": pixel_size,
        "rows": phantom.rows,
        "cols": phantom.cols,
    }
    return SparseLinearSystem(rows_out, phantom.size, metadata)
