"""Input validation helpers shared by the estimator layer and the CLI."""

from __future__ import annotations

import math

import numpy as np

from .core import BoxBounds, ImageVector, SparseLinearSystem, system_from_dense

__all__ = ["as_system", "as_start_image", "check_shape"]


def as_system(data) -> SparseLinearSystem:
    """Accept a SparseLinearSystem or a dense (matrix, rhs) pair."""
    if isinstance(data, SparseLinearSystem):
        return data
    if isinstance(data, tuple) and len(data) == 2:
        return system_from_dense(data[0], data[1])
    raise TypeError(
        "expected a SparseLinearSystem or a (matrix, rhs) pair, "
        f"got {type(data).__name__}"
    )


def check_shape(system: SparseLinearSystem, shape) -> tuple:
    """Resolve (rows, cols) for a system, inferring a square grid if needed."""
    if shape is not None:
        rows, cols = int(shape[0]), int(shape[1])
        if rows * cols != system.num_cols:
            raise ValueError(
                f"shape {rows}x{cols} does not match {system.num_cols} unknowns"
            )
        return rows, cols
    side = math.isqrt(system.num_cols)
    if side * side != system.num_cols:
        raise ValueError(
            f"{system.num_cols} unknowns is not a square grid; pass image_shape"
        )
    return side, side


def as_start_image(x0, system: SparseLinearSystem, shape, bounds: BoxBounds) -> ImageVector:
    """Normalize a start iterate: None means the clipped zero image."""
    if x0 is None:
        rows, cols = check_shape(system, shape)
        fill = min(max(0.0, bounds.lower), bounds.upper)
        return ImageVector(np.full(rows * cols, fill), rows, cols)
    if isinstance(x0, ImageVector):
        if x0.size != system.num_cols:
            raise ValueError(
                f"x0 has {x0.size} entries but the system has {system.num_cols} columns"
            )
        return x0
    arr = np.asarray(x0, dtype=np.float64).ravel()
    rows, cols = check_shape(system, shape)
    if arr.size != system.num_cols:
        raise ValueError(
            f"x0 has {arr.size} entries but the system has {system.num_cols} columns"
        )
    return ImageVector(arr, rows, cols)
