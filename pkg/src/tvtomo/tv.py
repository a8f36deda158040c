"""Isotropic total variation of a raster image and its first-order calculus.

For an image X with G rows and H columns the value is

    tv(X) = sum_{g=1..G-1} sum_{h=1..H-1}
            sqrt((X[g+1,h] - X[g,h])^2 + (X[g,h+1] - X[g,h])^2)

(one-based indices).  Each pixel appears in at most three of the square-root
terms, so the partial derivative at a pixel is a sum of at most three
fractions whose denominators are the term values.  Two derivative flavours
are provided: a guarded gradient that returns an exact zero component for
any pixel touching a near-degenerate term (used to build unit-norm
nonascending directions), and a subgradient that keeps every differentiable
term and contributes zero for exactly-flat terms (used by the projected
subgradient solver).
"""

from __future__ import annotations

import numpy as np

from .core import ImageVector

__all__ = [
    "tv_value",
    "tv_gradient",
    "tv_subgradient",
    "nonascending_direction",
    "DEFAULT_GUARD",
]

DEFAULT_GUARD = 1e-20


def _diffs(grid):
    d1 = grid[1:, :-1] - grid[:-1, :-1]
    d2 = grid[:-1, 1:] - grid[:-1, :-1]
    return d1, d2


def _term_values(d1, d2):
    t = d1 * d1
    t += d2 * d2
    np.sqrt(t, out=t)
    return t


def value_of_grid(grid: np.ndarray) -> float:
    if grid.shape[0] < 2 or grid.shape[1] < 2:
        return 0.0
    d1, d2 = _diffs(grid)
    return float(_term_values(d1, d2).sum())


def _fractions(d1, d2, t):
    # d/t where t > 0, exact zero where the term is flat
    positive = t > 0.0
    f1 = np.zeros_like(d1)
    f2 = np.zeros_like(d2)
    np.divide(d1, t, out=f1, where=positive)
    np.divide(d2, t, out=f2, where=positive)
    return f1, f2


def _accumulate(grid, f1, f2):
    w = np.zeros_like(grid)
    w[:-1, :-1] -= f1
    w[:-1, :-1] -= f2
    w[1:, :-1] += f1
    w[:-1, 1:] += f2
    return w


def gradient_of_grid(grid: np.ndarray, guard: float = DEFAULT_GUARD) -> np.ndarray:
    if grid.shape[0] < 2 or grid.shape[1] < 2:
        return np.zeros_like(grid)
    d1, d2 = _diffs(grid)
    t = _term_values(d1, d2)
    f1, f2 = _fractions(d1, d2, t)
    w = _accumulate(grid, f1, f2)
    bad = t < guard
    if bad.any():
        # a pixel with any near-degenerate contributing term is zeroed whole
        mask = np.zeros(grid.shape, dtype=bool)
        mask[:-1, :-1] |= bad
        mask[1:, :-1] |= bad
        mask[:-1, 1:] |= bad
        w[mask] = 0.0
    return w


def subgradient_of_grid(grid: np.ndarray) -> np.ndarray:
    if grid.shape[0] < 2 or grid.shape[1] < 2:
        return np.zeros_like(grid)
    d1, d2 = _diffs(grid)
    t = _term_values(d1, d2)
    # flat terms contribute the zero element of their subdifferential
    f1, f2 = _fractions(d1, d2, t)
    return _accumulate(grid, f1, f2)


def _grid_of(image: ImageVector) -> np.ndarray:
    if not isinstance(image, ImageVector):
        raise TypeError("expected an ImageVector")
    return image.as_grid()


def tv_value(image: ImageVector) -> float:
    """Total variation of the image (zero when both difference stencils vanish)."""
    return value_of_grid(_grid_of(image))


def tv_gradient(image: ImageVector, guard: float = DEFAULT_GUARD) -> np.ndarray:
    """Guarded gradient as a flat vector.

    Every component is the sum of at most three fractions; a component is
    exactly zero whenever any of its contributing denominators falls below
    ``guard`` in absolute value.
    """
    if guard <= 0.0:
        raise ValueError("guard must be positive")
    return gradient_of_grid(_grid_of(image), guard).ravel()


def tv_subgradient(image: ImageVector) -> np.ndarray:
    """A member of the TV subdifferential as a flat vector.

    Coincides with ``tv_gradient`` wherever the guard does not fire; flat
    terms contribute zero, which keeps the subgradient inequality
    tv(y) >= tv(x) + <s, y - x> valid everywhere.
    """
    return subgradient_of_grid(_grid_of(image)).ravel()


def nonascending_direction(image: ImageVector, guard: float = DEFAULT_GUARD) -> np.ndarray:
    """Unit-norm direction along which TV does not increase locally.

    Returns the zero vector when the guarded gradient vanishes, otherwise
    the negated normalized gradient; the norm is exactly 0 or 1.
    """
    w = tv_gradient(image, guard)
    norm = float(np.linalg.norm(w))
    if norm == 0.0:
        return np.zeros_like(w)
    return -w / norm
