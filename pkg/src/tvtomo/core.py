"""Shared data containers for the workbench.

Everything downstream (ray tracing, feasibility seeking, superiorization,
projected subgradient runs) speaks in terms of these types: flat raster
images, sparse row systems with cached row norms, box bounds, iteration
traces and run parameter bundles.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields
from functools import cached_property

import numpy as np

__all__ = [
    "ImageVector",
    "SparseRow",
    "SparseLinearSystem",
    "BoxBounds",
    "TraceRecord",
    "IterationTrace",
    "EpsilonOutput",
    "RunConfig",
    "proximity",
    "raster_get",
    "system_from_dense",
]


def _as_float_vector(values, name="values"):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


@dataclass(eq=False)
class ImageVector:
    """A rows*cols image stored as one flat float vector.

    Raster convention: the one-based entry (g, h), with g counting rows from
    the top and h counting columns from the left, lives at flat offset
    (g - 1) * cols + (h - 1).  ``as_grid`` returns the matching 2-D view.
    """

    values: np.ndarray
    rows: int
    cols: int

    def __post_init__(self):
        self.values = _as_float_vector(self.values)
        self.rows = int(self.rows)
        self.cols = int(self.cols)
        if self.rows <= 0 or self.cols <= 0:
            raise ValueError("rows and cols must be positive")
        if self.values.size != self.rows * self.cols:
            raise ValueError(
                f"expected {self.rows * self.cols} values for a "
                f"{self.rows}x{self.cols} raster, got {self.values.size}"
            )

    @property
    def size(self) -> int:
        return self.values.size

    def as_grid(self) -> np.ndarray:
        """Zero-copy (rows, cols) view of the flat vector."""
        return self.values.reshape(self.rows, self.cols)

    def copy(self) -> "ImageVector":
        return ImageVector(self.values.copy(), self.rows, self.cols)


def raster_get(image: ImageVector, g: int, h: int) -> float:
    """One-based raster lookup, entry (g, h) of the image grid."""
    if not (1 <= g <= image.rows and 1 <= h <= image.cols):
        raise IndexError(
            f"raster index ({g}, {h}) outside 1..{image.rows} x 1..{image.cols}"
        )
    return float(image.values[(g - 1) * image.cols + (h - 1)])


@dataclass(eq=False)
class SparseRow:
    """One linear equation <a, x> = rhs stored sparsely.

    ``indices`` are strictly increasing zero-based column positions and
    ``weights`` the matching strictly positive coefficients (intersection
    lengths when the row comes from ray tracing).  The squared row norm is
    cached because every row action divides by it.
    """

    indices: np.ndarray
    weights: np.ndarray
    rhs: float
    squared_norm: float = field(init=False)

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.indices.ndim != 1 or self.weights.ndim != 1:
            raise ValueError("indices and weights must be one-dimensional")
        if self.indices.size != self.weights.size:
            raise ValueError("indices and weights must have equal length")
        if self.indices.size == 0:
            raise ValueError("a sparse row needs at least one entry")
        if np.any(self.indices < 0):
            raise ValueError("indices must be nonnegative")
        if self.indices.size > 1 and np.any(np.diff(self.indices) <= 0):
            raise ValueError("indices must be strictly increasing")
        if not np.all(self.weights > 0.0):
            raise ValueError("weights must be strictly positive")
        self.rhs = float(self.rhs)
        self.squared_norm = float(np.dot(self.weights, self.weights))

    @property
    def nnz(self) -> int:
        return self.indices.size

    def dot(self, x: np.ndarray) -> float:
        return float(np.dot(self.weights, x[self.indices]))


@dataclass(eq=False)
class SparseLinearSystem:
    """A stack of sparse rows over a fixed number of unknowns.

    Treated as immutable once built; the cached CSR form and right-hand side
    are shared by every solver.  ``metadata`` carries build diagnostics, for
    example how many candidate rays were dropped for missing the grid.
    """

    rows: list
    num_cols: int
    metadata: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.num_cols = int(self.num_cols)
        if self.num_cols <= 0:
            raise ValueError("num_cols must be positive")
        if not self.rows:
            raise ValueError("a system needs at least one row")
        self.rows = list(self.rows)
        for i, row in enumerate(self.rows):
            if not isinstance(row, SparseRow):
                raise TypeError(f"row {i} is not a SparseRow")
            if row.indices[-1] >= self.num_cols:
                raise ValueError(
                    f"row {i} references column {int(row.indices[-1])} "
                    f"but the system has only {self.num_cols}"
                )

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    @property
    def nnz(self) -> int:
        return int(sum(row.nnz for row in self.rows))

    @cached_property
    def rhs_vector(self) -> np.ndarray:
        return np.array([row.rhs for row in self.rows], dtype=np.float64)

    @cached_property
    def squared_norms(self) -> np.ndarray:
        return np.array([row.squared_norm for row in self.rows], dtype=np.float64)

    @cached_property
    def csr_parts(self):
        """(indptr, indices, data) arrays of the stacked rows."""
        indptr = np.zeros(self.num_rows + 1, dtype=np.int64)
        for i, row in enumerate(self.rows):
            indptr[i + 1] = indptr[i] + row.nnz
        indices = np.concatenate([row.indices for row in self.rows])
        data = np.concatenate([row.weights for row in self.rows])
        return indptr, indices, data

    @cached_property
    def sweep_plan(self):
        """Ranges (start, end) of consecutive rows with pairwise disjoint support.

        Rows inside one range touch no common column, so applying their row
        actions in a batch reads and writes exactly the values a strictly
        sequential pass would.  Parallel rays of one view usually land in one
        range; worst case every range holds a single row.
        """
        indptr, indices, _ = self.csr_parts
        touched = np.zeros(self.num_cols, dtype=bool)
        plan = []
        start = 0
        for i in range(self.num_rows):
            idx = indices[indptr[i] : indptr[i + 1]]
            if touched[idx].any():
                plan.append((start, i))
                start = i
                touched[:] = False
            touched[idx] = True
        plan.append((start, self.num_rows))
        return plan

    @cached_property
    def sweep_segments(self):
        """Pre-sliced per-range arrays backing the batched sequential sweep.

        One tuple (cols, weights, starts, counts, rhs, squared_norms) per
        sweep_plan range; all entries are views into the cached CSR arrays.
        """
        indptr, indices, data = self.csr_parts
        rhs = self.rhs_vector
        sq = self.squared_norms
        segments = []
        for start, end in self.sweep_plan:
            lo, hi = indptr[start], indptr[end]
            starts = indptr[start:end] - lo
            counts = np.diff(indptr[start : end + 1])
            segments.append(
                (indices[lo:hi], data[lo:hi], starts, counts, rhs[start:end], sq[start:end])
            )
        return segments

    @cached_property
    def matrix(self):
        """scipy CSR matrix of shape (num_rows, num_cols)."""
        from scipy.sparse import csr_matrix

        indptr, indices, data = self.csr_parts
        return csr_matrix((data, indices, indptr), shape=(self.num_rows, self.num_cols))

    @cached_property
    def matrix_transpose(self):
        """CSR transpose, cached because the dual solver applies it every step."""
        return self.matrix.T.tocsr()

    @cached_property
    def rhs_norm(self) -> float:
        return float(np.linalg.norm(self.rhs_vector))

    @cached_property
    def frobenius_norm(self) -> float:
        return float(math.sqrt(float(np.sum(self.squared_norms))))


def proximity(system: SparseLinearSystem, x) -> float:
    """Euclidean residual norm sqrt(sum_i (rhs_i - <a_i, x>)^2).

    Zero exactly on solutions of the system; 1-Lipschitz with constant at
    most the Frobenius norm of the stacked rows.
    """
    arr = x.values if isinstance(x, ImageVector) else _as_float_vector(x, "x")
    if arr.size != system.num_cols:
        raise ValueError(
            f"x has {arr.size} entries but the system has {system.num_cols} columns"
        )
    residual = system.rhs_vector - system.matrix @ arr
    return float(np.linalg.norm(residual))


def system_from_dense(a, b, metadata=None) -> SparseLinearSystem:
    """Build a system from a dense matrix and right-hand side.

    Zero rows are dropped (their count lands in metadata["dropped_rows"]).
    Intended for small hand-written systems; coefficients must be >= 0
    because sparse rows store positive weights only.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("a must be a matrix")
    if b.shape != (a.shape[0],):
        raise ValueError("b must have one entry per row of a")
    rows = []
    dropped = 0
    for i in range(a.shape[0]):
        idx = np.nonzero(a[i])[0]
        if idx.size == 0:
            dropped += 1
            continue
        rows.append(SparseRow(idx, a[i, idx], float(b[i])))
    meta = dict(metadata or {})
    meta["dropped_rows"] = dropped
    return SparseLinearSystem(rows, a.shape[1], meta)


@dataclass(frozen=True)
class BoxBounds:
    """Per-pixel interval constraints, the unit box by default."""

    lower: float = 0.0
    upper: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ValueError("bounds must be finite")
        if not self.lower < self.upper:
            raise ValueError("lower bound must be strictly below upper bound")

    def clip(self, x: np.ndarray) -> np.ndarray:
        return np.clip(x, self.lower, self.upper)

    def contains(self, x, tol: float = 0.0) -> bool:
        arr = x.values if isinstance(x, ImageVector) else np.asarray(x, dtype=np.float64)
        return bool(np.all(arr >= self.lower - tol) and np.all(arr <= self.upper + tol))


@dataclass(frozen=True)
class TraceRecord:
    k: int
    prox: float
    phi: float
    seconds: float


@dataclass(eq=False)
class IterationTrace:
    """Per-iterate log of (k, proximity, objective, elapsed wall seconds)."""

    records: list = field(default_factory=list)

    def append(self, k: int, prox: float, phi: float, seconds: float) -> None:
        if self.records:
            last = self.records[-1]
            if k <= last.k:
                raise ValueError("iteration numbers must strictly increase")
            if seconds < last.seconds:
                raise ValueError("elapsed seconds cannot decrease")
        if prox < 0.0:
            raise ValueError("proximity cannot be negative")
        self.records.append(TraceRecord(int(k), float(prox), float(phi), float(seconds)))

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def final(self) -> TraceRecord:
        if not self.records:
            raise ValueError("trace is empty")
        return self.records[-1]

    def prox_values(self) -> np.ndarray:
        return np.array([r.prox for r in self.records], dtype=np.float64)

    def phi_values(self) -> np.ndarray:
        return np.array([r.phi for r in self.records], dtype=np.float64)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "prox", "phi", "seconds"])
            for r in self.records:
                writer.writerow(
                    [r.k, format(r.prox, ".17g"), format(r.phi, ".17g"), format(r.seconds, ".6f")]
                )

    @classmethod
    def from_csv(cls, path) -> "IterationTrace":
        trace = cls()
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["k", "prox", "phi", "seconds"]:
                raise ValueError(f"unexpected trace header {header!r}")
            for row in reader:
                trace.append(int(row[0]), float(row[1]), float(row[2]), float(row[3]))
        return trace


@dataclass(eq=False)
class EpsilonOutput:
    """First iterate whose proximity dropped to the requested epsilon."""

    iterate: ImageVector
    index: int
    prox_value: float


@dataclass(frozen=True)
class RunConfig:
    """Solver tuning knobs with the reference defaults.

    epsilon has no universal default; feasibility-seeking runs must receive
    it explicitly (config file or CLI flag).
    """

    eta_base: float = 0.999
    perturbations_per_sweep: int = 9
    step_exponent: float = 0.25
    psm_check_period: int = 10
    psm_improvement_divisor: float = 5000.0
    nesterov_alpha_init: float = 10.0
    derivative_guard: float = 1e-20
    epsilon: float | None = None
    max_iterations: int = 5000
    psm_inner_tol_rel: float = 1e-6
    psm_max_inner: int = 2000
    psm_warm_start: bool = False
    schedule_draw_cap: int = 1_000_000

    def __post_init__(self):
        if not 0.0 < self.eta_base < 1.0:
            raise ValueError("eta_base must lie strictly between 0 and 1")
        if self.perturbations_per_sweep < 0:
            raise ValueError("perturbations_per_sweep cannot be negative")
        if self.step_exponent <= 0.0:
            raise ValueError("step_exponent must be positive")
        if self.psm_check_period < 1:
            raise ValueError("psm_check_period must be at least 1")
        if self.psm_improvement_divisor <= 1.0:
            raise ValueError("psm_improvement_divisor must exceed 1")
        if self.nesterov_alpha_init <= 0.0:
            raise ValueError("nesterov_alpha_init must be positive")
        if self.derivative_guard <= 0.0:
            raise ValueError("derivative_guard must be positive")
        if self.epsilon is not None and self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive when given")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.psm_inner_tol_rel <= 0.0:
            raise ValueError("psm_inner_tol_rel must be positive")
        if self.psm_max_inner < 1:
            raise ValueError("psm_max_inner must be at least 1")
        if self.schedule_draw_cap < 1:
            raise ValueError("schedule_draw_cap must be at least 1")

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}
