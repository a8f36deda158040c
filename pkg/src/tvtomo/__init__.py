"""Total-variation tomography workbench.

Builds sparse parallel-beam scan models of ellipse phantoms and compares two
ways of lowering total variation subject to the measurements: a superiorized
sequential projection loop and a projected subgradient method whose metric
projection is computed through an accelerated dual ascent.
"""

from .core import (
    BoxBounds,
    EpsilonOutput,
    ImageVector,
    IterationTrace,
    RunConfig,
    SparseLinearSystem,
    SparseRow,
    TraceRecord,
    proximity,
    raster_get,
    system_from_dense,
)
from .estimators import ART, ProjectedSubgradient, SuperiorizedART
from .feasibility import (
    FeasibilityResult,
    apply_feasibility_operator,
    art_row_update,
    box_project,
    run_feasibility,
)
from .geometry import (
    Ellipse,
    PhantomSpec,
    ScanGeometry,
    build_system,
    pixel_centers,
    rasterize_phantom,
    trace_ray,
)
from .io import (
    DEFAULT_WINDOW,
    ConfigError,
    WorkbenchConfig,
    bundled_config_path,
    load_image,
    load_system,
    parse_config,
    save_image,
    save_pgm,
    save_system,
    write_json,
)
from .psm import (
    ProjectionResult,
    PsmResult,
    dual_objective,
    project_onto_feasible_set,
    run_projected_subgradient,
)
from .superiorize import (
    PerturbationSchedule,
    SuperiorizedResult,
    run_superiorized,
)
from .tv import nonascending_direction, tv_gradient, tv_subgradient, tv_value

__version__ = "0.1.0"

__all__ = [
    "ART",
    "BoxBounds",
    "ConfigError",
    "DEFAULT_WINDOW",
    "Ellipse",
    "EpsilonOutput",
    "FeasibilityResult",
    "ImageVector",
    "IterationTrace",
    "PerturbationSchedule",
    "PhantomSpec",
    "ProjectedSubgradient",
    "ProjectionResult",
    "PsmResult",
    "RunConfig",
    "ScanGeometry",
    "SparseLinearSystem",
    "SparseRow",
    "SuperiorizedART",
    "SuperiorizedResult",
    "TraceRecord",
    "WorkbenchConfig",
    "apply_feasibility_operator",
    "art_row_update",
    "box_project",
    "build_system",
    "bundled_config_path",
    "dual_objective",
    "load_image",
    "load_system",
    "nonascending_direction",
    "parse_config",
    "pixel_centers",
    "project_onto_feasible_set",
    "proximity",
    "raster_get",
    "rasterize_phantom",
    "run_feasibility",
    "run_projected_subgradient",
    "run_superiorized",
    "save_image",
    "save_pgm",
    "save_system",
    "write_json",
    "system_from_dense",
    "trace_ray",
    "tv_gradient",
    "tv_subgradient",
    "tv_value",
]
