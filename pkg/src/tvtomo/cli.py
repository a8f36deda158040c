"""Command line workbench: phantom, simulate, run, compare.

phantom    rasterize the configured ellipse phantom, write raw + PGM images
simulate   trace the configured scan over a phantom image, write the system
run        reconstruct with one solver (basic | sm | psm), write trace + summary
compare    run psm, then chase its achieved accuracy with sm, report both

Exit codes: 0 on success, 2 when a solver exhausted its budget (partial
artifacts are still written) and for usage or config errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .core import BoxBounds, ImageVector, proximity
from .feasibility import run_feasibility
from .io import (
    DEFAULT_WINDOW,
    ConfigError,
    load_image,
    load_system,
    parse_config,
    save_image,
    save_pgm,
    save_system,
    write_json,
)
from .psm import run_projected_subgradient
from .superiorize import run_superiorized
from .tv import tv_value

__all__ = ["main", "run_comparison"]


def _parse_window(raw: str):
    parts = raw.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("window must be 'lo,hi'")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError("window bounds must be numbers") from None
    if not hi > lo:
        raise argparse.ArgumentTypeError("window needs lo < hi")
    return lo, hi


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tvtomo",
        description="Total-variation tomography workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="config file path")
    common.add_argument("--out-dir", default=".", help="output directory (created if missing)")
    common.add_argument("--seed", type=int, default=None, help="seed recorded in summaries")
    common.add_argument(
        "--window",
        type=_parse_window,
        default=DEFAULT_WINDOW,
        metavar="LO,HI",
        help="display window for PGM export",
    )

    sub.add_parser("phantom", parents=[common], help="rasterize the configured phantom")

    p_sim = sub.add_parser("simulate", parents=[common], help="trace the scan, write the system")
    p_sim.add_argument("--phantom", required=True, help="phantom image file")

    solver_common = argparse.ArgumentParser(add_help=False, parents=[common])
    solver_common.add_argument("--system", required=True, help="system container file")
    solver_common.add_argument("--epsilon", type=float, default=None, help="target residual norm")
    solver_common.add_argument(
        "--max-iter", type=int, default=None, help="iteration budget override"
    )

    p_run = sub.add_parser("run", parents=[solver_common], help="run one solver")
    p_run.add_argument("--solver", required=True, choices=("basic", "sm", "psm"))
    p_run.add_argument("--x0", default=None, help="start image file (default: zero image)")

    sub.add_parser("compare", parents=[solver_common], help="psm first, then sm at its accuracy")
    return parser


def _start_image(args, cfg, system):
    rows, cols = cfg.image_shape()
    if rows * cols != system.num_cols:
        raise ConfigError(
            f"{cfg.path}: config grid {rows}x{cols} does not match the "
            f"system's {system.num_cols} unknowns"
        )
    if getattr(args, "x0", None):
        image = load_image(args.x0)
        if (image.rows, image.cols) != (rows, cols):
            raise ConfigError(f"{args.x0}: start image is {image.rows}x{image.cols}, expected {rows}x{cols}")
        return image
    return ImageVector(np.zeros(rows * cols), rows, cols)


def _write_solver_artifacts(out_dir, name, result, window, summary):
    save_image(result.image, out_dir / f"{name}_image.sctv")
    save_pgm(result.image, out_dir / f"{name}_image.pgm", window)
    result.trace.to_csv(out_dir / f"{name}_trace.csv")
    write_json(out_dir / f"{name}_summary.json", summary)


def _feasibility_summary(solver, result, epsilon, seed):
    return {
        "solver": solver,
        "epsilon": epsilon,
        "iterations": result.iterations,
        "final_prox": result.prox,
        "final_tv": result.phi,
        "seconds": result.seconds,
        "status": result.status,
        "seed": seed,
    }


def _sm_summary(result, epsilon, seed):
    summary = _feasibility_summary("sm", result, epsilon, seed)
    summary["total_beta_consumed"] = result.total_beta_drawn
    summary["total_beta_accepted"] = result.total_beta_accepted
    summary["ell_final"] = result.ell_final
    return summary


def _psm_summary(result, config, seed):
    summary = {
        "solver": "psm",
        "epsilon": result.achieved_epsilon,
        "achieved_epsilon": result.achieved_epsilon,
        "iterations": result.iterations,
        "final_prox": result.achieved_epsilon,
        "final_tv": result.phi,
        "seconds": result.seconds,
        "status": result.status,
        "seed": seed,
        "inner_tol_rel": config.psm_inner_tol_rel,
        "inner_max": config.psm_max_inner,
        "inner_solves": [asdict(rec) for rec in result.inner_solves],
    }
    return summary


def cmd_phantom(args) -> int:
    cfg = parse_config(args.config)
    spec = cfg.phantom_spec()
    from .geometry import rasterize_phantom

    image = rasterize_phantom(spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_image(image, out_dir / "phantom.sctv")
    save_pgm(image, out_dir / "phantom.pgm", args.window)
    tv = tv_value(image)
    write_json(
        out_dir / "phantom.json",
        {
            "rows": image.rows,
            "cols": image.cols,
            "pixel_size": spec.pixel_size,
            "num_ellipses": len(spec.ellipses),
            "tv": tv,
            "min": float(image.values.min()),
            "max": float(image.values.max()),
            "seed": args.seed,
        },
    )
    print(f"phantom {image.rows}x{image.cols} tv={tv:.6g} -> {out_dir / 'phantom.sctv'}")
    return 0


def cmd_simulate(args) -> int:
    cfg = parse_config(args.config)
    geometry = cfg.scan_geometry()
    phantom = load_image(args.phantom)
    pixel_size = cfg.require("pixel_size")
    from .geometry import build_system

    system = build_system(phantom, pixel_size, geometry)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_system(system, out_dir / "system.scts")
    check = proximity(system, phantom)
    write_json(
        out_dir / "system.json",
        {
            "num_rows": system.num_rows,
            "num_cols": system.num_cols,
            "nnz": system.nnz,
            "rhs_norm": system.rhs_norm,
            "phantom_prox": check,
            "dropped_rays": system.metadata.get("dropped_rays"),
            "rays_per_view": system.metadata.get("rays_per_view"),
            "num_views": system.metadata.get("num_views"),
            "seed": args.seed,
        },
    )
    print(
        f"system {system.num_rows}x{system.num_cols} nnz={system.nnz} "
        f"phantom_prox={check:.3e} -> {out_dir / 'system.scts'}"
    )
    return 0


def cmd_run(args) -> int:
    cfg = parse_config(args.config)
    system = load_system(args.system)
    bounds = cfg.box_bounds()
    config = cfg.run_config(epsilon=args.epsilon, max_iterations=args.max_iter)
    x0 = _start_image(args, cfg, system)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.solver == "psm":
        result = run_projected_subgradient(system, bounds, x0, config)
        summary = _psm_summary(result, config, args.seed)
        _write_solver_artifacts(out_dir, "psm", result, args.window, summary)
        print(
            f"psm {result.status}: iterations={result.iterations} "
            f"tv={result.phi:.6g} prox={result.achieved_epsilon:.3e} "
            f"seconds={result.seconds:.2f}"
        )
        return 0 if result.converged else 2

    if config.epsilon is None:
        raise ConfigError(
            f"{cfg.path}: solver {args.solver!r} needs epsilon (config key or --epsilon)"
        )
    if args.solver == "basic":
        result = run_feasibility(
            system, bounds, x0, epsilon=config.epsilon, max_iterations=config.max_iterations
        )
        summary = _feasibility_summary("basic", result, config.epsilon, args.seed)
    else:
        result = run_superiorized(system, bounds, x0, config)
        summary = _sm_summary(result, config.epsilon, args.seed)
    _write_solver_artifacts(out_dir, args.solver, result, args.window, summary)
    print(
        f"{args.solver} {result.status}: iterations={result.iterations} "
        f"tv={result.phi:.6g} prox={result.prox:.3e} seconds={result.seconds:.2f}"
    )
    return 0 if result.converged else 2


def run_comparison(system, bounds, x0, config):
    """psm first, then sm chasing the psm run's achieved residual.

    Returns (report, psm_result, sm_result); sm_result is None when the psm
    accuracy is unavailable (no finite achieved epsilon).
    """
    psm_result = run_projected_subgradient(system, bounds, x0, config)
    epsilon_used = psm_result.achieved_epsilon
    sm_result = None
    if epsilon_used > 0.0 and np.isfinite(epsilon_used):
        sm_result = run_superiorized(system, bounds, x0, config, epsilon=epsilon_used)
    report = {
        "epsilon_used": epsilon_used,
        "psm": {
            "tv": psm_result.phi,
            "prox": psm_result.achieved_epsilon,
            "iterations": psm_result.iterations,
            "seconds": psm_result.seconds,
            "status": psm_result.status,
        },
    }
    if sm_result is not None:
        report["sm"] = {
            "tv": sm_result.phi,
            "prox": sm_result.prox,
            "iterations": sm_result.iterations,
            "seconds": sm_result.seconds,
            "status": sm_result.status,
        }
        report["sm_tv_leq_psm_tv"] = bool(sm_result.phi <= psm_result.phi)
        if sm_result.seconds > 0.0:
            report["speedup"] = psm_result.seconds / sm_result.seconds
        report["success"] = bool(psm_result.converged and sm_result.converged)
    else:
        report["success"] = False
    return report, psm_result, sm_result


def cmd_compare(args) -> int:
    cfg = parse_config(args.config)
    system = load_system(args.system)
    bounds = cfg.box_bounds()
    config = cfg.run_config(epsilon=args.epsilon, max_iterations=args.max_iter)
    x0 = _start_image(args, cfg, system)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    report, psm_result, sm_result = run_comparison(system, bounds, x0, config)
    report["seed"] = args.seed
    _write_solver_artifacts(
        out_dir, "psm", psm_result, args.window, _psm_summary(psm_result, config, args.seed)
    )
    if sm_result is not None:
        _write_solver_artifacts(
            out_dir,
            "sm",
            sm_result,
            args.window,
            _sm_summary(sm_result, report["epsilon_used"], args.seed),
        )
    write_json(out_dir / "compare.json", report)

    print(f"epsilon_used = {report['epsilon_used']:.6e}")
    print(f"{'solver':<8}{'tv':>12}{'prox':>14}{'iterations':>12}{'seconds':>10}")
    for name in ("psm", "sm"):
        if name in report:
            row = report[name]
            print(
                f"{name:<8}{row['tv']:>12.4f}{row['prox']:>14.4e}"
                f"{row['iterations']:>12d}{row['seconds']:>10.2f}"
            )
    return 0 if report.get("success") else 2


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "phantom": cmd_phantom,
        "simulate": cmd_simulate,
        "run": cmd_run,
        "compare": cmd_compare,
    }
    try:
        return handlers[args.command](args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
