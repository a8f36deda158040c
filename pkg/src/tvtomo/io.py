"""File formats: raw image and system containers, PGM export, config files.

Image container ("SCTV"): 16-byte header of 4-byte magic b"SCTV", little
endian u32 rows, u32 cols and 4 reserved zero bytes, followed by rows*cols
little endian float64 raster values.

System container ("SCTS"): 4-byte magic b"SCTS", little endian u32 num_rows,
u32 num_cols, then per row u32 nnz, nnz u32 zero-based column indices, nnz
float64 weights and one float64 right-hand side.

Config files are line oriented "key = value" pairs with '#' comments plus an
optional "[ellipses]" section whose rows are six whitespace-separated
numbers: center_x center_y semi_x semi_y rotation_deg value.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .core import BoxBounds, ImageVector, RunConfig, SparseLinearSystem, SparseRow
from .geometry import Ellipse, PhantomSpec, ScanGeometry

__all__ = [
    "save_image",
    "load_image",
    "save_pgm",
    "save_system",
    "load_system",
    "ConfigError",
    "WorkbenchConfig",
    "parse_config",
    "bundled_config_path",
    "write_json",
    "DEFAULT_WINDOW",
]

_IMAGE_MAGIC = b"SCTV"
_SYSTEM_MAGIC = b"SCTS"

# display window for the reference head phantom's soft-tissue band
DEFAULT_WINDOW = (0.204, 0.21675)


def save_image(image: ImageVector, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_IMAGE_MAGIC)
        fh.write(struct.pack("<II", image.rows, image.cols))
        fh.write(b"\x00" * 4)
        fh.write(image.values.astype("<f8").tobytes())


def load_image(path) -> ImageVector:
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16 or header[:4] != _IMAGE_MAGIC:
            raise ValueError(f"{path}: not an image container")
        rows, cols = struct.unpack("<II", header[4:12])
        if header[12:16] != b"\x00" * 4:
            raise ValueError(f"{path}: nonzero reserved header bytes")
        payload = fh.read()
    expected = rows * cols * 8
    if len(payload) != expected:
        raise ValueError(f"{path}: expected {expected} payload bytes, got {len(payload)}")
    values = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    return ImageVector(values, rows, cols)


def save_pgm(image: ImageVector, path, window=DEFAULT_WINDOW) -> None:
    """16-bit binary PGM with a linear display window.

    Values at or below window[0] map to 0, at or above window[1] to 65535.
    """
    lo, hi = float(window[0]), float(window[1])
    if not hi > lo:
        raise ValueError("window must satisfy lo < hi")
    scaled = (image.as_grid() - lo) / (hi - lo)
    np.clip(scaled, 0.0, 1.0, out=scaled)
    pixels = np.round(scaled * 65535.0).astype(">u2")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{image.cols} {image.rows}\n65535\n".encode("ascii"))
        fh.write(pixels.tobytes())


def save_system(system: SparseLinearSystem, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_SYSTEM_MAGIC)
        fh.write(struct.pack("<II", system.num_rows, system.num_cols))
        for row in system.rows:
            fh.write(struct.pack("<I", row.nnz))
            fh.write(row.indices.astype("<u4").tobytes())
            fh.write(row.weights.astype("<f8").tobytes())
            fh.write(struct.pack("<d", row.rhs))


def load_system(path) -> SparseLinearSystem:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != _SYSTEM_MAGIC:
        raise ValueError(f"{path}: not a system container")
    num_rows, num_cols = struct.unpack("<II", data[4:12])
    pos = 12
    rows = []
    for i in range(num_rows):
        if pos + 4 > len(data):
            raise ValueError(f"{path}: truncated at row {i}")
        (nnz,) = struct.unpack("<I", data[pos : pos + 4])
        pos += 4
        need = nnz * 4 + nnz * 8 + 8
        if pos + need > len(data):
            raise ValueError(f"{path}: truncated at row {i}")
        indices = np.frombuffer(data, dtype="<u4", count=nnz, offset=pos).astype(np.int64)
        pos += nnz * 4
        weights = np.frombuffer(data, dtype="<f8", count=nnz, offset=pos).astype(np.float64)
        pos += nnz * 8
        (rhs,) = struct.unpack_from("<d", data, pos)
        pos += 8
        rows.append(SparseRow(indices, weights, rhs))
    if pos != len(data):
        raise ValueError(f"{path}: {len(data) - pos} trailing bytes")
    return SparseLinearSystem(rows, num_cols)


class ConfigError(ValueError):
    """Malformed config file, message carries path and line number."""


_SCALAR_KEYS = {
    "width": int,
    "height": int,
    "pixel_size": float,
    "num_views": int,
    "angle_increment_deg": float,
    "detector_spacing": float,
    "num_rays_per_view": int,
    "eta_base": float,
    "perturbations_per_sweep": int,
    "step_exponent": float,
    "psm_check_period": int,
    "psm_improvement_divisor": float,
    "nesterov_alpha_init": float,
    "derivative_guard": float,
    "epsilon": float,
    "max_iterations": int,
    "psm_inner_tol_rel": float,
    "psm_max_inner": int,
    "psm_warm_start": bool,
    "lower_bound": float,
    "upper_bound": float,
}


def _parse_bool(raw: str) -> bool:
    lowered = raw.lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


@dataclass(eq=False)
class WorkbenchConfig:
    """Typed view over one parsed config file."""

    path: str
    values: dict
    ellipses: list

    def has(self, key: str) -> bool:
        return key in self.values

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def require(self, key: str):
        if key not in self.values:
            raise ConfigError(f"{self.path}: missing required key {key!r}")
        return self.values[key]

    def phantom_spec(self) -> PhantomSpec:
        return PhantomSpec(
            rows=self.require("height"),
            cols=self.require("width"),
            pixel_size=self.require("pixel_size"),
            ellipses=tuple(self.ellipses),
        )

    def scan_geometry(self) -> ScanGeometry:
        return ScanGeometry(
            num_views=self.require("num_views"),
            angle_increment=math.radians(self.require("angle_increment_deg")),
            detector_spacing=self.require("detector_spacing"),
            num_rays_per_view=self.get("num_rays_per_view"),
        )

    def image_shape(self) -> tuple:
        return (self.require("height"), self.require("width"))

    def box_bounds(self) -> BoxBounds:
        return BoxBounds(self.get("lower_bound", 0.0), self.get("upper_bound", 1.0))

    def run_config(self, **overrides) -> RunConfig:
        kwargs = {}
        for key in (
            "eta_base",
            "perturbations_per_sweep",
            "step_exponent",
            "psm_check_period",
            "psm_improvement_divisor",
            "nesterov_alpha_init",
            "derivative_guard",
            "epsilon",
            "max_iterations",
            "psm_inner_tol_rel",
            "psm_max_inner",
            "psm_warm_start",
        ):
            if key in self.values:
                kwargs[key] = self.values[key]
        kwargs.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig(**kwargs)


def parse_config(path) -> WorkbenchConfig:
    values = {}
    ellipses = []
    section = None
    with open(path, encoding="utf-8") as fh:
        lines = fh.readlines()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section != "ellipses":
                raise ConfigError(f"{path}:{lineno}: unknown section [{section}]")
            continue
        if section == "ellipses":
            parts = line.split()
            if len(parts) != 6:
                raise ConfigError(
                    f"{path}:{lineno}: ellipse rows need 6 numbers "
                    "(center_x center_y semi_x semi_y rotation_deg value)"
                )
            try:
                cx, cy, sx, sy, rot_deg, val = (float(p) for p in parts)
            except ValueError:
                raise ConfigError(f"{path}:{lineno}: ellipse row is not numeric") from None
            try:
                ellipses.append(Ellipse(cx, cy, sx, sy, math.radians(rot_deg), val))
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from None
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, _, raw_value = line.partition("=")
        key = key.strip()
        raw_value = raw_value.strip()
        if key not in _SCALAR_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        caster = _SCALAR_KEYS[key]
        try:
            if caster is bool:
                values[key] = _parse_bool(raw_value)
            elif caster is int:
                values[key] = int(raw_value)
            else:
                values[key] = float(raw_value)
        except ValueError:
            raise ConfigError(
                f"{path}:{lineno}: cannot parse {raw_value!r} as {caster.__name__} for {key!r}"
            ) from None
    return WorkbenchConfig(path=str(path), values=values, ellipses=ellipses)


def bundled_config_path(name: str) -> str:
    """Filesystem path of a config shipped with the package (e.g. 'desk64')."""
    candidate = resources.files("tvtomo").joinpath("configs", f"{name}.cfg")
    if not candidate.is_file():
        raise FileNotFoundError(f"no bundled config named {name!r}")
    return str(candidate)


def write_json(path, payload: dict) -> None:
    """Stable-key-order JSON with a trailing newline."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
