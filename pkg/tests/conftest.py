import numpy as np
import pytest

from tvtomo import (
    ImageVector,
    build_system,
    bundled_config_path,
    parse_config,
    rasterize_phantom,
)
from tvtomo.geometry import ScanGeometry


@pytest.fixture(scope="session")
def desk_config():
    return parse_config(bundled_config_path("desk64"))


@pytest.fixture(scope="session")
def desk_phantom(desk_config):
    return rasterize_phantom(desk_config.phantom_spec())


@pytest.fixture(scope="session")
def desk_system(desk_config, desk_phantom):
    return build_system(
        desk_phantom, desk_config.require("pixel_size"), desk_config.scan_geometry()
    )


@pytest.fixture(scope="session")
def grid32(desk_config):
    """32x32 phantom over the same physical field, 12 views."""
    spec = desk_config.phantom_spec()
    pixel = spec.pixel_size * 2.0
    small = type(spec)(rows=32, cols=32, pixel_size=pixel, ellipses=spec.ellipses)
    phantom = rasterize_phantom(small)
    geometry = ScanGeometry(
        num_views=12, angle_increment=np.pi / 12.0, detector_spacing=2.0 * pixel
    )
    system = build_system(phantom, pixel, geometry)
    return phantom, system


@pytest.fixture(scope="session")
def grid32_phantom(grid32):
    return grid32[0]


@pytest.fixture(scope="session")
def grid32_system(grid32):
    return grid32[1]


@pytest.fixture()
def zero32(grid32_system):
    return ImageVector(np.zeros(grid32_system.num_cols), 32, 32)
