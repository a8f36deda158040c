import math

import numpy as np
import numpy.testing as npt
import pytest

from tvtomo import (
    Ellipse,
    ImageVector,
    PhantomSpec,
    ScanGeometry,
    build_system,
    pixel_centers,
    proximity,
    rasterize_phantom,
    trace_ray,
)


def mc_lengths_oracle(origin, direction, rows, cols, pixel_size, samples=10_000):
    """Chord lengths by dense point sampling along the ray."""
    origin = np.asarray(origin, float)
    direction = np.asarray(direction, float)
    half_w = cols * pixel_size / 2.0
    half_h = rows * pixel_size / 2.0
    # generous parameter range covering the grid
    reach = 2.0 * math.hypot(half_w, half_h) + np.linalg.norm(origin)
    ts = np.linspace(-reach, reach, samples)
    pts = origin[None, :] + ts[:, None] * direction[None, :]
    inside = (
        (np.abs(pts[:, 0]) < half_w) & (np.abs(pts[:, 1]) < half_h)
    )
    step = ts[1] - ts[0]
    lengths = {}
    for x, y in pts[inside]:
        col = min(int((x + half_w) // pixel_size), cols - 1)
        row = min(int((half_h - y) // pixel_size), rows - 1)
        j = row * cols + col
        lengths[j] = lengths.get(j, 0.0) + step
    return lengths


class TestEllipse:
    def test_contains_boundary_inclusive(self):
        e = Ellipse(0.0, 0.0, 2.0, 1.0, 0.0, 0.5)
        assert e.contains(2.0, 0.0)
        assert e.contains(0.0, -1.0)
        assert not e.contains(2.0001, 0.0)

    def test_rotation(self):
        # quarter turn swaps the semi-axes
        e = Ellipse(0.0, 0.0, 2.0, 1.0, math.pi / 2.0, 0.5)
        assert e.contains(0.0, 2.0)
        assert not e.contains(2.0, 0.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            Ellipse(0.0, 0.0, 0.0, 1.0, 0.0, 0.5)


class TestPixelCenters:
    def test_two_by_two(self):
        xs, ys = pixel_centers(2, 2, 2.0)
        npt.assert_array_equal(xs[0], [-1.0, 1.0])  # columns left to right
        npt.assert_array_equal(ys[:, 0], [1.0, -1.0])  # rows top to bottom

    def test_centered(self):
        xs, ys = pixel_centers(3, 5, 0.5)
        assert xs.mean() == 0.0
        assert ys.mean() == 0.0


class TestRasterizePhantom:
    def test_empty_table_is_black(self):
        spec = PhantomSpec(rows=6, cols=6, pixel_size=1.0, ellipses=())
        npt.assert_array_equal(rasterize_phantom(spec).values, np.zeros(36))

    def test_covering_disk_constant(self):
        disk = Ellipse(0.0, 0.0, 100.0, 100.0, 0.0, 0.5)
        spec = PhantomSpec(rows=5, cols=4, pixel_size=1.0, ellipses=(disk,))
        npt.assert_array_equal(rasterize_phantom(spec).values, np.full(20, 0.5))

    def test_membership_oracle(self):
        disk = Ellipse(0.0, 0.0, 1.5, 1.5, 0.0, 0.3)
        spec = PhantomSpec(rows=8, cols=8, pixel_size=1.0, ellipses=(disk,))
        img = rasterize_phantom(spec).as_grid()
        xs, ys = pixel_centers(8, 8, 1.0)
        want = np.where((xs / 1.5) ** 2 + (ys / 1.5) ** 2 <= 1.0, 0.3, 0.0)
        npt.assert_array_equal(img, want)

    def test_additive_then_clamped(self):
        big = Ellipse(0.0, 0.0, 10.0, 10.0, 0.0, 0.8)
        spec = PhantomSpec(rows=3, cols=3, pixel_size=1.0, ellipses=(big, big))
        npt.assert_array_equal(rasterize_phantom(spec).values, np.ones(9))
        neg = Ellipse(0.0, 0.0, 10.0, 10.0, 0.0, -0.5)
        spec = PhantomSpec(rows=3, cols=3, pixel_size=1.0, ellipses=(neg,))
        npt.assert_array_equal(rasterize_phantom(spec).values, np.zeros(9))


class TestTraceRay:
    def test_axis_aligned_row(self):
        # horizontal ray through the second row of a 4x4 unit grid
        idx, lengths = trace_ray((-10.0, 0.5), (1.0, 0.0), 4, 4, 1.0)
        npt.assert_array_equal(idx, [4, 5, 6, 7])
        npt.assert_allclose(lengths, np.ones(4), rtol=1e-12)

    def test_diagonal_unit_pixel(self):
        idx, lengths = trace_ray((-1.0, -1.0), (math.sqrt(0.5), math.sqrt(0.5)), 1, 1, 1.0)
        npt.assert_array_equal(idx, [0])
        npt.assert_allclose(lengths, [math.sqrt(2.0)], rtol=1e-12)

    def test_miss_is_empty(self):
        idx, lengths = trace_ray((0.0, 50.0), (1.0, 0.0), 4, 4, 1.0)
        assert idx.size == 0 and lengths.size == 0

    def test_direction_must_be_unit(self):
        with pytest.raises(ValueError):
            trace_ray((0.0, 0.0), (2.0, 0.0), 4, 4, 1.0)

    def test_length_conservation(self):
        rng = np.random.default_rng(71)
        rows, cols, p = 16, 16, 0.7
        half_w, half_h = cols * p / 2, rows * p / 2
        for _ in range(200):
            angle = rng.uniform(0.0, 2 * math.pi)
            d = np.array([math.cos(angle), math.sin(angle)])
            origin = rng.uniform(-4.0, 4.0, size=2)
            idx, lengths = trace_ray(tuple(origin), tuple(d), rows, cols, p)
            if idx.size == 0:
                continue
            # analytic chord through the bounding box by slab clipping
            t_lo, t_hi = -np.inf, np.inf
            for o, dd, half in ((origin[0], d[0], half_w), (origin[1], d[1], half_h)):
                if abs(dd) < 1e-14:
                    assert abs(o) <= half
                    continue
                a, b = (-half - o) / dd, (half - o) / dd
                t_lo, t_hi = max(t_lo, min(a, b)), min(t_hi, max(a, b))
            chord = t_hi - t_lo
            npt.assert_allclose(lengths.sum(), chord, rtol=1e-9)
            assert np.all(lengths > 0.0)

    def test_matches_monte_carlo_oracle(self):
        rng = np.random.default_rng(73)
        rows, cols, p = 16, 16, 1.0
        checked = 0
        while checked < 12:
            angle = rng.uniform(0.0, math.pi)
            d = (math.cos(angle), math.sin(angle))
            origin = tuple(rng.uniform(-6.0, 6.0, size=2))
            idx, lengths = trace_ray(origin, d, rows, cols, p)
            if idx.size == 0:
                continue
            chord = lengths.sum()
            mc = mc_lengths_oracle(origin, d, rows, cols, p)
            for j, L in zip(idx.tolist(), lengths.tolist()):
                if L < 0.02 * chord:
                    continue  # grazing slivers drown in sampling noise
                assert j in mc
                assert abs(mc[j] - L) <= 0.02 * chord
            checked += 1


class TestScanGeometry:
    def test_angles(self):
        geo = ScanGeometry(num_views=60, angle_increment=math.radians(3.0), detector_spacing=0.752)
        assert geo.view_angle(0) == 0.0
        npt.assert_allclose(geo.view_angle(30), math.pi / 2.0, rtol=1e-12)

    def test_coverage_cap(self):
        with pytest.raises(ValueError):
            ScanGeometry(num_views=100, angle_increment=math.radians(3.0), detector_spacing=1.0)

    def test_auto_ray_count_covers_diagonal(self):
        geo = ScanGeometry(num_views=30, angle_increment=math.radians(6.0), detector_spacing=5.69875)
        n = geo.rays_for_grid(64, 64, 2.849375)
        diag = math.hypot(64 * 2.849375, 64 * 2.849375)
        assert n == math.ceil(diag / 5.69875) + 1
        assert (n - 1) * 5.69875 >= diag


class TestBuildSystem:
    def test_single_top_row_ray(self):
        p, q, r, s = 0.2, 0.3, 0.4, 0.5
        phantom = ImageVector(np.array([p, q, r, s]), 2, 2)
        geo = ScanGeometry(num_views=1, angle_increment=math.radians(180.0),
                           detector_spacing=1.0, num_rays_per_view=2)
        system = build_system(phantom, 1.0, geo)
        # offsets -0.5 and +0.5: two horizontal rays through the two rows
        assert system.num_rows == 2
        top = system.rows[1]  # +0.5 offset = upper row = raster row 0
        npt.assert_array_equal(top.indices, [0, 1])
        npt.assert_allclose(top.weights, [1.0, 1.0], rtol=1e-12)
        npt.assert_allclose(top.rhs, p + q, rtol=1e-12)
        bottom = system.rows[0]
        npt.assert_array_equal(bottom.indices, [2, 3])
        npt.assert_allclose(bottom.rhs, r + s, rtol=1e-12)

    def test_zero_phantom_zero_rhs(self):
        phantom = ImageVector(np.zeros(16), 4, 4)
        geo = ScanGeometry(num_views=4, angle_increment=math.radians(45.0), detector_spacing=1.0)
        system = build_system(phantom, 1.0, geo)
        npt.assert_array_equal(system.rhs_vector, np.zeros(system.num_rows))

    def test_rows_view_major_with_sorted_indices(self, desk_system):
        meta = desk_system.metadata
        assert meta["num_views"] == 30
        for row in desk_system.rows[:100]:
            assert np.all(np.diff(row.indices) > 0)
            assert np.all(row.weights > 0.0)

    def test_generating_phantom_feasible_32(self, grid32_phantom, grid32_system):
        assert (
            proximity(grid32_system, grid32_phantom)
            <= 1e-9 * grid32_system.rhs_norm
        )

    def test_generating_phantom_feasible_desk(self, desk_phantom, desk_system):
        assert proximity(desk_system, desk_phantom) <= 1e-9 * desk_system.rhs_norm

    def test_all_misses_rejected(self):
        phantom = ImageVector(np.zeros(4), 2, 2)
        geo = ScanGeometry(num_views=1, angle_increment=math.radians(180.0),
                           detector_spacing=1000.0, num_rays_per_view=2)
        # both offsets +-500 fly way past the 2x2 unit grid
        with pytest.raises(ValueError):
            build_system(phantom, 1.0, geo)
