import math

import numpy as np
import pytest

from quantchar import geometry as geo
from quantchar.geometry import EUCLIDEAN, NormSpec


class TestNorm:
    def test_euclidean_345(self):
        assert geo.lr_norm([3.0, 4.0], NormSpec(2)) == pytest.approx(5.0)

    def test_l1(self):
        assert geo.lr_norm([1.0, 1.0], NormSpec(1)) == pytest.approx(2.0)

    def test_linf(self):
        assert geo.lr_norm([1.0, -1.0, 1.0], NormSpec(math.inf)) == pytest.approx(1.0)

    def test_zero_iff_zero(self):
        assert geo.lr_norm([0.0, 0.0], NormSpec(1.5)) == 0.0
        assert geo.lr_norm([1e-30, 0.0], NormSpec(1.5)) > 0.0

    def test_requires_r_at_least_one(self):
        with pytest.raises(ValueError):
            NormSpec(0.5)


class TestNearestIndex:
    def test_tie_breaks_low(self):
        assert geo.nearest_index([0.0], [[-1.0], [1.0]], NormSpec(2)) == 0

    def test_plain_nearest(self):
        assert geo.nearest_index([0.9], [[0.0], [1.0]], NormSpec(7)) == 1

    def test_l1_case(self):
        assert geo.nearest_index([0.6, 0.0], [[0, 0], [1, 0], [0, 1]], NormSpec(1)) == 1

    def test_duplicate_append_keeps_min_distance(self):
        grid = np.array([[0.2], [0.9], [0.4]])
        xi = [0.55]
        i = geo.nearest_index(xi, grid)
        dup = np.vstack([grid, grid[i]])
        j = geo.nearest_index(xi, dup)
        d = lambda g, k: abs(g[k][0] - xi[0])
        assert d(dup, j) == d(grid, i)
        assert j == i  # first occurrence still wins

    def test_empty_grid(self):
        with pytest.raises(ValueError):
            geo.nearest_index([0.0], np.empty((0, 1)))


class TestOpenCell:
    def test_interior(self):
        assert geo.in_open_cell([0.0], [[0.0], [2.0]], 0)

    def test_boundary_is_excluded(self):
        assert not geo.in_open_cell([1.0], [[0.0], [2.0]], 0)

    def test_l1_equidistant_midpoint(self):
        grid = [[-0.5, 0.5], [0.5, -0.5]]
        assert not geo.in_open_cell([0.0, 0.0], grid, 0, NormSpec(1))


class TestCoveringGrid:
    def test_construction_table_sizes(self):
        assert geo.covering_grid(2, NormSpec(1)).shape == (2, 2)
        assert geo.covering_grid(3, NormSpec(math.inf)).shape == (2, 3)
        assert geo.covering_grid(4, NormSpec(2)).shape == (8, 4)
        assert geo.covering_grid(1, NormSpec(1.3)).shape == (2, 1)
        assert geo.covering_grid(2, NormSpec(3)).shape == (3, 2)

    def test_centers_on_unit_sphere(self):
        for d, r in [(1, 2.0), (2, 1.0), (2, 1.5), (2, 3.0), (3, math.inf), (4, 2.0), (5, 3.0)]:
            spec = NormSpec(r)
            g = geo.covering_grid(d, spec)
            assert np.max(np.abs(geo.lr_norm(g, spec, axis=1) - 1.0)) <= 1e-12

    def test_unsupported_pair(self):
        with pytest.raises(geo.NoCoveringConstructionError):
            geo.covering_grid(9, NormSpec(2))  # 2^2 < 9 and no special case


class TestVerifyCovering:
    @pytest.mark.parametrize("d,r", [(1, 2.0), (2, 1.0), (2, 1.5), (2, 3.0), (3, math.inf), (4, 2.0)])
    def test_constructions_cover(self, d, r):
        spec = NormSpec(r)
        g = geo.covering_grid(d, spec)
        cert = geo.verify_covering(g, spec, samples=20_000, seed=11)
        assert cert.valid
        assert cert.sample_count == 20_000

    def test_single_center_fails_at_antipode(self):
        cert = geo.verify_covering([[1.0, 0.0]], NormSpec(2), samples=50_000, seed=3)
        assert not cert.valid
        assert cert.max_min_distance == pytest.approx(2.0, abs=0.01)

    def test_four_axis_centers_cover_euclidean_circle(self):
        grid = [[1, 0], [-1, 0], [0, 1], [0, -1]]
        cert = geo.verify_covering(grid, NormSpec(2), samples=50_000, seed=5)
        assert cert.valid
        # worst point (sqrt(.5), sqrt(.5)) sits at distance sqrt(2 - sqrt(2))
        assert cert.max_min_distance <= math.sqrt(2.0 - math.sqrt(2.0)) + 1e-9

    def test_off_sphere_centers_rejected(self):
        with pytest.raises(ValueError, match="unit sphere"):
            geo.verify_covering([[0.5, 0.0]], NormSpec(2), samples=10, seed=0)

    def test_deterministic_given_seed(self):
        g = geo.covering_grid(2, NormSpec(3))
        a = geo.verify_covering(g, NormSpec(3), 5_000, seed=4)
        b = geo.verify_covering(g, NormSpec(3), 5_000, seed=4)
        assert a.max_min_distance == b.max_min_distance


class TestBoundedCellGrid:
    def test_d1_is_plus_minus_one(self):
        g = geo.bounded_cell_grid_euclidean(1, 1.0)
        assert sorted(g.ravel().tolist()) == pytest.approx([-1.0, 0.0, 1.0])

    def test_d2_unit_vectors_at_120_degrees(self):
        g = geo.bounded_cell_grid_euclidean(2, 1.0)
        assert g.shape == (4, 2)
        verts = g[1:]
        assert np.allclose(np.linalg.norm(verts, axis=1), 1.0)
        dots = verts @ verts.T
        off = dots[~np.eye(3, dtype=bool)]
        assert np.allclose(off, -0.5, atol=1e-12)

    def test_d3_tetrahedron_angles(self):
        g = geo.bounded_cell_grid_euclidean(3, 1.0)
        assert g.shape == (5, 3)
        verts = g[1:]
        assert np.allclose(np.linalg.norm(verts, axis=1), 1.0)
        dots = verts @ verts.T
        off = dots[~np.eye(4, dtype=bool)]
        assert np.allclose(off, -1.0 / 3.0, atol=1e-12)  # arccos(-1/3) pairwise

    def test_scale(self):
        g = geo.bounded_cell_grid_euclidean(2, 2.5)
        assert np.allclose(np.linalg.norm(g[1:], axis=1), 2.5)


class TestCellRadius:
    def test_bounded_triangle_grid(self):
        g = geo.bounded_cell_grid_euclidean(2, 1.0)
        rad = geo.cell_radius(g, 0, EUCLIDEAN, directions=512, seed=1, t_max=100.0)
        assert rad <= 1.0 + 1e-6  # deep-hole radius is exactly 1 in d = 2

    def test_halfline_cell_unbounded(self):
        assert geo.cell_radius([[0.0], [1.0]], 0, t_max=100.0) == math.inf

    def test_covering_plus_origin_within_unit_ball(self):
        spec = NormSpec(3)
        g = np.vstack([np.zeros((1, 2)), geo.covering_grid(2, spec)])
        rad = geo.cell_radius(g, 0, spec, directions=512, seed=2)
        assert rad <= 1.0 + 1e-6

    def test_d1_triangle_half(self):
        rad = geo.cell_radius([[0.0], [-1.0], [1.0]], 0, directions=16, seed=0)
        assert rad == pytest.approx(0.5, abs=1e-6)

    def test_simplex_origin_cell_radius_d_over_2(self):
        # circumradius-1 simplex grids have origin-cell radius d/2 (deep hole)
        for d in (1, 2, 3):
            g = geo.bounded_cell_grid_euclidean(d, 1.0)
            rad = geo.cell_radius(g, 0, EUCLIDEAN, directions=4096, seed=5)
            assert rad <= d / 2.0 + 1e-6
            assert rad >= d / 2.0 - 0.05  # sampled directions reach near the hole


class TestStarShaped:
    def test_segments_toward_center_stay_inside(self, rng):
        # strictly convex norms: 1000 random (grid, point, lambda) trials
        trials = 0
        for r in (1.5, 2.0, 3.0):
            spec = NormSpec(r)
            while trials % 350 != 349:
                n, d = int(rng.integers(2, 6)), int(rng.integers(1, 4))
                grid = rng.normal(size=(n, d))
                i = int(rng.integers(n))
                xi = grid[i] + 0.8 * rng.normal(size=d)
                if not geo.in_open_cell(xi, grid, i, spec):
                    continue
                lam = float(rng.random())
                seg = grid[i] + lam * (xi - grid[i])
                assert geo.in_open_cell(seg, grid, i, spec)
                trials += 1
            trials += 1
        assert trials >= 1000
