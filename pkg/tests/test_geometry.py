import math

import numpy as np
import pytest

from pushdetect.errors import CoincidentSiteError, DegenerateGeometryError
from pushdetect.geometry import (
    SHARED_EDGE_REL,
    BoundedCellSet,
    bounded_cell,
    build_cell_set,
    convex_hull,
    direct_neighbors,
    neighbor_rows,
    scene_diameter,
)
from pushdetect.trajectory import FrameSnapshot, PedestrianPoint

from oracles import (
    all_pairs_shared_lengths,
    bisector_shared_length,
    brute_force_hull,
    grid_cell_fractions,
    nearest_site,
    point_in_convex,
    sampled_bisector_adjacency,
    shoelace_area,
)


def snapshot_from_xy(points, frame=0):
    peds = tuple(
        PedestrianPoint(i + 1, float(x), float(y)) for i, (x, y) in enumerate(points)
    )
    return FrameSnapshot(frame, 0, peds)


EQUILATERAL = [(0.0, 0.0), (1.0, 0.0), (0.5, math.sqrt(3) / 2)]
GRID_2X2 = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]


class TestConvexHull:
    def test_interior_point_excluded(self):
        hull = convex_hull([(0, 0), (1, 0), (1, 1), (0, 1), (0.5, 0.5)])
        assert set(hull.vertices) == {(0, 0), (1, 0), (1, 1), (0, 1)}
        assert hull.signed_area() > 0

    def test_collinear_rejected(self):
        with pytest.raises(DegenerateGeometryError):
            convex_hull([(0, 0), (1, 1), (2, 2)])

    def test_too_few_points(self):
        with pytest.raises(DegenerateGeometryError):
            convex_hull([(0, 0), (1, 1)])

    def test_collinear_boundary_point_dropped(self):
        hull = convex_hull([(0, 0), (1, 0), (2, 0), (2, 2), (0, 2)])
        assert (1, 0) not in hull.vertices

    def test_matches_brute_force_on_random_instances(self):
        rng = np.random.default_rng(1234)
        for trial in range(30):
            n = int(rng.integers(4, 50))
            pts = [tuple(p) for p in rng.uniform(-5, 5, size=(n, 2))]
            if trial % 3 == 0:
                pts += pts[: max(1, n // 4)]  # duplicates are legal input
            expected = brute_force_hull(pts)
            hull = list(convex_hull(pts).vertices)
            assert set(hull) == set(expected)
            # same CCW cyclic order
            k = hull.index(expected[0])
            assert hull[k:] + hull[:k] == expected


class TestBoundedCell:
    def test_equilateral_cells_share_area_equally(self):
        hull = convex_hull(EQUILATERAL)
        expected = hull.area() / 3  # threefold symmetry
        assert expected == pytest.approx(0.14433756729740643, abs=1e-12)
        for site in EQUILATERAL:
            cell = bounded_cell(site, EQUILATERAL, hull)
            assert cell.area() == pytest.approx(expected, rel=1e-9)

    def test_unit_grid_cells_are_quadrants(self):
        hull = convex_hull(GRID_2X2)
        sites_xy = np.array(GRID_2X2)
        fractions = grid_cell_fractions(sites_xy, hull.vertices, resolution=0.001)
        for k, site in enumerate(GRID_2X2):
            cell = bounded_cell(site, GRID_2X2, hull)
            assert cell.area() == pytest.approx(0.25, abs=1e-12)
            assert fractions[k] == pytest.approx(0.25, abs=2e-3)

    def test_coincident_sites_rejected(self):
        pts = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 0.0)]
        hull = convex_hull(pts)
        with pytest.raises(CoincidentSiteError):
            bounded_cell(pts[0], pts, hull)

    def test_partition_property_random(self):
        rng = np.random.default_rng(77)
        for n in (4, 9, 40, 120):
            pts = [tuple(p) for p in rng.uniform(0, 10, size=(n, 2))]
            cell_set = build_cell_set(snapshot_from_xy(pts))
            total = sum(poly.area() for poly in cell_set.cells.values())
            hull_area = abs(shoelace_area(cell_set.hull.vertices))
            assert total == pytest.approx(hull_area, rel=1e-6)

    def test_every_site_inside_own_cell(self):
        rng = np.random.default_rng(5)
        pts = [tuple(p) for p in rng.uniform(0, 4, size=(25, 2))]
        cell_set = build_cell_set(snapshot_from_xy(pts))
        for s in cell_set.sites:
            verts = cell_set.cells[s.ordinal].vertices
            assert point_in_convex(verts, s.x, s.y, tol=1e-9)

    def test_cells_are_convex(self):
        rng = np.random.default_rng(6)
        pts = [tuple(p) for p in rng.uniform(0, 4, size=(30, 2))]
        cell_set = build_cell_set(snapshot_from_xy(pts))
        for poly in cell_set.cells.values():
            verts = poly.vertices
            n = len(verts)
            for i in range(n):
                a, b, c = verts[i], verts[(i + 1) % n], verts[(i + 2) % n]
                cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
                assert cross > -1e-9 * scene_diameter(verts)


class TestDirectNeighbors:
    def _graph(self, pts) -> tuple[BoundedCellSet, dict]:
        cell_set = build_cell_set(snapshot_from_xy(pts))
        return cell_set, direct_neighbors(cell_set).adjacency

    def test_equilateral_complete_graph(self):
        _, adj = self._graph(EQUILATERAL)
        assert adj == {
            0: frozenset({1, 2}),
            1: frozenset({0, 2}),
            2: frozenset({0, 1}),
        }

    def test_unit_grid_diagonals_not_adjacent(self):
        # cocircular degenerate case: quadrants meet at one center point
        _, adj = self._graph(GRID_2X2)
        assert 3 not in adj[0] and 0 not in adj[3]
        assert 2 not in adj[1] and 1 not in adj[2]
        assert adj[0] == frozenset({1, 2})

    def test_symmetric_and_irreflexive_random(self):
        rng = np.random.default_rng(11)
        pts = [tuple(p) for p in rng.uniform(0, 8, size=(60, 2))]
        _, adj = self._graph(pts)
        for i, others in adj.items():
            assert i not in others
            for j in others:
                assert i in adj[j]

    def test_matches_bisector_oracle_40_random_sites(self):
        rng = np.random.default_rng(42)
        pts = [tuple(p) for p in rng.uniform(0, 6, size=(40, 2))]
        cell_set, adj = self._graph(pts)
        sites_xy = np.array(pts)
        eps = SHARED_EDGE_REL * cell_set.diameter
        hull_verts = cell_set.hull.vertices
        for i in range(40):
            for j in range(i + 1, 40):
                shared = bisector_shared_length(i, j, sites_xy, hull_verts)
                assert (j in adj[i]) == (shared > eps), (i, j, shared)
                # a sampled witness point must always imply adjacency
                # (sampling can miss very short shared edges, never invent one)
                if sampled_bisector_adjacency(i, j, sites_xy, hull_verts, samples=64):
                    assert j in adj[i]

    def test_vectorized_oracle_matches_scalar_oracle(self):
        # the batched and scalar oracle variants implement the same math
        rng = np.random.default_rng(8)
        pts = [tuple(p) for p in rng.uniform(0, 3, size=(25, 2))]
        cell_set = build_cell_set(snapshot_from_xy(pts))
        sites_xy = np.array(pts)
        hull_verts = cell_set.hull.vertices
        matrix = all_pairs_shared_lengths(sites_xy, hull_verts)
        for i in range(25):
            for j in range(i + 1, 25):
                scalar = bisector_shared_length(i, j, sites_xy, hull_verts)
                assert matrix[i, j] == pytest.approx(scalar, rel=1e-9, abs=1e-12)

    def test_dummy_neighbors_written_with_suffix_ordinals(self):
        peds = (
            PedestrianPoint(7, 0.0, 0.0),
            PedestrianPoint(0, 0.5, 0.5, is_dummy=True),
            PedestrianPoint(0, -0.5, 0.5, is_dummy=True),
            PedestrianPoint(0, -0.5, -0.5, is_dummy=True),
            PedestrianPoint(0, 0.5, -0.5, is_dummy=True),
        )
        snapshot = FrameSnapshot(25, 1, peds)
        cell_set = build_cell_set(snapshot)
        graph = direct_neighbors(cell_set)
        rows = neighbor_rows(cell_set, graph)
        assert rows == [
            (25, 7, "0.1"),
            (25, 7, "0.2"),
            (25, 7, "0.3"),
            (25, 7, "0.4"),
        ]


class TestMembership:
    def test_probes_match_nearest_site(self):
        rng = np.random.default_rng(2024)
        pts = [tuple(p) for p in rng.uniform(0, 5, size=(50, 2))]
        cell_set = build_cell_set(snapshot_from_xy(pts))
        sites_xy = np.array(pts)
        hull_verts = cell_set.hull.vertices
        min_x, min_y = np.min(sites_xy, axis=0)
        max_x, max_y = np.max(sites_xy, axis=0)
        checked = 0
        while checked < 2000:
            x = rng.uniform(min_x, max_x)
            y = rng.uniform(min_y, max_y)
            if not point_in_convex(hull_verts, x, y):
                continue
            idx, d1, d2 = nearest_site(sites_xy, x, y)
            if d2 - d1 < 1e-9:
                continue  # tie excluded by contract
            verts = cell_set.cells[idx].vertices
            assert point_in_convex(verts, x, y, tol=1e-9), (x, y, idx)
            checked += 1
