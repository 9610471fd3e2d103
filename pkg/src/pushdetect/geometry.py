"""Convex hulls, bounded Voronoi cells, and direct-neighbor adjacency.

A cell is the intersection of the convex hull of all sites with the
half-planes "at least as close to this site as to site q" for every other
site q. Clipping to the hull removes the unbounded cells, so adjacency is
well defined everywhere. Two sites are direct neighbors when their shared
bisector contributes an edge of positive length (> epsilon) to both
clipped cells.

All tolerances scale with the scene diameter (max pairwise site distance)
so meter- and pixel-space inputs behave identically.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import CoincidentSiteError, DegenerateGeometryError
from .trajectory import FrameSnapshot

# relative-to-diameter tolerances
COINCIDENT_REL = 1e-12  # below this, two sites are considered the same point
CLIP_REL = 1e-12        # inclusive slack for half-plane membership
SHARED_EDGE_REL = 1e-9  # minimum shared-edge length that counts as adjacency

Point = tuple[float, float]


@dataclass(frozen=True)
class Polygon:
    """Closed polygon, counter-clockwise, without a repeated closing vertex."""

    vertices: tuple[Point, ...]

    def __post_init__(self):
        if len(self.vertices) < 3:
            raise DegenerateGeometryError(
                f"polygon needs >= 3 vertices, got {len(self.vertices)}"
            )

    def signed_area(self) -> float:
        a = 0.0
        verts = self.vertices
        n = len(verts)
        for i in range(n):
            x1, y1 = verts[i]
            x2, y2 = verts[(i + 1) % n]
            a += x1 * y2 - x2 * y1
        return a / 2.0

    def area(self) -> float:
        return abs(self.signed_area())

    def bounds(self) -> tuple[float, float, float, float]:
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return (min(xs), min(ys), max(xs), max(ys))


@dataclass(frozen=True)
class Site:
    ordinal: int
    person_id: int
    x: float
    y: float
    is_dummy: bool = False


@dataclass(frozen=True)
class BoundedCellSet:
    """Hull-clipped Voronoi cells for one snapshot.

    ``cell_edge_sites[i][k]`` names the site whose bisector produced edge k
    of cell i (None for hull-boundary edges); it is what direct_neighbors
    consumes.
    """

    frame: int
    sites: tuple[Site, ...]
    cells: dict[int, Polygon]
    cell_edge_sites: dict[int, tuple[int | None, ...]]
    diameter: float
    hull: Polygon


@dataclass(frozen=True)
class NeighborGraph:
    frame: int
    adjacency: dict[int, frozenset[int]]


def _cross(o: Point, a: Point, b: Point) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: Iterable[Point]) -> Polygon:
    """Monotone-chain convex hull, counter-clockwise, corners only.

    Collinear boundary points are excluded from the vertex list. Raises
    DegenerateGeometryError for fewer than 3 distinct points or an
    all-collinear input.
    """
    pts = sorted({(float(x), float(y)) for x, y in points})
    if len(pts) < 3:
        raise DegenerateGeometryError(
            f"convex hull needs >= 3 distinct points, got {len(pts)}"
        )
    lower: list[Point] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Point] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateGeometryError("points are collinear")
    return Polygon(tuple(hull))


def scene_diameter(points: Sequence[Point]) -> float:
    """Max pairwise distance; for hull vertices this is the set diameter."""
    best = 0.0
    for i in range(len(points)):
        xi, yi = points[i]
        for xj, yj in points[i + 1 :]:
            d = math.hypot(xj - xi, yj - yi)
            if d > best:
                best = d
    return best


def _clip_half_plane(
    verts: list[Point],
    labels: list[int | None],
    nx: float,
    ny: float,
    c: float,
    new_label: int | None,
    slack: float,
):
    """Keep the part of the polygon with nx*x + ny*y <= c (+slack).

    ``labels[i]`` tags the edge from verts[i] to verts[i+1]; the edge
    created along the clip line is tagged ``new_label``.
    """
    m = len(verts)
    fs = [nx * v[0] + ny * v[1] - c for v in verts]
    ins = [f <= slack for f in fs]
    if all(ins):
        return verts, labels
    out_v: list[Point] = []
    out_l: list[int | None] = []
    for i in range(m):
        j = (i + 1) % m
        a, fa, a_in, lab = verts[i], fs[i], ins[i], labels[i]
        b, fb, b_in = verts[j], fs[j], ins[j]
        if a_in:
            out_v.append(a)
            out_l.append(lab)
            if not b_in:
                t = fa / (fa - fb)
                out_v.append((a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))
                out_l.append(new_label)
        elif b_in:
            t = fa / (fa - fb)
            out_v.append((a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])))
            out_l.append(lab)
    return out_v, out_l


def _dedupe_ring(verts: list[Point], labels: list[int | None], merge_tol: float):
    """Collapse zero-length edges, keeping the later edge's label."""
    out_v: list[Point] = []
    out_l: list[int | None] = []
    for v, lab in zip(verts, labels):
        if out_v and abs(v[0] - out_v[-1][0]) <= merge_tol and abs(v[1] - out_v[-1][1]) <= merge_tol:
            out_l[-1] = lab
            continue
        out_v.append(v)
        out_l.append(lab)
    while (
        len(out_v) >= 2
        and abs(out_v[-1][0] - out_v[0][0]) <= merge_tol
        and abs(out_v[-1][1] - out_v[0][1]) <= merge_tol
    ):
        out_v.pop()
        out_l.pop()
    return out_v, out_l


def _clip_cell(
    index: int,
    xs: np.ndarray,
    ys: np.ndarray,
    hull: Polygon,
    diameter: float,
):
    """Clip the hull down to site ``index``'s cell, tracking edge provenance.

    Other sites are applied nearest-first; a site farther than twice the
    cell's current vertex radius cannot cut the cell, so the scan stops
    there.
    """
    sx, sy = float(xs[index]), float(ys[index])
    d2 = (xs - sx) ** 2 + (ys - sy) ** 2
    order = np.argsort(d2, kind="stable")
    verts: list[Point] = list(hull.vertices)
    labels: list[int | None] = [None] * len(verts)
    tol_dist = CLIP_REL * diameter
    for q in order:
        q = int(q)
        if q == index:
            continue
        r2 = max((vx - sx) ** 2 + (vy - sy) ** 2 for vx, vy in verts)
        if d2[q] > 4.0 * r2:
            break
        qx, qy = float(xs[q]), float(ys[q])
        nx, ny = qx - sx, qy - sy
        c = (qx * qx + qy * qy - sx * sx - sy * sy) / 2.0
        norm = math.hypot(nx, ny)
        verts, labels = _clip_half_plane(verts, labels, nx, ny, c, q, tol_dist * norm)
        if len(verts) < 3:
            break
    return _dedupe_ring(verts, labels, CLIP_REL * diameter)


def _nearest_pair(points: np.ndarray) -> tuple[int, int, float]:
    n = len(points)
    dx = points[:, 0][:, None] - points[:, 0][None, :]
    dy = points[:, 1][:, None] - points[:, 1][None, :]
    dist = np.hypot(dx, dy)
    dist[np.diag_indices(n)] = np.inf
    i, j = np.unravel_index(np.argmin(dist), dist.shape)
    return int(i), int(j), float(dist[i, j])


def bounded_cell(site: Point, all_sites: Sequence[Point], hull: Polygon) -> Polygon:
    """Hull-clipped Voronoi cell of one site among all_sites."""
    pts = [(float(x), float(y)) for x, y in all_sites]
    try:
        index = pts.index((float(site[0]), float(site[1])))
    except ValueError:
        raise DegenerateGeometryError("site is not a member of all_sites")
    diameter = scene_diameter(hull.vertices)
    i, j, nearest = _nearest_pair(np.asarray(pts, dtype=float))
    if nearest < COINCIDENT_REL * diameter:
        raise CoincidentSiteError(f"sites {i} and {j} coincide")
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    verts, _ = _clip_cell(index, xs, ys, hull, diameter)
    return Polygon(tuple(verts))


def snapshot_sites(snapshot: FrameSnapshot) -> tuple[Site, ...]:
    return tuple(
        Site(i, p.person_id, p.x, p.y, p.is_dummy)
        for i, p in enumerate(snapshot.pedestrians)
    )


def dummy_ranks(sites: Sequence[Site]) -> dict[int, int]:
    """1-based dummy index per ordinal, in site order (names the 0.k ids)."""
    ranks: dict[int, int] = {}
    for s in sites:
        if s.is_dummy:
            ranks[s.ordinal] = len(ranks) + 1
    return ranks


def site_label(site: Site, ranks: dict[int, int]) -> str:
    """Textual id: person_id for real pedestrians, 0.k for dummies."""
    if site.is_dummy:
        return f"0.{ranks[site.ordinal]}"
    return str(site.person_id)


def build_cell_set(snapshot: FrameSnapshot) -> BoundedCellSet:
    """Bounded Voronoi cells for every site of an (augmented) snapshot."""
    sites = snapshot_sites(snapshot)
    if len(sites) < 3:
        raise DegenerateGeometryError(
            f"frame {snapshot.frame}: need >= 3 sites, got {len(sites)}"
        )
    hull = convex_hull((s.x, s.y) for s in sites)
    diameter = scene_diameter(hull.vertices)
    pts = np.array([(s.x, s.y) for s in sites])
    i, j, nearest = _nearest_pair(pts)
    if nearest < COINCIDENT_REL * diameter:
        ranks = dummy_ranks(sites)
        raise CoincidentSiteError(
            f"frame {snapshot.frame}: sites {site_label(sites[i], ranks)} "
            f"and {site_label(sites[j], ranks)} coincide"
        )

    xs = pts[:, 0]
    ys = pts[:, 1]
    cells: dict[int, Polygon] = {}
    edge_sites: dict[int, tuple[int | None, ...]] = {}
    for s in sites:
        verts, labels = _clip_cell(s.ordinal, xs, ys, hull, diameter)
        cells[s.ordinal] = Polygon(tuple(verts))
        edge_sites[s.ordinal] = tuple(labels)
    return BoundedCellSet(snapshot.frame, sites, cells, edge_sites, diameter, hull)


def direct_neighbors(cell_set: BoundedCellSet) -> NeighborGraph:
    """Adjacency from shared bisector edges longer than the epsilon floor.

    A pair is adjacent only when each cell carries an edge attributed to
    the other site, which makes the relation symmetric by construction and
    drops the degenerate single-point contact of cocircular sites.
    """
    eps = SHARED_EDGE_REL * cell_set.diameter
    one_sided: dict[int, set[int]] = {s.ordinal: set() for s in cell_set.sites}
    for ordinal, poly in cell_set.cells.items():
        labels = cell_set.cell_edge_sites[ordinal]
        verts = poly.vertices
        n = len(verts)
        for i in range(n):
            other = labels[i]
            if other is None:
                continue
            a = verts[i]
            b = verts[(i + 1) % n]
            if math.hypot(b[0] - a[0], b[1] - a[1]) > eps:
                one_sided[ordinal].add(other)
    adjacency = {
        i: frozenset(j for j in others if i in one_sided.get(j, ()))
        for i, others in one_sided.items()
    }
    return NeighborGraph(cell_set.frame, adjacency)


def _neighbor_order(label: str) -> tuple[int, int]:
    if label.startswith("0."):
        return (0, int(label[2:]))
    return (int(label), 0)


def neighbor_rows(
    cell_set: BoundedCellSet, graph: NeighborGraph
) -> list[tuple[int, int, str]]:
    """CSV rows (frame, person_id, neighbor_id) for real pedestrians.

    Dummy neighbors appear as ``0.k``; rows sort by (frame, person_id,
    neighbor) with dummies ordered before real ids.
    """
    ranks = dummy_ranks(cell_set.sites)
    by_ordinal = {s.ordinal: s for s in cell_set.sites}
    rows = []
    for s in cell_set.sites:
        if s.is_dummy:
            continue
        for j in graph.adjacency.get(s.ordinal, ()):
            rows.append((cell_set.frame, s.person_id, site_label(by_ordinal[j], ranks)))
    rows.sort(key=lambda r: (r[0], r[1], _neighbor_order(r[2])))
    return rows


def write_neighbors_csv(rows: Iterable[tuple[int, int, str]], path: str | Path) -> None:
    ordered = sorted(rows, key=lambda r: (r[0], r[1], _neighbor_order(r[2])))
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["frame", "person_id", "neighbor_person_id"])
        for frame, pid, neighbor in ordered:
            writer.writerow([frame, pid, neighbor])
