"""Per-person local regions: dummy-point augmentation, polygon construction,
and fixed-size image crops.

A pedestrian's local region is the polygon whose vertices are the positions
of its direct neighbors (bounded-Voronoi adjacency, dummies included),
ordered counter-clockwise around the pedestrian. Dummy points are synthetic
sites dropped into the empty axis-aligned squares around each pedestrian so
that everyone is enclosed by neighbors on all sides.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
from PIL import Image

from .errors import DataIOError, DegenerateRegionError, OutOfFrameError
from .geometry import NeighborGraph, Polygon, build_cell_set, direct_neighbors
from .trajectory import FrameSnapshot, PedestrianPoint, SceneConfig

REGION_MODES = ("voronoi", "square")
REGION_MANIFEST_FIELDS = ("sample_id", "video_id", "frame", "person_id", "path", "mode")

# corner offsets in declaration order: NW, NE, SE, SW
_CORNER_SIGNS = ((-1.0, 1.0), (1.0, 1.0), (1.0, -1.0), (-1.0, -1.0))


@dataclass(frozen=True)
class LocalRegion:
    frame: int
    person_id: int
    polygon: Polygon
    pixel_polygon: Polygon
    crop: np.ndarray  # crop_size x crop_size x 3, uint8


@dataclass(frozen=True)
class RegionManifestRow:
    sample_id: str
    video_id: str
    frame: int
    person_id: int
    path: str
    mode: str


def sample_id(video_id: str, frame: int, person_id: int) -> str:
    return f"{video_id}_f{frame:06d}_p{person_id}"


def crop_file_name(video_id: str, frame: int, person_id: int) -> str:
    return sample_id(video_id, frame, person_id) + ".png"


def frame_image_name(video_id: str, frame: int) -> str:
    return f"{video_id}_{frame:06d}.png"


def load_frame_image(frames_dir: str | Path, video_id: str, frame: int) -> np.ndarray:
    path = Path(frames_dir) / frame_image_name(video_id, frame)
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"))
    except FileNotFoundError:
        raise DataIOError(f"missing frame image {path}")
    except OSError as exc:
        raise DataIOError(f"cannot read frame image {path}: {exc}") from exc


def write_region_manifest(
    rows: Iterable[RegionManifestRow], path: str | Path
) -> None:
    ordered = sorted(rows, key=lambda r: r.sample_id)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(REGION_MANIFEST_FIELDS)
        for r in ordered:
            writer.writerow(
                [r.sample_id, r.video_id, r.frame, r.person_id, r.path, r.mode]
            )


def read_region_manifest(path: str | Path) -> list[RegionManifestRow]:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or tuple(reader.fieldnames) != REGION_MANIFEST_FIELDS:
            raise DataIOError(
                f"{path}: region manifest header must be "
                f"{','.join(REGION_MANIFEST_FIELDS)}"
            )
        for rec in reader:
            rows.append(
                RegionManifestRow(
                    sample_id=rec["sample_id"],
                    video_id=rec["video_id"],
                    frame=int(rec["frame"]),
                    person_id=int(rec["person_id"]),
                    path=rec["path"],
                    mode=rec["mode"],
                )
            )
    return rows


def generate_dummy_points(snapshot: FrameSnapshot, r: float) -> FrameSnapshot:
    """Append a dummy point at the center of every empty square region.

    Each pedestrian owns four squares spanned between its position and the
    corners (x-r, y+r), (x+r, y+r), (x+r, y-r), (x-r, y-r). A square counts
    as occupied when any OTHER real pedestrian lies in it (closed-region
    test, so a point exactly on a shared boundary occupies both squares).
    Dummies carry person_id 0.
    """
    if r <= 0:
        raise ValueError(f"square-region dimension r must be > 0, got {r}")
    reals = snapshot.real_pedestrians()
    dummies: list[PedestrianPoint] = []
    for p in reals:
        for sx, sy in _CORNER_SIGNS:
            cx, cy = p.x + sx * r, p.y + sy * r
            lo_x, hi_x = min(p.x, cx), max(p.x, cx)
            lo_y, hi_y = min(p.y, cy), max(p.y, cy)
            occupied = any(
                lo_x <= q.x <= hi_x and lo_y <= q.y <= hi_y
                for q in reals
                if q is not p
            )
            if not occupied:
                dummies.append(
                    PedestrianPoint(0, (p.x + cx) / 2.0, (p.y + cy) / 2.0, is_dummy=True)
                )
    return FrameSnapshot(
        snapshot.frame, snapshot.timestamp_s, tuple(reals) + tuple(dummies)
    )


def local_region_polygon(
    person_id: int, snapshot: FrameSnapshot, graph: NeighborGraph
) -> Polygon:
    """Polygon through the positions of person_id's direct neighbors.

    Vertices are ordered counter-clockwise by polar angle around the
    pedestrian's own position; angle ties break by ascending distance.
    """
    ordinal = None
    for i, p in enumerate(snapshot.pedestrians):
        if not p.is_dummy and p.person_id == person_id:
            ordinal = i
            center = (p.x, p.y)
            break
    if ordinal is None:
        raise DegenerateRegionError(
            f"person {person_id} not in snapshot frame {snapshot.frame}"
        )
    neighbor_ordinals = graph.adjacency.get(ordinal, frozenset())
    if len(neighbor_ordinals) < 3:
        raise DegenerateRegionError(
            f"person {person_id} at frame {snapshot.frame} has "
            f"{len(neighbor_ordinals)} direct neighbors; need >= 3"
        )
    pts = []
    for j in sorted(neighbor_ordinals):
        q = snapshot.pedestrians[j]
        dx, dy = q.x - center[0], q.y - center[1]
        pts.append((math.atan2(dy, dx), math.hypot(dx, dy), (q.x, q.y)))
    pts.sort(key=lambda t: (t[0], t[1]))
    return Polygon(tuple(p for _, _, p in pts))


def square_region(
    person_id: int, snapshot: FrameSnapshot, side_length_world: float = 0.6
) -> Polygon:
    """Axis-aligned square of the given side length centered on the person."""
    if side_length_world <= 0:
        raise ValueError(f"side length must be > 0, got {side_length_world}")
    cx, cy = snapshot.position_of(person_id)
    h = side_length_world / 2.0
    return Polygon(
        ((cx - h, cy - h), (cx + h, cy - h), (cx + h, cy + h), (cx - h, cy + h))
    )


def polygon_to_pixels(polygon: Polygon, config: SceneConfig) -> Polygon:
    return Polygon(tuple(config.to_pixel(x, y) for x, y in polygon.vertices))


def _polygon_mask(polygon: Polygon, x0: int, y0: int, w: int, h: int) -> np.ndarray:
    """Boolean inside-mask sampled at pixel centers (even-odd rule)."""
    ys, xs = np.mgrid[0:h, 0:w]
    cx = xs + x0 + 0.5
    cy = ys + y0 + 0.5
    inside = np.zeros((h, w), dtype=bool)
    verts = polygon.vertices
    n = len(verts)
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        if y1 == y2:
            continue
        crosses = (y1 <= cy) != (y2 <= cy)
        xi = x1 + (cy - y1) * (x2 - x1) / (y2 - y1)
        inside ^= crosses & (cx < xi)
    return inside


def crop_region(
    frame_image: np.ndarray,
    pixel_polygon: Polygon,
    crop_size: int,
    mask: bool = True,
    frame: int | None = None,
    person_id: int | None = None,
) -> np.ndarray:
    """Cut the polygon's bounding box out of the frame and resize it.

    The box is clamped to the frame; pixels whose centers fall outside the
    polygon are blacked out (unless mask=False); the result is resized to
    crop_size x crop_size with bilinear interpolation.
    """
    height, width = frame_image.shape[:2]
    min_x, min_y, max_x, max_y = pixel_polygon.bounds()
    x0 = max(int(math.floor(min_x)), 0)
    y0 = max(int(math.floor(min_y)), 0)
    x1 = min(int(math.ceil(max_x)), width)
    y1 = min(int(math.ceil(max_y)), height)
    if x1 <= x0 or y1 <= y0:
        raise OutOfFrameError(
            f"region polygon is entirely outside the frame "
            f"(frame={frame}, person={person_id})"
        )
    window = np.ascontiguousarray(frame_image[y0:y1, x0:x1])
    if mask:
        inside = _polygon_mask(pixel_polygon, x0, y0, x1 - x0, y1 - y0)
        window = window * inside[:, :, None].astype(window.dtype)
    img = Image.fromarray(window.astype(np.uint8))
    img = img.resize((crop_size, crop_size), Image.BILINEAR)
    return np.asarray(img)


def voronoi_context(snapshot: FrameSnapshot, r: float):
    """Dummy augmentation, bounded cells, and neighbor graph for one frame."""
    augmented = generate_dummy_points(snapshot, r)
    cell_set = build_cell_set(augmented)
    graph = direct_neighbors(cell_set)
    return augmented, cell_set, graph


def extract_local_regions(
    snapshot: FrameSnapshot,
    config: SceneConfig,
    frame_image: np.ndarray,
    mode: str = "voronoi",
    square_side: float = 0.6,
    mask: bool = True,
    context=None,
) -> list[LocalRegion]:
    """All per-person regions of one snapshot, in person_id order.

    In voronoi mode this runs dummy augmentation, bounded cells, and the
    neighbor graph (pass ``context`` from voronoi_context to reuse them);
    in square mode every person gets a fixed-size square.
    """
    regions: list[LocalRegion] = []
    reals = snapshot.real_pedestrians()
    if not reals:
        return regions
    if mode == "voronoi":
        augmented, _, graph = context or voronoi_context(snapshot, config.r)
        polygons = {
            p.person_id: local_region_polygon(p.person_id, augmented, graph)
            for p in reals
        }
    elif mode == "square":
        polygons = {
            p.person_id: square_region(p.person_id, snapshot, square_side)
            for p in reals
        }
    else:
        raise ValueError(f"unknown region mode {mode!r}")
    for p in reals:
        polygon = polygons[p.person_id]
        pixel_polygon = polygon_to_pixels(polygon, config)
        crop = crop_region(
            frame_image,
            pixel_polygon,
            config.crop_size,
            mask=mask,
            frame=snapshot.frame,
            person_id=p.person_id,
        )
        regions.append(
            LocalRegion(snapshot.frame, p.person_id, polygon, pixel_polygon, crop)
        )
    return regions
