"""Trajectory parsing, per-second snapshot sampling, and scene configuration.

Trajectory files are line-oriented text with four fields per record:
``person_id frame x y``, separated by whitespace or commas. Lines starting
with ``#`` are comments. Coordinates are world units (meters unless the
scene homography says otherwise).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Sequence

from .errors import ConfigError, DuplicateRecordError, TrajectoryParseError

_FIELD_SPLIT = re.compile(r"[\s,]+")

IDENTITY_HOMOGRAPHY = (1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0)


@dataclass(frozen=True)
class TrajectoryRecord:
    person_id: int
    frame: int
    x: float
    y: float


@dataclass(frozen=True)
class PedestrianPoint:
    """One site in a snapshot; dummies carry person_id 0 and is_dummy True."""

    person_id: int
    x: float
    y: float
    is_dummy: bool = False


@dataclass(frozen=True)
class FrameSnapshot:
    frame: int
    timestamp_s: int
    pedestrians: tuple[PedestrianPoint, ...]

    def real_pedestrians(self) -> tuple[PedestrianPoint, ...]:
        return tuple(p for p in self.pedestrians if not p.is_dummy)

    def position_of(self, person_id: int) -> tuple[float, float]:
        for p in self.pedestrians:
            if not p.is_dummy and p.person_id == person_id:
                return (p.x, p.y)
        raise KeyError(f"person {person_id} not in snapshot frame {self.frame}")


def _det3(h: Sequence[float]) -> float:
    a, b, c, d, e, f, g, i, j = h
    return a * (e * j - f * i) - b * (d * j - f * g) + c * (d * i - e * g)


@dataclass(frozen=True)
class SceneConfig:
    """Per-scene settings: sampling rate, dummy-square size, calibration.

    ``world_to_pixel`` is a row-major 3x3 homography; the identity means
    trajectories are already in pixel coordinates.
    """

    fps: int
    r: float = 1.0
    world_to_pixel: tuple[float, ...] = IDENTITY_HOMOGRAPHY
    head_radius_px: int = 15
    crop_size: int = 224

    def __post_init__(self):
        if self.fps < 1:
            raise ConfigError(f"fps must be >= 1, got {self.fps}")
        if self.r <= 0:
            raise ConfigError(f"square-region dimension r must be > 0, got {self.r}")
        if len(self.world_to_pixel) != 9:
            raise ConfigError("world_to_pixel must have 9 entries (row-major 3x3)")
        if abs(_det3(self.world_to_pixel)) <= 1e-12:
            raise ConfigError("world_to_pixel homography is not invertible")
        if self.head_radius_px < 1:
            raise ConfigError("head_radius_px must be positive")
        if self.crop_size < 1:
            raise ConfigError("crop_size must be positive")

    def to_pixel(self, x: float, y: float) -> tuple[float, float]:
        h = self.world_to_pixel
        px = h[0] * x + h[1] * y + h[2]
        py = h[3] * x + h[4] * y + h[5]
        w = h[6] * x + h[7] * y + h[8]
        return (px / w, py / w)


def load_scene_config(path: str | Path) -> SceneConfig:
    """Read a SceneConfig from a JSON document; absent keys use defaults."""
    with open(path, "r", encoding="utf-8") as f:
        raw = json.load(f)
    if "fps" not in raw:
        raise ConfigError(f"{path}: scene config requires 'fps'")
    kwargs = {"fps": int(raw["fps"])}
    if "r" in raw:
        kwargs["r"] = float(raw["r"])
    if "world_to_pixel" in raw:
        kwargs["world_to_pixel"] = tuple(float(v) for v in raw["world_to_pixel"])
    if "head_radius_px" in raw:
        kwargs["head_radius_px"] = int(raw["head_radius_px"])
    if "crop_size" in raw:
        kwargs["crop_size"] = int(raw["crop_size"])
    return SceneConfig(**kwargs)


def save_scene_config(config: SceneConfig, path: str | Path) -> None:
    doc = {
        "fps": config.fps,
        "r": config.r,
        "world_to_pixel": list(config.world_to_pixel),
        "head_radius_px": config.head_radius_px,
        "crop_size": config.crop_size,
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def _parse_int(token: str) -> int:
    try:
        return int(token)
    except ValueError:
        # tolerate integral float syntax ("25.0") from loose exporters
        v = float(token)
        if v != int(v):
            raise ValueError(token)
        return int(v)


def parse_trajectories(source: str | IO[str]) -> list[TrajectoryRecord]:
    """Parse trajectory records from text or a text stream, in file order.

    Raises TrajectoryParseError (with the 1-based line number) for malformed
    lines and DuplicateRecordError for repeated (person_id, frame) pairs.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = source
    records: list[TrajectoryRecord] = []
    seen: set[tuple[int, int]] = set()
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = [t for t in _FIELD_SPLIT.split(stripped) if t]
        if len(fields) != 4:
            raise TrajectoryParseError(
                f"expected 4 fields (person_id frame x y), got {len(fields)}", line_no
            )
        try:
            person_id = _parse_int(fields[0])
            frame = _parse_int(fields[1])
            x = float(fields[2])
            y = float(fields[3])
        except ValueError:
            raise TrajectoryParseError(f"non-numeric field in {fields!r}", line_no)
        if person_id < 1:
            raise TrajectoryParseError(
                f"person_id must be >= 1 (0 is reserved for dummies), got {person_id}",
                line_no,
            )
        if frame < 0:
            raise TrajectoryParseError(f"frame must be >= 0, got {frame}", line_no)
        key = (person_id, frame)
        if key in seen:
            raise DuplicateRecordError(
                f"duplicate record for person {person_id} at frame {frame}"
            )
        seen.add(key)
        records.append(TrajectoryRecord(person_id, frame, x, y))
    return records


def format_trajectories(records: Iterable[TrajectoryRecord]) -> str:
    """Serialize records back to the text format (round-trips with parse)."""
    lines = [f"{r.person_id} {r.frame} {r.x!r} {r.y!r}" for r in records]
    return "\n".join(lines) + ("\n" if lines else "")


def sample_snapshots(
    records: Iterable[TrajectoryRecord], config: SceneConfig
) -> list[FrameSnapshot]:
    """Keep only frames divisible by fps, grouped into per-frame snapshots.

    Snapshots are sorted by frame; within a snapshot pedestrians are sorted
    by person_id so downstream site ordinals are deterministic.
    """
    by_frame: dict[int, list[TrajectoryRecord]] = {}
    for rec in records:
        if rec.frame % config.fps == 0:
            by_frame.setdefault(rec.frame, []).append(rec)
    snapshots = []
    for frame in sorted(by_frame):
        group = sorted(by_frame[frame], key=lambda r: r.person_id)
        peds = tuple(PedestrianPoint(r.person_id, r.x, r.y) for r in group)
        snapshots.append(FrameSnapshot(frame, frame // config.fps, peds))
    return snapshots
