"""Marker overlay for sampled frames: red circles around pushing heads,
optional green circles around everyone else.

Output is an annotated frame sequence; muxing back into a video is left to
an external tool, e.g.
``ffmpeg -framerate 1 -pattern_type glob -i '*_annotated.png' out.mp4``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from PIL import Image, ImageDraw

from .dataset import LABEL_PUSHING
from .errors import CoverageError
from .region import load_frame_image
from .trajectory import FrameSnapshot, SceneConfig

RED = (255, 0, 0)
GREEN = (0, 255, 0)
STROKE_WIDTH = 2


def annotated_frame_name(video_id: str, frame: int) -> str:
    return f"{video_id}_{frame:06d}_annotated.png"


def annotate_frame(
    frame_image: np.ndarray,
    snapshot: FrameSnapshot,
    predictions: Mapping[int, str],
    config: SceneConfig,
    mark_nonpushing: bool = False,
) -> tuple[np.ndarray, int]:
    """Draw one circle per pedestrian; returns (image, skipped-marker count).

    Red for predicted pushing, green (only with mark_nonpushing) otherwise.
    Markers whose mapped center falls outside the frame are skipped and
    tallied.
    """
    height, width = frame_image.shape[:2]
    img = Image.fromarray(frame_image.astype(np.uint8))
    draw = ImageDraw.Draw(img)
    radius = config.head_radius_px
    skipped = 0
    for p in snapshot.real_pedestrians():
        if p.person_id not in predictions:
            raise CoverageError(
                f"no prediction for person {p.person_id} at frame {snapshot.frame}"
            )
        pushing = predictions[p.person_id] == LABEL_PUSHING
        if not pushing and not mark_nonpushing:
            continue
        cx, cy = config.to_pixel(p.x, p.y)
        if not (0 <= cx < width and 0 <= cy < height):
            skipped += 1
            continue
        color = RED if pushing else GREEN
        draw.ellipse(
            (cx - radius, cy - radius, cx + radius, cy + radius),
            outline=color,
            width=STROKE_WIDTH,
        )
    return np.asarray(img), skipped


def annotate_sequence(
    frames_dir: str | Path,
    snapshots: Sequence[FrameSnapshot],
    predictions: Mapping[int, Mapping[int, str]],
    out_dir: str | Path,
    config: SceneConfig,
    video_id: str,
    mark_nonpushing: bool = False,
) -> list[dict]:
    """Annotate every sampled frame of one video.

    ``predictions[frame][person_id]`` gives the class. Writes one PNG per
    frame plus nothing else; the returned summary lists per-frame pushing
    counts.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = []
    for snap in snapshots:
        image = load_frame_image(frames_dir, video_id, snap.frame)
        frame_preds = predictions.get(snap.frame, {})
        annotated, skipped = annotate_frame(
            image, snap, frame_preds, config, mark_nonpushing
        )
        Image.fromarray(annotated).save(out_dir / annotated_frame_name(video_id, snap.frame))
        reals = snap.real_pedestrians()
        pushing_count = sum(
            1 for p in reals if frame_preds[p.person_id] == LABEL_PUSHING
        )
        entry = {"frame": snap.frame, "pushing_count": pushing_count, "total": len(reals)}
        if skipped:
            entry["skipped_markers"] = skipped
        summary.append(entry)
    return summary


def write_annotation_summary(summary: list[dict], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
