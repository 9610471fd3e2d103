"""Sample labeling, near-duplicate removal, and frame-level set splitting.

The manifest CSV is the pipeline's central artifact: one row per extracted
local-region sample with its label, split assignment, and (for removed
near-duplicates) the retained sample it duplicates. Paths in the manifest
are relative to the manifest's own directory so output trees are portable
and byte-reproducible.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from PIL import Image

from .errors import (
    DataIOError,
    DuplicateRecordError,
    InsufficientDataError,
    VideoNotFoundError,
)

LABEL_PUSHING = "pushing"
LABEL_NONPUSHING = "non-pushing"
LABEL_UNKNOWN = "unknown"
LABELS = (LABEL_PUSHING, LABEL_NONPUSHING, LABEL_UNKNOWN)
SPLITS = ("train", "val", "test1", "test2", "none")

MANIFEST_FIELDS = (
    "sample_id",
    "video_id",
    "frame",
    "person_id",
    "path",
    "label",
    "split",
    "duplicate_of",
)


@dataclass(frozen=True)
class GroundTruthEntry:
    person_id: int
    frame: int
    label: str  # pushing | non-pushing


@dataclass(frozen=True)
class ManifestRow:
    sample_id: str
    video_id: str
    frame: int
    person_id: int
    path: str
    label: str = LABEL_UNKNOWN
    split: str = "none"
    duplicate_of: str = ""


@dataclass(frozen=True)
class LabelStats:
    labeled: int
    unknown: int
    unmatched_ground_truth: int


def read_manifest(path: str | Path) -> list[ManifestRow]:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or tuple(reader.fieldnames) != MANIFEST_FIELDS:
            raise DataIOError(
                f"{path}: manifest header must be {','.join(MANIFEST_FIELDS)}"
            )
        for rec in reader:
            rows.append(
                ManifestRow(
                    sample_id=rec["sample_id"],
                    video_id=rec["video_id"],
                    frame=int(rec["frame"]),
                    person_id=int(rec["person_id"]),
                    path=rec["path"],
                    label=rec["label"],
                    split=rec["split"],
                    duplicate_of=rec["duplicate_of"],
                )
            )
    return rows


def write_manifest(rows: Iterable[ManifestRow], path: str | Path) -> None:
    ordered = sorted(rows, key=lambda r: r.sample_id)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(MANIFEST_FIELDS)
        for r in ordered:
            writer.writerow(
                [
                    r.sample_id,
                    r.video_id,
                    r.frame,
                    r.person_id,
                    r.path,
                    r.label,
                    r.split,
                    r.duplicate_of,
                ]
            )


def read_ground_truth(path: str | Path) -> list[GroundTruthEntry]:
    """Ground-truth CSV ``person_id,frame,label`` with label 1 = pushing."""
    entries = []
    seen: set[tuple[int, int]] = set()
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        required = {"person_id", "frame", "label"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise DataIOError(f"{path}: ground truth needs columns person_id,frame,label")
        for rec in reader:
            pid = int(rec["person_id"])
            frame = int(rec["frame"])
            key = (pid, frame)
            if key in seen:
                raise DuplicateRecordError(
                    f"{path}: duplicate ground truth for person {pid} frame {frame}"
                )
            seen.add(key)
            label = LABEL_PUSHING if int(rec["label"]) == 1 else LABEL_NONPUSHING
            entries.append(GroundTruthEntry(pid, frame, label))
    return entries


def label_samples(
    rows: Sequence[ManifestRow],
    entries: Sequence[GroundTruthEntry],
    video_id: str | None = None,
) -> tuple[list[ManifestRow], LabelStats]:
    """Copy labels onto samples by (person_id, frame) lookup.

    When video_id is given only that video's rows are touched (ground truth
    files carry no video column, so multi-video manifests are labeled one
    video at a time). Samples without an entry become ``unknown``; entries
    without a sample are tallied, not errors.
    """
    table = {(e.person_id, e.frame): e.label for e in entries}
    used: set[tuple[int, int]] = set()
    out = []
    labeled = unknown = 0
    for r in rows:
        if video_id is not None and r.video_id != video_id:
            out.append(r)
            continue
        key = (r.person_id, r.frame)
        if key in table:
            out.append(replace(r, label=table[key]))
            used.add(key)
            labeled += 1
        else:
            out.append(replace(r, label=LABEL_UNKNOWN))
            unknown += 1
    return out, LabelStats(labeled, unknown, len(table) - len(used))


def load_crop(path: str | Path) -> np.ndarray:
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"))
    except OSError as exc:
        raise DataIOError(f"cannot read crop file {path}: {exc}") from exc


def feature_vector(crop: np.ndarray) -> np.ndarray:
    """Deterministic 1024-dim descriptor: 32x32 grayscale, mean-subtracted.

    Stands in for an external embedding model; embedding CSVs can replace
    it wherever a descriptor is consumed.
    """
    img = Image.fromarray(np.asarray(crop, dtype=np.uint8))
    small = img.convert("L").resize((32, 32), Image.BILINEAR)
    v = np.asarray(small, dtype=np.float64).reshape(-1)
    return v - v.mean()


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu < 1e-12 or nv < 1e-12:
        return 0.0  # zero vectors compare as distinct
    return float(np.dot(u, v) / (nu * nv))


def descriptor_table(
    rows: Sequence[ManifestRow],
    root: str | Path = ".",
    embeddings: Mapping[str, np.ndarray] | None = None,
) -> dict[str, np.ndarray]:
    """Descriptor per sample_id, from the embedding table when provided."""
    table = {}
    root = Path(root)
    for r in rows:
        if embeddings is not None:
            if r.sample_id not in embeddings:
                raise DataIOError(f"embedding file is missing sample {r.sample_id}")
            table[r.sample_id] = np.asarray(embeddings[r.sample_id], dtype=np.float64)
        else:
            table[r.sample_id] = feature_vector(load_crop(root / r.path))
    return table


def deduplicate(
    rows: Sequence[ManifestRow],
    tau: float = 0.97,
    root: str | Path = ".",
    embeddings: Mapping[str, np.ndarray] | None = None,
) -> list[ManifestRow]:
    """Greedy first-wins near-duplicate removal in sample_id order.

    A sample whose cosine similarity to any already-retained sample reaches
    tau is marked duplicate_of the first such sample and loses its split.
    Re-running is a no-op (the scan is a pure function of the descriptors).
    """
    if not 0 < tau <= 1:
        raise ValueError(f"tau must be in (0, 1], got {tau}")
    ordered = sorted(rows, key=lambda r: r.sample_id)
    table = descriptor_table(ordered, root, embeddings)
    retained_ids: list[str] = []
    retained_vecs: list[np.ndarray] = []
    out = []
    for r in ordered:
        v = table[r.sample_id]
        norm = float(np.linalg.norm(v))
        unit = v / norm if norm >= 1e-12 else None
        match = None
        if unit is not None:
            for rid, rv in zip(retained_ids, retained_vecs):
                if rv is not None and float(np.dot(unit, rv)) >= tau - 1e-12:
                    match = rid
                    break
        if match is not None:
            out.append(replace(r, duplicate_of=match, split="none"))
        else:
            retained_ids.append(r.sample_id)
            retained_vecs.append(unit)
            out.append(replace(r, duplicate_of=""))
    return out


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def split_frames(
    rows: Sequence[ManifestRow],
    ratios: tuple[float, float, float] = (0.70, 0.15, 0.15),
    seed: int = 0,
) -> list[ManifestRow]:
    """Assign train/val/test1 splits at the frame level.

    Distinct (video_id, frame) pairs are shuffled with the seeded PRNG; the
    first round(n*val) frames become val, the next round(n*test) test1, and
    the rest train. Every non-duplicate sample inherits its frame's split,
    so one frame never straddles splits. Frames already held out to test2
    are untouched.
    """
    if min(ratios) <= 0:
        raise ValueError("split ratios must be positive")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"split ratios must sum to 1, got {sum(ratios)}")
    eligible = [r for r in rows if not r.duplicate_of and r.split != "test2"]
    frames = sorted({(r.video_id, r.frame) for r in eligible})
    if len(frames) < 3:
        raise InsufficientDataError(
            f"need at least 3 distinct frames to split, got {len(frames)}"
        )
    rng = random.Random(seed)
    rng.shuffle(frames)
    n = len(frames)
    n_val = _round_half_up(n * ratios[1])
    n_test = _round_half_up(n * ratios[2])
    assignment: dict[tuple[str, int], str] = {}
    for i, key in enumerate(frames):
        if i < n_val:
            assignment[key] = "val"
        elif i < n_val + n_test:
            assignment[key] = "test1"
        else:
            assignment[key] = "train"
    out = []
    for r in rows:
        if r.duplicate_of or r.split == "test2":
            out.append(r)
        else:
            out.append(replace(r, split=assignment[(r.video_id, r.frame)]))
    return out


def holdout_video(rows: Sequence[ManifestRow], video_id: str) -> list[ManifestRow]:
    """Force every non-duplicate sample of one video into split test2."""
    if not any(r.video_id == video_id for r in rows):
        raise VideoNotFoundError(f"video {video_id!r} not present in manifest")
    out = []
    for r in rows:
        if r.video_id == video_id and not r.duplicate_of:
            out.append(replace(r, split="test2"))
        else:
            out.append(r)
    return out


def summarize(rows: Sequence[ManifestRow]) -> dict:
    """Per-split per-label counts plus dedup statistics."""
    deleted = sum(1 for r in rows if r.duplicate_of)
    per_split: dict[str, dict[str, int]] = {}
    for r in rows:
        if r.duplicate_of:
            continue
        split_counts = per_split.setdefault(r.split, {})
        split_counts[r.label] = split_counts.get(r.label, 0) + 1
    return {
        "original": len(rows),
        "deleted": deleted,
        "distinct": len(rows) - deleted,
        "per_split": {s: dict(sorted(c.items())) for s, c in sorted(per_split.items())},
    }


def read_embeddings(path: str | Path) -> dict[str, np.ndarray]:
    """Embedding CSV ``sample_id,e1..ek`` -> vector per sample."""
    table = {}
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if not header or header[0] != "sample_id" or len(header) < 2:
            raise DataIOError(f"{path}: embedding header must be sample_id,e1..ek")
        width = len(header) - 1
        for rec in reader:
            if len(rec) != width + 1:
                raise DataIOError(f"{path}: ragged embedding row for {rec[0]!r}")
            table[rec[0]] = np.array([float(v) for v in rec[1:]], dtype=np.float64)
    return table


def write_embeddings(table: Mapping[str, np.ndarray], path: str | Path) -> None:
    ids = sorted(table)
    width = len(next(iter(table.values()))) if table else 0
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["sample_id"] + [f"e{i}" for i in range(1, width + 1)])
        for sid in ids:
            writer.writerow([sid] + [repr(float(v)) for v in table[sid]])
