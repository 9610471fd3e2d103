"""Manifest-driven crop loading.

Consumes the pipeline's manifest CSV (paths relative to the manifest's
directory) and the crop PNGs it references. Crops are resized to the
network's 224x224 input when they arrive at a different size.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from PIL import Image
from torch.utils.data import Dataset

from .model import INPUT_SIZE

LABEL_TO_TARGET = {"pushing": 1.0, "non-pushing": 0.0}

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
class Sample:
    sample_id: str
    path: Path
    label: str
    split: str


def read_manifest(path: str | Path, include_duplicates: bool = False) -> list[Sample]:
    """Manifest rows; duplicate-marked samples are skipped unless asked for
    (training must not see them, embedding export must cover them so the
    pipeline's dedup can re-evaluate every row).
    """
    path = Path(path)
    root = path.parent
    samples = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or tuple(reader.fieldnames) != MANIFEST_FIELDS:
            raise ValueError(f"{path}: manifest header must be {','.join(MANIFEST_FIELDS)}")
        for rec in reader:
            if rec["duplicate_of"] and not include_duplicates:
                continue
            samples.append(
                Sample(rec["sample_id"], root / rec["path"], rec["label"], rec["split"])
            )
    return samples


def labeled_split(samples: list[Sample], split: str) -> list[Sample]:
    out = [s for s in samples if s.split == split and s.label in LABEL_TO_TARGET]
    if not out:
        raise ValueError(f"split {split!r} has no labeled samples")
    return out


def load_crop_tensor(path: Path) -> torch.Tensor:
    try:
        with Image.open(path) as img:
            rgb = img.convert("RGB")
            if rgb.size != (INPUT_SIZE, INPUT_SIZE):
                rgb = rgb.resize((INPUT_SIZE, INPUT_SIZE), Image.BILINEAR)
            arr = np.asarray(rgb, dtype=np.float32) / 255.0
    except OSError as exc:
        raise ValueError(f"cannot read crop {path}: {exc}") from exc
    return torch.from_numpy(arr).permute(2, 0, 1)


class CropDataset(Dataset):
    def __init__(self, samples: list[Sample]):
        self.samples = samples

    def __len__(self) -> int:
        return len(self.samples)

    def __getitem__(self, idx: int):
        s = self.samples[idx]
        target = LABEL_TO_TARGET.get(s.label, 0.0)
        return load_crop_tensor(s.path), torch.tensor(target, dtype=torch.float32)
