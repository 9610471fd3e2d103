"""Exports in the pipeline's file formats: score CSV (``sample_id,delta``)
and embedding CSV (``sample_id,e1..e1280`` pooled features).

Inference runs single-threaded so exports are bit-reproducible.
"""

from __future__ import annotations

import csv
from contextlib import contextmanager
from pathlib import Path

import torch

from .data import CropDataset, read_manifest


@contextmanager
def _single_threaded():
    threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        yield
    finally:
        torch.set_num_threads(threads)


def _batches(samples, batch_size=32):
    dataset = CropDataset(samples)
    for lo in range(0, len(dataset), batch_size):
        items = [dataset[i] for i in range(lo, min(lo + batch_size, len(dataset)))]
        yield samples[lo : lo + len(items)], torch.stack([x for x, _ in items])


def export_scores(
    model: torch.nn.Module,
    manifest_path: str | Path,
    split: str,
    out_path: str | Path,
) -> int:
    """One delta row per (non-duplicate) sample of the split."""
    samples = [s for s in read_manifest(manifest_path) if s.split == split]
    if not samples:
        raise ValueError(f"split {split!r} has no samples")
    samples.sort(key=lambda s: s.sample_id)
    model.eval()
    rows = []
    with _single_threaded(), torch.no_grad():
        for batch_samples, x in _batches(samples):
            probs = model(x)
            rows.extend(
                (s.sample_id, float(p)) for s, p in zip(batch_samples, probs)
            )
    with open(out_path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["sample_id", "delta"])
        for sid, delta in rows:
            writer.writerow([sid, repr(delta)])
    return len(rows)


def export_embeddings(
    model: torch.nn.Module,
    manifest_path: str | Path,
    out_path: str | Path,
) -> int:
    """Pooled-feature row per (non-duplicate) manifest sample.

    The header width follows the model's embedding (1280 for the real
    classifier). Duplicate-marked rows are covered too, so the file can
    drive the pipeline's dedup from scratch.
    """
    samples = sorted(
        read_manifest(manifest_path, include_duplicates=True),
        key=lambda s: s.sample_id,
    )
    if not samples:
        raise ValueError("manifest has no samples")
    model.eval()
    count = 0
    writer = None
    with open(out_path, "w", encoding="utf-8", newline="") as f:
        with _single_threaded(), torch.no_grad():
            for batch_samples, x in _batches(samples):
                vectors = model.embed(x)
                if writer is None:
                    writer = csv.writer(f, lineterminator="\n")
                    writer.writerow(
                        ["sample_id"] + [f"e{i}" for i in range(1, vectors.shape[1] + 1)]
                    )
                for s, v in zip(batch_samples, vectors):
                    writer.writerow([s.sample_id] + [repr(float(c)) for c in v])
                    count += 1
    return count
