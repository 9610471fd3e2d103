"""Per-sample pushing-probability scoring and threshold classification.

The deep classifier lives behind the score-file interface (CSV of
``sample_id,delta``); the built-in logistic baseline over the dataset
descriptors exists so the pipeline runs end to end without it.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .dataset import (
    LABEL_NONPUSHING,
    LABEL_PUSHING,
    ManifestRow,
    descriptor_table,
)
from .errors import (
    CoverageError,
    DataIOError,
    DegenerateTrainingError,
    InvalidScoreError,
)

BASELINE_EPOCHS = 200
BASELINE_LR = 0.05
# descriptors are mean-subtracted 8-bit intensities; this fixed rescale keeps
# full-batch gradient descent out of sigmoid saturation
BASELINE_FEATURE_SCALE = 1.0 / 255.0


@dataclass(frozen=True)
class ScoreSet:
    """Ordered (sample_id, delta) rows; ids unique, deltas in [0, 1]."""

    rows: tuple[tuple[str, float], ...]

    def __post_init__(self):
        seen = set()
        for sid, delta in self.rows:
            if sid in seen:
                raise InvalidScoreError(f"duplicate sample_id in scores: {sid}")
            seen.add(sid)
            if not 0.0 <= delta <= 1.0:
                raise InvalidScoreError(f"delta for {sid} outside [0, 1]: {delta}")

    def as_dict(self) -> dict[str, float]:
        return dict(self.rows)

    def __len__(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class BaselineModel:
    weights: np.ndarray  # descriptor dim + 1 trailing bias
    seed: int
    epochs: int = BASELINE_EPOCHS
    lr: float = BASELINE_LR

    def __post_init__(self):
        if not np.all(np.isfinite(self.weights)):
            raise DegenerateTrainingError("baseline model has non-finite weights")


def classify(delta: float, threshold: float) -> str:
    """Pushing iff delta >= threshold (boundary inclusive)."""
    return LABEL_PUSHING if delta >= threshold else LABEL_NONPUSHING


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def train_baseline(
    rows: Sequence[ManifestRow],
    root: str | Path = ".",
    seed: int = 0,
    epochs: int = BASELINE_EPOCHS,
    lr: float = BASELINE_LR,
    features: Mapping[str, np.ndarray] | None = None,
) -> BaselineModel:
    """Logistic regression on the crop descriptors, full-batch gradient
    descent from zero weights. Deterministic given the input order; the
    seed is recorded as provenance metadata.
    """
    labeled = [r for r in rows if r.label in (LABEL_PUSHING, LABEL_NONPUSHING)]
    if not labeled:
        raise DegenerateTrainingError("no labeled samples to train on")
    y = np.array([1.0 if r.label == LABEL_PUSHING else 0.0 for r in labeled])
    if y.min() == y.max():
        raise DegenerateTrainingError(
            "training data contains a single class; need both"
        )
    if features is None:
        features = descriptor_table(labeled, root)
    x = np.stack([features[r.sample_id] for r in labeled]) * BASELINE_FEATURE_SCALE
    x = np.hstack([x, np.ones((len(labeled), 1))])
    w = np.zeros(x.shape[1])
    n = len(labeled)
    for _ in range(epochs):
        p = _sigmoid(x @ w)
        w = w - lr * (x.T @ (p - y)) / n
    return BaselineModel(weights=w, seed=seed, epochs=epochs, lr=lr)


def predict_delta(
    model: BaselineModel, features: Mapping[str, np.ndarray], sample_ids: Sequence[str]
) -> np.ndarray:
    x = np.stack([features[sid] for sid in sample_ids]) * BASELINE_FEATURE_SCALE
    x = np.hstack([x, np.ones((len(sample_ids), 1))])
    return _sigmoid(x @ model.weights)


def score(
    rows: Sequence[ManifestRow],
    model: BaselineModel | None = None,
    root: str | Path = ".",
    score_rows: Mapping[str, float] | None = None,
    features: Mapping[str, np.ndarray] | None = None,
) -> ScoreSet:
    """One delta per manifest row, from the model or a score file.

    Score-file values pass through unchanged; every row must be covered.
    """
    ids = [r.sample_id for r in rows]
    if score_rows is not None:
        missing = [sid for sid in ids if sid not in score_rows]
        if missing:
            raise CoverageError(
                "score file is missing samples: " + ", ".join(sorted(missing))
            )
        deltas = [float(score_rows[sid]) for sid in ids]
    elif model is not None:
        if features is None:
            features = descriptor_table(rows, root)
        deltas = list(predict_delta(model, features, ids))
    else:
        raise ValueError("score() needs a model or score_rows")
    return ScoreSet(tuple(zip(ids, (float(d) for d in deltas))))


def save_model(model: BaselineModel, path: str | Path) -> None:
    doc = {
        "weights": [float(v) for v in model.weights],
        "seed": model.seed,
        "epochs": model.epochs,
        "lr": model.lr,
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def load_model(path: str | Path) -> BaselineModel:
    with open(path, "r", encoding="utf-8") as f:
        doc = json.load(f)
    try:
        return BaselineModel(
            weights=np.array(doc["weights"], dtype=np.float64),
            seed=int(doc["seed"]),
            epochs=int(doc["epochs"]),
            lr=float(doc["lr"]),
        )
    except KeyError as exc:
        raise DataIOError(f"{path}: model file is missing key {exc}") from exc


def read_score_csv(path: str | Path) -> ScoreSet:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["sample_id", "delta"]:
            raise DataIOError(f"{path}: score header must be sample_id,delta")
        for rec in reader:
            if len(rec) != 2:
                raise DataIOError(f"{path}: malformed score row {rec!r}")
            rows.append((rec[0], float(rec[1])))
    return ScoreSet(tuple(rows))


def write_score_csv(scores: ScoreSet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["sample_id", "delta"])
        for sid, delta in scores.rows:
            writer.writerow([sid, repr(float(delta))])
