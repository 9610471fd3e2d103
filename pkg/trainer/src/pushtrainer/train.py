"""Training loop: Adam on binary cross-entropy with early stopping on
validation accuracy (patience 20), keeping the best-validation checkpoint.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import torch
from torch import nn
from torch.utils.data import DataLoader

from .data import CropDataset, labeled_split, read_manifest
from .model import PushingClassifier, save_checkpoint


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 20  # epochs without validation-accuracy improvement
    seed: int = 0


@dataclass
class TrainResult:
    checkpoint_path: Path
    log: list[dict] = field(default_factory=list)
    best_epoch: int = 0
    best_val_accuracy: float = 0.0
    stopped_early: bool = False


def _evaluate_accuracy(model, loader, device) -> float:
    model.eval()
    correct = total = 0
    with torch.no_grad():
        for x, y in loader:
            probs = model(x.to(device))
            predicted = (probs >= 0.5).float().cpu()
            correct += int((predicted == y).sum())
            total += len(y)
    return correct / total


def train(
    manifest_path: str | Path,
    out_dir: str | Path,
    config: TrainConfig = TrainConfig(),
    model_factory=PushingClassifier,
    device: str = "cpu",
) -> TrainResult:
    """Train on the manifest's train split, validate on its val split.

    Writes ``checkpoint.pt`` (best validation accuracy) and
    ``training_log.json`` (one {epoch, train_loss, val_accuracy} entry per
    epoch) under out_dir. Deterministic for a fixed config.seed.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    samples = read_manifest(manifest_path)
    train_samples = labeled_split(samples, "train")
    val_samples = labeled_split(samples, "val")
    for s in train_samples + val_samples:
        if not s.path.exists():
            raise ValueError(f"missing crop for {s.sample_id}: {s.path}")

    torch.manual_seed(config.seed)
    model = model_factory().to(device)
    generator = torch.Generator().manual_seed(config.seed)
    train_loader = DataLoader(
        CropDataset(train_samples),
        batch_size=config.batch_size,
        shuffle=True,
        generator=generator,
        num_workers=0,
    )
    val_loader = DataLoader(
        CropDataset(val_samples), batch_size=config.batch_size, num_workers=0
    )
    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    loss_fn = nn.BCEWithLogitsLoss()

    result = TrainResult(checkpoint_path=out_dir / "checkpoint.pt")
    best_state = None
    epochs_since_best = 0
    for epoch in range(1, config.max_epochs + 1):
        model.train()
        running = 0.0
        seen = 0
        for x, y in train_loader:
            optimizer.zero_grad()
            loss = loss_fn(model.logits(x.to(device)), y.to(device))
            loss.backward()
            optimizer.step()
            running += float(loss.detach()) * len(y)
            seen += len(y)
        train_loss = running / seen
        val_accuracy = _evaluate_accuracy(model, val_loader, device)
        result.log.append(
            {"epoch": epoch, "train_loss": train_loss, "val_accuracy": val_accuracy}
        )
        if best_state is None or val_accuracy > result.best_val_accuracy:
            result.best_val_accuracy = val_accuracy
            result.best_epoch = epoch
            best_state = {k: v.detach().clone() for k, v in model.state_dict().items()}
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best >= config.patience:
                result.stopped_early = True
                break

    model.load_state_dict(best_state)
    save_checkpoint(
        model,
        result.checkpoint_path,
        metadata={
            "seed": config.seed,
            "best_epoch": result.best_epoch,
            "best_val_accuracy": result.best_val_accuracy,
        },
    )
    with open(out_dir / "training_log.json", "w", encoding="utf-8") as f:
        json.dump(result.log, f, indent=2, sort_keys=True)
        f.write("\n")
    return result
