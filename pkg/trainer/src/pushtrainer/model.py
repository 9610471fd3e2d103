"""The deep pushing classifier: EfficientNet-B0 feature extractor ending at
its 7x7x320 stage, then a 1x1 channel expansion to 1280, global average
pooling, and a single sigmoid-activated fully connected output.

Trained from scratch (no pretrained weights). The pooled 1280-vector is
also exposed as the per-sample embedding.
"""

from __future__ import annotations

import torch
import torchvision
from torch import nn

BACKBONE_CHANNELS = 320
EMBED_CHANNELS = 1280
INPUT_SIZE = 224


class PushingClassifier(nn.Module):
    def __init__(self):
        super().__init__()
        base = torchvision.models.efficientnet_b0(weights=None)
        # stages 0..7: stem conv + the 16 inverted-bottleneck blocks,
        # stopping before the stock 1x1 expansion so the 7x7x320 maps are
        # exposed; the expansion is re-created explicitly in the head
        self.backbone = base.features[:8]
        self.expand = nn.Sequential(
            nn.Conv2d(BACKBONE_CHANNELS, EMBED_CHANNELS, kernel_size=1, bias=False),
            nn.BatchNorm2d(EMBED_CHANNELS),
            nn.SiLU(inplace=True),
        )
        self.pool = nn.AdaptiveAvgPool2d(1)
        self.fc = nn.Linear(EMBED_CHANNELS, 1)

    def features(self, x: torch.Tensor) -> torch.Tensor:
        """Backbone feature maps, (N, 320, 7, 7) for 224x224 input."""
        return self.backbone(x)

    def embed(self, x: torch.Tensor) -> torch.Tensor:
        """Pooled (N, 1280) embedding feeding the classification layer."""
        maps = self.expand(self.features(x))
        return self.pool(maps).flatten(1)

    def logits(self, x: torch.Tensor) -> torch.Tensor:
        return self.fc(self.embed(x)).squeeze(1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        """Pushing probability per sample, in (0, 1)."""
        return torch.sigmoid(self.logits(x))


def head_parameters(model: PushingClassifier):
    """Parameters of the classification head (expansion conv + FC)."""
    yield from model.expand.parameters()
    yield from model.fc.parameters()


def save_checkpoint(model: nn.Module, path, metadata: dict | None = None) -> None:
    torch.save({"state_dict": model.state_dict(), "metadata": metadata or {}}, path)


def load_checkpoint(path, model_factory=PushingClassifier) -> tuple[nn.Module, dict]:
    payload = torch.load(path, map_location="cpu", weights_only=True)
    model = model_factory()
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, payload.get("metadata", {})
