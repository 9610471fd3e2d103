import sys
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

sys.path.insert(0, str(Path(__file__).parent))

MANIFEST_HEADER = "sample_id,video_id,frame,person_id,path,label,split,duplicate_of"


def _crop_array(rng, bright: bool) -> np.ndarray:
    """Separable content: pushing samples are bright, non-pushing dark."""
    base = 190 if bright else 40
    arr = rng.integers(base, base + 50, size=(224, 224, 3), dtype=np.uint8)
    cx, cy = rng.integers(60, 164, size=2)
    yy, xx = np.mgrid[0:224, 0:224]
    disc = (xx - cx) ** 2 + (yy - cy) ** 2 < 30**2
    arr[disc] = 255 if bright else 10
    return arr


def build_fixture(root: Path, n_train=50, n_val=12, n_test=8, seed=5) -> Path:
    """Manifest + crops tree; returns the manifest path."""
    rng = np.random.default_rng(seed)
    crops = root / "crops"
    crops.mkdir(parents=True)
    lines = [MANIFEST_HEADER]
    counter = 0
    for split, count in (("train", n_train), ("val", n_val), ("test1", n_test)):
        for i in range(count):
            pushing = i % 2 == 0
            sid = f"vx_f{counter:06d}_p1"
            label = "pushing" if pushing else "non-pushing"
            Image.fromarray(_crop_array(rng, pushing)).save(crops / f"{sid}.png")
            lines.append(f"{sid},vx,{counter},1,crops/{sid}.png,{label},{split},")
            counter += 1
    manifest = root / "manifest.csv"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest


@pytest.fixture(scope="session")
def fixture_manifest(tmp_path_factory):
    return build_fixture(tmp_path_factory.mktemp("trainer_data"))
