"""Deterministic synthetic data for end-to-end tests and demos.

Generates a small data tree in the layout the pipeline subcommand expects:
random-walk pedestrian trajectories, noise-textured frames with a disc per
pedestrian, and a scripted ground truth (person pushes at second t iff
(person_id + t) % 3 == 0, so every frame carries both classes).

Also runnable directly:  python tests/synthetic.py --out demo_data
"""

from __future__ import annotations

import argparse
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

WIDTH, HEIGHT = 288, 224
PX_PER_M = 32.0
FPS = 25

SCENE = {
    "fps": FPS,
    "r": 0.8,
    "world_to_pixel": [PX_PER_M, 0, 0, 0, PX_PER_M, 0, 0, 0, 1],
    "head_radius_px": 7,
    "crop_size": 64,
}


def is_pushing(person_id: int, timestamp_s: int) -> bool:
    return (person_id + timestamp_s) % 3 == 0


def _walk(rng, n_people: int, seconds: int):
    """Positions[t][pid-1] = (x, y) in world meters, inside the visible area."""
    lo = np.array([1.0, 1.0])
    hi = np.array([WIDTH / PX_PER_M - 1.0, HEIGHT / PX_PER_M - 1.0])
    pos = rng.uniform(lo, hi, size=(n_people, 2))
    out = []
    for _ in range(seconds):
        out.append(pos.copy())
        pos = np.clip(pos + rng.normal(0, 0.15, size=pos.shape), lo, hi)
    return out


def _frame_array(video_seed: int, frame: int, positions_px) -> np.ndarray:
    rng = np.random.default_rng([video_seed, frame])
    noise = rng.integers(0, 60, size=(HEIGHT, WIDTH, 3), dtype=np.uint8)
    gradient = np.linspace(30, 90, WIDTH, dtype=np.uint8)[None, :, None]
    img = Image.fromarray(noise + gradient)
    draw = ImageDraw.Draw(img)
    for pid, (px, py) in positions_px:
        shade = 90 + (pid * 37) % 140
        draw.ellipse((px - 6, py - 6, px + 6, py + 6), fill=(shade, shade // 2, 255 - shade))
        draw.ellipse((px - 2, py - 2, px + 2, py + 2), fill=(255, 255, 255))
    return np.asarray(img)


def build_dataset(
    root: str | Path,
    videos: dict[str, int] | None = None,
    seconds: int = 10,
    seed: int = 7,
) -> Path:
    """Write the full data tree; ``videos`` maps video_id -> pedestrian count."""
    root = Path(root)
    if videos is None:
        videos = {"v0": 7, "v1": 8, "v2": 6}
    import json

    root.mkdir(parents=True, exist_ok=True)
    with open(root / "scene.json", "w", encoding="utf-8") as f:
        json.dump(SCENE, f, indent=2, sort_keys=True)
        f.write("\n")
    for vid_index, (vid, n_people) in enumerate(sorted(videos.items())):
        video_seed = seed * 1000 + vid_index
        rng = np.random.default_rng(video_seed)
        vdir = root / "videos" / vid
        frames_dir = vdir / "frames"
        frames_dir.mkdir(parents=True, exist_ok=True)
        steps = _walk(rng, n_people, seconds)

        lines = []
        gt_lines = ["person_id,frame,label"]
        for t in range(seconds):
            frame = t * FPS
            positions_px = []
            for pid in range(1, n_people + 1):
                x, y = steps[t][pid - 1]
                lines.append(f"{pid} {frame} {x:.4f} {y:.4f}")
                positions_px.append((pid, (x * PX_PER_M, y * PX_PER_M)))
                # off-sample rows exercise the per-second filter
                jitter = rng.normal(0, 0.02, size=2)
                lines.append(
                    f"{pid} {frame + 7} {x + jitter[0]:.4f} {y + jitter[1]:.4f}"
                )
                # a couple of gaps in one video exercise unknown labels
                if vid == "v1" and t == 0 and pid <= 2:
                    continue
                gt_lines.append(f"{pid},{frame},{1 if is_pushing(pid, t) else 0}")
            Image.fromarray(_frame_array(video_seed, frame, positions_px)).save(
                frames_dir / f"{vid}_{frame:06d}.png"
            )
        (vdir / "trajectories.txt").write_text("\n".join(lines) + "\n")
        (vdir / "ground_truth.csv").write_text("\n".join(gt_lines) + "\n")
    return root


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--seconds", type=int, default=10)
    args = parser.parse_args()
    build_dataset(args.out, seconds=args.seconds, seed=args.seed)
    print(f"synthetic dataset written to {args.out}")


if __name__ == "__main__":
    main()
