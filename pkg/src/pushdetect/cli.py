"""Subcommand front-end for the detection pipeline.

Stages can run one at a time (``regions``, ``label``, ``dedup``, ``split``,
``train-baseline``, ``score``, ``tune-threshold``, ``evaluate``,
``annotate``) or all at once (``pipeline``); both paths call the same code
and produce byte-identical artifacts for the same seed.

Exit codes: 0 success, 1 validation/usage error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from PIL import Image

from . import annotate as annotate_mod
from . import classifier, dataset, evaluation, geometry, region
from .errors import (
    CoverageError,
    DataIOError,
    PushDetectError,
    VideoNotFoundError,
)
from .trajectory import load_scene_config, parse_trajectories, sample_snapshots


class _Parser(argparse.ArgumentParser):
    # validation failures must exit 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _read_trajectory_file(path: str | Path):
    try:
        with open(path, "r", encoding="utf-8") as f:
            return parse_trajectories(f)
    except FileNotFoundError:
        raise DataIOError(f"trajectory file not found: {path}")


def _snapshot_regions_job(args):
    snapshot, config, frames_dir, video_id, mode, square_side, mask, crops_dir = args
    if not snapshot.real_pedestrians():
        return [], []
    image = region.load_frame_image(frames_dir, video_id, snapshot.frame)
    neighbor_rows: list[tuple[int, int, str]] = []
    if mode == "voronoi":
        context = region.voronoi_context(snapshot, config.r)
        neighbor_rows = geometry.neighbor_rows(context[1], context[2])
    else:
        context = None
    regions = region.extract_local_regions(
        snapshot, config, image, mode=mode, square_side=square_side, mask=mask,
        context=context,
    )
    manifest_rows = []
    for reg in regions:
        sid = region.sample_id(video_id, reg.frame, reg.person_id)
        crop_name = region.crop_file_name(video_id, reg.frame, reg.person_id)
        Image.fromarray(reg.crop).save(crops_dir / crop_name)
        manifest_rows.append(
            region.RegionManifestRow(
                sample_id=sid,
                video_id=video_id,
                frame=reg.frame,
                person_id=reg.person_id,
                path=f"crops/{crop_name}",
                mode=mode,
            )
        )
    return manifest_rows, neighbor_rows


def run_regions(
    trajectories: str | Path,
    frames_dir: str | Path,
    config_path: str | Path,
    out_dir: str | Path,
    video_id: str,
    mode: str = "voronoi",
    square_side: float = 0.6,
    mask: bool = True,
    jobs: int = 1,
) -> Path:
    """Extract per-person crops for one video; returns the region manifest path."""
    if mode not in region.REGION_MODES:
        raise ValueError(f"mode must be one of {region.REGION_MODES}, got {mode!r}")
    config = load_scene_config(config_path)
    records = _read_trajectory_file(trajectories)
    snapshots = sample_snapshots(records, config)
    out_dir = Path(out_dir)
    crops_dir = out_dir / "crops"
    crops_dir.mkdir(parents=True, exist_ok=True)
    job_args = [
        (snap, config, frames_dir, video_id, mode, square_side, mask, crops_dir)
        for snap in snapshots
    ]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_snapshot_regions_job, job_args))
    else:
        results = [_snapshot_regions_job(a) for a in job_args]
    manifest_rows = [row for rows, _ in results for row in rows]
    neighbor_rows = [row for _, rows in results for row in rows]
    manifest_path = out_dir / f"regions_{video_id}.csv"
    region.write_region_manifest(manifest_rows, manifest_path)
    if mode == "voronoi":
        geometry.write_neighbors_csv(neighbor_rows, out_dir / f"neighbors_{video_id}.csv")
    return manifest_path


def run_label(
    region_manifests: list[str | Path],
    out_path: str | Path,
    ground_truth: dict[str | None, str | Path],
) -> dataset.LabelStats:
    """Merge region manifests into a labeled sample manifest.

    ``ground_truth`` maps video_id -> csv path; the None key applies to all
    rows (single-video convenience).
    """
    rows = []
    for path in region_manifests:
        for rec in region.read_region_manifest(path):
            rows.append(
                dataset.ManifestRow(
                    sample_id=rec.sample_id,
                    video_id=rec.video_id,
                    frame=rec.frame,
                    person_id=rec.person_id,
                    path=rec.path,
                )
            )
    totals = [0, 0, 0]
    labeled = list(rows)
    for vid, gt_path in sorted(ground_truth.items(), key=lambda kv: (kv[0] is None, kv[0] or "")):
        entries = dataset.read_ground_truth(gt_path)
        labeled, stats = dataset.label_samples(labeled, entries, video_id=vid)
        totals[0] += stats.labeled
        totals[1] += stats.unknown
        totals[2] += stats.unmatched_ground_truth
    dataset.write_manifest(labeled, out_path)
    return dataset.LabelStats(*totals)


def run_dedup(
    manifest_path: str | Path, tau: float = 0.97, embeddings_path: str | Path | None = None
) -> int:
    rows = dataset.read_manifest(manifest_path)
    embeddings = dataset.read_embeddings(embeddings_path) if embeddings_path else None
    root = Path(manifest_path).parent
    rows = dataset.deduplicate(rows, tau=tau, root=root, embeddings=embeddings)
    dataset.write_manifest(rows, manifest_path)
    return sum(1 for r in rows if r.duplicate_of)


def run_split(
    manifest_path: str | Path,
    ratios: tuple[float, float, float],
    seed: int,
    holdout: str | None = None,
    summary_path: str | Path | None = None,
) -> dict:
    rows = dataset.read_manifest(manifest_path)
    if holdout is not None:
        rows = dataset.holdout_video(rows, holdout)
    rows = dataset.split_frames(rows, ratios=ratios, seed=seed)
    dataset.write_manifest(rows, manifest_path)
    summary = dataset.summarize(rows)
    if summary_path is not None:
        with open(summary_path, "w", encoding="utf-8") as f:
            json.dump(summary, f, indent=2, sort_keys=True)
            f.write("\n")
    return summary


def run_train_baseline(
    manifest_path: str | Path, out_path: str | Path, seed: int
) -> classifier.BaselineModel:
    rows = dataset.read_manifest(manifest_path)
    train_rows = [r for r in rows if r.split == "train" and not r.duplicate_of]
    model = classifier.train_baseline(train_rows, root=Path(manifest_path).parent, seed=seed)
    classifier.save_model(model, out_path)
    return model


def run_score(
    manifest_path: str | Path,
    out_path: str | Path,
    model_path: str | Path | None = None,
    score_file: str | Path | None = None,
    split: str | None = None,
) -> classifier.ScoreSet:
    rows = dataset.read_manifest(manifest_path)
    if split is not None:
        rows = [r for r in rows if r.split == split]
    if score_file is not None:
        source = classifier.read_score_csv(score_file).as_dict()
        scores = classifier.score(rows, score_rows=source)
    elif model_path is not None:
        model = classifier.load_model(model_path)
        scores = classifier.score(rows, model=model, root=Path(manifest_path).parent)
    else:
        raise ValueError("score needs --model or --score-file")
    classifier.write_score_csv(scores, out_path)
    return scores


def _join_scores(rows, scores: dict[str, float]):
    missing = [r.sample_id for r in rows if r.sample_id not in scores]
    if missing:
        raise CoverageError(
            "scores are missing samples: " + ", ".join(sorted(missing))
        )
    deltas = [scores[r.sample_id] for r in rows]
    labels = [r.label for r in rows]
    return deltas, labels


def _eval_rows(rows, split: str):
    return [
        r
        for r in rows
        if r.split == split
        and not r.duplicate_of
        and r.label in (dataset.LABEL_PUSHING, dataset.LABEL_NONPUSHING)
    ]


def run_tune_threshold(
    manifest_path: str | Path, scores_path: str | Path, out_path: str | Path
) -> tuple[float, float, float]:
    """Pick the balanced threshold from the validation split only."""
    rows = _eval_rows(dataset.read_manifest(manifest_path), "val")
    scores = classifier.read_score_csv(scores_path).as_dict()
    deltas, labels = _join_scores(rows, scores)
    threshold, tpr_value, tnpr_value = evaluation.optimal_threshold(deltas, labels)
    with open(out_path, "w", encoding="utf-8") as f:
        json.dump(
            {"threshold": threshold, "tpr": tpr_value, "tnpr": tnpr_value},
            f,
            indent=2,
            sort_keys=True,
        )
        f.write("\n")
    return threshold, tpr_value, tnpr_value


def run_evaluate(
    manifest_path: str | Path,
    scores_path: str | Path,
    split: str,
    threshold: float,
    out_path: str | Path | None = None,
) -> evaluation.EvalReport:
    rows = _eval_rows(dataset.read_manifest(manifest_path), split)
    scores = classifier.read_score_csv(scores_path).as_dict()
    deltas, labels = _join_scores(rows, scores)
    report = evaluation.build_report(deltas, labels, threshold)
    if out_path is not None:
        evaluation.write_report(report, out_path)
    return report


def run_annotate(
    manifest_path: str | Path,
    scores_path: str | Path,
    threshold: float,
    trajectories: str | Path,
    config_path: str | Path,
    frames_dir: str | Path,
    out_dir: str | Path,
    video_id: str,
    mark_nonpushing: bool = False,
) -> list[dict]:
    config = load_scene_config(config_path)
    records = _read_trajectory_file(trajectories)
    snapshots = sample_snapshots(records, config)
    rows = [r for r in dataset.read_manifest(manifest_path) if r.video_id == video_id]
    if not rows:
        raise VideoNotFoundError(f"video {video_id!r} not present in manifest")
    scores = classifier.read_score_csv(scores_path).as_dict()
    predictions: dict[int, dict[int, str]] = {}
    for r in rows:
        if r.sample_id not in scores:
            raise CoverageError(f"scores are missing sample {r.sample_id}")
        predictions.setdefault(r.frame, {})[r.person_id] = classifier.classify(
            scores[r.sample_id], threshold
        )
    summary = annotate_mod.annotate_sequence(
        frames_dir, snapshots, predictions, out_dir, config, video_id, mark_nonpushing
    )
    annotate_mod.write_annotation_summary(
        summary, Path(out_dir) / f"{video_id}_summary.json"
    )
    return summary


def _load_threshold(args) -> float:
    if getattr(args, "threshold", None) is not None:
        return args.threshold
    with open(args.threshold_file, "r", encoding="utf-8") as f:
        return float(json.load(f)["threshold"])


def run_pipeline(args) -> int:
    """All stages over a data directory tree:

    data/scene.json                    shared scene config (per-video override:
    data/videos/<vid>/scene.json)      optional
    data/videos/<vid>/trajectories.txt
    data/videos/<vid>/frames/<vid>_<frame>.png
    data/videos/<vid>/ground_truth.csv
    """
    data_dir = Path(args.data_dir)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    videos_root = data_dir / "videos"
    if not videos_root.is_dir():
        raise DataIOError(f"{videos_root} does not exist")
    video_ids = sorted(p.name for p in videos_root.iterdir() if p.is_dir())
    if not video_ids:
        raise DataIOError(f"no video directories under {videos_root}")

    def scene_path(vid: str) -> Path:
        override = videos_root / vid / "scene.json"
        return override if override.exists() else data_dir / "scene.json"

    region_manifests = []
    for vid in video_ids:
        region_manifests.append(
            run_regions(
                trajectories=videos_root / vid / "trajectories.txt",
                frames_dir=videos_root / vid / "frames",
                config_path=scene_path(vid),
                out_dir=out_dir,
                video_id=vid,
                mode=args.mode,
                square_side=args.square_side,
                mask=not args.no_mask,
                jobs=args.jobs,
            )
        )
    manifest_path = out_dir / "manifest.csv"
    ground_truth = {vid: videos_root / vid / "ground_truth.csv" for vid in video_ids}
    stats = run_label(region_manifests, manifest_path, ground_truth)
    print(
        f"labeled {stats.labeled} samples "
        f"({stats.unknown} unknown, {stats.unmatched_ground_truth} unmatched ground truth)",
        file=sys.stderr,
    )
    deleted = run_dedup(manifest_path, tau=args.tau)
    print(f"dedup removed {deleted} samples at tau={args.tau}", file=sys.stderr)
    run_split(
        manifest_path,
        ratios=args.ratios,
        seed=args.seed,
        holdout=args.holdout_video,
        summary_path=out_dir / "summary.json",
    )
    run_train_baseline(manifest_path, out_dir / "model.json", seed=args.seed)
    run_score(manifest_path, out_dir / "scores.csv", model_path=out_dir / "model.json")
    threshold, _, _ = run_tune_threshold(
        manifest_path, out_dir / "scores.csv", out_dir / "threshold.json"
    )
    print(f"tuned threshold: {threshold!r}", file=sys.stderr)
    eval_splits = ["test1"] + (["test2"] if args.holdout_video else [])
    for split in eval_splits:
        report = run_evaluate(
            manifest_path,
            out_dir / "scores.csv",
            split,
            threshold,
            out_path=out_dir / f"eval_{split}.json",
        )
        print(f"[{split}] {evaluation.format_metrics_row(report)}", file=sys.stderr)
    for vid in video_ids:
        run_annotate(
            manifest_path,
            out_dir / "scores.csv",
            threshold,
            trajectories=videos_root / vid / "trajectories.txt",
            config_path=scene_path(vid),
            frames_dir=videos_root / vid / "frames",
            out_dir=out_dir / "annotated",
            video_id=vid,
            mark_nonpushing=args.mark_nonpushing,
        )
    return 0


def _parse_ratios(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("ratios must be three comma-separated numbers")
    return tuple(float(p) for p in parts)  # type: ignore[return-value]


def _parse_ground_truth_arg(values, rows_hint=None) -> dict:
    mapping: dict = {}
    for value in values:
        if "=" in value:
            vid, path = value.split("=", 1)
            mapping[vid] = path
        else:
            mapping[None] = value
    return mapping


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pushdetect", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("regions", help="extract per-person local-region crops")
    p.add_argument("--trajectories", required=True)
    p.add_argument("--frames-dir", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--video-id", required=True)
    p.add_argument("--mode", choices=region.REGION_MODES, default="voronoi")
    p.add_argument("--square-side", type=float, default=0.6)
    p.add_argument("--no-mask", action="store_true",
                   help="keep pixels outside the region polygon")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("label", help="merge region manifests and apply ground truth")
    p.add_argument("--regions", nargs="+", required=True)
    p.add_argument("--ground-truth", nargs="+", required=True,
                   metavar="[VIDEO=]PATH")
    p.add_argument("--out", required=True)

    p = sub.add_parser("dedup", help="mark near-duplicate samples")
    p.add_argument("--manifest", required=True)
    p.add_argument("--tau", type=float, default=0.97)
    p.add_argument("--embeddings")

    p = sub.add_parser("split", help="assign train/val/test splits by frame")
    p.add_argument("--manifest", required=True)
    p.add_argument("--ratios", type=_parse_ratios, default=(0.70, 0.15, 0.15))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--holdout-video")
    p.add_argument("--summary")

    p = sub.add_parser("train-baseline", help="train the logistic baseline scorer")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("score", help="score samples with a model or score file")
    p.add_argument("--manifest", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--model")
    group.add_argument("--score-file")
    p.add_argument("--split")
    p.add_argument("--out", required=True)

    p = sub.add_parser("tune-threshold",
                       help="pick the balanced threshold on the validation split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="evaluate one split at a threshold")
    p.add_argument("--manifest", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--split", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--threshold", type=float)
    group.add_argument("--threshold-file")
    p.add_argument("--out")

    p = sub.add_parser("annotate", help="draw classification markers on frames")
    p.add_argument("--manifest", required=True)
    p.add_argument("--scores", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--threshold", type=float)
    group.add_argument("--threshold-file")
    p.add_argument("--trajectories", required=True)
    p.add_argument("--frames-dir", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--video-id", required=True)
    p.add_argument("--mark-nonpushing", action="store_true")

    p = sub.add_parser("pipeline", help="run every stage over a data directory")
    p.add_argument("--data-dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--tau", type=float, default=0.97)
    p.add_argument("--ratios", type=_parse_ratios, default=(0.70, 0.15, 0.15))
    p.add_argument("--holdout-video")
    p.add_argument("--mode", choices=region.REGION_MODES, default="voronoi")
    p.add_argument("--square-side", type=float, default=0.6)
    p.add_argument("--no-mask", action="store_true")
    p.add_argument("--mark-nonpushing", action="store_true")
    p.add_argument("--jobs", type=int, default=1)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        if args.command == "regions":
            run_regions(
                args.trajectories, args.frames_dir, args.config, args.out,
                args.video_id, mode=args.mode, square_side=args.square_side,
                mask=not args.no_mask, jobs=args.jobs,
            )
        elif args.command == "label":
            stats = run_label(
                args.regions, args.out, _parse_ground_truth_arg(args.ground_truth)
            )
            print(
                f"labeled {stats.labeled} samples "
                f"({stats.unknown} unknown, "
                f"{stats.unmatched_ground_truth} unmatched ground truth)",
                file=sys.stderr,
            )
        elif args.command == "dedup":
            deleted = run_dedup(args.manifest, tau=args.tau,
                                embeddings_path=args.embeddings)
            print(f"dedup removed {deleted} samples", file=sys.stderr)
        elif args.command == "split":
            summary = run_split(args.manifest, args.ratios, args.seed,
                                holdout=args.holdout_video,
                                summary_path=args.summary)
            print(json.dumps(summary, indent=2, sort_keys=True))
        elif args.command == "train-baseline":
            run_train_baseline(args.manifest, args.out, args.seed)
        elif args.command == "score":
            run_score(args.manifest, args.out, model_path=args.model,
                      score_file=args.score_file, split=args.split)
        elif args.command == "tune-threshold":
            threshold, tpr_value, tnpr_value = run_tune_threshold(
                args.manifest, args.scores, args.out
            )
            print(
                f"threshold={threshold!r} TPR={tpr_value:.4f} TNPR={tnpr_value:.4f}",
                file=sys.stderr,
            )
        elif args.command == "evaluate":
            report = run_evaluate(
                args.manifest, args.scores, args.split, _load_threshold(args),
                out_path=args.out,
            )
            print(evaluation.format_metrics_row(report), file=sys.stderr)
            print(json.dumps(evaluation.report_to_dict(report), indent=2, sort_keys=True))
        elif args.command == "annotate":
            run_annotate(
                args.manifest, args.scores, _load_threshold(args),
                args.trajectories, args.config, args.frames_dir, args.out,
                args.video_id, mark_nonpushing=args.mark_nonpushing,
            )
        elif args.command == "pipeline":
            return run_pipeline(args)
        return 0
    except DataIOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (PushDetectError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
