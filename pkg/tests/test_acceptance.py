"""Acceptance suite: one test per top-level criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -s`` to see the
lines on success; failures always show them).
"""

import time
from contextlib import contextmanager

import numpy as np
import pytest

from pushdetect.classifier import classify
from pushdetect.dataset import ManifestRow, deduplicate, holdout_video, split_frames
from pushdetect.errors import DegenerateGeometryError
from pushdetect.evaluation import (
    ConfusionCounts,
    confusion,
    macro_accuracy,
    optimal_threshold,
    roc_auc,
    tnpr,
    tpr,
)
from pushdetect.geometry import (
    SHARED_EDGE_REL,
    build_cell_set,
    convex_hull,
    direct_neighbors,
)
from pushdetect.region import generate_dummy_points, local_region_polygon, voronoi_context
from pushdetect.trajectory import FrameSnapshot, PedestrianPoint

from cli_helpers import run_monolithic, run_staged, tree_bytes
from oracles import (
    all_pairs_shared_lengths,
    brute_force_hull,
    nearest_site,
    pairwise_auc,
    point_in_convex,
    point_strictly_inside_polygon,
    shoelace_area,
)
from synthetic import build_dataset
from test_dataset import make_crop_files


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[ACCEPTANCE] {name}: FAIL", flush=True)
        raise
    print(f"[ACCEPTANCE] {name}: PASS", flush=True)


def snapshot_from_xy(points, frame=0):
    peds = tuple(
        PedestrianPoint(i + 1, float(x), float(y)) for i, (x, y) in enumerate(points)
    )
    return FrameSnapshot(frame, 0, peds)


def test_geometry_oracle_suite():
    """200 random snapshots (4-200 sites, mixed scales): area partition,
    10,000-probe nearest-site membership, adjacency vs bisector oracle;
    all inside a 60 s budget.
    """
    with criterion("geometry oracle suite (200 snapshots, <=60s)"):
        rng = np.random.default_rng(20240)
        start = time.monotonic()
        probes_done = 0
        for k in range(200):
            n = int(rng.integers(4, 201))
            scale = 10.0 ** rng.uniform(-3, 3)
            pts = [tuple(p) for p in rng.uniform(0, 10, size=(n, 2)) * scale]
            cell_set = build_cell_set(snapshot_from_xy(pts, frame=k))
            graph = direct_neighbors(cell_set)
            sites_xy = np.array(pts)
            hull_verts = cell_set.hull.vertices

            # partition: cell areas sum to the hull area
            total = sum(p.area() for p in cell_set.cells.values())
            hull_area = abs(shoelace_area(hull_verts))
            assert abs(total - hull_area) <= 1e-6 * hull_area

            # adjacency: symmetric, irreflexive, equal to the bisector oracle
            shared = all_pairs_shared_lengths(sites_xy, hull_verts)
            eps = SHARED_EDGE_REL * cell_set.diameter
            for i in range(n):
                assert i not in graph.adjacency[i]
                for j in graph.adjacency[i]:
                    assert i in graph.adjacency[j]
            for i in range(n):
                for j in range(i + 1, n):
                    assert (j in graph.adjacency[i]) == (shared[i, j] > eps)

            # membership: 50 probes per snapshot, 10,000 total
            lo = sites_xy.min(axis=0)
            hi = sites_xy.max(axis=0)
            done = 0
            while done < 50:
                x, y = rng.uniform(lo, hi)
                if not point_in_convex(hull_verts, x, y):
                    continue
                idx, d1, d2 = nearest_site(sites_xy, x, y)
                if d2 - d1 < 1e-9 * cell_set.diameter:
                    continue  # ties excluded by contract
                assert point_in_convex(cell_set.cells[idx].vertices, x, y, tol=1e-9)
                done += 1
            probes_done += done
        elapsed = time.monotonic() - start
        assert probes_done == 10_000
        assert elapsed <= 60.0, f"geometry suite took {elapsed:.1f}s"


def test_convex_hull_against_brute_force():
    """100 instances compared against the O(n^3) all-pairs oracle, with
    duplicate points and collinear-input rejections mixed in."""
    with criterion("convex hull vs O(n^3) oracle (100 instances)"):
        rng = np.random.default_rng(555)
        compared = 0
        rejected = 0
        for trial in range(100):
            kind = trial % 10
            if kind == 8:
                # 3 exactly collinear points must be rejected by both sides
                # (integer coordinates keep the collinearity exact in floats)
                a = rng.integers(-50, 50, size=2).astype(float)
                d = rng.integers(1, 9, size=2).astype(float)
                pts = [tuple(a), tuple(a + d), tuple(a + 2 * d)]
                assert brute_force_hull(pts) is None
                with pytest.raises(DegenerateGeometryError):
                    convex_hull(pts)
                rejected += 1
                continue
            if kind == 9:
                # grid subsets put collinear points on hull edges
                cells = rng.choice(36, size=rng.integers(8, 20), replace=False)
                pts = [(float(c % 6), float(c // 6)) for c in cells]
            else:
                n = int(rng.integers(4, 120))
                pts = [tuple(p) for p in rng.uniform(-50, 50, size=(n, 2))]
                if kind % 3 == 0:
                    pts += pts[: max(1, n // 4)]  # duplicates
            expected = brute_force_hull(pts)
            if expected is None:
                with pytest.raises(DegenerateGeometryError):
                    convex_hull(pts)
                rejected += 1
                continue
            hull = list(convex_hull(pts).vertices)
            assert set(hull) == set(expected)
            k = hull.index(expected[0])
            assert hull[k:] + hull[:k] == expected
            compared += 1
        assert compared + rejected == 100
        assert rejected >= 10


def test_dummy_point_enclosure():
    """After augmentation every pedestrian of 100 random generic snapshots
    lies strictly inside its local region; the worked two-pedestrian
    example produces exactly the expected dummy points."""
    with criterion("dummy-point enclosure (100 snapshots + worked example)"):
        rng = np.random.default_rng(2718)
        for k in range(100):
            n = int(rng.integers(1, 30))
            pts = [tuple(p) for p in rng.uniform(0, 6, size=(n, 2))]
            snapshot = snapshot_from_xy(pts, frame=k)
            augmented, _, graph = voronoi_context(snapshot, r=1.0)
            for p in snapshot.pedestrians:
                poly = local_region_polygon(p.person_id, augmented, graph)
                assert point_strictly_inside_polygon(poly.vertices, p.x, p.y), (
                    k, p.person_id,
                )
        out = generate_dummy_points(snapshot_from_xy([(0, 0), (0.5, 0.5)]), r=1.0)
        dummies = [(p.x, p.y) for p in out.pedestrians if p.is_dummy]
        assert dummies == [
            (-0.5, 0.5), (0.5, -0.5), (-0.5, -0.5),  # around (0, 0)
            (0.0, 1.0), (1.0, 1.0), (1.0, 0.0),      # around (0.5, 0.5)
        ]


def test_evaluation_suite():
    """Trapezoid AUC equals the pairwise oracle on 100 random score sets;
    the tuned threshold is a global objective minimum; the hand-computed
    rate fixtures match exactly; the classify boundary is inclusive."""
    with criterion("evaluation suite (AUC oracle, threshold optimum, fixtures)"):
        rng = np.random.default_rng(99)
        done = 0
        while done < 100:
            n = int(rng.integers(2, 501))
            deltas = list(np.round(rng.random(n), 2))  # rounding forces ties
            truth = list(rng.random(n) > rng.uniform(0.2, 0.8))
            if all(truth) or not any(truth):
                continue
            _, auc = roc_auc(deltas, truth)
            assert abs(auc - pairwise_auc(deltas, truth)) <= 1e-9

            threshold, r_tpr, r_tnpr = optimal_threshold(deltas, truth)
            best = abs(r_tpr - r_tnpr)
            for cand in set(deltas) | {0.0, 1.0}:
                counts = confusion(deltas, truth, cand)
                assert best <= abs(tpr(counts) - tnpr(counts)) + 1e-12
            done += 1

        counts = confusion([0.9, 0.2, 0.1, 0.3, 0.8], [True, True, False, False, False], 0.5)
        assert counts == ConfusionCounts(tp=1, fnp=1, tnp=2, fp=1)
        assert tpr(counts) == 0.5
        assert tnpr(counts) == 2 / 3
        assert macro_accuracy(tpr(counts), tnpr(counts)) == pytest.approx(7 / 12)
        assert macro_accuracy(0.86, 0.84) == pytest.approx(0.85)

        assert classify(0.5, 0.5) == "pushing"
        assert classify(0.038, 0.038) == "pushing"
        assert classify(0.037, 0.038) == "non-pushing"


def test_pipeline_determinism(tmp_path):
    """The synthetic fixture (3 videos x 10 frames) run twice monolithically
    and once staged, seed 42: all three output trees byte-identical, within
    a 120 s budget."""
    with criterion("pipeline determinism (2 monolithic + staged, <=120s)"):
        start = time.monotonic()
        data = build_dataset(tmp_path / "data")
        first = tmp_path / "first"
        second = tmp_path / "second"
        staged = tmp_path / "staged"
        run_monolithic(data, first, seed=42, holdout="v2")
        run_monolithic(data, second, seed=42, holdout="v2")
        staged.mkdir()
        run_staged(data, staged, seed=42, holdout="v2")
        a, b, c = tree_bytes(first), tree_bytes(second), tree_bytes(staged)
        assert sorted(a) == sorted(b) == sorted(c)
        assert [k for k in a if a[k] != b[k]] == []
        assert [k for k in a if a[k] != c[k]] == []
        # the tree covers every contracted artifact kind
        names = list(a)
        for needle in ("manifest.csv", "scores.csv", "threshold.json",
                       "eval_test1.json", "eval_test2.json", "summary.json",
                       "model.json"):
            assert needle in names
        assert any(k.startswith("crops/") for k in names)
        assert any(k.startswith("annotated/") and k.endswith(".png") for k in names)
        elapsed = time.monotonic() - start
        assert elapsed <= 120.0, f"pipeline determinism took {elapsed:.1f}s"


def test_dataset_mechanics(tmp_path):
    """Split ratios exact on 100 frames, holdout override, and dedup that
    removes all byte-identical planted duplicates idempotently."""
    with criterion("dataset mechanics (splits, holdout, dedup)"):
        rows = []
        for f in range(100):
            for pid in (1, 2):
                rows.append(
                    ManifestRow(
                        sample_id=f"vA_f{f:06d}_p{pid}", video_id="vA", frame=f,
                        person_id=pid, path=f"crops/vA_f{f:06d}_p{pid}.png",
                    )
                )
        split = split_frames(rows, seed=42)
        frame_splits = {}
        for r in split:
            frame_splits.setdefault(r.frame, set()).add(r.split)
        assert all(len(s) == 1 for s in frame_splits.values())
        counts = {}
        for s in frame_splits.values():
            counts[next(iter(s))] = counts.get(next(iter(s)), 0) + 1
        assert counts == {"train": 70, "val": 15, "test1": 15}

        held = holdout_video(
            rows + [ManifestRow("vB_f000000_p1", "vB", 0, 1, "crops/b.png")], "vB"
        )
        assert all(r.split == "test2" for r in held if r.video_id == "vB")
        resplit = split_frames(held, seed=1)
        assert all(r.split == "test2" for r in resplit if r.video_id == "vB")

        specs = {f"s{i}": i * 3 + 1 for i in range(6)}
        specs.update({"z_dup0": ("copy", "s0"), "z_dup1": ("copy", "s1"),
                      "z_dup2": ("copy", "s1")})
        make_crop_files(tmp_path, specs)
        crop_rows = [
            ManifestRow(sid, "vA", 0, 1, f"crops/{sid}.png") for sid in sorted(specs)
        ]
        once = deduplicate(crop_rows, tau=0.97, root=tmp_path)
        marked = {r.sample_id: r.duplicate_of for r in once}
        assert marked["z_dup0"] == "s0"
        assert marked["z_dup1"] == "s1"
        assert marked["z_dup2"] == "s1"
        assert all(not marked[f"s{i}"] for i in range(6))
        assert deduplicate(once, tau=0.97, root=tmp_path) == once
