"""Imbalance-aware evaluation: confusion counts, class-wise rates, ROC/AUC,
and balanced-threshold selection.

The positive class is "pushing". Rates are undefined (and raise) when a
class is empty; silently returning zero would corrupt the macro accuracy.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .classifier import classify
from .dataset import LABEL_PUSHING
from .errors import UndefinedAucError, UndefinedRateError


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int    # pushing classified pushing
    fnp: int   # pushing classified non-pushing
    tnp: int   # non-pushing classified non-pushing
    fp: int    # non-pushing classified pushing


@dataclass(frozen=True)
class EvalReport:
    threshold: float
    tpr: float
    tnpr: float
    macro_accuracy: float
    auc: float
    roc: tuple[tuple[float, float], ...]
    confusion: ConfusionCounts


def _as_bool_labels(labels: Sequence) -> list[bool]:
    # strings compare against the pushing label; anything else (bool,
    # numpy bool, 0/1) is truth-valued directly
    return [
        lab == LABEL_PUSHING if isinstance(lab, str) else bool(lab)
        for lab in labels
    ]


def confusion(
    deltas: Sequence[float], labels: Sequence, threshold: float
) -> ConfusionCounts:
    """Counts under the inclusive rule delta >= threshold -> pushing."""
    if len(deltas) != len(labels):
        raise ValueError("scores and labels must align")
    truth = _as_bool_labels(labels)
    tp = fnp = tnp = fp = 0
    for delta, is_pushing in zip(deltas, truth):
        predicted = classify(delta, threshold) == LABEL_PUSHING
        if is_pushing and predicted:
            tp += 1
        elif is_pushing:
            fnp += 1
        elif predicted:
            fp += 1
        else:
            tnp += 1
    return ConfusionCounts(tp, fnp, tnp, fp)


def tpr(counts: ConfusionCounts) -> float:
    """Ratio of correctly classified pushing samples (sensitivity)."""
    total = counts.tp + counts.fnp
    if total == 0:
        raise UndefinedRateError("TPR undefined: no pushing samples")
    return counts.tp / total


def tnpr(counts: ConfusionCounts) -> float:
    """Ratio of correctly classified non-pushing samples (specificity)."""
    total = counts.tnp + counts.fp
    if total == 0:
        raise UndefinedRateError("TNPR undefined: no non-pushing samples")
    return counts.tnp / total


def macro_accuracy(tpr_value: float, tnpr_value: float) -> float:
    """Unweighted mean of the two class rates (balanced accuracy)."""
    return (tpr_value + tnpr_value) / 2.0


def roc_auc(
    deltas: Sequence[float], labels: Sequence
) -> tuple[tuple[tuple[float, float], ...], float]:
    """ROC points (FPR, TPR) and trapezoidal AUC.

    Thresholds sweep the distinct scores from an infinite sentinel down to
    the minimum, with the same inclusive rule the classifier uses, so the
    curve runs from (0, 0) to (1, 1).
    """
    truth = _as_bool_labels(labels)
    n_pos = sum(truth)
    n_neg = len(truth) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAucError("AUC undefined: both classes are required")
    thresholds = [math.inf] + sorted(set(float(d) for d in deltas), reverse=True)
    points = []
    for t in thresholds:
        tp = sum(1 for d, y in zip(deltas, truth) if y and d >= t)
        fp = sum(1 for d, y in zip(deltas, truth) if not y and d >= t)
        points.append((fp / n_neg, tp / n_pos))
    auc = 0.0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        auc += (x1 - x0) * (y0 + y1) / 2.0
    return tuple(points), auc


def optimal_threshold(
    deltas: Sequence[float], labels: Sequence
) -> tuple[float, float, float]:
    """Threshold minimizing |TPR - TNPR| over the observed-score candidates.

    Candidates are the distinct scores plus {0, 1}. Ties break first toward
    larger TPR + TNPR, then toward the smaller threshold. Returns
    (threshold, tpr, tnpr). Meant to be run on validation scores only.
    """
    truth = _as_bool_labels(labels)
    n_pos = sum(truth)
    n_neg = len(truth) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAucError(
            "threshold tuning undefined: both classes are required"
        )
    candidates = sorted(set(float(d) for d in deltas) | {0.0, 1.0})
    best = None
    for t in candidates:
        counts = confusion(deltas, truth, t)
        r_tpr = tpr(counts)
        r_tnpr = tnpr(counts)
        key = (abs(r_tpr - r_tnpr), -(r_tpr + r_tnpr), t)
        if best is None or key < best[0]:
            best = (key, t, r_tpr, r_tnpr)
    return best[1], best[2], best[3]


def build_report(
    deltas: Sequence[float], labels: Sequence, threshold: float
) -> EvalReport:
    counts = confusion(deltas, labels, threshold)
    r_tpr = tpr(counts)
    r_tnpr = tnpr(counts)
    roc, auc = roc_auc(deltas, labels)
    return EvalReport(
        threshold=threshold,
        tpr=r_tpr,
        tnpr=r_tnpr,
        macro_accuracy=macro_accuracy(r_tpr, r_tnpr),
        auc=auc,
        roc=roc,
        confusion=counts,
    )


def report_to_dict(report: EvalReport) -> dict:
    return {
        "threshold": report.threshold,
        "tpr": report.tpr,
        "tnpr": report.tnpr,
        "macro_accuracy": report.macro_accuracy,
        "auc": report.auc,
        "confusion": {
            "tp": report.confusion.tp,
            "fnp": report.confusion.fnp,
            "tnp": report.confusion.tnp,
            "fp": report.confusion.fp,
        },
        "roc": [[fpr, tpr_] for fpr, tpr_ in report.roc],
    }


def write_report(report: EvalReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report_to_dict(report), f, indent=2, sort_keys=True)
        f.write("\n")


def format_metrics_row(report: EvalReport) -> str:
    """One human-readable results line (percentages, like the eval tables)."""
    gap = abs(report.tpr - report.tnpr)
    return (
        f"threshold={report.threshold:.4g}  "
        f"macro={100 * report.macro_accuracy:.1f}%  "
        f"TNPR={100 * report.tnpr:.1f}%  "
        f"TPR={100 * report.tpr:.1f}%  "
        f"|TPR-TNPR|={100 * gap:.1f}%  "
        f"AUC={report.auc:.3f}"
    )
