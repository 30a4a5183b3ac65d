"""Flood verification scores.

Image scores (l1, linf) compare the 8-bit renderings, so their unit is gray
levels, i.e. centimeters of depth up to the 2.55 m clamp. Depth scores
(mae, md) are in meters. Categorical scores threshold both maps into
wet/dry at a depth threshold and reduce the confusion counts:

    pod  = hits / (hits + misses)                  perfect 1
    far  = false_alarms / (hits + false_alarms)    perfect 0
    bias = (hits + false_alarms) / (hits + misses) perfect 1
    csi  = hits / (hits + misses + false_alarms)   perfect 1

A zero denominator makes a score undefined, reported as None and serialized
as the explicit marker "undefined", never as a stand-in number.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import FloodMap, render_depth

WET_THRESHOLD_M = 0.30


@dataclass(frozen=True)
class ConfusionCounts:
    """Cell counts of the wet/dry contingency table."""

    hits: int
    misses: int
    false_alarms: int
    correct_negatives: int

    @property
    def total(self) -> int:
        return self.hits + self.misses + self.false_alarms + self.correct_negatives


@dataclass(frozen=True)
class ScoreReport:
    """All scores for one truth/prediction pair.

    l1/linf are mean/max absolute rendered-pixel differences (gray levels);
    mae is mean absolute depth error (m); md is the absolute depth error at
    the first cell (row-major) where the truth is deepest. Categorical
    scores may be None when undefined.
    """

    l1: float
    linf: float
    mae: float
    md: float
    pod: float | None
    far: float | None
    bias: float | None
    csi: float | None
    accuracy: float | None
    counts: ConfusionCounts


def _check_pair(truth: FloodMap, pred: FloodMap) -> None:
    if truth.shape != pred.shape:
        raise ValueError(f"truth shape {truth.shape} does not match prediction shape {pred.shape}")


def image_metrics(truth: FloodMap, pred: FloodMap) -> tuple[float, float]:
    """(l1, linf) over the 8-bit renderings, in gray levels."""
    _check_pair(truth, pred)
    a = render_depth(truth).pixels.astype(np.int16)
    b = render_depth(pred).pixels.astype(np.int16)
    diff = np.abs(a - b)
    return float(diff.mean()), float(diff.max())


def flood_metrics(truth: FloodMap, pred: FloodMap) -> tuple[float, float]:
    """(mae, md) in meters; md is taken at the truth's first deepest cell."""
    _check_pair(truth, pred)
    diff = np.abs(truth.depths - pred.depths)
    flat = int(np.argmax(truth.depths))  # first maximum in row-major order
    return float(diff.mean()), float(diff.flat[flat])


def _ratio(num: int, den: int) -> float | None:
    return num / den if den > 0 else None


def categorical_scores(truth: FloodMap, pred: FloodMap, threshold: float = WET_THRESHOLD_M,
                       ) -> tuple[ConfusionCounts, float | None, float | None, float | None,
                                  float | None, float | None]:
    """Confusion counts and (pod, far, bias, csi, accuracy) at a wet/dry threshold.

    A cell is wet when its depth is >= threshold.
    """
    _check_pair(truth, pred)
    if threshold <= 0:
        raise ValueError(f"threshold must be positive, got {threshold}")
    wet_t = truth.depths >= threshold
    wet_p = pred.depths >= threshold
    hits = int(np.count_nonzero(wet_t & wet_p))
    misses = int(np.count_nonzero(wet_t & ~wet_p))
    false_alarms = int(np.count_nonzero(~wet_t & wet_p))
    correct_neg = int(np.count_nonzero(~wet_t & ~wet_p))
    counts = ConfusionCounts(hits, misses, false_alarms, correct_neg)
    pod = _ratio(counts.hits, counts.hits + counts.misses)
    far = _ratio(counts.false_alarms, counts.hits + counts.false_alarms)
    bias = _ratio(counts.hits + counts.false_alarms, counts.hits + counts.misses)
    csi = _ratio(counts.hits, counts.hits + counts.misses + counts.false_alarms)
    accuracy = _ratio(counts.hits + counts.correct_negatives, counts.total)
    return counts, pod, far, bias, csi, accuracy


def score_report(truth: FloodMap, pred: FloodMap, threshold: float = WET_THRESHOLD_M) -> ScoreReport:
    """Every score for one pair; see the module docstring for units."""
    l1, linf = image_metrics(truth, pred)
    mae, md = flood_metrics(truth, pred)
    counts, pod, far, bias, csi, accuracy = categorical_scores(truth, pred, threshold)
    return ScoreReport(l1=l1, linf=linf, mae=mae, md=md, pod=pod, far=far,
                       bias=bias, csi=csi, accuracy=accuracy, counts=counts)


def _fmt_score(value: float | None) -> str:
    return "undefined" if value is None else repr(float(value))


SCORE_FIELDS = ("l1", "linf", "mae", "md", "pod", "far", "bias", "csi", "accuracy")


def report_lines(report: ScoreReport, header: str = "") -> list[str]:
    """key=value block for one pair; l1/linf are gray levels, mae/md meters."""
    lines = []
    if header:
        lines.append(f"# {header}")
    lines.append("# units: l1/linf in rendered gray levels (cm), mae/md in meters")
    for name in SCORE_FIELDS:
        lines.append(f"{name}={_fmt_score(getattr(report, name))}")
    c = report.counts
    lines.append(f"hits={c.hits}")
    lines.append(f"misses={c.misses}")
    lines.append(f"false_alarms={c.false_alarms}")
    lines.append(f"correct_negatives={c.correct_negatives}")
    return lines


def aggregate_scores(reports: list[ScoreReport]) -> dict[str, float | None]:
    """Mean of each score over pairs; undefined values are excluded per score.

    A score whose value is undefined for every pair aggregates to None.
    """
    out: dict[str, float | None] = {}
    for name in SCORE_FIELDS:
        values = [getattr(r, name) for r in reports if getattr(r, name) is not None]
        out[name] = float(np.mean(values)) if values else None
    return out
