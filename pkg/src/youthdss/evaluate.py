"""Classifier evaluation: confusion matrices, one-vs-rest collapses,
TPR/FPR/accuracy, macro averages and ROC operating points.

Classifiers here are discrete, so the ROC output is a scatter of
operating points against the chance diagonal rather than a swept
curve.  All CSV numbers print at 6 significant digits.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import InputError


@dataclass(frozen=True)
class ConfusionMatrix:
    labels: tuple[str, ...]
    counts: np.ndarray  # rows = observed, columns = predicted

    def __post_init__(self):
        arr = np.asarray(self.counts, dtype=np.int64)
        if arr.shape != (len(self.labels), len(self.labels)):
            raise InputError("confusion counts must be K x K matching labels")
        if arr.size and arr.min() < 0:
            raise InputError("confusion counts must be non-negative")
        arr.setflags(write=False)
        object.__setattr__(self, "counts", arr)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def confusion(observed, predicted, labels) -> ConfusionMatrix:
    """counts[i][j] = number of records observed as class i, predicted j."""
    observed = np.asarray(observed, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if observed.shape != predicted.shape:
        raise InputError(
            f"observed ({observed.size}) and predicted ({predicted.size}) lengths differ"
        )
    k = len(labels)
    if observed.size and (
        min(observed.min(), predicted.min()) < 0
        or max(observed.max(), predicted.max()) >= k
    ):
        raise InputError("label index out of range")
    counts = np.bincount(observed * k + predicted, minlength=k * k).reshape(k, k)
    return ConfusionMatrix(tuple(labels), counts)


@dataclass(frozen=True)
class BinaryCollapse:
    positive: str
    tp: int
    fn: int
    fp: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn


def collapse(matrix: ConfusionMatrix, positive: str) -> BinaryCollapse:
    """One-vs-rest 2x2 collapse: the positive class against all others pooled."""
    if positive not in matrix.labels:
        raise InputError(f"unknown positive class {positive!r}")
    p = matrix.labels.index(positive)
    counts = matrix.counts
    tp = int(counts[p, p])
    fn = int(counts[p].sum() - tp)
    fp = int(counts[:, p].sum() - tp)
    tn = int(counts.sum() - tp - fn - fp)
    return BinaryCollapse(positive, tp, fn, fp, tn)


@dataclass(frozen=True)
class MetricsRow:
    tpr: float
    fpr: float
    accuracy: float


def metrics(b: BinaryCollapse) -> MetricsRow:
    """TPR, FPR and accuracy; undefined denominators raise, never read as 0."""
    if b.tp + b.fn == 0:
        raise InputError(f"no positive observations for {b.positive!r}: TPR undefined")
    if b.fp + b.tn == 0:
        raise InputError(f"no negative observations for {b.positive!r}: FPR undefined")
    return MetricsRow(
        tpr=b.tp / (b.tp + b.fn),
        fpr=b.fp / (b.fp + b.tn),
        accuracy=(b.tp + b.tn) / b.total,
    )


def macro_average(rows: list[MetricsRow]) -> MetricsRow:
    if not rows:
        raise InputError("cannot average an empty list of metric rows")
    n = len(rows)
    return MetricsRow(
        tpr=sum(r.tpr for r in rows) / n,
        fpr=sum(r.fpr for r in rows) / n,
        accuracy=sum(r.accuracy for r in rows) / n,
    )


@dataclass(frozen=True)
class MetricsTable:
    """Per-dataset, per-class metrics plus Avg column and Overall row."""

    datasets: tuple[str, ...]
    classes: tuple[str, ...]
    cells: dict[tuple[str, str], MetricsRow]

    @classmethod
    def from_confusions(
        cls, named: list[tuple[str, ConfusionMatrix]]
    ) -> "MetricsTable":
        if not named:
            raise InputError("need at least one confusion matrix")
        classes = named[0][1].labels
        cells = {}
        for name, matrix in named:
            if matrix.labels != classes:
                raise InputError("confusion matrices use different label sets")
            for cl in classes:
                cells[(name, cl)] = metrics(collapse(matrix, cl))
        return cls(tuple(n for n, _ in named), classes, cells)

    @classmethod
    def from_collapses(
        cls, named: list[tuple[str, str, BinaryCollapse]]
    ) -> "MetricsTable":
        """Build from (dataset, class, collapse) triples, e.g. published
        per-dataset 2x2 tables that don't share a common K x K matrix."""
        datasets: list[str] = []
        classes: list[str] = []
        cells = {}
        for ds, cl, b in named:
            if ds not in datasets:
                datasets.append(ds)
            if cl not in classes:
                classes.append(cl)
            cells[(ds, cl)] = metrics(b)
        for ds in datasets:
            for cl in classes:
                if (ds, cl) not in cells:
                    raise InputError(f"missing collapse for ({ds!r}, {cl!r})")
        return cls(tuple(datasets), tuple(classes), cells)

    def cell(self, dataset: str, cl: str) -> MetricsRow:
        return self.cells[(dataset, cl)]

    def dataset_average(self, dataset: str) -> MetricsRow:
        return macro_average([self.cells[(dataset, cl)] for cl in self.classes])

    def overall(self, cl: str) -> MetricsRow:
        return macro_average([self.cells[(ds, cl)] for ds in self.datasets])

    def overall_average(self) -> MetricsRow:
        return macro_average([self.dataset_average(ds) for ds in self.datasets])

    def roc_points(self) -> list["RocPoint"]:
        return [
            RocPoint(
                label=f"{ds} / {cl}",
                fpr=self.cells[(ds, cl)].fpr,
                tpr=self.cells[(ds, cl)].tpr,
            )
            for ds in self.datasets
            for cl in self.classes
        ]

    def save_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["dataset", "measure", *self.classes, "Avg."])
            for ds in self.datasets:
                avg = self.dataset_average(ds)
                for measure in ("tpr", "fpr", "accuracy"):
                    writer.writerow(
                        [
                            ds,
                            measure.upper() if measure != "accuracy" else "Accuracy",
                            *[
                                f"{getattr(self.cells[(ds, cl)], measure):.6g}"
                                for cl in self.classes
                            ],
                            f"{getattr(avg, measure):.6g}",
                        ]
                    )
            overall_avg = self.overall_average()
            for measure in ("tpr", "fpr", "accuracy"):
                writer.writerow(
                    [
                        "Overall",
                        measure.upper() if measure != "accuracy" else "Accuracy",
                        *[
                            f"{getattr(self.overall(cl), measure):.6g}"
                            for cl in self.classes
                        ],
                        f"{getattr(overall_avg, measure):.6g}",
                    ]
                )


def save_collapses_csv(
    named: list[tuple[str, str, BinaryCollapse]], path: str | Path
) -> None:
    """Per-dataset 2x2 tables, one row per collapse (Table-15-style layout)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["dataset", "positive", "tp", "fn", "fp", "tn"])
        for ds, cl, b in named:
            writer.writerow([ds, cl, b.tp, b.fn, b.fp, b.tn])


@dataclass(frozen=True)
class RocPoint:
    label: str
    fpr: float
    tpr: float

    def __post_init__(self):
        if not (0.0 <= self.fpr <= 1.0 and 0.0 <= self.tpr <= 1.0):
            raise InputError(
                f"ROC point {self.label!r} outside [0,1]: ({self.fpr}, {self.tpr})"
            )

    @property
    def above_diagonal(self) -> bool:
        return self.tpr > self.fpr

    @property
    def chance_level(self) -> bool:
        return self.tpr == self.fpr


@dataclass(frozen=True)
class RocReport:
    points: tuple[RocPoint, ...]

    @property
    def fraction_above_diagonal(self) -> float:
        if not self.points:
            return 0.0
        return sum(p.above_diagonal for p in self.points) / len(self.points)

    def save_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["label", "fpr", "tpr", "above_diagonal"])
            for p in self.points:
                writer.writerow(
                    [p.label, f"{p.fpr:.6g}", f"{p.tpr:.6g}", str(p.above_diagonal)]
                )

    def save_svg(self, path: str | Path) -> None:
        Path(path).write_text(render_roc_svg(list(self.points)), encoding="utf-8")


def roc_points(points) -> RocReport:
    """Validate and package ROC operating points (fpr, tpr) for output."""
    packed = []
    for p in points:
        if isinstance(p, RocPoint):
            packed.append(p)
        elif len(p) == 3:
            packed.append(RocPoint(str(p[0]), float(p[1]), float(p[2])))
        else:
            packed.append(RocPoint("", float(p[0]), float(p[1])))
    return RocReport(tuple(packed))


_SVG_SIZE = 480
_SVG_MARGIN = 50


def _svg_x(v: float) -> float:
    return _SVG_MARGIN + v * (_SVG_SIZE - 2 * _SVG_MARGIN)


def _svg_y(v: float) -> float:
    return _SVG_SIZE - _SVG_MARGIN - v * (_SVG_SIZE - 2 * _SVG_MARGIN)


def render_roc_svg(points: list[RocPoint]) -> str:
    """Scatter of operating points with the chance diagonal; pure static
    SVG with no timestamps so identical inputs give identical bytes."""
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_SIZE}" '
        f'height="{_SVG_SIZE}" viewBox="0 0 {_SVG_SIZE} {_SVG_SIZE}">',
        f'<rect width="{_SVG_SIZE}" height="{_SVG_SIZE}" fill="white"/>',
        # axes
        f'<line x1="{_svg_x(0)}" y1="{_svg_y(0)}" x2="{_svg_x(1)}" y2="{_svg_y(0)}" stroke="black"/>',
        f'<line x1="{_svg_x(0)}" y1="{_svg_y(0)}" x2="{_svg_x(0)}" y2="{_svg_y(1)}" stroke="black"/>',
        # chance diagonal
        f'<line x1="{_svg_x(0)}" y1="{_svg_y(0)}" x2="{_svg_x(1)}" y2="{_svg_y(1)}" '
        'stroke="gray" stroke-dasharray="6,4"/>',
        f'<text x="{_SVG_SIZE / 2}" y="{_SVG_SIZE - 12}" text-anchor="middle" '
        'font-size="14">False positive rate</text>',
        f'<text x="14" y="{_SVG_SIZE / 2}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 14 {_SVG_SIZE / 2})">True positive rate</text>',
    ]
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        parts.append(
            f'<text x="{_svg_x(tick)}" y="{_svg_y(0) + 18}" text-anchor="middle" '
            f'font-size="11">{tick:g}</text>'
        )
        parts.append(
            f'<text x="{_svg_x(0) - 8}" y="{_svg_y(tick) + 4}" text-anchor="end" '
            f'font-size="11">{tick:g}</text>'
        )
    for p in points:
        color = "steelblue" if p.above_diagonal else "firebrick"
        parts.append(
            f'<circle cx="{_svg_x(p.fpr):.2f}" cy="{_svg_y(p.tpr):.2f}" r="4" '
            f'fill="{color}"><title>{p.label}: fpr={p.fpr:.6g}, tpr={p.tpr:.6g}'
            "</title></circle>"
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
