"""Confusion matrices and the six-metric predictive report.

Precision and F1 follow the not-available rule: when any class is never
predicted its precision is undefined, and the macro precision and F1 are
reported as ``None`` rather than treating the gap as zero.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are actual classes, columns predicted classes."""

    counts: np.ndarray
    labels: tuple[str, ...]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class MetricsReport:
    mse: float
    accuracy: float
    precision: Optional[float]
    recall: float
    specificity: float
    f1: Optional[float]
    labels: tuple[str, ...]
    per_class_precision: tuple[Optional[float], ...]
    per_class_recall: tuple[Optional[float], ...]
    per_class_specificity: tuple[Optional[float], ...]
    per_class_f1: tuple[Optional[float], ...]

    def to_json(self) -> str:
        d = asdict(self)
        d["labels"] = list(self.labels)
        return json.dumps(d, indent=2, sort_keys=False, default=_num) + "\n"

    def to_text(self, name: str = "model") -> str:
        rows = [("mean square error", self.mse), ("accuracy", self.accuracy),
                ("precision", self.precision), ("recall", self.recall),
                ("specificity", self.specificity), ("f1-score", self.f1)]
        width = max(len(r[0]) for r in rows)
        out = [f"{'':<{width}}  {name:>10}"]
        for key, val in rows:
            out.append(f"{key:<{width}}  {fmt_na(val):>10}")
        return "\n".join(out) + "\n"


def _num(x):
    return float(x)


def fmt_na(x, digits=4) -> str:
    return "NA" if x is None else f"{x:.{digits}f}"


def confusion(actual: Sequence, predicted: Sequence, labels: Sequence) -> ConfusionMatrix:
    labels = tuple(str(x) for x in labels)
    if len(actual) != len(predicted):
        raise ValueError(f"length mismatch: {len(actual)} actual vs {len(predicted)} predicted")
    index = {lab: k for k, lab in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for a, p in zip(actual, predicted):
        try:
            counts[index[str(a)], index[str(p)]] += 1
        except KeyError as exc:
            raise ValueError(f"unknown label {exc.args[0]!r}") from None
    return ConfusionMatrix(counts, labels)


def _ratio(num, den):
    return None if den == 0 else float(num) / float(den)


def _mean_defined(xs):
    vals = [x for x in xs if x is not None]
    return float(np.mean(vals)) if vals else 0.0


def metrics(cm: ConfusionMatrix, scores, actual_onehot) -> MetricsReport:
    """Macro-averaged report.

    ``mse`` is the mean over all N*J cells of ``(actual_onehot - scores)**2``.
    Recall and specificity of a class that never occurs (or, for
    specificity, a class that is every record) are undefined and left out
    of the macro average.
    """
    c = np.asarray(cm.counts, dtype=float)
    total = c.sum()
    if c.size == 0 or total == 0:
        raise ValueError("empty confusion matrix")
    scores = np.asarray(scores, dtype=float)
    onehot = np.asarray(actual_onehot, dtype=float)
    if scores.shape != onehot.shape or scores.shape != (int(total), c.shape[0]):
        raise ValueError(f"score shape {scores.shape} does not fit a {c.shape[0]}-class "
                         f"confusion matrix over {int(total)} records")
    tp = np.diag(c)
    fp = c.sum(axis=0) - tp
    fn = c.sum(axis=1) - tp
    tn = total - tp - fp - fn
    prec = tuple(_ratio(a, a + b) for a, b in zip(tp, fp))
    rec = tuple(_ratio(a, a + b) for a, b in zip(tp, fn))
    spec = tuple(_ratio(a, a + b) for a, b in zip(tn, fp))
    f1 = tuple(None if p is None or r is None else (0.0 if p + r == 0 else 2 * p * r / (p + r))
               for p, r in zip(prec, rec))
    macro_p = None if any(p is None for p in prec) else float(np.mean(prec))
    macro_r = _mean_defined(rec)
    macro_s = _mean_defined(spec)
    if macro_p is None:
        macro_f1 = None
    else:
        macro_f1 = 0.0 if macro_p + macro_r == 0 else 2 * macro_p * macro_r / (macro_p + macro_r)
    return MetricsReport(
        mse=float(np.mean((onehot - scores) ** 2)),
        accuracy=float(tp.sum() / total),
        precision=macro_p, recall=macro_r, specificity=macro_s, f1=macro_f1,
        labels=tuple(cm.labels),
        per_class_precision=prec, per_class_recall=rec,
        per_class_specificity=spec, per_class_f1=f1,
    )


def comparison_text(reports: dict) -> str:
    """Side-by-side table of several reports, one column per model."""
    keys = [("mean square error", "mse"), ("accuracy", "accuracy"), ("precision", "precision"),
            ("recall", "recall"), ("specificity", "specificity"), ("f1-score", "f1")]
    width = max(len(k) for k, _ in keys)
    names = list(reports)
    lines = [f"{'':<{width}}" + "".join(f"  {n:>10}" for n in names)]
    for label, attr in keys:
        lines.append(f"{label:<{width}}" + "".join(
            f"  {fmt_na(getattr(reports[n], attr)):>10}" for n in names))
    return "\n".join(lines) + "\n"
