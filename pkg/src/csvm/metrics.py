"""Binary classification metrics: confusion counts, ACC/SEN/SPE/PRE/F1/MCC/Kappa, ROC and AUC.

Metrics are fractions internally. A metric whose denominator is zero is
``None`` (rendered as "undefined"), never NaN.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateLabels, InvalidInput

METRIC_NAMES = ("acc", "sen", "spe", "pre", "f1", "mcc", "kappa")
COLUMN_TITLES = ("ACC", "SEN", "SPE", "PRE", "F1", "MCC", "Kappa")
UNDEFINED = "undefined"


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fn: int
    fp: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fn", "fp", "tn"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise InvalidInput(f"{name} must be a non-negative integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.total < 1:
            raise InvalidInput("confusion counts are all zero")

    @property
    def total(self) -> int:
        return self.tp + self.fn + self.fp + self.tn

    def swapped(self) -> "ConfusionCounts":
        """Same outcomes with the other class treated as positive."""
        return ConfusionCounts(tp=self.tn, fn=self.fp, fp=self.fn, tn=self.tp)


@dataclass(frozen=True)
class MetricsReport:
    acc: Optional[float]
    sen: Optional[float]
    spe: Optional[float]
    pre: Optional[float]
    f1: Optional[float]
    mcc: Optional[float]
    kappa: Optional[float]

    def as_dict(self) -> dict:
        return asdict(self)

    def percentages(self) -> dict:
        """Metrics in percent rounded to 2 decimals, None where undefined."""
        return {k: (None if v is None else round(100.0 * v, 2)) for k, v in asdict(self).items()}


def _ratio(num, den) -> Optional[float]:
    return None if den == 0 else num / den


def confusion(predictions: Sequence[int], truths: Sequence[int], positive: int = 1) -> ConfusionCounts:
    p = np.asarray(predictions)
    t = np.asarray(truths)
    if p.shape != t.shape or p.ndim != 1:
        raise InvalidInput(f"{p.size} predictions vs {t.size} truths")
    if p.size == 0:
        raise InvalidInput("no predictions")
    pp, tp_ = p == positive, t == positive
    return ConfusionCounts(
        tp=int(np.sum(pp & tp_)),
        fn=int(np.sum(~pp & tp_)),
        fp=int(np.sum(pp & ~tp_)),
        tn=int(np.sum(~pp & ~tp_)),
    )


def compute_metrics(cc: ConfusionCounts) -> MetricsReport:
    tp, fn, fp, tn = cc.tp, cc.fn, cc.fp, cc.tn
    n = cc.total
    acc = (tp + tn) / n
    mcc_den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    mcc = None if mcc_den == 0 else (tp * tn - fp * fn) / math.sqrt(mcc_den)
    # chance agreement from the row and column marginals
    chance = ((tp + fp) * (tp + fn) + (fn + tn) * (fp + tn)) / (n * n)
    kappa = None if chance == 1 else (acc - chance) / (1 - chance)
    return MetricsReport(
        acc=acc,
        sen=_ratio(tp, tp + fn),
        spe=_ratio(tn, tn + fp),
        pre=_ratio(tp, tp + fp),
        f1=_ratio(2 * tp, 2 * tp + fn + fp),
        mcc=mcc,
        kappa=kappa,
    )


def format_table(rows: dict[str, MetricsReport]) -> str:
    """Aligned text table, one row per named report, values in percent."""
    name_w = max([len("Model")] + [len(k) for k in rows])
    head = f"{'Model':<{name_w}}  " + "  ".join(f"{c:>9}" for c in COLUMN_TITLES)
    lines = [head, "-" * len(head)]
    for name, rep in rows.items():
        vals = rep.percentages()
        cells = [f"{UNDEFINED if vals[k] is None else format(vals[k], '.2f'):>9}" for k in METRIC_NAMES]
        lines.append(f"{name:<{name_w}}  " + "  ".join(cells))
    return "\n".join(lines)


@dataclass(frozen=True)
class RocCurve:
    fpr: tuple[float, ...]
    tpr: tuple[float, ...]
    thresholds: tuple[float, ...]
    auc: float

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.fpr, self.tpr))

    def to_csv(self) -> str:
        lines = ["threshold,fpr,tpr"]
        for th, x, y in zip(self.thresholds, self.fpr, self.tpr):
            lines.append(f"{th!r},{x!r},{y!r}")
        return "\n".join(lines) + "\n"


def roc_auc(scores: Sequence[float], truths: Sequence[int], positive: int = 1) -> RocCurve:
    """ROC by sweeping every distinct score from high to low.

    Equal scores form one threshold step, so ties contribute a diagonal
    segment. Points run from (0, 0) to (1, 1); the first threshold is +inf.
    AUC is the trapezoidal area, accumulated in integer counts.
    """
    s = np.asarray(scores, dtype=np.float64)
    t = np.asarray(truths)
    if s.shape != t.shape or s.ndim != 1:
        raise InvalidInput(f"{s.size} scores vs {t.size} truths")
    if not np.isfinite(s).all():
        raise InvalidInput("scores must be finite")
    is_pos = t == positive
    n_pos = int(is_pos.sum())
    n_neg = is_pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels(f"ROC needs both classes; got {n_pos} positive, {n_neg} negative")

    order = np.argsort(-s, kind="stable")
    s, is_pos = s[order], is_pos[order]
    # last index of each run of equal scores
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tps = np.cumsum(is_pos)[ends].tolist()
    fps = (ends + 1 - np.asarray(tps)).tolist()

    area2 = 0  # twice the area, in units of one positive x one negative
    prev_tp = prev_fp = 0
    for tp, fp in zip(tps, fps):
        area2 += (fp - prev_fp) * (tp + prev_tp)
        prev_tp, prev_fp = tp, fp
    return RocCurve(
        fpr=tuple([0.0] + [fp / n_neg for fp in fps]),
        tpr=tuple([0.0] + [tp / n_pos for tp in tps]),
        thresholds=tuple([math.inf] + s[ends].tolist()),
        auc=area2 / (2 * n_pos * n_neg),
    )


def report_json(cc: ConfusionCounts, rep: MetricsReport, roc: Optional[RocCurve] = None, **extra) -> str:
    doc = {
        "confusion": asdict(cc),
        "metrics": rep.as_dict(),
        "metrics_percent": rep.percentages(),
        "auc": None if roc is None else roc.auc,
    }
    doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=True)
