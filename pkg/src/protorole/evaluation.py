"""Metrics and analyses: P/R/F1, micro/macro aggregation, Pearson
correlation, disagreement sampling, and prediction-contingency deltas."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ContractError


@dataclass
class BinaryCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __add__(self, other: "BinaryCounts") -> "BinaryCounts":
        return BinaryCounts(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def counts_from_predictions(preds: Sequence[bool], golds: Sequence[bool]) -> BinaryCounts:
    if len(preds) != len(golds):
        raise ContractError(f"length mismatch: {len(preds)} predictions, {len(golds)} golds")
    c = BinaryCounts()
    for p, g in zip(preds, golds):
        if g:
            if p:
                c.tp += 1
            else:
                c.fn += 1
        else:
            if p:
                c.fp += 1
            else:
                c.tn += 1
    return c


def f1(counts: BinaryCounts) -> tuple[float, float, float]:
    """(precision, recall, F1); zero denominators yield 0 by convention."""
    p = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    r = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def aggregate(per_property: Mapping[str, BinaryCounts]) -> tuple[float, float]:
    """(micro-F1 from pooled counts, macro-F1 as the unweighted mean)."""
    if not per_property:
        raise ContractError("aggregate requires at least one property")
    pooled = BinaryCounts()
    f1s = []
    for counts in per_property.values():
        pooled = pooled + counts
        f1s.append(f1(counts)[2])
    return f1(pooled)[2], float(np.mean(f1s))


def pearson(predictions: Sequence[float], golds: Sequence[float]) -> float:
    r, defined = pearson_with_flag(predictions, golds)
    if not defined:
        warnings.warn("pearson undefined (zero variance); reporting 0", stacklevel=2)
    return r


def pearson_with_flag(predictions: Sequence[float], golds: Sequence[float]) -> tuple[float, bool]:
    """Sample Pearson correlation; (0.0, False) when either side is constant.

    The 0 stands in for an undefined value so macro averages can include
    every property; the flag lets reports mark the substitution.
    """
    x = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(golds, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ContractError(f"pearson needs equal-length vectors, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise ContractError("pearson needs at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    vx = float(dx @ dx)
    vy = float(dy @ dy)
    if vx == 0.0 or vy == 0.0:
        return 0.0, False
    return float((dx @ dy) / np.sqrt(vx * vy)), True


# ---------------------------------------------------------------------------
# reports


@dataclass
class MetricsReport:
    """Per-property and aggregate metrics for one dataset split."""

    split: str
    epoch: int
    per_property: dict[str, dict[str, float]] = field(default_factory=dict)
    aggregates: dict[str, float] = field(default_factory=dict)
    flags: dict[str, str] = field(default_factory=dict)

    def rows(self) -> list[dict]:
        out = []
        for prop in sorted(self.per_property):
            for metric in sorted(self.per_property[prop]):
                out.append(
                    {
                        "split": self.split,
                        "epoch": self.epoch,
                        "property": prop,
                        "metric": metric,
                        "value": self.per_property[prop][metric],
                    }
                )
        for metric in sorted(self.aggregates):
            out.append(
                {
                    "split": self.split,
                    "epoch": self.epoch,
                    "property": "ALL",
                    "metric": metric,
                    "value": self.aggregates[metric],
                }
            )
        return out


def binary_report(
    counts: Mapping[str, BinaryCounts], split: str, epoch: int
) -> MetricsReport:
    report = MetricsReport(split=split, epoch=epoch)
    for prop, c in counts.items():
        p, r, f = f1(c)
        report.per_property[prop] = {"precision": p, "recall": r, "f1": f}
    micro, macro = aggregate(counts)
    report.aggregates = {"micro_f1": micro, "macro_f1": macro}
    return report


def scalar_report(
    predictions: Mapping[str, Sequence[float]],
    golds: Mapping[str, Sequence[float]],
    split: str,
    epoch: int,
) -> MetricsReport:
    if set(predictions) != set(golds):
        raise ContractError("prediction/gold property sets differ")
    report = MetricsReport(split=split, epoch=epoch)
    rs = []
    for prop in predictions:
        r, defined = pearson_with_flag(predictions[prop], golds[prop])
        report.per_property[prop] = {"pearson": r}
        if not defined:
            report.flags[prop] = "pearson_undefined"
        rs.append(r)
    report.aggregates = {"macro_avg_pearson": float(np.mean(rs))}
    return report


def report_to_csv(report: MetricsReport) -> str:
    """Render a report as CSV text with full double precision values."""
    lines = ["split,epoch,property,metric,value"]
    for row in report.rows():
        lines.append(
            f"{row['split']},{row['epoch']},{row['property']},{row['metric']},{row['value']!r}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# disagreement analysis


@dataclass
class DisagreementSample:
    true_ids: list[str]
    false_ids: list[str]
    shortfall_true: int
    shortfall_false: int

    @property
    def ids(self) -> list[str]:
        return self.true_ids + self.false_ids

    @property
    def short(self) -> bool:
        return self.shortfall_true > 0 or self.shortfall_false > 0


def disagreement_sample(
    preds_a: Mapping[str, bool],
    preds_b: Mapping[str, bool],
    golds: Mapping[str, bool],
    n_true: int,
    n_false: int,
    seed: int,
) -> DisagreementSample:
    """Sample instance ids where the two systems disagree, stratified by gold.

    Uniform without replacement, up to ``n_true`` gold-True and ``n_false``
    gold-False ids; if fewer disagreements exist the shortfall is recorded
    and everything available is returned.
    """
    if set(preds_a) != set(preds_b) or set(preds_a) != set(golds):
        raise ContractError("prediction/gold instance sets differ")
    diff_true = sorted(i for i in golds if preds_a[i] != preds_b[i] and golds[i])
    diff_false = sorted(i for i in golds if preds_a[i] != preds_b[i] and not golds[i])
    rng = np.random.default_rng(seed)

    def take(pool: list[str], k: int) -> list[str]:
        if len(pool) <= k:
            return list(pool)
        idx = rng.choice(len(pool), size=k, replace=False)
        return [pool[i] for i in sorted(idx)]

    chosen_true = take(diff_true, n_true)
    chosen_false = take(diff_false, n_false)
    return DisagreementSample(
        true_ids=chosen_true,
        false_ids=chosen_false,
        shortfall_true=max(0, n_true - len(chosen_true)),
        shortfall_false=max(0, n_false - len(chosen_false)),
    )


# ---------------------------------------------------------------------------
# contingency deltas


def contingency_from_cells(a: int, b: int, c: int, d: int) -> tuple[int, int, int]:
    """(differ, ΔFalse−, ΔFalse+) from disagreement cells.

    a/b count which system is right on gold-True disagreements (A vs B);
    c/d the same on gold-False.  ΔFalse− works out to A's false negatives
    minus B's (and ΔFalse+ likewise for false positives), so a positive
    delta means system A commits more errors of that kind.
    """
    return a + b + c + d, -(a - b), -(c - d)


def contingency_delta(
    preds_a: Mapping[str, bool],
    preds_b: Mapping[str, bool],
    golds: Mapping[str, bool],
    subset: Sequence[str] | None = None,
) -> tuple[int, int, int]:
    """Error-count deltas between system A (baseline) and system B.

    Restricted to ``subset`` when given; on a binary disagreement exactly
    one system is correct, so every differing instance lands in one cell.
    """
    ids = list(golds) if subset is None else list(subset)
    a = b = c = d = 0
    for i in ids:
        if i not in golds or i not in preds_a or i not in preds_b:
            raise ContractError(f"instance {i!r} missing from predictions or golds")
        pa, pb, g = preds_a[i], preds_b[i], golds[i]
        if pa == pb:
            continue
        if g:
            if pa == g:
                a += 1
            else:
                b += 1
        else:
            if pa == g:
                c += 1
            else:
                d += 1
    return contingency_from_cells(a, b, c, d)
