"""Evaluation metrics and model-vs-projection comparison protocols.

Conventions, fixed once and stated in every report: argmax ties break
toward the lowest class index; binary AUC is the Mann-Whitney rank
statistic with average ranks for ties; multi-class AUC is macro one-vs-rest
(the unweighted mean of per-class binary AUCs); weighted F1 is the
support-weighted mean of per-class F1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .data import PairedDataset
from .exceptions import InputError, UndefinedMetricError
from .grid import build_grid, emap_decompose, emap_predictions

__all__ = [
    "AUC_CONVENTION_NOTE",
    "accuracy",
    "auc_binary",
    "auc_macro_ovr",
    "weighted_f1",
    "auc_from_logits",
    "agreement",
    "disagreement_advantage",
    "SubsampleResult",
    "subsampled_emap_metric",
    "EvalReport",
    "METRIC_NAMES",
    "metric_from_logits",
]

AUC_CONVENTION_NOTE = (
    "AUC convention: binary = Mann-Whitney rank statistic with average ranks for "
    "ties; multi-class = macro one-vs-rest."
)


def _check_logits(logits: np.ndarray, labels: np.ndarray):
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    labels = np.asarray(labels)
    if logits.shape[0] != labels.shape[0]:
        raise InputError(
            f"got {logits.shape[0]} prediction rows for {labels.shape[0]} labels"
        )
    return logits, labels


def accuracy(logits: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of items whose argmax class matches the label."""
    logits, labels = _check_logits(logits, labels)
    if logits.shape[1] < 2:
        raise InputError("accuracy needs per-class logits with d >= 2")
    return float(np.mean(np.argmax(logits, axis=1) == labels))


def auc_binary(scores: np.ndarray, labels: np.ndarray) -> float:
    """Mann-Whitney AUC of 1-D scores against binary labels."""
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise InputError("scores and labels must have equal length")
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs both classes present")
    ranks = rankdata(scores, method="average")
    return float((ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def auc_macro_ovr(logits: np.ndarray, labels: np.ndarray) -> float:
    """Unweighted mean of per-class one-vs-rest binary AUCs."""
    logits, labels = _check_logits(logits, labels)
    per_class = []
    for c in range(logits.shape[1]):
        per_class.append(auc_binary(logits[:, c], (labels == c).astype(np.int64)))
    return float(np.mean(per_class))


def weighted_f1(logits: np.ndarray, labels: np.ndarray) -> float:
    """Support-weighted mean of per-class F1 over argmax predictions."""
    logits, labels = _check_logits(logits, labels)
    preds = np.argmax(logits, axis=1)
    total = labels.shape[0]
    score = 0.0
    for c in range(logits.shape[1]):
        support = int(np.sum(labels == c))
        if support == 0:
            continue
        tp = int(np.sum((preds == c) & (labels == c)))
        predicted = int(np.sum(preds == c))
        precision = tp / predicted if predicted else 0.0
        recall = tp / support
        f1 = 2 * precision * recall / (precision + recall) if (precision + recall) else 0.0
        score += support * f1
    return float(score / total)


def auc_from_logits(logits: np.ndarray, labels: np.ndarray) -> float:
    """Binary AUC from 2-column logits (class-1 minus class-0 margin), else macro OVR."""
    logits, labels = _check_logits(logits, labels)
    if logits.shape[1] == 1:
        return auc_binary(logits[:, 0], labels)
    if logits.shape[1] == 2:
        return auc_binary(logits[:, 1] - logits[:, 0], labels)
    return auc_macro_ovr(logits, labels)


METRIC_NAMES = ("accuracy", "auc", "weighted_f1")


def metric_from_logits(name: str, logits: np.ndarray, labels: np.ndarray) -> float:
    if name == "accuracy":
        return accuracy(logits, labels)
    if name == "auc":
        return auc_from_logits(logits, labels)
    if name == "weighted_f1":
        return weighted_f1(logits, labels)
    raise InputError(f"unknown metric {name!r}; expected one of {METRIC_NAMES}")


def agreement(preds_a: np.ndarray, preds_b: np.ndarray) -> float:
    """Fraction of items where two prediction sets pick the same argmax label."""
    preds_a = np.atleast_2d(np.asarray(preds_a))
    preds_b = np.atleast_2d(np.asarray(preds_b))
    if preds_a.shape != preds_b.shape:
        raise InputError(f"prediction shapes differ: {preds_a.shape} vs {preds_b.shape}")
    return float(np.mean(np.argmax(preds_a, axis=1) == np.argmax(preds_b, axis=1)))


def disagreement_advantage(preds_a, preds_b, labels) -> float | None:
    """Among disagreements where exactly one side is correct: fraction won by A.

    Returns None when no such instance exists (the statistic is absent, not
    an error).
    """
    preds_a = np.atleast_2d(np.asarray(preds_a))
    preds_b = np.atleast_2d(np.asarray(preds_b))
    labels = np.asarray(labels)
    if preds_a.shape != preds_b.shape or preds_a.shape[0] != labels.shape[0]:
        raise InputError("prediction/label shapes do not match")
    a = np.argmax(preds_a, axis=1)
    b = np.argmax(preds_b, axis=1)
    mask = (a != b) & ((a == labels) ^ (b == labels))
    if not mask.any():
        return None
    return float(np.mean(a[mask] == labels[mask]))


@dataclass(frozen=True)
class SubsampleResult:
    """Mean/std of a metric over repeated subsampled projections."""

    metric: str
    k: int
    m: int
    direct_mean: float
    direct_std: float
    emap_mean: float
    emap_std: float
    direct_values: tuple = ()
    emap_values: tuple = ()


def subsampled_emap_metric(
    scorer,
    dataset: PairedDataset,
    k: int,
    m: int,
    metric: str,
    seed: int = 0,
    threads: int | None = None,
) -> SubsampleResult:
    """Projection quality on k random size-m subsamples of a dataset.

    Each subsample is drawn without replacement (independently across the k
    repetitions, from seeds derived per repetition) and kept in ascending
    index order -- a subsample is a set, so with m = n the grid is exactly
    the full-dataset grid and the metrics match it bit for bit.  Direct
    predictions are the grid diagonal; projected predictions come from the
    additive decomposition of the same grid.
    """
    if k < 1:
        raise InputError("k must be >= 1")
    if m < 1 or m > dataset.n:
        raise InputError(f"subsample size m={m} must lie in [1, {dataset.n}]")
    direct_vals = np.empty(k)
    emap_vals = np.empty(k)
    children = np.random.SeedSequence(seed).spawn(k)
    for rep in range(k):
        rng = np.random.default_rng(children[rep])
        idx = np.sort(rng.choice(dataset.n, size=m, replace=False))
        sub = dataset.take(idx)
        grid = build_grid(scorer, sub.text, sub.visual, threads=threads)
        diag = grid.values[np.arange(m), np.arange(m), :]
        proj = emap_predictions(emap_decompose(grid))
        direct_vals[rep] = metric_from_logits(metric, diag, sub.labels)
        emap_vals[rep] = metric_from_logits(metric, proj, sub.labels)
    return SubsampleResult(
        metric=metric,
        k=k,
        m=m,
        direct_mean=float(direct_vals.mean()),
        direct_std=float(direct_vals.std()),
        emap_mean=float(emap_vals.mean()),
        emap_std=float(emap_vals.std()),
        direct_values=tuple(float(x) for x in direct_vals),
        emap_values=tuple(float(x) for x in emap_vals),
    )


@dataclass
class EvalReport:
    """Metrics for a model and, optionally, its additive projection."""

    model: str
    split: str
    metrics: dict = field(default_factory=dict)
    emap_metrics: dict | None = None
    agreement_rate: float | None = None
    orig_better_frac: float | None = None
    subsample: SubsampleResult | None = None
    notes: tuple = (AUC_CONVENTION_NOTE,)

    def to_json_dict(self) -> dict:
        out = {
            "model": self.model,
            "split": self.split,
            "metrics": dict(self.metrics),
            "notes": list(self.notes),
        }
        if self.emap_metrics is not None:
            out["emap_metrics"] = dict(self.emap_metrics)
        if self.agreement_rate is not None:
            out["agreement_rate"] = self.agreement_rate
        if self.orig_better_frac is not None:
            out["orig_better_frac"] = self.orig_better_frac
        if self.subsample is not None:
            s = self.subsample
            out["subsample"] = {
                "metric": s.metric,
                "k": s.k,
                "m": s.m,
                "direct_mean": s.direct_mean,
                "direct_std": s.direct_std,
                "emap_mean": s.emap_mean,
                "emap_std": s.emap_std,
            }
        return out

    def to_csv_rows(self) -> list[str]:
        rows = [f"{self.model},{name},{value!r}" for name, value in self.metrics.items()]
        if self.emap_metrics:
            rows += [
                f"{self.model}+emap,{name},{value!r}"
                for name, value in self.emap_metrics.items()
            ]
        if self.agreement_rate is not None:
            rows.append(f"{self.model},agreement_rate,{self.agreement_rate!r}")
        if self.orig_better_frac is not None:
            rows.append(f"{self.model},orig_better_frac,{self.orig_better_frac!r}")
        if self.subsample is not None:
            s = self.subsample
            rows.append(f"{self.model},subsample_direct_mean_{s.metric},{s.direct_mean!r}")
            rows.append(f"{self.model},subsample_direct_std_{s.metric},{s.direct_std!r}")
            rows.append(f"{self.model}+emap,subsample_emap_mean_{s.metric},{s.emap_mean!r}")
            rows.append(f"{self.model}+emap,subsample_emap_std_{s.metric},{s.emap_std!r}")
        return rows
