"""Binary classification metrics with the false-news class (label 1) as positive."""

from __future__ import annotations

from typing import Sequence


def confusion(y_true: Sequence[int], y_pred: Sequence[int]) -> tuple[int, int, int, int]:
    """(tp, fp, fn, tn)"""
    if len(y_true) != len(y_pred):
        raise ValueError("y_true and y_pred differ in length")
    tp = fp = fn = tn = 0
    for t, p in zip(y_true, y_pred):
        if p:
            if t:
                tp += 1
            else:
                fp += 1
        elif t:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def f1_score(y_true: Sequence[int], y_pred: Sequence[int]) -> float:
    """F1 of the positive class; 0.0 when there are no positives on either side."""
    tp, fp, fn, _ = confusion(y_true, y_pred)
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def accuracy(y_true: Sequence[int], y_pred: Sequence[int]) -> float:
    tp, fp, fn, tn = confusion(y_true, y_pred)
    n = tp + fp + fn + tn
    return (tp + tn) / n if n else 0.0


def threshold(probs: Sequence[float], cut: float = 0.5) -> list[int]:
    return [int(p >= cut) for p in probs]
