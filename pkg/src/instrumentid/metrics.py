"""Multi-label evaluation: the six summary quantities plus per-label confusions."""

from dataclasses import dataclass

import numpy as np


@dataclass
class EvalReport:
    hamming_accuracy: float
    exact_match: float
    precision_micro: float
    recall_micro: float
    f_micro: float
    f_macro: float
    per_label: np.ndarray  # [n_labels, 4] = tp, fp, fn, tn


def evaluate(predicted, truth) -> EvalReport:
    """Score binary prediction/truth matrices of shape ``[clips, labels]``.

    Hamming accuracy counts individual matching bits; exact match counts
    fully matching rows. Micro precision/recall pool confusion counts over
    all labels; macro F1 averages per-label F1. All zero-denominator cases
    evaluate to 0.
    """
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape or predicted.ndim != 2:
        raise ValueError(f"shape mismatch: predicted {predicted.shape} vs truth {truth.shape}")
    if predicted.shape[0] < 1:
        raise ValueError("need at least one clip")
    for name, arr in (("predicted", predicted), ("truth", truth)):
        if not np.isin(arr, (0, 1)).all():
            raise ValueError(f"{name} matrix has non-binary entries")
    p = predicted.astype(bool)
    t = truth.astype(bool)
    n, n_labels = p.shape

    tp = (p & t).sum(axis=0)
    fp = (p & ~t).sum(axis=0)
    fn = (~p & t).sum(axis=0)
    tn = (~p & ~t).sum(axis=0)

    hamming = float((p == t).sum()) / (n * n_labels)
    exact = float((p == t).all(axis=1).sum()) / n

    tp_sum, fp_sum, fn_sum = int(tp.sum()), int(fp.sum()), int(fn.sum())
    precision = tp_sum / (tp_sum + fp_sum) if tp_sum + fp_sum else 0.0
    recall = tp_sum / (tp_sum + fn_sum) if tp_sum + fn_sum else 0.0
    f_micro = 2.0 * precision * recall / (precision + recall) if precision + recall else 0.0

    denom = 2 * tp + fp + fn
    per_label_f1 = np.where(denom > 0, 2.0 * tp / np.maximum(denom, 1), 0.0)
    f_macro = float(per_label_f1.mean())

    per_label = np.stack([tp, fp, fn, tn], axis=1)
    return EvalReport(hamming, exact, precision, recall, f_micro, f_macro, per_label)


# Table column order used by every report emitter.
COLUMNS = ("accuracy", "exact_match", "precision", "recall", "f_micro", "f_macro")


def report_values(report: EvalReport) -> tuple:
    return (report.hamming_accuracy, report.exact_match, report.precision_micro,
            report.recall_micro, report.f_micro, report.f_macro)


def format_report(report: EvalReport, label_names=None) -> str:
    """Flat key=value rendering, one line per quantity plus per-label counts.

    Precision/recall are micro-averaged; that convention is recorded in the
    header comment so the numbers can't be misread.
    """
    lines = ["# multi-label evaluation report (precision/recall are micro-averaged)"]
    for key, value in zip(COLUMNS, report_values(report)):
        lines.append(f"{key}={value:.6f}")
    names = label_names or [str(i) for i in range(len(report.per_label))]
    for name, (tp, fp, fn, tn) in zip(names, report.per_label):
        lines.append(f"label[{name}] tp={tp} fp={fp} fn={fn} tn={tn}")
    return "\n".join(lines) + "\n"


def format_report_row(report: EvalReport) -> str:
    """Single machine-readable CSV row in table column order."""
    header = ",".join(COLUMNS)
    row = ",".join(f"{v:.6f}" for v in report_values(report))
    return f"{header}\n{row}\n"
