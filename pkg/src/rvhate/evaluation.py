"""Binary classification metrics and multi-seed report aggregation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput, LengthMismatch


def _check_pair(preds, labels):
    p = np.asarray(preds, dtype=np.int64).ravel()
    y = np.asarray(labels, dtype=np.int64).ravel()
    if p.shape[0] != y.shape[0]:
        raise LengthMismatch(f"{p.shape[0]} predictions vs {y.shape[0]} labels")
    if p.shape[0] == 0:
        raise EmptyInput("no predictions to score")
    return p, y


def confusion(preds, labels) -> tuple[int, int, int, int]:
    """Standard binary counts (TN, FP, FN, TP) with label 1 as positive."""
    p, y = _check_pair(preds, labels)
    tp = int(((p == 1) & (y == 1)).sum())
    tn = int(((p == 0) & (y == 0)).sum())
    fp = int(((p == 1) & (y == 0)).sum())
    fn = int(((p == 0) & (y == 1)).sum())
    return tn, fp, fn, tp


def _f1(tp: int, fp: int, fn: int) -> float:
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def macro_f1(preds, labels) -> float:
    """Unweighted mean of class-0 and class-1 F1; zero-division reads as 0."""
    tn, fp, fn, tp = confusion(preds, labels)
    f1_pos = _f1(tp, fp, fn)
    f1_neg = _f1(tn, fn, fp)
    return 0.5 * (f1_pos + f1_neg)


@dataclass
class EvalReport:
    """One report row: a variant's seed-averaged macro-F1 plus one confusion matrix.

    The confusion counts come from the first seed's run so they keep summing
    to the evaluation-split size.
    """

    dataset: str
    variant: str
    seed_scores: list[float]
    mean: float
    std: float
    tn: int
    fp: int
    fn: int
    tp: int


def summarize(dataset: str, variant: str, seed_scores, confusion_counts) -> EvalReport:
    scores = [float(s) for s in seed_scores]
    if not scores:
        raise EmptyInput("no per-seed scores to summarize")
    tn, fp, fn, tp = confusion_counts
    return EvalReport(
        dataset=dataset,
        variant=variant,
        seed_scores=scores,
        mean=float(np.mean(scores)),
        std=float(np.std(scores)),
        tn=int(tn),
        fp=int(fp),
        fn=int(fn),
        tp=int(tp),
    )


REPORT_COLUMNS = ("variant", "seed_count", "macro_f1_mean", "macro_f1_std", "tn", "fp", "fn", "tp")
REPORT_FOOTER = "per-class F1 is defined as 0 whenever precision + recall is 0"


def write_report_csv(reports: list[EvalReport], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(REPORT_COLUMNS) + "\n")
        for r in reports:
            fh.write(
                f"{r.variant},{len(r.seed_scores)},{r.mean!r},{r.std!r},"
                f"{r.tn},{r.fp},{r.fn},{r.tp}\n"
            )


def format_report_table(reports: list[EvalReport], title: str = "") -> str:
    """Human-readable aligned table with the zero-division convention footer."""
    headers = list(REPORT_COLUMNS)
    rows = [
        [
            r.variant,
            str(len(r.seed_scores)),
            f"{r.mean:.4f}",
            f"{r.std:.4f}",
            str(r.tn),
            str(r.fp),
            str(r.fn),
            str(r.tp),
        ]
        for r in reports
    ]
    widths = [max(len(h), *(len(row[i]) for row in rows)) if rows else len(h) for i, h in enumerate(headers)]
    lines = []
    if title:
        lines.append(title)
    lines.append("  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)))
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(row[i].ljust(widths[i]) for i in range(len(headers))))
    lines.append("")
    lines.append(f"note: {REPORT_FOOTER}")
    return "\n".join(lines) + "\n"


def write_report_text(reports: list[EvalReport], path, title: str = "") -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_report_table(reports, title=title))
