"""Confusion-matrix evaluation and the subject-wise cross-validation driver."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .tm import Mode, MultiClassModel, literal_vector, _pack_bits

__all__ = [
    "ClassReport", "confusion", "report", "cross_validate",
    "report_to_csv", "format_report",
]


def confusion(true_labels, predicted_labels, n_classes=3):
    """Tally matrix: entry (i, j) counts true class i predicted as j."""
    t = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(predicted_labels, dtype=np.int64)
    if t.shape != p.shape:
        raise ValueError(
            f"label sequences differ in length ({t.shape[0]} vs "
            f"{p.shape[0]})")
    if t.size and (t.min() < 0 or t.max() >= n_classes or
                   p.min() < 0 or p.max() >= n_classes):
        raise ValueError(f"labels out of range [0, {n_classes})")
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


@dataclass
class ClassReport:
    precision: list
    recall: list
    precision_defined: list
    recall_defined: list
    accuracy: float
    support: list
    confusion: np.ndarray = field(repr=False, default=None)


def report(cm):
    """Per-class one-vs-rest precision/recall plus overall accuracy.

    Zero-denominator metrics come back as 0.0 with the matching
    ``*_defined`` flag cleared instead of raising, so rare-class folds
    survive cross-validation.
    """
    cm = np.asarray(cm, dtype=np.int64)
    total = int(cm.sum())
    if total == 0:
        raise ValueError("confusion matrix is empty")
    q = cm.shape[0]
    precision, recall = [], []
    p_def, r_def = [], []
    for c in range(q):
        tp = int(cm[c, c])
        fp = int(cm[:, c].sum()) - tp
        fn = int(cm[c, :].sum()) - tp
        if tp + fp:
            precision.append(tp / (tp + fp))
            p_def.append(True)
        else:
            precision.append(0.0)
            p_def.append(False)
        if tp + fn:
            recall.append(tp / (tp + fn))
            r_def.append(True)
        else:
            recall.append(0.0)
            r_def.append(False)
    return ClassReport(
        precision=precision, recall=recall,
        precision_defined=p_def, recall_defined=r_def,
        accuracy=float(np.trace(cm)) / total,
        support=[int(s) for s in cm.sum(axis=1)],
        confusion=cm)


def _train_model(beats, q, clauses, T, s, n_states, epochs, seed,
                 boost=False, log=None):
    o = beats[0].input.shape[0]
    model = MultiClassModel.new(q, clauses, o, T, s, n_states)
    rng = np.random.default_rng(seed)
    data = [(b.input, int(b.label)) for b in beats]
    for epoch in range(epochs):
        t0 = time.perf_counter()
        acc = model.fit_epoch(data, rng, shuffle=True, boost=boost)
        if log is not None:
            log(epoch, acc, time.perf_counter() - t0)
    return model


def _predict_all(model, beats):
    preds = []
    for b in beats:
        lits = literal_vector(b.input)
        notl_w = _pack_bits(1 - lits)
        preds.append(int(np.argmax(model._sums_packed(notl_w, Mode.INFER))))
    return preds


def cross_validate(beats, plan, clauses=200, T=200, s=1.5, n_states=128,
                   epochs=50, q=3, seed=0, boost=False, log=None):
    """Train/evaluate one model per fold, holding the fold's subjects out.

    Per-fold models start from fresh state with fold-derived seeds.
    Returns (per-fold reports, pooled report over the summed confusion
    matrix).
    """
    subjects = set(plan.subjects())
    missing = {b.subject_id for b in beats} - subjects
    if missing:
        raise ValueError(
            f"subjects missing from the fold plan: {sorted(missing)}")
    fold_reports = []
    pooled = np.zeros((q, q), dtype=np.int64)
    for fi, fold in enumerate(plan.folds):
        held = set(fold)
        train = [b for b in beats if b.subject_id not in held]
        test = [b for b in beats if b.subject_id in held]
        if not train or not test:
            raise ValueError(f"fold {fi} leaves an empty train or test set")
        fold_log = (lambda e, a, dt, fi=fi: log(fi, e, a, dt)) if log else None
        model = _train_model(train, q, clauses, T, s, n_states, epochs,
                             seed=np.random.SeedSequence([seed, fi])
                             .generate_state(1)[0],
                             boost=boost, log=fold_log)
        cm = confusion([int(b.label) for b in test],
                       _predict_all(model, test), q)
        pooled += cm
        fold_reports.append(report(cm))
    return fold_reports, report(pooled)


def report_to_csv(fold_reports, pooled):
    """CSV lines: fold,class,precision,recall,accuracy,support."""
    lines = ["fold,class,precision,recall,accuracy,support"]
    rows = list(enumerate(fold_reports)) + [("pooled", pooled)]
    for tag, rep in rows:
        for c in range(len(rep.precision)):
            lines.append(
                f"{tag},{c},{rep.precision[c]:.6f},{rep.recall[c]:.6f},"
                f"{rep.accuracy:.6f},{rep.support[c]}")
    return "\n".join(lines) + "\n"


def format_report(rep, title, class_names=None):
    """Aligned-column text rendering of one report."""
    q = len(rep.precision)
    names = class_names or [f"class{c}" for c in range(q)]
    lines = [f"{title}  (accuracy {rep.accuracy:.4f})",
             f"  {'class':<10} {'precision':>9} {'recall':>9} "
             f"{'support':>8}"]
    for c in range(q):
        p = f"{rep.precision[c]:.4f}" if rep.precision_defined[c] else "n/a"
        r = f"{rep.recall[c]:.4f}" if rep.recall_defined[c] else "n/a"
        lines.append(f"  {names[c]:<10} {p:>9} {r:>9} {rep.support[c]:>8}")
    return "\n".join(lines)
