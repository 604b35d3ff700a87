"""Record/annotation ingestion, beat labeling, fold planning and the
synthetic beat generator used for desk-scale testing.

Ingestion is plain CSV: record files carry "index,mv" rows (with an
optional leading "fs,<hz>" line), annotation files carry
"index,symbol[,side]" rows.  Converting from the native ambulatory-ECG
binary formats to these CSVs is left to standard external tooling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

from .segmentation import (BEAT_WIDTH, POST_SAMPLES, PRE_SAMPLES,
                           BeatWindow, flatten, rasterize, segment_beats)

__all__ = [
    "SAMPLING_RATE", "Label", "Side", "ParseError", "LabelingError",
    "EcgRecord", "BeatAnnotation", "LabeledBeat", "FoldPlan",
    "load_record", "load_annotations", "map_label",
    "pvc_polarity_heuristic", "make_folds", "amplitude_range",
    "synth_beat", "synth_records", "synth_dataset", "beats_from_record",
    "write_record_csv", "write_annotation_csv",
]

SAMPLING_RATE = 360

# Beat symbols grouped per the AAMI taxonomy; 'V' is the PVC symbol and
# everything else listed here counts as Non-PVC.
NON_PVC_SYMBOLS = frozenset("NLRej" "AaJS" "F" "/fQ")
PVC_SYMBOL = "V"


class Label(IntEnum):
    NON_PVC = 0
    PVC_R = 1
    PVC_L = 2


class Side(IntEnum):
    UNKNOWN = 0
    R = 1
    L = 2


class ParseError(ValueError):
    """CSV input could not be parsed; message names the offending line."""


class LabelingError(ValueError):
    """Annotation symbol is not a known beat symbol."""


@dataclass
class EcgRecord:
    subject_id: str
    samples: np.ndarray
    sampling_rate: int = SAMPLING_RATE

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.sampling_rate != SAMPLING_RATE:
            raise ValueError(
                f"unsupported sampling rate {self.sampling_rate} "
                f"(expected {SAMPLING_RATE} Hz)")


@dataclass
class BeatAnnotation:
    sample_index: int
    symbol: str
    pvc_side: Side = Side.UNKNOWN


@dataclass
class LabeledBeat:
    input: np.ndarray
    label: Label
    subject_id: str


@dataclass
class FoldPlan:
    folds: list

    def subjects(self):
        return sorted(s for fold in self.folds for s in fold)

    def fold_of(self, subject_id):
        for i, fold in enumerate(self.folds):
            if subject_id in fold:
                return i
        raise KeyError(f"subject {subject_id!r} is not in the fold plan")

    def save(self, path):
        Path(path).write_text(
            "".join(" ".join(fold) + "\n" for fold in self.folds))

    @classmethod
    def load(cls, path):
        folds = [line.split() for line in
                 Path(path).read_text().splitlines() if line.strip()]
        return cls(folds)


def load_record(path, subject_id=None):
    """Read an "index,mv" CSV record; an "fs,<hz>" first line is honored."""
    path = Path(path)
    samples = []
    rate = SAMPLING_RATE
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if lineno == 1 and parts[0].lower() == "fs":
                rate = int(parts[1])
                continue
            try:
                idx, mv = int(parts[0]), float(parts[1])
            except (IndexError, ValueError):
                raise ParseError(
                    f"{path.name}:{lineno}: expected 'index,mv', "
                    f"got {line!r}") from None
            if idx != len(samples):
                raise ParseError(
                    f"{path.name}:{lineno}: non-contiguous sample index "
                    f"{idx}")
            samples.append(mv)
    return EcgRecord(subject_id or path.stem,
                     np.array(samples, dtype=np.float64), rate)


_SIDES = {"": Side.UNKNOWN, "R": Side.R, "L": Side.L, "U": Side.UNKNOWN}


def load_annotations(path):
    """Read an "index,symbol[,side]" CSV; output is sorted by index."""
    path = Path(path)
    anns = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            try:
                idx = int(parts[0])
                symbol = parts[1]
                side = _SIDES[parts[2].upper() if len(parts) > 2 else ""]
            except (IndexError, ValueError, KeyError):
                raise ParseError(
                    f"{path.name}:{lineno}: expected 'index,symbol[,side]',"
                    f" got {line!r}") from None
            anns.append(BeatAnnotation(idx, symbol, side))
    anns.sort(key=lambda a: a.sample_index)
    return anns


def pvc_polarity_heuristic(beat):
    """Classify a PVC's ventricular origin from its QRS polarity.

    Signed area of the baseline-corrected window +-40 samples around the
    reference point: upright (positive) areas read as right-ventricular,
    everything else as left.  Baseline is the median of the first 80
    samples.
    """
    baseline = float(np.median(beat.samples[:80]))
    lo = PRE_SAMPLES - 40
    hi = PRE_SAMPLES + 40
    area = float(np.sum(beat.samples[lo:hi] - baseline))
    return Side.R if area > 0 else Side.L


def map_label(symbol, pvc_side=Side.UNKNOWN, beat=None):
    """Map an annotation symbol to NON_PVC / PVC_R / PVC_L.

    'V' beats split by the given side, falling back to the polarity
    heuristic (which needs the beat window) when the side is unknown.
    """
    if symbol == PVC_SYMBOL:
        if pvc_side is Side.UNKNOWN:
            if beat is None:
                raise LabelingError(
                    "PVC side unknown and no beat window supplied "
                    "for the polarity heuristic")
            pvc_side = pvc_polarity_heuristic(beat)
        return Label.PVC_R if pvc_side is Side.R else Label.PVC_L
    if symbol in NON_PVC_SYMBOLS:
        return Label.NON_PVC
    raise LabelingError(f"unknown beat symbol {symbol!r}")


def make_folds(subject_ids, k=9, seed=0):
    """Seeded shuffle of the subjects chunked into k equal folds."""
    subjects = list(subject_ids)
    if len(subjects) % k:
        raise ValueError(
            f"{len(subjects)} subjects cannot be split into {k} equal "
            f"folds (remainder {len(subjects) % k})")
    rng = np.random.default_rng(seed)
    order = [subjects[i] for i in rng.permutation(len(subjects))]
    size = len(subjects) // k
    return FoldPlan([order[i * size:(i + 1) * size] for i in range(k)])


def amplitude_range(samples, lo_pct=1.0, hi_pct=99.0):
    """Robust per-record quantization range (1st/99th percentile)."""
    lo, hi = np.percentile(np.asarray(samples, dtype=np.float64),
                           [lo_pct, hi_pct])
    if not hi > lo:
        hi = lo + 1e-6
    return float(lo), float(hi)


def _gauss(width, center, sigma, amp):
    t = np.arange(width, dtype=np.float64)
    return amp * np.exp(-0.5 * ((t - center) / sigma) ** 2)


def synth_beat(label, rng, noise_mv=0.0):
    """One synthetic 320-sample beat of the given class.

    Non-PVC: narrow upright QRS with P and T waves.  PVC_R: wide upright
    QRS, no P wave.  PVC_L: wide negative QRS followed by a positive T.
    Adds Gaussian noise and a random overall amplitude jitter.
    """
    w = BEAT_WIDTH
    r = PRE_SAMPLES
    if label == Label.NON_PVC:
        y = (_gauss(w, r, 4.0, 1.0)          # ~20-sample R wave
             - _gauss(w, r - 12, 4.0, 0.15)  # Q dip
             - _gauss(w, r + 12, 4.0, 0.2)   # S dip
             + _gauss(w, r - 48, 8.0, 0.15)  # P wave
             + _gauss(w, r + 80, 16.0, 0.3))  # T wave
    elif label == Label.PVC_R:
        y = (_gauss(w, r, 13.0, 1.2)         # ~60-sample wide R wave
             - _gauss(w, r + 90, 18.0, 0.35))  # discordant T
    elif label == Label.PVC_L:
        y = (-_gauss(w, r, 13.0, 1.2)        # wide negative QRS
             + _gauss(w, r + 95, 18.0, 0.5))  # positive T
    else:
        raise ValueError(f"unknown label {label!r}")
    y *= 1.0 + 0.1 * (2.0 * rng.random() - 1.0)
    if noise_mv > 0:
        y = y + rng.normal(0.0, noise_mv, size=w)
    return BeatWindow(y)


def synth_records(n_per_class, noise_mv, seed, n_subjects=3):
    """Synthetic records plus annotations, ready for the CSV pipeline.

    Beats of all three classes are interleaved round-robin across
    subjects and concatenated back to back, so the first window starts at
    sample 0 and no beat is lost to record edges.
    """
    if n_per_class < 1:
        raise ValueError("n_per_class must be at least 1")
    rng = np.random.default_rng(seed)
    width = len(str(max(n_subjects - 1, 1)))
    per_subject = [[] for _ in range(n_subjects)]
    for label in (Label.NON_PVC, Label.PVC_R, Label.PVC_L):
        for i in range(n_per_class):
            per_subject[i % n_subjects].append(label)
    records, annotations = [], []
    for si, labels in enumerate(per_subject):
        rng.shuffle(labels)
        sid = f"S{si:0{width}d}"
        chunks, anns = [], []
        for bi, label in enumerate(labels):
            beat = synth_beat(label, rng, noise_mv)
            chunks.append(beat.samples)
            side = {Label.NON_PVC: Side.UNKNOWN, Label.PVC_R: Side.R,
                    Label.PVC_L: Side.L}[label]
            symbol = PVC_SYMBOL if label != Label.NON_PVC else "N"
            anns.append(BeatAnnotation(bi * BEAT_WIDTH + PRE_SAMPLES,
                                       symbol, side))
        records.append(EcgRecord(sid, np.concatenate(chunks)))
        annotations.append(anns)
    return records, annotations


def beats_from_record(record, annotations, denoised=None):
    """Segment, label and rasterize one record.

    Returns (labeled beats, skipped-at-edge count, unknown-symbol count).
    """
    signal = record.samples if denoised is None else denoised
    peaks = [a.sample_index for a in annotations]
    windows, skipped = segment_beats(signal, peaks)
    # windows correspond 1:1 to annotations whose window fit
    rng_lo, rng_hi = amplitude_range(signal)
    beats = []
    unknown = 0
    wi = 0
    for ann in annotations:
        if ann.sample_index - PRE_SAMPLES < 0 or \
                ann.sample_index + POST_SAMPLES > len(signal):
            continue
        window = windows[wi]
        wi += 1
        try:
            label = map_label(ann.symbol, ann.pvc_side, window)
        except LabelingError:
            unknown += 1
            continue
        bits = flatten(rasterize(window, (rng_lo, rng_hi)))
        beats.append(LabeledBeat(bits, label, record.subject_id))
    return beats, skipped, unknown


def synth_dataset(n_per_class, noise_mv, seed, n_subjects=36):
    """Labeled, rasterized synthetic beats spread across subjects."""
    records, annotations = synth_records(
        n_per_class, noise_mv, seed, n_subjects)
    beats = []
    for rec, anns in zip(records, annotations):
        got, _, _ = beats_from_record(rec, anns)
        beats.extend(got)
    return beats


def write_record_csv(record, path):
    with Path(path).open("w") as fh:
        fh.write(f"fs,{record.sampling_rate}\n")
        for i, mv in enumerate(record.samples):
            fh.write(f"{i},{mv:.6f}\n")


def write_annotation_csv(annotations, path):
    names = {Side.UNKNOWN: "", Side.R: "R", Side.L: "L"}
    with Path(path).open("w") as fh:
        for a in annotations:
            side = names[a.pvc_side]
            tail = f",{side}" if side else ""
            fh.write(f"{a.sample_index},{a.symbol}{tail}\n")
