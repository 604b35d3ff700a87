"""Command-line pipeline: preprocess, synth, train, crossval, explain."""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import beatfile, dataset, interpretability, metrics, tm, wavelet
from .segmentation import BEAT_WIDTH, GRID_ROWS

__all__ = ["RunConfig", "main"]

CLASS_NAMES = {3: ["non_pvc", "pvc_r", "pvc_l"]}


@dataclass
class RunConfig:
    clauses: int = 5000
    T: int = 5000
    s: float = 1.5
    epochs: int = 150
    states: int = 128
    seed: int = 0
    threads: int = 0        # 0 = all available
    boost: bool = False
    lld_floor: float = -30.0
    folds: int = 9

    def validate(self):
        if self.clauses < 2 or self.clauses % 2:
            raise ValueError("clause count must be even and at least 2")
        if self.T <= 0:
            raise ValueError("margin T must be positive")
        if self.s <= 1:
            raise ValueError("specificity s must exceed 1")
        if self.epochs < 1:
            raise ValueError("epoch count must be at least 1")
        if not 1 <= self.states <= 128:
            raise ValueError("states per action must lie in [1, 128]")
        if self.folds < 2:
            raise ValueError("fold count must be at least 2")


def _read_config_file(path):
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, _, raw = line.partition("=")
        key = key.strip().replace("-", "_")
        raw = raw.strip()
        values[key] = raw
    return values


def _apply_threads(threads):
    import numba
    limit = numba.config.NUMBA_NUM_THREADS
    n = limit if threads <= 0 else min(threads, limit)
    numba.set_num_threads(n)


def _add_config_flags(p):
    p.add_argument("--config", help="key=value config file; flags win")
    p.add_argument("--clauses", type=int, help="clauses per class")
    p.add_argument("--T", type=int, help="vote margin")
    p.add_argument("--s", type=float, help="specificity")
    p.add_argument("--epochs", type=int)
    p.add_argument("--states", type=int, help="automaton states per action")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--boost", action="store_const", const=True,
                   help="always reinforce true literals in Type I feedback")
    p.add_argument("--lld-floor", type=float, dest="lld_floor",
                   help="dB value for empty heatmap windows")
    p.add_argument("--folds", type=int)


_CASTS = {int: int, float: float,
          bool: lambda v: v.lower() in ("1", "true", "yes", "on")}


def _build_config(args):
    cfg = RunConfig()
    file_values = _read_config_file(args.config) if args.config else {}
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            setattr(cfg, f.name, flag)
        elif f.name in file_values:
            setattr(cfg, f.name, _CASTS[f.type if isinstance(f.type, type)
                                        else type(f.default)]
                    (file_values[f.name]))
    cfg.validate()
    return cfg


def cmd_preprocess(args):
    cfg = _build_config(args)
    _apply_threads(cfg.threads)
    if len(args.records) != len(args.annotations):
        raise ValueError("need one annotation file per record file")
    beats = []
    skipped = unknown = 0
    for rec_path, ann_path in zip(args.records, args.annotations):
        record = dataset.load_record(rec_path)
        anns = dataset.load_annotations(ann_path)
        cleaned = wavelet.denoise(record.samples) if len(record.samples) \
            else record.samples
        got, sk, un = dataset.beats_from_record(record, anns, cleaned)
        beats.extend(got)
        skipped += sk
        unknown += un
    beatfile.write_beats(beats, args.out)
    print(f"wrote {len(beats)} beats to {args.out} "
          f"(skipped {skipped} at record edges, "
          f"excluded {unknown} unknown symbols)")
    return 0


def cmd_synth(args):
    if args.n < 1:
        raise ValueError("beat count per class must be at least 1")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records, annotations = dataset.synth_records(
        args.n, args.noise, args.seed, args.subjects)
    for rec, anns in zip(records, annotations):
        dataset.write_record_csv(rec, out / f"{rec.subject_id}.csv")
        dataset.write_annotation_csv(anns, out / f"{rec.subject_id}.ann.csv")
    total = sum(len(a) for a in annotations)
    print(f"wrote {total} annotated beats across {len(records)} "
          f"subject files in {out}")
    return 0


def _load_beats(path):
    beats, width = beatfile.read_beats(path)
    if not beats:
        raise ValueError(f"{path} holds no beats")
    return beats, width


def cmd_train(args):
    cfg = _build_config(args)
    _apply_threads(cfg.threads)
    beats, width = _load_beats(args.beats)
    q = args.classes
    model = tm.MultiClassModel.new(q, cfg.clauses, width, cfg.T, cfg.s,
                                   cfg.states)
    rng = np.random.default_rng(cfg.seed)
    data = [(b.input, int(b.label)) for b in beats]
    print("epoch,accuracy,seconds")
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        acc = model.fit_epoch(data, rng, shuffle=True, boost=cfg.boost)
        print(f"{epoch},{acc:.6f},{time.perf_counter() - t0:.3f}")
    Path(args.model_out).write_bytes(tm.serialize(model))
    print(f"saved model to {args.model_out}")
    return 0


def cmd_crossval(args):
    cfg = _build_config(args)
    _apply_threads(cfg.threads)
    beats, _ = _load_beats(args.beats)
    subjects = sorted({b.subject_id for b in beats})
    plan = dataset.make_folds(subjects, cfg.folds, cfg.seed)
    names = CLASS_NAMES.get(args.classes)
    fold_reports, pooled = metrics.cross_validate(
        beats, plan, clauses=cfg.clauses, T=cfg.T, s=cfg.s,
        n_states=cfg.states, epochs=cfg.epochs, q=args.classes,
        seed=cfg.seed, boost=cfg.boost)
    for fi, rep in enumerate(fold_reports):
        print(metrics.format_report(rep, f"fold {fi}", names))
    print(metrics.format_report(pooled, "pooled", names))
    if args.csv_out:
        Path(args.csv_out).write_text(
            metrics.report_to_csv(fold_reports, pooled))
    return 0


def _mean_row_waveform(beats):
    """Average set-row trajectory of a class's beats, as pseudo-amplitude."""
    grids = np.stack([b.input.reshape(GRID_ROWS, BEAT_WIDTH)
                      for b in beats])
    rows = grids.argmax(axis=1)  # one set bit per column
    return (GRID_ROWS - 1) - rows.mean(axis=0)


def cmd_explain(args):
    cfg = _build_config(args)
    _apply_threads(cfg.threads)
    model = tm.deserialize(Path(args.model).read_bytes())
    beats, _ = _load_beats(args.beats)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    names = CLASS_NAMES.get(model.q,
                            [f"class{c}" for c in range(model.q)])
    for c, bank in enumerate(model.banks):
        class_beats = [b for b in beats if int(b.label) == c]
        overlay = _mean_row_waveform(class_beats) if class_beats else None
        for polarity, tag in ((tm.Polarity.POSITIVE, "pos"),
                              (tm.Polarity.NEGATIVE, "neg")):
            agg = interpretability.aggregate(bank, polarity)
            interpretability.export_role_map(
                agg, out / f"roles_{names[c]}_{tag}.pgm", overlay)
            lld = interpretability.lld_heatmap(agg, cfg.lld_floor)
            lld_overlay = overlay[1:-1] if overlay is not None else None
            interpretability.export_heatmap(
                lld, out / f"lld_{names[c]}_{tag}.ppm", lld_overlay,
                cfg.lld_floor)
        (out / f"report_{names[c]}.txt").write_text(
            interpretability.clause_report(bank, names[c]))
    print(f"wrote interpretability maps for {model.q} classes to {out}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tmecg",
        description="Interpretable rule-based PVC beat classification")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess",
                       help="denoise, segment and rasterize records")
    p.add_argument("--records", nargs="+", required=True)
    p.add_argument("--annotations", nargs="+", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("synth", help="generate synthetic subject CSVs")
    p.add_argument("--n", type=int, required=True,
                   help="beats per class")
    p.add_argument("--noise", type=float, default=0.05)
    p.add_argument("--subjects", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a model on a beat file")
    p.add_argument("--beats", required=True)
    p.add_argument("--model-out", required=True, dest="model_out")
    p.add_argument("--classes", type=int, default=3)
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("crossval",
                       help="subject-wise k-fold cross-validation")
    p.add_argument("--beats", required=True)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--csv-out", dest="csv_out")
    _add_config_flags(p)
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("explain",
                       help="emit role maps, heatmaps and text reports")
    p.add_argument("--model", required=True)
    p.add_argument("--beats", required=True)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_explain)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
