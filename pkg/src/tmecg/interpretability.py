"""Clause-level pixel roles, aggregate maps and log-density heatmaps.

A trained clause assigns each grid pixel one of three roles: ONE (the
plain literal is included, the pixel must be set), ZERO (the negated
literal is included, the pixel must be clear) or STAR (excluded, the
pixel is ignored).  Aggregating the ZERO/ONE roles over all clauses of
one class and polarity gives the six count maps; scanning a binarized
count map with a 3x3 window yields the local logarithmic density
    LLD = 10 * log10(active pixels in window / 9)
in dB, floored at a configurable value where the window is empty.

Images are emitted as plain-text portable graymaps (P2) and pixmaps (P3)
so tests can parse them back without codecs.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

from .segmentation import BEAT_WIDTH, GRID_ROWS
from .tm import Polarity, WidthMismatchError

__all__ = [
    "Role", "RoleGrid", "AggregateMap", "LLD_WINDOW",
    "clause_roles", "aggregate", "lld_heatmap", "mean_waveform",
    "export_role_map", "export_heatmap", "read_pgm", "read_ppm",
    "clause_report",
]

LLD_WINDOW = 3
DEFAULT_FLOOR_DB = -30.0


class Role(IntEnum):
    STAR = 0
    ONE = 1
    ZERO = 2
    CONFLICT = 3  # both literal forms included: clause can never fire


@dataclass
class RoleGrid:
    roles: np.ndarray

    @property
    def has_conflict(self):
        return bool((self.roles == Role.CONFLICT).any())


@dataclass
class AggregateMap:
    """Per-pixel clause counts for one class and polarity."""

    negated: np.ndarray   # clauses including the pixel in negated form
    plain: np.ndarray     # clauses including the pixel in plain form
    n_clauses: int
    skipped_conflicts: int = 0


def clause_roles(clause, rows=GRID_ROWS, cols=BEAT_WIDTH):
    """Map the clause's literal pair (2k, 2k+1) to pixel k's role."""
    if clause.width != 2 * rows * cols:
        raise WidthMismatchError(
            f"clause width {clause.width} does not match a "
            f"{rows}x{cols} grid")
    inc = clause.include
    plain = inc[0::2].reshape(rows, cols)
    negated = inc[1::2].reshape(rows, cols)
    roles = np.full((rows, cols), Role.STAR, dtype=np.int8)
    roles[plain] = Role.ONE
    roles[negated] = Role.ZERO
    roles[plain & negated] = Role.CONFLICT
    return RoleGrid(roles)


def aggregate(bank, polarity, rows=GRID_ROWS, cols=BEAT_WIDTH):
    """Count ZERO and ONE roles per pixel over one polarity's clauses.

    Clauses that include both forms of some pixel can never fire; they
    are skipped with a warning and counted in ``skipped_conflicts``.
    """
    half = bank.half
    sl = range(0, half) if polarity is Polarity.POSITIVE \
        else range(half, bank.n_clauses)
    negated = np.zeros((rows, cols), dtype=np.int64)
    plain = np.zeros((rows, cols), dtype=np.int64)
    skipped = 0
    for j in sl:
        grid = clause_roles(bank.clause(j), rows, cols)
        if grid.has_conflict:
            skipped += 1
            continue
        negated += grid.roles == Role.ZERO
        plain += grid.roles == Role.ONE
    if skipped:
        warnings.warn(
            f"skipped {skipped} clauses with conflicting literal pairs",
            stacklevel=2)
    return AggregateMap(negated, plain, len(sl), skipped)


def _window_sums(grid):
    c = np.cumsum(np.cumsum(grid, axis=0), axis=1)
    c = np.pad(c, ((1, 0), (1, 0)))
    k = LLD_WINDOW
    return (c[k:, k:] - c[:-k, k:] - c[k:, :-k] + c[:-k, :-k])


def lld_heatmap(counts, floor_db=DEFAULT_FLOOR_DB, binarize=True):
    """3x3 stride-1 local logarithmic density over a count map.

    With ``binarize`` (the default) the numerator is the number of pixels
    in the window with a nonzero count, so a fully active window reads
    exactly 0 dB.  With ``binarize=False`` the raw counts are summed and
    normalized by 9 times the peak pixel count instead.  Empty windows
    take ``floor_db``.
    """
    counts = np.asarray(getattr(counts, "negated", counts))
    if binarize:
        m = _window_sums((counts > 0).astype(np.int64))
        denom = float(LLD_WINDOW * LLD_WINDOW)
    else:
        m = _window_sums(counts.astype(np.int64))
        denom = float(LLD_WINDOW * LLD_WINDOW * max(int(counts.max()), 1))
    out = np.full(m.shape, float(floor_db))
    nz = m > 0
    out[nz] = 10.0 * np.log10(m[nz] / denom)
    return out


def mean_waveform(beats):
    """Per-column arithmetic mean over a nonempty list of beat windows."""
    if len(beats) == 0:
        raise ValueError("cannot average zero beats")
    return np.mean([b.samples for b in beats], axis=0)


def _overlay_rows(overlay, rows):
    """Rasterize a waveform onto grid rows (max amplitude on row 0)."""
    y = np.asarray(overlay, dtype=np.float64)
    lo, hi = float(y.min()), float(y.max())
    if hi <= lo:
        return np.full(y.shape[0], (rows - 1) // 2, dtype=np.int64)
    u = (y - lo) / (hi - lo)
    return np.floor((1.0 - u) * (rows - 1) + 0.5).astype(np.int64)


def export_role_map(counts, path, overlay=None):
    """Write a count map as a plain (P2) graymap, dark = high count.

    One intensity level per count value; an optional overlay waveform is
    drawn at the darkest level along its rasterized path.
    """
    counts = np.asarray(getattr(counts, "negated", counts))
    maxval = max(int(counts.max()), 1)
    img = maxval - counts
    if overlay is not None:
        img = img.copy()
        if len(overlay) != counts.shape[1]:
            raise ValueError("overlay length must match the column count")
        rows = _overlay_rows(overlay, counts.shape[0])
        img[rows, np.arange(counts.shape[1])] = 0
    _write_pnm(path, "P2", img, maxval)


def _ramp_rgb(t):
    """256-step blue-to-red ramp; t in [0, 1]."""
    level = np.clip((t * 255.0 + 0.5).astype(np.int64), 0, 255)
    r = level
    b = 255 - level
    g = np.zeros_like(level)
    return r, g, b


def export_heatmap(grid, path, overlay=None, floor_db=DEFAULT_FLOOR_DB):
    """Write an LLD grid as a plain (P3) pixmap.

    Values are mapped on a 256-step blue (floor) to red (0 dB) ramp; the
    optional overlay waveform is drawn in black.
    """
    grid = np.asarray(grid, dtype=np.float64)
    t = np.clip((grid - floor_db) / (0.0 - floor_db), 0.0, 1.0)
    r, g, b = _ramp_rgb(t)
    if overlay is not None:
        if len(overlay) != grid.shape[1]:
            raise ValueError("overlay length must match the column count")
        rows = _overlay_rows(overlay, grid.shape[0])
        cols = np.arange(grid.shape[1])
        r[rows, cols] = g[rows, cols] = b[rows, cols] = 0
    rgb = np.stack([r, g, b], axis=-1)
    _write_pnm(path, "P3", rgb.reshape(grid.shape[0], -1), 255)


def _write_pnm(path, magic, data, maxval):
    h = data.shape[0]
    w = data.shape[1] if magic == "P2" else data.shape[1] // 3
    with Path(path).open("w") as fh:
        fh.write(f"{magic}\n{w} {h}\n{maxval}\n")
        for row in data:
            fh.write(" ".join(str(int(v)) for v in row) + "\n")


def _read_pnm(path, magic):
    tokens = Path(path).read_text().split()
    if tokens[0] != magic:
        raise ValueError(f"expected {magic} file, got {tokens[0]!r}")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    per = 1 if magic == "P2" else 3
    vals = np.array(tokens[4:4 + w * h * per], dtype=np.int64)
    return vals.reshape(h, w * per), maxval


def read_pgm(path):
    return _read_pnm(path, "P2")


def read_ppm(path):
    data, maxval = _read_pnm(path, "P3")
    return data.reshape(data.shape[0], -1, 3), maxval


def clause_report(bank, class_name, top_n=20, rows=GRID_ROWS,
                  cols=BEAT_WIDTH):
    """Text summary of one class bank: per polarity, the clause count,
    mean included-literal count and highest-count pixels."""
    lines = [f"class {class_name}"]
    counts = bank.include_counts()
    for polarity in (Polarity.POSITIVE, Polarity.NEGATIVE):
        sl = slice(0, bank.half) if polarity is Polarity.POSITIVE \
            else slice(bank.half, bank.n_clauses)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            agg = aggregate(bank, polarity, rows, cols)
        mean_inc = float(counts[sl].mean())
        tag = "positive" if polarity is Polarity.POSITIVE else "negative"
        lines.append(f"  {tag} polarity: {bank.half} clauses, "
                     f"mean included literals {mean_inc:.2f}")
        total = agg.negated + agg.plain
        flat = np.argsort(total, axis=None)[::-1][:top_n]
        for rank, idx in enumerate(flat, start=1):
            row, col = divmod(int(idx), total.shape[1])
            lines.append(
                f"    #{rank:2d} pixel (row {row}, col {col}): "
                f"negated {int(agg.negated[row, col])}, "
                f"plain {int(agg.plain[row, col])}")
    return "\n".join(lines) + "\n"
