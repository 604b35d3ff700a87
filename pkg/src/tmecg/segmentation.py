"""Beat segmentation and Boolean rasterization.

Beats are 320-sample windows cut around each annotated R reference point
(144 samples before, 176 after) so every QRS apex lands at the same
offset.  Each window is quantized onto a 100x320 Boolean grid with one set
bit per column; row 0 is the top of the grid and maps to the upper end of
the amplitude range.  Flattening the grid row by row yields the
32,000-bit classifier input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PRE_SAMPLES", "POST_SAMPLES", "BEAT_WIDTH", "GRID_ROWS", "FLAT_BITS",
    "BeatWindow", "BeatMatrix",
    "segment_beats", "rasterize", "flatten", "unflatten",
]

PRE_SAMPLES = 144
POST_SAMPLES = 176
BEAT_WIDTH = PRE_SAMPLES + POST_SAMPLES  # 320
GRID_ROWS = 100
FLAT_BITS = GRID_ROWS * BEAT_WIDTH  # 32,000


@dataclass
class BeatWindow:
    """One aligned beat; the R reference sits at offset 144."""

    samples: np.ndarray
    r_index: int = PRE_SAMPLES

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.shape != (BEAT_WIDTH,):
            raise ValueError(
                f"beat window must hold exactly {BEAT_WIDTH} samples")
        if self.r_index != PRE_SAMPLES:
            raise ValueError(f"reference offset is fixed at {PRE_SAMPLES}")


@dataclass
class BeatMatrix:
    """100x320 Boolean grid; row = quantized amplitude, column = time."""

    grid: np.ndarray
    amplitude_range: tuple

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=bool)
        if self.grid.shape != (GRID_ROWS, BEAT_WIDTH):
            raise ValueError(
                f"grid must be {GRID_ROWS}x{BEAT_WIDTH}")


def segment_beats(signal, r_peaks):
    """Cut [r - 144, r + 176) windows; returns (windows, skipped count).

    Peaks whose window would overrun either end of the record are skipped
    and counted rather than padded.
    """
    x = np.asarray(signal, dtype=np.float64)
    peaks = np.asarray(r_peaks, dtype=np.int64)
    if peaks.size > 1 and np.any(np.diff(peaks) < 0):
        raise ValueError("r_peaks must be sorted ascending")
    windows = []
    skipped = 0
    for r in peaks:
        lo, hi = r - PRE_SAMPLES, r + POST_SAMPLES
        if lo < 0 or hi > x.shape[0]:
            skipped += 1
            continue
        windows.append(BeatWindow(x[lo:hi].copy()))
    return windows, skipped


def rasterize(beat, amplitude_range):
    """Quantize a beat into the Boolean grid, one set bit per column.

    Amplitudes are clipped to the range, normalized to [0, 1] and mapped
    so the range maximum lands on row 0 (top of the grid).
    """
    lo, hi = amplitude_range
    if not hi > lo:
        raise ValueError(f"degenerate amplitude range ({lo}, {hi})")
    u = (np.clip(beat.samples, lo, hi) - lo) / (hi - lo)
    rows = np.floor((1.0 - u) * (GRID_ROWS - 1) + 0.5).astype(np.int64)
    grid = np.zeros((GRID_ROWS, BEAT_WIDTH), dtype=bool)
    grid[rows, np.arange(BEAT_WIDTH)] = True
    return BeatMatrix(grid, (float(lo), float(hi)))


def flatten(matrix):
    """Row-major bit vector: bit index = row * 320 + column."""
    return matrix.grid.reshape(FLAT_BITS).astype(np.uint8)


def unflatten(bits, amplitude_range=(0.0, 1.0)):
    """Inverse of :func:`flatten`."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.shape != (FLAT_BITS,):
        raise ValueError(f"expected {FLAT_BITS} bits")
    return BeatMatrix(bits.reshape(GRID_ROWS, BEAT_WIDTH).astype(bool),
                      amplitude_range)
