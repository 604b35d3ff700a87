"""Biorthogonal 2.6 wavelet analysis/synthesis and band-zeroing denoiser.

The filter coefficients are spelled out as literal constants (spline
lowpass on the synthesis side, its 13-tap dual on the analysis side) and a
unit test asserts the perfect-reconstruction identity, which guards
against transcription slips.  Boundary handling is half-sample symmetric
extension throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "FilterBank", "BIOR_2_6", "WaveletDecomposition",
    "dwt_decompose", "zero_bands", "idwt_reconstruct", "denoise",
    "DEFAULT_DENOISE_BANDS",
]

DEFAULT_DENOISE_BANDS = frozenset({"d1", "d2", "a9"})

_DUAL_13 = (
    -0.006905339660024878, 0.013810679320049757, 0.046956309688169176,
    -0.10772329869638811, -0.16987135563661201, 0.4474660099696121,
    0.966747552403483, 0.4474660099696121, -0.16987135563661201,
    -0.10772329869638811, 0.046956309688169176, 0.013810679320049757,
    -0.006905339660024878,
)
_SPLINE_3 = (0.3535533905932738, 0.7071067811865476, 0.3535533905932738)

# All filters padded to a common length of 14; the offsets, downsample
# phase and synthesis crop below were fixed together so that
# analyze-then-synthesize is exact.
_FLEN = 14
_DOWN_PHASE = 1
_UP_PHASE = 0
_SYN_CROP = 12


def _place(taps, offset):
    f = np.zeros(_FLEN)
    f[offset:offset + len(taps)] = taps
    return f


@dataclass(frozen=True)
class FilterBank:
    """Analysis/synthesis filter quadruple of a biorthogonal wavelet."""

    dec_lo: np.ndarray
    dec_hi: np.ndarray
    rec_lo: np.ndarray
    rec_hi: np.ndarray

    @property
    def pad(self):
        return _FLEN - 1


BIOR_2_6 = FilterBank(
    dec_lo=_place(_DUAL_13, 0),
    dec_hi=_place([(-1) ** (k + 1) * c for k, c in enumerate(_SPLINE_3)], 6),
    rec_lo=_place(_SPLINE_3, 6),
    rec_hi=_place([(-1) ** k * c for k, c in enumerate(_DUAL_13)], 0),
)


@dataclass
class WaveletDecomposition:
    """Level-``levels`` analysis: approximation plus details d1..dL.

    ``details[i]`` holds band ``d{i+1}``; ``level_lengths[i]`` is the
    signal length that entered analysis step ``i + 1``, which synthesis
    needs to undo odd-length truncation exactly.
    """

    approx: np.ndarray
    details: list = field(default_factory=list)
    level_lengths: list = field(default_factory=list)

    @property
    def levels(self):
        return len(self.details)

    @property
    def original_length(self):
        return self.level_lengths[0]

    def band_names(self):
        return [f"d{i + 1}" for i in range(self.levels)] + \
            [f"a{self.levels}"]

    def band(self, name):
        if name == f"a{self.levels}":
            return self.approx
        if name.startswith("d"):
            i = int(name[1:]) - 1
            if 0 <= i < self.levels:
                return self.details[i]
        raise KeyError(f"unknown band {name!r}; have {self.band_names()}")

    def copy(self):
        return WaveletDecomposition(
            self.approx.copy(), [d.copy() for d in self.details],
            list(self.level_lengths))


def _sym_ext(x, p):
    return np.concatenate([x[:p][::-1], x, x[-p:][::-1]])


def _analyze_step(x, fb):
    p = fb.pad
    xe = _sym_ext(x, p)
    a = np.convolve(xe, fb.dec_lo, mode="valid")[_DOWN_PHASE::2]
    d = np.convolve(xe, fb.dec_hi, mode="valid")[_DOWN_PHASE::2]
    return a, d


def _synthesize_step(a, d, out_len, fb):
    ua = np.zeros(2 * a.shape[0])
    ud = np.zeros(2 * d.shape[0])
    ua[_UP_PHASE::2] = a
    ud[_UP_PHASE::2] = d
    y = np.convolve(ua, fb.rec_lo) + np.convolve(ud, fb.rec_hi)
    return y[_SYN_CROP:_SYN_CROP + out_len]


def dwt_decompose(signal, levels=9, filters=BIOR_2_6):
    """Cascade analysis with symmetric extension."""
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("signal must be one-dimensional")
    if not np.isfinite(x).all():
        raise ValueError("signal contains non-finite samples")
    if levels < 1:
        raise ValueError("levels must be at least 1")
    if x.shape[0] < 2 ** levels:
        raise ValueError(
            f"signal of length {x.shape[0]} is too short for "
            f"{levels} levels (needs at least {2 ** levels} samples)")
    dec = WaveletDecomposition(x)
    a = x
    for _ in range(levels):
        dec.level_lengths.append(a.shape[0])
        a, d = _analyze_step(a, filters)
        dec.details.append(d)
    dec.approx = a
    return dec


def zero_bands(dec, bands=DEFAULT_DENOISE_BANDS):
    """Copy of the decomposition with the named bands zeroed out."""
    known = set(dec.band_names())
    unknown = set(bands) - known
    if unknown:
        raise KeyError(
            f"unknown bands {sorted(unknown)}; have {sorted(known)}")
    out = dec.copy()
    for name in bands:
        out.band(name)[:] = 0.0
    return out


def idwt_reconstruct(dec, filters=BIOR_2_6):
    """Synthesis cascade back to a signal of the original length."""
    if len(dec.level_lengths) != dec.levels:
        raise ValueError("decomposition is missing per-level lengths")
    a = dec.approx
    for d, out_len in zip(reversed(dec.details),
                          reversed(dec.level_lengths)):
        expect = (out_len + filters.pad) // 2
        if a.shape[0] != expect or d.shape[0] != expect:
            raise ValueError("inconsistent coefficient lengths")
        a = _synthesize_step(a, d, out_len, filters)
    return a


def denoise(signal, levels=9, bands=DEFAULT_DENOISE_BANDS):
    """Remove fine-scale noise (d1, d2) and the baseline band (a9).

    The deepest approximation carries the baseline drift, the first two
    detail bands carry mains interference and wideband noise; zeroing the
    three and resynthesizing keeps the waveform shape.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.shape[0] < 2 ** levels:
        raise ValueError(
            f"record of length {x.shape[0]} is too short to denoise "
            f"(needs at least {2 ** levels} samples)")
    return idwt_reconstruct(zero_bands(dwt_decompose(x, levels), bands))
