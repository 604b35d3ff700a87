"""Binary container for preprocessed beats.

Layout: magic "TMBEAT", beat count (u32 LE), input width in bits (u32 LE);
then per beat a label byte, a length-prefixed (u16 LE) UTF-8 subject id
and the little-endian bit-packed input vector (4000 bytes at the default
32,000-bit width).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .dataset import Label, LabeledBeat
from .segmentation import FLAT_BITS

__all__ = ["write_beats", "read_beats", "BeatFileError"]

MAGIC = b"TMBEAT"


class BeatFileError(ValueError):
    """Malformed beat container."""


def write_beats(beats, path, width=FLAT_BITS):
    with Path(path).open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", len(beats), width))
        for b in beats:
            bits = np.asarray(b.input, dtype=np.uint8)
            if bits.shape != (width,):
                raise ValueError(
                    f"beat width {bits.shape} does not match {width}")
            sid = b.subject_id.encode("utf-8")
            fh.write(struct.pack("<BH", int(b.label), len(sid)))
            fh.write(sid)
            fh.write(np.packbits(bits, bitorder="little").tobytes())


def read_beats(path):
    data = Path(path).read_bytes()
    head = len(MAGIC) + 8
    if len(data) < head or data[:len(MAGIC)] != MAGIC:
        raise BeatFileError(f"{path}: not a beat container")
    count, width = struct.unpack("<II", data[len(MAGIC):head])
    n_bytes = (width + 7) // 8
    beats = []
    off = head
    for _ in range(count):
        try:
            label, sid_len = struct.unpack_from("<BH", data, off)
            off += 3
            sid = data[off:off + sid_len].decode("utf-8")
            off += sid_len
            packed = np.frombuffer(data, dtype=np.uint8,
                                   count=n_bytes, offset=off)
            off += n_bytes
        except (struct.error, ValueError):
            raise BeatFileError(f"{path}: truncated beat entry") from None
        bits = np.unpackbits(packed, bitorder="little")[:width]
        beats.append(LabeledBeat(bits, Label(label), sid))
    if off != len(data):
        raise BeatFileError(f"{path}: trailing bytes after last beat")
    return beats, width
