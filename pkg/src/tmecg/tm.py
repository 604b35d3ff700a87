"""Multi-class Tsetlin machine: conjunctive clauses over Boolean inputs.

An input of width ``o`` yields ``2 * o`` literals: literal ``2k`` is input
bit ``k`` and literal ``2k + 1`` its negation.  Each clause holds one
two-action automaton per literal whose state lies in ``[1, 2N]``; the
literal is included in the clause conjunction when the state exceeds ``N``.
Clause banks vote per class (first half positive polarity, second half
negative) and prediction is the argmax of the clamped-free vote sums.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass
from enum import Enum, IntEnum

import numpy as np

from . import _kernels

__all__ = [
    "Mode", "Polarity", "Form", "WidthMismatchError", "ModelFormatError",
    "ClauseTeam", "ClassBank", "MultiClassModel",
    "literal_vector", "clause_output", "class_sum", "clamp_sum",
    "predict_binary", "predict_multiclass",
    "type_i_feedback", "type_ii_feedback",
    "fit_example", "fit_epoch", "included_literals",
    "serialize", "deserialize",
]

MAGIC = b"TMPVC"
FORMAT_VERSION = 1


class Mode(Enum):
    TRAIN = "train"
    INFER = "infer"


class Polarity(IntEnum):
    POSITIVE = 0
    NEGATIVE = 1


class Form(IntEnum):
    PLAIN = 0
    NEGATED = 1


class WidthMismatchError(ValueError):
    """Input width does not match the clause/model width."""


class ModelFormatError(ValueError):
    """Malformed or unsupported serialized model."""


def _as_bits(x, width=None):
    x = np.ascontiguousarray(x, dtype=np.uint8)
    if x.ndim != 1:
        raise WidthMismatchError("input must be one-dimensional")
    if width is not None and x.shape[0] != width:
        raise WidthMismatchError(
            f"input width {x.shape[0]} does not match expected width {width}")
    return x


def literal_vector(x):
    """Interleaved literal values: entry 2k is x_k, entry 2k+1 is not x_k."""
    x = _as_bits(x)
    lits = np.empty(2 * x.shape[0], dtype=np.uint8)
    lits[0::2] = x
    lits[1::2] = 1 - x
    return lits


def _pack_bits(bits):
    n_words = (bits.shape[0] + 63) // 64
    padded = np.zeros(n_words * 64, dtype=np.uint8)
    padded[:bits.shape[0]] = bits
    return np.packbits(padded, bitorder="little").view(np.uint64)


def _planes_from_stored(stored):
    n, width = stored.shape
    n_words = (width + 63) // 64
    padded = np.zeros((n, n_words * 64), dtype=np.uint8)
    padded[:, :width] = stored
    planes = np.empty((n, 8, n_words), dtype=np.uint64)
    for p in range(8):
        bits = (padded >> p) & 1
        planes[:, p, :] = np.packbits(
            bits, axis=1, bitorder="little").view(np.uint64)
    return np.ascontiguousarray(planes)


def _stored_from_planes(planes, width):
    n, _, n_words = planes.shape
    stored = np.zeros((n, n_words * 64), dtype=np.uint8)
    for p in range(8):
        plane_bytes = np.ascontiguousarray(planes[:, p, :]).view(np.uint8)
        bits = np.unpackbits(plane_bytes, axis=1, bitorder="little")
        stored |= bits << p
    return stored[:, :width]


def clamp_sum(v, T):
    """Clamp a vote sum to the margin interval [-T, T]."""
    if T <= 0:
        raise ValueError("margin T must be positive")
    return max(-T, min(T, int(v)))


def predict_binary(vote_sum):
    """Unit-step threshold: 1 for non-negative vote sums."""
    return 1 if vote_sum >= 0 else 0


@dataclass
class ClauseTeam:
    """One clause: automaton states (in [1, 2N]) plus polarity."""

    states: np.ndarray
    polarity: Polarity
    n_states: int = 128

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=np.int16)
        if self.states.ndim != 1 or self.states.shape[0] % 2:
            raise ValueError("states must be a flat array of even length")
        if self.states.min(initial=1) < 1 or \
                self.states.max(initial=1) > 2 * self.n_states:
            raise ValueError("automaton states out of [1, 2N]")

    @property
    def width(self):
        return self.states.shape[0]

    @property
    def include(self):
        return self.states > self.n_states


def clause_output(clause, x, mode=Mode.INFER):
    """Conjunction of the clause's included literals under input ``x``.

    An empty clause (nothing included) returns 1 while training so it can
    receive feedback, and 0 at inference so it never votes.
    """
    lits = literal_vector(_as_bits(x, clause.width // 2))
    inc = clause.include
    if not inc.any():
        return 1 if mode is Mode.TRAIN else 0
    return int(np.all(lits[inc] == 1))


def included_literals(clause):
    """Included literals as (input index, PLAIN or NEGATED) pairs."""
    out = []
    for k in np.flatnonzero(clause.include):
        out.append((int(k) // 2, Form.PLAIN if k % 2 == 0 else Form.NEGATED))
    return out


def type_i_feedback(clause, x, s, rng, boost=False, probs=None):
    """Type I (recognize) feedback, applied in place.

    If the clause fires, true literals step toward inclusion with
    probability (s-1)/s and false literals step toward exclusion with
    probability 1/s; if it does not fire, every literal steps toward
    exclusion with probability 1/s.  ``probs`` overrides
    (include_prob, exclude_prob) for deterministic tests.
    """
    if probs is None:
        if s <= 1:
            raise ValueError("specificity s must exceed 1")
        p_inc, p_dec = (s - 1.0) / s, 1.0 / s
    else:
        p_inc, p_dec = probs
    if boost:
        p_inc = 1.0
    lits = literal_vector(_as_bits(x, clause.width // 2))
    st = clause.states
    hi = 2 * clause.n_states
    if clause_output(clause, x, Mode.TRAIN) == 1:
        up = (lits == 1) & (rng.random(st.shape[0]) < p_inc)
        down = (lits == 0) & (rng.random(st.shape[0]) < p_dec)
    else:
        up = np.zeros(st.shape[0], dtype=bool)
        down = rng.random(st.shape[0]) < p_dec
    st[up] = np.minimum(st[up] + 1, hi)
    st[down] = np.maximum(st[down] - 1, 1)
    return clause


def type_ii_feedback(clause, x):
    """Type II (erase) feedback, applied in place.

    Only acts when the clause fires: every excluded literal whose value is
    0 steps once toward inclusion, pushing the clause to stop matching
    this input.  Included literals and true literals are untouched.
    """
    if clause_output(clause, x, Mode.TRAIN) != 1:
        return clause
    lits = literal_vector(_as_bits(x, clause.width // 2))
    st = clause.states
    bump = (lits == 0) & (st <= clause.n_states)
    st[bump] += 1
    return clause


class ClassBank:
    """A class's clause bank: first half positive, second half negative."""

    def __init__(self, n_clauses, o, n_states=128, stored=None):
        if n_clauses < 2 or n_clauses % 2:
            raise ValueError("clause count must be even and at least 2")
        if not 1 <= n_states <= 128:
            raise ValueError("states per action must lie in [1, 128]")
        self.n_clauses = n_clauses
        self.o = o
        self.n_states = n_states
        if stored is None:
            stored = np.full((n_clauses, 2 * o), n_states - 1, dtype=np.uint8)
        self.planes = _planes_from_stored(stored)
        include_bits = (stored >= n_states).astype(np.uint8)
        n_words = self.planes.shape[2]
        padded = np.zeros((n_clauses, n_words * 64), dtype=np.uint8)
        padded[:, :2 * o] = include_bits
        self.include = np.ascontiguousarray(
            np.packbits(padded, axis=1, bitorder="little").view(np.uint64))

    @property
    def half(self):
        return self.n_clauses // 2

    def stored_states(self):
        return _stored_from_planes(self.planes, 2 * self.o)

    def clause(self, j):
        stored = _stored_from_planes(self.planes[j:j + 1], 2 * self.o)[0]
        pol = Polarity.POSITIVE if j < self.half else Polarity.NEGATIVE
        return ClauseTeam(stored.astype(np.int16) + 1, pol, self.n_states)

    def set_clause(self, j, team):
        if team.width != 2 * self.o:
            raise WidthMismatchError("clause width does not match bank")
        stored = self.stored_states()
        stored[j] = (team.states - 1).astype(np.uint8)
        fresh = ClassBank(self.n_clauses, self.o, self.n_states, stored)
        self.planes, self.include = fresh.planes, fresh.include

    def clause_outputs_packed(self, notl_w, mode):
        out = np.empty(self.n_clauses, dtype=np.uint8)
        _kernels.eval_bank(self.include, notl_w, mode is Mode.TRAIN, out)
        return out

    def clause_outputs(self, x, mode=Mode.INFER):
        lits = literal_vector(_as_bits(x, self.o))
        return self.clause_outputs_packed(_pack_bits(1 - lits), mode)

    def include_counts(self):
        return np.array(
            [int(np.bitwise_count(row).sum()) for row in self.include])


def class_sum(bank, x, mode=Mode.INFER):
    """Positive-polarity votes minus negative-polarity votes."""
    outs = bank.clause_outputs(x, mode)
    return int(outs[:bank.half].sum()) - int(outs[bank.half:].sum())


class MultiClassModel:
    """q clause banks plus the shared hyperparameters."""

    def __init__(self, banks, T, s):
        if len(banks) < 2:
            raise ValueError("multiclass model needs at least 2 classes")
        widths = {b.o for b in banks}
        if len(widths) != 1 or len({b.n_states for b in banks}) != 1:
            raise ValueError("all banks must share input width and N")
        if T <= 0:
            raise ValueError("margin T must be positive")
        if s <= 1:
            raise ValueError("specificity s must exceed 1")
        self.banks = list(banks)
        self.T = int(T)
        self.s = float(s)

    @classmethod
    def new(cls, q, n_clauses, o, T, s, n_states=128):
        return cls([ClassBank(n_clauses, o, n_states) for _ in range(q)], T, s)

    @property
    def q(self):
        return len(self.banks)

    @property
    def o(self):
        return self.banks[0].o

    @property
    def n_states(self):
        return self.banks[0].n_states

    @property
    def n_clauses(self):
        return self.banks[0].n_clauses

    def class_sums(self, x, mode=Mode.INFER):
        lits = literal_vector(_as_bits(x, self.o))
        notl_w = _pack_bits(1 - lits)
        return self._sums_packed(notl_w, mode)

    def _sums_packed(self, notl_w, mode):
        sums = np.empty(self.q, dtype=np.int64)
        for c, bank in enumerate(self.banks):
            outs = bank.clause_outputs_packed(notl_w, mode)
            sums[c] = int(outs[:bank.half].sum()) - int(outs[bank.half:].sum())
        return sums

    def predict(self, x):
        return int(np.argmax(self.class_sums(x, Mode.INFER)))

    def _thresholds(self, boost):
        inc = 256 if boost else int(round((self.s - 1.0) / self.s * 256))
        dec = int(round(1.0 / self.s * 256))
        return inc, dec

    def fit_example(self, x, y, rng, boost=False):
        x = _as_bits(x, self.o)
        lits = literal_vector(x)
        self._fit_packed(_pack_bits(lits), _pack_bits(1 - lits), y, rng, boost)

    def _fit_packed(self, lits_w, notl_w, y, rng, boost):
        if not 0 <= y < self.q:
            raise IndexError(f"class index {y} out of range for q={self.q}")
        neg = int(rng.integers(self.q - 1))
        if neg >= y:
            neg += 1
        seed_t = np.uint64(rng.integers(1 << 63))
        seed_f = np.uint64(rng.integers(1 << 63))
        bank_t, bank_f = self.banks[y], self.banks[neg]
        outs_t = bank_t.clause_outputs_packed(notl_w, Mode.TRAIN)
        outs_f = bank_f.clause_outputs_packed(notl_w, Mode.TRAIN)
        v_t = int(outs_t[:bank_t.half].sum()) - int(outs_t[bank_t.half:].sum())
        v_f = int(outs_f[:bank_f.half].sum()) - int(outs_f[bank_f.half:].sum())
        p_t = (self.T - clamp_sum(v_t, self.T)) / (2.0 * self.T)
        p_f = (self.T + clamp_sum(v_f, self.T)) / (2.0 * self.T)
        inc_t, dec_t = self._thresholds(boost)
        _kernels.fit_bank(bank_t.planes, bank_t.include, lits_w, notl_w,
                          outs_t, p_t, inc_t, dec_t, self.n_states,
                          True, seed_t)
        _kernels.fit_bank(bank_f.planes, bank_f.include, lits_w, notl_w,
                          outs_f, p_f, inc_t, dec_t, self.n_states,
                          False, seed_f)

    def fit_epoch(self, dataset, rng, shuffle=True, boost=False):
        """One pass over (input, label) pairs; returns training accuracy.

        Accuracy counts the prediction made just before each example's
        update, so it reflects the model as it streams through the epoch.
        """
        if len(dataset) == 0:
            raise ValueError("dataset must not be empty")
        order = rng.permutation(len(dataset)) if shuffle \
            else np.arange(len(dataset))
        correct = 0
        for i in order:
            x, y = dataset[i]
            x = _as_bits(x, self.o)
            lits = literal_vector(x)
            lits_w, notl_w = _pack_bits(lits), _pack_bits(1 - lits)
            if int(np.argmax(self._sums_packed(notl_w, Mode.INFER))) == y:
                correct += 1
            self._fit_packed(lits_w, notl_w, y, rng, boost)
        return correct / len(dataset)


def predict_multiclass(model, x):
    """Argmax over class sums; ties resolve to the lowest class index."""
    return model.predict(x)


def fit_example(model, x, y, rng, boost=False):
    model.fit_example(x, y, rng, boost)
    return model


def fit_epoch(model, dataset, rng, shuffle=True, boost=False):
    acc = model.fit_epoch(dataset, rng, shuffle, boost)
    return model, acc


def serialize(model):
    """Versioned binary snapshot of states and hyperparameters."""
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<HIIIHId", FORMAT_VERSION, model.q,
                          model.n_clauses, model.o, model.n_states,
                          model.T, model.s))
    for bank in model.banks:
        buf.write(bank.stored_states().tobytes())
    return buf.getvalue()


def deserialize(data):
    head_len = len(MAGIC) + struct.calcsize("<HIIIHId")
    if len(data) < head_len:
        raise ModelFormatError("truncated model header")
    if data[:len(MAGIC)] != MAGIC:
        raise ModelFormatError("bad magic; not a model file")
    version, q, n, o, n_states, T, s = struct.unpack(
        "<HIIIHId", data[len(MAGIC):head_len])
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported format version {version} "
            f"(expected {FORMAT_VERSION})")
    per_bank = n * 2 * o
    if len(data) != head_len + q * per_bank:
        raise ModelFormatError("truncated or oversized state payload")
    banks = []
    for c in range(q):
        raw = np.frombuffer(
            data, dtype=np.uint8, count=per_bank,
            offset=head_len + c * per_bank)
        banks.append(ClassBank(n, o, n_states,
                               raw.reshape(n, 2 * o).copy()))
    return MultiClassModel(banks, T, s)


def export_clauses_text(model, class_names=None):
    """Diffable dump: one line per clause listing its included literals."""
    lines = []
    for c, bank in enumerate(model.banks):
        name = class_names[c] if class_names else f"class{c}"
        for j in range(bank.n_clauses):
            team = bank.clause(j)
            pol = "+" if team.polarity is Polarity.POSITIVE else "-"
            toks = [
                ("x%d" % k) if form is Form.PLAIN else ("~x%d" % k)
                for k, form in included_literals(team)
            ]
            lines.append(f"{name} {pol}clause{j}: " + " ".join(toks))
    return "\n".join(lines) + "\n"
