"""Numba kernels for clause evaluation and automaton feedback.

State layout
------------
Automaton states for one clause bank are bit-sliced: ``planes`` has shape
``(n_clauses, 8, n_words)`` (uint64) and plane ``p`` holds bit ``p`` of the
stored counter for each of the ``64 * n_words`` literal slots.  The stored
counter is ``state - 1`` and lives in ``[0, 2N - 1]``; a literal is included
when ``stored >= N``.  ``include`` caches the inclusion bitmask per clause
and is kept in sync by the feedback kernels.

Randomness
----------
All feedback randomness is counter based so that updates are reproducible
and independent of execution order.  For clause ``j`` under call seed ``seed``:

* clause stream:      ``stream = mix(seed + (j + 1) * GOLDEN)``
* selection draw:     top 53 bits of ``stream`` compared against the
  feedback probability scaled to 2**53
* Bernoulli masks:    decision ``b`` (0..7, LSB first) of mask ``m``
  (0 = increment, 1 = decrement) for word ``w`` uses
  ``mix(stream + 1 + (w * 2 + m) * 8 + b)``

``mix`` is the splitmix64 finalizer.  Bernoulli masks are built with the
binary-expansion trick at 8-bit resolution: a threshold ``t`` in ``[0, 256]``
yields per-bit probability ``t / 256``; ``t == 256`` short-circuits to an
all-ones mask.
"""

import numpy as np
from numba import njit

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_PROB_SCALE = 9007199254740992.0  # 2**53


@njit(cache=True, inline="always")
def _mix(z):
    z = z + GOLDEN
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _bernoulli_word(stream, w, which, thresh):
    """One 64-bit Bernoulli mask word with per-bit probability thresh/256."""
    if thresh >= 256:
        return ~np.uint64(0)
    acc = np.uint64(0)
    base = stream + np.uint64(1 + (w * 2 + which) * 8)
    for b in range(8):
        r = _mix(base + np.uint64(b))
        if (thresh >> b) & 1:
            acc |= r
        else:
            acc &= r
    return acc


@njit(cache=True, inline="always")
def _sat_add(planes, j, w, mask):
    c = mask
    for p in range(8):
        t = planes[j, p, w] ^ c
        c = planes[j, p, w] & c
        planes[j, p, w] = t
    if c != np.uint64(0):  # overflowed slots clamp at 255
        for p in range(8):
            planes[j, p, w] |= c


@njit(cache=True, inline="always")
def _sat_sub(planes, j, w, mask):
    b = mask
    for p in range(8):
        t = planes[j, p, w] ^ b
        b = (~planes[j, p, w]) & b
        planes[j, p, w] = t
    if b != np.uint64(0):  # underflowed slots clamp at 0
        nb = ~b
        for p in range(8):
            planes[j, p, w] &= nb


@njit(cache=True, inline="always")
def _refresh_include(planes, include, j, w, n_states):
    """include bit = stored >= n_states, compared bitwise from the MSB."""
    gt = np.uint64(0)
    eq = ~np.uint64(0)
    for p in range(7, -1, -1):
        mp = ~np.uint64(0) if (n_states >> p) & 1 else np.uint64(0)
        gt |= eq & planes[j, p, w] & ~mp
        eq &= ~(planes[j, p, w] ^ mp)
    include[j, w] = gt | eq


@njit(cache=True)
def eval_bank(include, notl_w, train, out):
    """Clause outputs: 1 unless some included literal is false.

    Empty clauses emit 1 in training mode and 0 at inference.
    """
    n, n_words = include.shape
    for j in range(n):
        o = np.uint8(1)
        any_inc = False
        for w in range(n_words):
            iw = include[j, w]
            if iw != np.uint64(0):
                any_inc = True
                if iw & notl_w[w] != np.uint64(0):
                    o = np.uint8(0)
                    break
        if not train and not any_inc:
            o = np.uint8(0)
        out[j] = o


@njit(cache=True)
def fit_bank(planes, include, lits_w, notl_w, outs, prob,
             inc_thresh, dec_thresh, n_states, type_i_first_half, seed):
    """One reinforcement round over a clause bank.

    Each clause is independently selected with probability ``prob``.  The
    first half of the bank receives Type I feedback when
    ``type_i_first_half`` and Type II otherwise; the second half gets the
    opposite kind.  ``outs`` are the pre-update training-mode clause
    outputs.  Type I: on output 1, true literals step toward inclusion with
    probability ``inc_thresh/256`` and false literals step away with
    probability ``dec_thresh/256``; on output 0 every literal steps away
    with probability ``dec_thresh/256``.  Type II: on output 1, every
    excluded false literal steps once toward inclusion.
    """
    n, _, n_words = planes.shape
    half = n // 2
    prob_q = np.uint64(prob * _PROB_SCALE)
    for j in range(n):
        stream = _mix(seed + np.uint64(j + 1) * GOLDEN)
        if (stream >> np.uint64(11)) >= prob_q:
            continue
        is_type_i = (j < half) == type_i_first_half
        if is_type_i:
            if outs[j] == 1:
                for w in range(n_words):
                    inc = _bernoulli_word(stream, w, 0, inc_thresh) & lits_w[w]
                    dec = _bernoulli_word(stream, w, 1, dec_thresh) & notl_w[w]
                    _sat_add(planes, j, w, inc)
                    _sat_sub(planes, j, w, dec)
                    _refresh_include(planes, include, j, w, n_states)
            else:
                for w in range(n_words):
                    dec = _bernoulli_word(stream, w, 1, dec_thresh)
                    _sat_sub(planes, j, w, dec)
                    _refresh_include(planes, include, j, w, n_states)
        else:
            if outs[j] == 1:
                for w in range(n_words):
                    m = notl_w[w] & ~include[j, w]
                    _sat_add(planes, j, w, m)
                    _refresh_include(planes, include, j, w, n_states)
