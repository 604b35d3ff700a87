"""Plain-Python step-by-step simulation of the training scheme.

Used as an independent oracle for the optimized learner: clause
evaluation, vote summation, feedback selection and the automaton updates
are all re-derived here with straightforward per-literal loops.  Only the
counter-based random discipline is mirrored from the documented kernel
contract so state traces can be compared exactly.
"""

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def mix(z):
    z = (z + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def bernoulli_word(stream, w, which, thresh):
    if thresh >= 256:
        return MASK64
    acc = 0
    base = (stream + 1 + (w * 2 + which) * 8) & MASK64
    for b in range(8):
        r = mix((base + b) & MASK64)
        if (thresh >> b) & 1:
            acc |= r
        else:
            acc &= r
    return acc


class RefModel:
    """stored[c][j][k] = automaton state minus 1, in [0, 2N-1]."""

    def __init__(self, q, n, o, T, s, n_states=128):
        self.q, self.n, self.o = q, n, o
        self.T, self.s, self.N = T, s, n_states
        self.stored = np.full((q, n, 2 * o), n_states - 1, dtype=np.int64)

    def literals(self, x):
        lits = np.empty(2 * self.o, dtype=np.int64)
        lits[0::2] = x
        lits[1::2] = 1 - x
        return lits

    def clause_out(self, c, j, lits, train):
        inc = self.stored[c, j] >= self.N
        if not inc.any():
            return 1 if train else 0
        return int(np.all(lits[inc] == 1))

    def votes(self, c, lits, train):
        outs = [self.clause_out(c, j, lits, train) for j in range(self.n)]
        half = self.n // 2
        return sum(outs[:half]) - sum(outs[half:]), outs

    def predict(self, x):
        lits = self.literals(x)
        sums = [self.votes(c, lits, False)[0] for c in range(self.q)]
        return int(np.argmax(sums))

    def _type_i(self, c, j, lits, out, stream, inc_t, dec_t):
        st = self.stored[c, j]
        for k in range(2 * self.o):
            w, bit = divmod(k, 64)
            if out == 1:
                if lits[k]:
                    if (bernoulli_word(stream, w, 0, inc_t) >> bit) & 1:
                        st[k] = min(st[k] + 1, 2 * self.N - 1)
                else:
                    if (bernoulli_word(stream, w, 1, dec_t) >> bit) & 1:
                        st[k] = max(st[k] - 1, 0)
            else:
                if (bernoulli_word(stream, w, 1, dec_t) >> bit) & 1:
                    st[k] = max(st[k] - 1, 0)

    def _type_ii(self, c, j, lits, out):
        if out != 1:
            return
        st = self.stored[c, j]
        for k in range(2 * self.o):
            if lits[k] == 0 and st[k] < self.N:
                st[k] += 1

    def _fit_bank(self, c, lits, outs, prob, type_i_first, seed,
                  inc_t, dec_t):
        half = self.n // 2
        prob_q = int(prob * 2 ** 53)
        for j in range(self.n):
            stream = mix((seed + (j + 1) * GOLDEN) & MASK64)
            if (stream >> 11) >= prob_q:
                continue
            if (j < half) == type_i_first:
                self._type_i(c, j, lits, outs[j], stream, inc_t, dec_t)
            else:
                self._type_ii(c, j, lits, outs[j])

    def fit_example(self, x, y, rng, boost=False):
        lits = self.literals(x)
        neg = int(rng.integers(self.q - 1))
        if neg >= y:
            neg += 1
        seed_t = int(rng.integers(1 << 63))
        seed_f = int(rng.integers(1 << 63))
        v_t, outs_t = self.votes(y, lits, True)
        v_f, outs_f = self.votes(neg, lits, True)
        T = self.T
        p_t = (T - max(-T, min(T, v_t))) / (2.0 * T)
        p_f = (T + max(-T, min(T, v_f))) / (2.0 * T)
        inc_t = 256 if boost else int(round((self.s - 1) / self.s * 256))
        dec_t = int(round(1.0 / self.s * 256))
        self._fit_bank(y, lits, outs_t, p_t, True, seed_t, inc_t, dec_t)
        self._fit_bank(neg, lits, outs_f, p_f, False, seed_f, inc_t, dec_t)
