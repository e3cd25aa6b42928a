"""Seeded randomness tapes with word-level draw semantics.

Every random decision in this package is derived from 64-bit words pulled
off a tape.  A Bernoulli(prob) draw consumes one word and compares it to a
64-bit fixed-point threshold (bias at most 2^-64); a uniform draw over a
power of two masks one word; other ranges reject on the next power of two.
Keeping the semantics at the word level lets the two-party simulator
replay exactly the same decisions as the plaintext samplers when fed the
same word stream.
"""

from __future__ import annotations

from typing import Iterable, Iterator

import numpy as np

WORD_BITS = 64
_WORD_MOD = 1 << WORD_BITS
_BUF = 4096


def bernoulli_threshold(prob: float) -> int:
    """64-bit fixed-point threshold t so that P[word < t] = prob up to 2^-64."""
    if not 0.0 <= prob <= 1.0:
        raise ValueError(f"probability {prob} outside [0, 1]")
    return min(_WORD_MOD, max(0, round(prob * _WORD_MOD)))


def pow2_at_least(m: int) -> int:
    """Smallest power of two >= m."""
    return 1 << (m - 1).bit_length() if m > 1 else 1


class RandomTape:
    """A reproducible stream of 64-bit words, seedable or injected.

    Identical seeds yield identical streams.  With ``record=True`` every
    word handed out is appended to ``draw_log``.  An explicit ``words``
    iterable overrides the generator entirely (used to inject randomness
    for replay tests); the tape raises StopIteration when it runs dry.
    """

    def __init__(
        self,
        seed: int | None = 0,
        *,
        words: Iterable[int] | None = None,
        record: bool = False,
    ):
        self.seed = seed
        self.record = record
        self.draw_log: list[int] = []
        self.words_consumed = 0
        self._injected: Iterator[int] | None = iter(words) if words is not None else None
        if self._injected is None:
            self._gen = np.random.Generator(np.random.PCG64(seed))
            self._buf = np.empty(0, dtype=np.uint64)
            self._pos = 0

    def _refill(self) -> None:
        self._buf = self._gen.integers(0, _WORD_MOD, size=_BUF, dtype=np.uint64)
        self._pos = 0

    def word(self) -> int:
        """Next raw 64-bit word."""
        if self._injected is not None:
            w = int(next(self._injected))
        else:
            if self._pos >= len(self._buf):
                self._refill()
            w = int(self._buf[self._pos])
            self._pos += 1
        self.words_consumed += 1
        if self.record:
            self.draw_log.append(w)
        return w

    def words(self, n: int) -> list[int]:
        return [self.word() for _ in range(n)]

    def bernoulli(self, prob: float) -> int:
        """1 with probability prob (to within 2^-64), else 0; one word."""
        return 1 if self.word() < bernoulli_threshold(prob) else 0

    def bernoulli_thresholded(self, threshold: int) -> int:
        """Bernoulli draw against a precomputed 64-bit threshold."""
        return 1 if self.word() < threshold else 0

    def uniform(self, m: int) -> int:
        """Uniform integer in [0, m).

        Powers of two mask a single word (zero bias); other moduli reject
        on the next power of two, consuming one word per attempt.
        """
        if m < 1:
            raise ValueError("m must be >= 1")
        if m == 1:
            return 0
        cap = pow2_at_least(m)
        mask = cap - 1
        while True:
            v = self.word() & mask
            if v < m:
                return v

    def field_element(self, q: int) -> int:
        """Uniform residue mod q via 64-bit rejection (exact for q < 2^64)."""
        limit = (_WORD_MOD // q) * q
        while True:
            w = self.word()
            if w < limit:
                return w % q

    def field_elements(self, q: int, n: int) -> list[int]:
        """n uniform residues mod q; vectorized on seeded tapes."""
        if self._injected is not None or self.record:
            return [self.field_element(q) for _ in range(n)]
        limit = (_WORD_MOD // q) * q
        out: list[int] = []
        while len(out) < n:
            chunk = self._gen.integers(0, _WORD_MOD, size=n - len(out) + 8, dtype=np.uint64)
            self.words_consumed += len(chunk)
            kept = chunk[chunk < np.uint64(limit)] % np.uint64(q)
            out.extend(int(v) for v in kept[: n - len(out)])
        return out
