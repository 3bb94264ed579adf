"""Deterministic pseudorandom streams with labeled substream derivation."""

from __future__ import annotations

import hashlib
import math

import numpy as np

_BLOCK = 512
_WORD_MAX = (1 << 64) - 1


def _label_entropy(label: object) -> int:
    """Stable 64-bit key for a substream label (platform independent)."""
    data = f"{type(label).__name__}:{label!r}".encode()
    return int.from_bytes(hashlib.sha256(data).digest()[:8], "big")


class Stream:
    """A seeded PCG64 stream with reproducible labeled substreams.

    Substreams from :meth:`substream` depend only on ``(seed, label path)``,
    so any fixed assignment of work to substreams is reproducible no matter
    how it is scheduled.  A stream is single-consumer: identical seed plus
    identical draw sequence yields identical outputs, and the order of draws
    is part of every caller's contract.
    """

    __slots__ = ("seed", "_spawn_key", "_gen", "_floats", "_fpos", "_words", "_wpos")

    def __init__(self, seed: int, _spawn_key: tuple[int, ...] = ()) -> None:
        seed = int(seed)
        if seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {seed}")
        self.seed = seed
        self._spawn_key = tuple(_spawn_key)
        seq = np.random.SeedSequence(seed, spawn_key=self._spawn_key)
        self._gen = np.random.Generator(np.random.PCG64(seq))
        self._floats = np.empty(0)
        self._fpos = 0
        self._words = np.empty(0, dtype=np.uint64)
        self._wpos = 0

    def substream(self, *labels: object) -> "Stream":
        """Derive the independent stream addressed by ``labels`` under this seed."""
        key = self._spawn_key + tuple(_label_entropy(lab) for lab in labels)
        return Stream(self.seed, key)

    # ------------------------------------------------------------------
    # scalar draws (buffered; ~10x faster than one generator call each)

    def random(self) -> float:
        """Uniform float in [0, 1)."""
        if self._fpos >= self._floats.size:
            self._floats = self._gen.random(_BLOCK)
            self._fpos = 0
        value = self._floats[self._fpos]
        self._fpos += 1
        return float(value)

    def bernoulli(self, p: float) -> int:
        """One {0, 1} draw with success probability ``p``."""
        return 1 if self.random() < p else 0

    def _next_word(self) -> int:
        if self._wpos >= self._words.size:
            self._words = self._gen.integers(
                0, _WORD_MAX, size=_BLOCK, dtype=np.uint64, endpoint=True
            )
            self._wpos = 0
        word = self._words[self._wpos]
        self._wpos += 1
        return int(word)

    def randbelow(self, n: int) -> int:
        """Exact uniform integer in [0, n), unbiased via rejection sampling."""
        if n <= 0:
            raise ValueError(f"randbelow requires n >= 1, got {n}")
        if n == 1:
            return 0
        if n <= 1 << 64:
            # Lemire-style threshold rejection on one 64-bit word.
            threshold = ((1 << 64) // n) * n
            while True:
                word = self._next_word()
                if word < threshold:
                    return word % n
        bits = (n - 1).bit_length()
        nwords = (bits + 63) // 64
        excess = nwords * 64 - bits
        while True:
            value = 0
            for _ in range(nwords):
                value = (value << 64) | self._next_word()
            value >>= excess
            if value < n:
                return value

    def geometric(self, p: float) -> int:
        """Number of failures before the first success, pmf (1-p) * p**n.

        Uses inversion, so exactly one uniform draw is consumed.
        """
        v = 1.0 - self.random()
        if v >= 1.0:
            return 0
        return int(math.log(v) / math.log(p))

    # ------------------------------------------------------------------
    # vector draws

    def random_array(self, size: int) -> np.ndarray:
        return self._gen.random(size)

    def integers_upto(self, highs, size=None) -> np.ndarray:
        """Uniform integers in [0, high] inclusive; ``highs`` may be an array."""
        return self._gen.integers(0, highs, size=size, endpoint=True)

    def geometric_array(self, p: float, size: int) -> np.ndarray:
        """Vector of failure counts before first success, pmf (1-p) * p**n."""
        return self._gen.geometric(1.0 - p, size=size).astype(np.int64) - 1

    def __repr__(self) -> str:  # pragma: no cover
        return f"Stream(seed={self.seed}, path={self._spawn_key})"
