"""Counter-based random streams (Philox4x32-10).

A stream is identified by a 64-bit seed (the Philox key) and a path of at
most two 32-bit indices. Block ``j`` of the stream at path ``(i, k)`` is
the Philox bijection applied to the counter ``(j, i, k, depth)``. Distinct
paths therefore never share a counter, and any substream can be produced
without generating its siblings. This makes Monte Carlo output independent
of the order or grouping in which trials are evaluated.

Normals are produced by the inverse normal CDF of 53-bit uniforms, so a
stream consumes exactly one uniform per normal on every platform.
"""

from __future__ import annotations

import numpy as np
from scipy import special

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK = np.uint64(0xFFFFFFFF)
_SHIFT = np.uint64(32)
_ROUNDS = 10
_MAX_DEPTH = 2


def philox4x32(counter, key):
    """Philox4x32-10 on broadcastable arrays of 32-bit words.

    ``counter`` is a 4-tuple and ``key`` a 2-tuple of integer arrays; returns
    four uint64 arrays holding 32-bit outputs.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & _MASK for c in counter)
    k0, k1 = (np.asarray(k, dtype=np.uint64) & _MASK for k in key)
    for _ in range(_ROUNDS):
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = ((p1 >> _SHIFT) ^ c1 ^ k0, p1 & _MASK,
                          (p0 >> _SHIFT) ^ c3 ^ k1, p0 & _MASK)
        k0 = (k0 + _W0) & _MASK
        k1 = (k1 + _W1) & _MASK
    return c0, c1, c2, c3


def _to_unit(hi, lo):
    # 53 random bits, offset by half an ulp so that 0 and 1 never occur
    bits = (hi >> np.uint64(5)) * np.uint64(1 << 26) + (lo >> np.uint64(6))
    return (bits.astype(np.float64) + 0.5) * 2.0 ** -53


class CounterStream:
    """A reproducible, splittable stream of uniforms and normals.

    Stateful: successive draws advance the block counter. A single instance
    must not be shared between concurrent consumers; split instead.
    """

    def __init__(self, seed: int, path: tuple[int, ...] = ()):
        seed = int(seed)
        if not 0 <= seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if len(path) > _MAX_DEPTH:
            raise ValueError(f"streams split at most {_MAX_DEPTH} levels deep")
        if any(not 0 <= int(i) < 2 ** 32 for i in path):
            raise ValueError("split indices must be 32-bit unsigned integers")
        self.seed = seed
        self.path = tuple(int(i) for i in path)
        self._block = 0
        self._spare: np.ndarray | None = None

    def __repr__(self):
        return f"CounterStream(seed={self.seed}, path={self.path})"

    @property
    def key(self) -> tuple[int, int]:
        return self.seed & 0xFFFFFFFF, self.seed >> 32

    def _counter_words(self):
        words = list(self.path) + [0] * (_MAX_DEPTH - len(self.path))
        return words, len(self.path)

    def split(self, index: int) -> "CounterStream":
        """Independent child stream; the same index always yields the same child."""
        return CounterStream(self.seed, self.path + (int(index),))

    def uniforms(self, count: int) -> np.ndarray:
        """Next ``count`` uniforms in (0, 1)."""
        count = int(count)
        parts = []
        if self._spare is not None and count > 0:
            parts.append(self._spare)
            self._spare = None
        have = sum(len(a) for a in parts)
        need = count - have
        if need > 0:
            nblocks = (need + 1) // 2
            words, depth = self._counter_words()
            j = np.arange(self._block, self._block + nblocks, dtype=np.uint64)
            r = philox4x32((j, words[0], words[1], depth), self.key)
            u = np.empty(2 * nblocks)
            u[0::2] = _to_unit(r[0], r[1])
            u[1::2] = _to_unit(r[2], r[3])
            self._block += nblocks
            if u.size > need:
                self._spare = u[need:]
                u = u[:need]
            parts.append(u)
        return np.concatenate(parts) if parts else np.empty(0)

    def normals(self, count: int) -> np.ndarray:
        """Next ``count`` standard normals (inverse-CDF transform)."""
        return special.ndtri(self.uniforms(count))

    def child_normals(self, indices, count: int) -> np.ndarray:
        """Row r equals ``self.split(indices[r]).normals(count)``.

        Generates all rows in one vectorized Philox pass.
        """
        if len(self.path) >= _MAX_DEPTH:
            raise ValueError(f"streams split at most {_MAX_DEPTH} levels deep")
        idx = np.asarray(indices, dtype=np.uint64)
        nblocks = (int(count) + 1) // 2
        words = list(self.path) + [0] * (_MAX_DEPTH - len(self.path))
        depth = len(self.path) + 1
        j = np.arange(nblocks, dtype=np.uint64)[None, :]
        i = idx[:, None]
        if len(self.path) == 0:
            ctr = (j, i, np.uint64(0), depth)
        else:
            ctr = (j, np.uint64(words[0]), i, depth)
        r = philox4x32(ctr, self.key)
        u = np.empty((idx.size, 2 * nblocks))
        u[:, 0::2] = _to_unit(r[0], r[1])
        u[:, 1::2] = _to_unit(r[2], r[3])
        return special.ndtri(u[:, :count])
