"""Counter-based random streams (Philox4x32-10) evaluated over numpy arrays.

Every variate is a pure function of ``(seed, replica, step, tag, slot)``, so a
replica's path does not depend on which other replicas share its batch or on
how replicas are split across workers.
"""

from __future__ import annotations

import numba as nb
import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_ROUNDS = 10

# draw tags; large-jump rejection attempts use TAG_LARGE + attempt
TAG_STEP = 0
TAG_CLOCK = 1
TAG_PILOT = 2
TAG_LARGE = 16


def philox4x32(counter, key):
    """Philox4x32-10 block function.

    ``counter`` is a sequence of four uint32-valued arrays (broadcastable),
    ``key`` a pair of uint32 scalars. Returns four uint64 arrays holding the
    32-bit output words.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & _MASK32 for c in counter)
    k0 = np.uint64(int(key[0]) & 0xFFFFFFFF)
    k1 = np.uint64(int(key[1]) & 0xFFFFFFFF)
    for r in range(_ROUNDS):
        if r:
            k0 = (k0 + _W0) & _MASK32
            k1 = (k1 + _W1) & _MASK32
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (
            (p1 >> _SHIFT32) ^ c1 ^ k0,
            p1 & _MASK32,
            (p0 >> _SHIFT32) ^ c3 ^ k1,
            p0 & _MASK32,
        )
    return c0, c1, c2, c3


def _to_unit(hi, lo):
    # 53-bit mantissa from two words, shifted to the open interval (0, 1)
    bits = ((hi >> np.uint64(5)) << np.uint64(26)) | (lo >> np.uint64(6))
    return (bits.astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


@nb.njit(cache=True)
def _uniform_block(replicas, steps, tag, count, k0, k1):
    m = replicas.size
    out = np.empty((m, count))
    nblocks = (count + 1) // 2
    mask = np.uint64(0xFFFFFFFF)
    s32 = np.uint64(32)
    scale = 1.0 / 9007199254740992.0
    for i in range(m):
        for b in range(nblocks):
            c0 = replicas[i] & mask
            c1 = steps[i] & mask
            c2 = np.uint64(tag) & mask
            c3 = np.uint64(b)
            a0 = k0
            a1 = k1
            for r in range(10):
                if r > 0:
                    a0 = (a0 + np.uint64(0x9E3779B9)) & mask
                    a1 = (a1 + np.uint64(0xBB67AE85)) & mask
                p0 = np.uint64(0xD2511F53) * c0
                p1 = np.uint64(0xCD9E8D57) * c2
                n0 = (p1 >> s32) ^ c1 ^ a0
                n1 = p1 & mask
                n2 = (p0 >> s32) ^ c3 ^ a1
                n3 = p0 & mask
                c0 = n0
                c1 = n1
                c2 = n2
                c3 = n3
            j = 2 * b
            bits = ((c0 >> np.uint64(5)) << np.uint64(26)) | (c1 >> np.uint64(6))
            out[i, j] = (np.float64(bits) + 0.5) * scale
            if j + 1 < count:
                bits = ((c2 >> np.uint64(5)) << np.uint64(26)) | (c3 >> np.uint64(6))
                out[i, j + 1] = (np.float64(bits) + 0.5) * scale
    return out


class CounterRNG:
    """Stateless uniform source keyed by a 64-bit master seed."""

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must fit in 64 bits, got {seed}")
        self.seed = seed
        self._key = (seed & 0xFFFFFFFF, seed >> 32)

    def __repr__(self) -> str:
        return f"CounterRNG(seed={self.seed})"

    def uniforms(self, replicas, step, tag: int, count: int) -> np.ndarray:
        """Return an array of shape ``(len(replicas), count)`` of U(0,1) draws.

        ``step`` may be a scalar or an array aligned with ``replicas``.
        """
        replicas = np.ascontiguousarray(replicas, dtype=np.uint64).reshape(-1)
        m = replicas.size
        steps = np.ascontiguousarray(np.broadcast_to(np.asarray(step, dtype=np.uint64), (m,)))
        return _uniform_block(
            replicas, steps, np.uint64(tag), count, np.uint64(self._key[0]), np.uint64(self._key[1])
        )

    def uniforms_reference(self, replicas, step, tag: int, count: int) -> np.ndarray:
        """Pure-numpy evaluation of :meth:`uniforms` (slower; used as a cross-check)."""
        replicas = np.asarray(replicas, dtype=np.uint64).reshape(-1)
        m = replicas.size
        nblocks = (count + 1) // 2
        step = np.broadcast_to(np.asarray(step, dtype=np.uint64), (m,))
        rep = np.repeat(replicas, nblocks)
        stp = np.repeat(step, nblocks)
        blk = np.tile(np.arange(nblocks, dtype=np.uint64), m)
        tg = np.full(m * nblocks, tag, dtype=np.uint64)
        w0, w1, w2, w3 = philox4x32((rep, stp, tg, blk), self._key)
        out = np.empty((m * nblocks, 2))
        out[:, 0] = _to_unit(w0, w1)
        out[:, 1] = _to_unit(w2, w3)
        return out.reshape(m, 2 * nblocks)[:, :count]

    def generator(self, replica: int = 0, tag: int = TAG_PILOT) -> np.random.Generator:
        """A conventional numpy Generator for one replica (Philox, keyed by seed)."""
        key = (self.seed << 64) | ((int(tag) & 0xFFFFFFFF) << 32) | (int(replica) & 0xFFFFFFFF)
        return np.random.Generator(np.random.Philox(key=key))


def normals_from_uniforms(u: np.ndarray, count: int) -> np.ndarray:
    """Box-Muller: consume ``2*ceil(count/2)`` uniform columns, return ``count`` normals."""
    pairs = (count + 1) // 2
    u1 = u[:, 0 : 2 * pairs : 2]
    u2 = u[:, 1 : 2 * pairs : 2]
    rad = np.sqrt(-2.0 * np.log(u1))
    ang = 2.0 * np.pi * u2
    z = np.empty((u.shape[0], 2 * pairs))
    z[:, 0::2] = rad * np.cos(ang)
    z[:, 1::2] = rad * np.sin(ang)
    return z[:, :count]
