"""Counter-based random streams shared by every sampler in the package.

The generator is the Philox-4x32 block cipher run for 10 rounds.  A draw is
addressed, never stated: the 128-bit counter is laid out as

    (block, item, chunk, domain)

where ``item`` is the sample or path index inside a chunk, ``chunk`` indexes
fixed-size batches of work, ``domain`` separates independent uses (series
sampler, occupation sampler, ...), and ``block`` counts draw blocks consumed
by one item.  The 64-bit user seed forms the cipher key.  Because a draw
depends only on its address, results are independent of thread count and of
evaluation order, and the compiled and pure-numpy backends consume bitwise
identical integer streams.

Each block yields four 32-bit words, combined into two 53-bit uniforms, which
a Box-Muller step turns into one planar standard Gaussian when normals are
requested.
"""

import numpy as np

PHILOX_M0 = np.uint64(0xD2511F53)
PHILOX_M1 = np.uint64(0xCD9E8D57)
PHILOX_W0 = 0x9E3779B9
PHILOX_W1 = 0xBB67AE85
PHILOX_ROUNDS = 10

# domain tags; values are arbitrary but frozen (changing one changes streams)
DOMAIN_SERIES = 1
DOMAIN_OCCUPATION = 2
DOMAIN_MOTION = 3
DOMAIN_KERNEL_SAMPLER = 4
DOMAIN_RESTRICTED = 5

TWO_M53 = 2.0 ** -53
TWO_PI = 2.0 * np.pi


def philox4x32(c0, c1, c2, c3, k0, k1):
    """One Philox-4x32-10 block per counter lane.

    Counters are uint32 arrays of a common shape, the key is a pair of
    Python ints.  Returns the four output words as uint32 arrays.
    """
    c0 = np.asarray(c0, dtype=np.uint32)
    c1 = np.asarray(c1, dtype=np.uint32)
    c2 = np.asarray(c2, dtype=np.uint32)
    c3 = np.asarray(c3, dtype=np.uint32)
    c0, c1, c2, c3 = np.broadcast_arrays(c0, c1, c2, c3)
    k0 = int(k0) & 0xFFFFFFFF
    k1 = int(k1) & 0xFFFFFFFF
    for _ in range(PHILOX_ROUNDS):
        p0 = c0.astype(np.uint64) * PHILOX_M0
        p1 = c2.astype(np.uint64) * PHILOX_M1
        hi0 = (p0 >> np.uint64(32)).astype(np.uint32)
        lo0 = p0.astype(np.uint32)
        hi1 = (p1 >> np.uint64(32)).astype(np.uint32)
        lo1 = p1.astype(np.uint32)
        c0 = hi1 ^ c1 ^ np.uint32(k0)
        c1 = lo1
        c2 = hi0 ^ c3 ^ np.uint32(k1)
        c3 = lo0
        k0 = (k0 + PHILOX_W0) & 0xFFFFFFFF
        k1 = (k1 + PHILOX_W1) & 0xFFFFFFFF
    return c0, c1, c2, c3


def _key(seed):
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    return seed & 0xFFFFFFFF, seed >> 32


def block_uniforms(seed, domain, chunk, items, blocks):
    """Two uniforms per addressed block.

    The first lies in (0, 1] (safe under log), the second in [0, 1).
    ``items`` and ``blocks`` broadcast against each other.
    """
    k0, k1 = _key(seed)
    x0, x1, x2, x3 = philox4x32(
        blocks, items, np.uint32(chunk), np.uint32(domain), k0, k1
    )
    a = (x0.astype(np.uint64) << np.uint64(32)) | x1.astype(np.uint64)
    b = (x2.astype(np.uint64) << np.uint64(32)) | x3.astype(np.uint64)
    u_pos = ((a >> np.uint64(11)) + np.uint64(1)).astype(np.float64) * TWO_M53
    u_half = (b >> np.uint64(11)).astype(np.float64) * TWO_M53
    return u_pos, u_half


def block_normals(seed, domain, chunk, items, blocks):
    """One standard planar Gaussian per addressed block (Box-Muller)."""
    u_pos, u_half = block_uniforms(seed, domain, chunk, items, blocks)
    r = np.sqrt(-2.0 * np.log(u_pos))
    ang = TWO_PI * u_half
    return r * np.cos(ang), r * np.sin(ang)


class DrawStream:
    """Sequential handle over one (seed, domain, chunk, item) stream.

    Keeps a cursor over block indices so ad-hoc consumers (the reference
    kernel samplers, path simulation) can pull draws without bookkeeping.
    """

    def __init__(self, seed, domain=DOMAIN_KERNEL_SAMPLER, chunk=0, item=0):
        self.seed = int(seed)
        self.domain = int(domain)
        self.chunk = int(chunk)
        self.item = int(item)
        self._block = 0

    def _take(self, count):
        blocks = np.arange(self._block, self._block + count, dtype=np.uint32)
        self._block += count
        return blocks

    def normal_points(self, count):
        """``count`` iid standard Gaussian points in the plane, shape (count, 2)."""
        blocks = self._take(count)
        gx, gy = block_normals(
            self.seed, self.domain, self.chunk, np.uint32(self.item), blocks
        )
        return np.column_stack([gx, gy])

    def uniform_pairs(self, count):
        """(count, 2) array; column 0 in (0, 1], column 1 in [0, 1)."""
        blocks = self._take(count)
        u_pos, u_half = block_uniforms(
            self.seed, self.domain, self.chunk, np.uint32(self.item), blocks
        )
        return np.column_stack([u_pos, u_half])
