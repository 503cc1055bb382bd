"""Seeded random streams.

Every random draw in the package comes from a PCG64 bit generator whose
seed sequence is ``SeedSequence(seed, spawn_key=(shard,))``.  Work that is
split into shards therefore reproduces bit for bit regardless of how the
shards are scheduled, as long as callers keep the shard numbering fixed.
"""

import numpy as np

SHARD_SIZE = 1 << 16
_DERIVE_TAG = 0x5A617


def stream(seed, shard=0):
    """Return the generator for ``(seed, shard)``."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(shard),))
    return np.random.Generator(np.random.PCG64(ss))


def shard_sizes(n, shard_size=SHARD_SIZE):
    """Split ``n`` draws into fixed-size shards (last one may be short)."""
    full, rest = divmod(int(n), shard_size)
    sizes = [shard_size] * full
    if rest:
        sizes.append(rest)
    return sizes


def derive_seed(seed, *keys):
    """A 63-bit seed for an independent sub-stream labelled by ``keys``."""
    # leading tag keeps these apart from the (seed, shard) streams
    ss = np.random.SeedSequence(int(seed), spawn_key=(_DERIVE_TAG,) + tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0] >> np.uint64(1))
