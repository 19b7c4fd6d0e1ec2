"""Counter-based random streams addressable by shot index.

Shots are grouped in fixed blocks of ``BLOCK`` runs. Block ``k`` of a stream
draws from a Philox generator keyed by ``(seed, stream, k)``, so the numbers
used by any shot depend only on its index. Generating ``[0, n)`` in one pass
or in arbitrary shards therefore gives identical results.
"""
from __future__ import annotations

import zlib

import numpy as np

BLOCK = 1 << 16
SEED_MASK = (1 << 64) - 1


def check_seed(seed: int) -> int:
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    seed = int(seed)
    if not 0 <= seed <= SEED_MASK:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    return seed


def stream_id(name: str) -> int:
    return zlib.crc32(name.encode("utf-8"))


def block_generator(seed: int, stream: str, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=check_seed(seed), spawn_key=(stream_id(stream), block))
    return np.random.Generator(np.random.Philox(ss))


def uniforms(seed: int, stream: str, start: int, stop: int, width: int) -> np.ndarray:
    """Uniform [0,1) draws of shape ``(stop - start, width)`` for shots start..stop-1."""
    if not 0 <= start <= stop:
        raise ValueError(f"invalid shot range [{start}, {stop})")
    out = np.empty((stop - start, width))
    first, last = start // BLOCK, (stop - 1) // BLOCK if stop > start else start // BLOCK - 1
    for k in range(first, last + 1):
        block = block_generator(seed, stream, k).random((BLOCK, width))
        lo, hi = max(start, k * BLOCK), min(stop, (k + 1) * BLOCK)
        out[lo - start:hi - start] = block[lo - k * BLOCK:hi - k * BLOCK]
    return out


def shard_bounds(shots: int, shards: int) -> list[tuple[int, int]]:
    """Split ``[0, shots)`` into ``shards`` contiguous ranges."""
    if shards < 1:
        raise ValueError("shards must be >= 1")
    edges = np.linspace(0, shots, shards + 1).round().astype(int)
    return [(int(lo), int(hi)) for lo, hi in zip(edges[:-1], edges[1:])]


def sample_cells(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF sampling; ``cdf[..., k]`` is the cumulative probability through cell k.

    The last column must be exactly 1. Zero-probability cells are never returned.
    """
    return np.sum(u[..., None] >= cdf[..., :-1], axis=-1)


def cumulative(p: np.ndarray) -> np.ndarray:
    c = np.cumsum(p, axis=-1)
    return c / c[..., -1:]
