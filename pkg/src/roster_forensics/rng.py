"""Counter-derived random substreams.

Every stochastic routine draws from ``substream(seed, tag, block)``: the
master seed, a stream tag (event placement, selection, ...) and a block
counter fully determine the generator. Replicates are processed in blocks of
``BLOCK`` so the partitioning never depends on the number of worker threads.
"""

from __future__ import annotations

import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

BLOCK = 2048
SEED_ENV = "ROSTER_FORENSICS_SEED"

T = TypeVar("T")

# fixed stream tags; changing one changes every seeded result
STREAM_EVENTS = "events"
STREAM_SELECTION = "selection"
STREAM_HUNT = "hunt"
STREAM_DEATHS = "deaths"
STREAM_REGRESSION = "regression"
STREAM_COHORT = "cohort"


def _tag_key(tag: str) -> int:
    return zlib.crc32(tag.encode("utf-8"))


def substream(seed: int, tag: str, counter: int) -> np.random.Generator:
    """Generator for block ``counter`` of stream ``tag`` under master ``seed``."""
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(_tag_key(tag), counter))
    return np.random.Generator(np.random.Philox(ss))


def blocks(replicates: int, block: int = BLOCK) -> list[tuple[int, int, int]]:
    """(block index, first replicate, size) triples covering ``replicates``."""
    out = []
    for k, start in enumerate(range(0, replicates, block)):
        out.append((k, start, min(block, replicates - start)))
    return out


def map_blocks(fn: Callable[[int, int, int], T], replicates: int,
               threads: int = 1) -> list[T]:
    """Apply ``fn(block_index, start, size)`` over all blocks, results in block order."""
    spec = blocks(replicates)
    if threads <= 1 or len(spec) <= 1:
        return [fn(*b) for b in spec]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda b: fn(*b), spec))


def resolve_seed(seed: int | None) -> int | None:
    """Explicit seed, else the environment fallback, else None."""
    if seed is not None:
        return int(seed)
    env = os.environ.get(SEED_ENV)
    if env is None or env.strip() == "":
        return None
    return int(env)


def concat(parts: Sequence[np.ndarray]) -> np.ndarray:
    if not parts:
        return np.zeros(0, dtype=np.int64)
    return np.concatenate(parts)
