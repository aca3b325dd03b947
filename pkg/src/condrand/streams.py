"""Reproducible random streams.

A single 64-bit seed is expanded into independent named substreams
through ``numpy.random.SeedSequence`` spawn keys.  Substream identity
depends only on the seed and the integer path (e.g. stage index,
replicate index), never on execution order, so results are bit-identical
whether replicates run serially or in parallel.
"""

from __future__ import annotations

import numpy as np


def substream(seed: int, *path: int) -> np.random.Generator:
    """Return the generator for substream ``path`` of ``seed``.

    Args:
        seed: Root seed shared by the whole run.
        path: Integer coordinates naming the substream, e.g.
            ``substream(seed, stage)`` or ``substream(seed, stage, rep)``.

    Returns:
        A freshly constructed ``numpy.random.Generator``.
    """
    key = tuple(int(x) for x in path)
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=key))


def as_generator(rng: np.random.Generator | int | None) -> np.random.Generator:
    """Coerce ``rng`` (generator, seed, or None) to a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
