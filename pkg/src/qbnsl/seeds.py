"""Seed fan-out: every random stream is keyed by an integer path.

A seed is an int or a tuple of ints. Children extend the path, e.g. the
master seed M fans out to (M, cell, restart) for experiment cells and to
(run_seed..., 1, k) for the k-th objective evaluation inside a run. Streams
never share a path, so results are reproducible bit for bit.
"""

from __future__ import annotations

import numpy as np


def entropy_tuple(seed) -> tuple[int, ...]:
    if isinstance(seed, (int, np.integer)):
        if seed < 0:
            raise ValueError("seeds must be nonnegative")
        return (int(seed),)
    out = tuple(int(s) for s in seed)
    if not out or any(s < 0 for s in out):
        raise ValueError("seed path must be nonempty and nonnegative")
    return out


def child(seed, *path: int) -> tuple[int, ...]:
    return entropy_tuple(seed) + tuple(int(p) for p in path)


def generator(seed) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy_tuple(seed)))
