"""Deterministic seed splitting.

Every Monte-Carlo trial, training cell or phase-transition instance draws from
its own stream ``derive_rng(seed, key1, key2, ...)``.  The stream depends only
on the root seed and the integer keys, so results do not change with the
order in which cells run or with the number of worker processes.
"""
import numpy as np


def derive_rng(seed, *keys):
    """Return a Generator for the stream identified by ``(seed, *keys)``.

    Keys must be non-negative integers (trial index, cell index, ...).
    """
    entropy = [int(seed)] + [int(k) for k in keys]
    if any(e < 0 for e in entropy):
        raise ValueError("seed and stream keys must be non-negative integers")
    return np.random.default_rng(np.random.SeedSequence(entropy))


def derive_seed(seed, *keys):
    """Integer seed for APIs that take one, drawn from the ``(seed, *keys)`` stream."""
    return int(derive_rng(seed, *keys).integers(0, 2**31 - 1))
