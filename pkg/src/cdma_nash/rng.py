"""Deterministic substreams for reproducible (and parallel) Monte-Carlo runs.

Streams are counter-based (Philox) and addressed by an integer key path, so
``substream(seed, *key)`` names the same stream no matter which worker asks
for it or in what order.  The harness derives one stream per (trial, user)
for channel draws plus dedicated lanes for spreading codes and decoding
orders, which keeps trial subsets stable when the trial count changes.
"""
from __future__ import annotations

import numpy as np

SPREADING_LANE = 1_000_000
ORDERING_LANE = 1_000_001


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator addressed by the given key path."""
    seq = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


def channel_stream(seed: int, trial: int, user: int) -> np.random.Generator:
    return substream(seed, trial, user)


def spreading_stream(seed: int, trial: int) -> np.random.Generator:
    return substream(seed, trial, SPREADING_LANE)


def ordering_stream(seed: int, trial: int) -> np.random.Generator:
    return substream(seed, trial, ORDERING_LANE)
