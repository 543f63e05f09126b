"""Named random streams with draw accounting.

Every stochastic decision in a run is attributed to a named stream so that
independent concerns (variation, partner choice, surrogate training, noise)
never perturb each other's sequences. Streams are derived from one master
seed via SeedSequence spawn keys, and each wrapper counts its calls so the
totals can be journaled as integrity checkpoints.
"""

from __future__ import annotations

import numpy as np

# Stable spawn-key assignment per stream name. Order must never change:
# it defines the derivation of every stream from the master seed.
STREAM_NAMES = (
    "init",             # initial population genomes
    "variation",        # mutation draws
    "selection",        # tournament sampling and candidate picks
    "partner",          # partner choices (init partners, roulette)
    "surrogate-init",   # MLP weight initialization
    "surrogate-shuffle",  # MLP epoch ordering
    "noise",            # synthetic measurement noise
)


class Stream:
    """A numpy Generator wrapper that counts calls."""

    def __init__(self, seed_seq: np.random.SeedSequence):
        self._gen = np.random.Generator(np.random.PCG64(seed_seq))
        self.calls = 0

    def random(self, size=None):
        self.calls += 1
        return self._gen.random(size)

    def integers(self, low, high, size=None):
        """Uniform integers in [low, high), matching numpy's half-open default."""
        self.calls += 1
        return self._gen.integers(low, high, size=size)

    def uniform(self, low, high, size=None):
        self.calls += 1
        return self._gen.uniform(low, high, size)

    def normal(self, loc, scale, size=None):
        self.calls += 1
        return self._gen.normal(loc, scale, size)

    def permutation(self, n: int):
        self.calls += 1
        return self._gen.permutation(n)


def make_stream(master_seed: int, name: str) -> Stream:
    if name not in STREAM_NAMES:
        raise ValueError(f"unknown stream name: {name!r}")
    key = STREAM_NAMES.index(name)
    return Stream(np.random.SeedSequence(entropy=master_seed, spawn_key=(key,)))


def make_streams(master_seed: int) -> dict[str, Stream]:
    """All engine-side streams for one run (noise is owned by the evaluator)."""
    return {name: make_stream(master_seed, name) for name in STREAM_NAMES if name != "noise"}
