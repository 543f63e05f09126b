"""Turbine genomes and the variation/selection operators shared by all strategies.

A genome is 16 genes: ten cross-section profile heights, five per-section
vertical shifts, and one rotation-direction flag. Integer genes always stay
inside their ranges; mutation clamps rather than wraps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

PROFILE_LEN = 10
ZSHIFT_LEN = 5
FLAT_LEN = PROFILE_LEN + ZSHIFT_LEN + 1

PROFILE_MIN, PROFILE_MAX = 1, 42
ZSHIFT_MIN, ZSHIFT_MAX = -42, 42


@dataclass(frozen=True)
class Genome:
    """One turbine design: profile heights, z-section shifts, spin direction."""

    profile: tuple[int, ...]
    zshift: tuple[int, ...]
    rotation: bool = False

    def __post_init__(self):
        if len(self.profile) != PROFILE_LEN:
            raise ValueError(f"profile must have {PROFILE_LEN} genes, got {len(self.profile)}")
        if len(self.zshift) != ZSHIFT_LEN:
            raise ValueError(f"zshift must have {ZSHIFT_LEN} genes, got {len(self.zshift)}")
        object.__setattr__(self, "profile", tuple(int(v) for v in self.profile))
        object.__setattr__(self, "zshift", tuple(int(v) for v in self.zshift))
        object.__setattr__(self, "rotation", bool(self.rotation))
        for v in self.profile:
            if not (PROFILE_MIN <= v <= PROFILE_MAX):
                raise ValueError(f"profile gene {v} outside [{PROFILE_MIN}, {PROFILE_MAX}]")
        for v in self.zshift:
            if not (ZSHIFT_MIN <= v <= ZSHIFT_MAX):
                raise ValueError(f"zshift gene {v} outside [{ZSHIFT_MIN}, {ZSHIFT_MAX}]")

    def as_flat(self) -> list[int]:
        """Flat 16-int encoding (rotation as 0/1), used by journals and the API."""
        return [*self.profile, *self.zshift, int(self.rotation)]

    @classmethod
    def from_flat(cls, values: Sequence[int]) -> "Genome":
        values = list(values)
        if len(values) != FLAT_LEN:
            raise ValueError(f"flat genome must have {FLAT_LEN} values, got {len(values)}")
        return cls(
            profile=tuple(int(v) for v in values[:PROFILE_LEN]),
            zshift=tuple(int(v) for v in values[PROFILE_LEN:PROFILE_LEN + ZSHIFT_LEN]),
            rotation=bool(int(values[-1])),
        )

    def flipped(self) -> "Genome":
        return Genome(self.profile, self.zshift, not self.rotation)


@dataclass(frozen=True)
class VariationConfig:
    """Mutation and (vestigial) crossover settings.

    crossover_rate is validated but unused: the operator set is
    mutation-only and the field exists so configs can state that explicitly.
    """

    mutation_rate: float = 0.25
    max_step: int = 10
    crossover_rate: float = 0.0

    def validate(self):
        if not (0.0 <= self.mutation_rate <= 1.0):
            raise ValueError("mutation_rate must be in [0, 1]")
        if not (0.0 <= self.crossover_rate <= 1.0):
            raise ValueError("crossover_rate must be in [0, 1]")
        if self.max_step < 1:
            raise ValueError("max_step must be >= 1")


def random_genome(rng) -> Genome:
    profile = rng.integers(PROFILE_MIN, PROFILE_MAX + 1, PROFILE_LEN)
    zshift = rng.integers(ZSHIFT_MIN, ZSHIFT_MAX + 1, ZSHIFT_LEN)
    rotation = rng.random() < 0.5
    return Genome(tuple(int(v) for v in profile), tuple(int(v) for v in zshift), bool(rotation))


def _nonzero_steps(raw: np.ndarray, max_step: int) -> np.ndarray:
    # raw is uniform over [0, 2*max_step); fold it onto {-max_step..-1, 1..max_step}
    steps = raw - max_step
    steps[steps >= 0] += 1
    return steps


def mutate(parent: Genome, cfg: VariationConfig, rng) -> Genome:
    """Independent per-gene mutation; may return a genome equal to the parent.

    Each integer gene mutates with probability cfg.mutation_rate by a uniform
    nonzero step in [-max_step, +max_step], clamped to the gene's range. The
    rotation flag flips with the same probability.
    """
    values = np.array(parent.profile + parent.zshift, dtype=np.int64)
    lo = np.array([PROFILE_MIN] * PROFILE_LEN + [ZSHIFT_MIN] * ZSHIFT_LEN)
    hi = np.array([PROFILE_MAX] * PROFILE_LEN + [ZSHIFT_MAX] * ZSHIFT_LEN)

    mask = rng.random(values.size) < cfg.mutation_rate
    n = int(mask.sum())
    if n:
        raw = rng.integers(0, 2 * cfg.max_step, n)
        values[mask] = np.clip(values[mask] + _nonzero_steps(raw, cfg.max_step), lo[mask], hi[mask])
    rotation = parent.rotation != (rng.random() < cfg.mutation_rate)
    return Genome(
        tuple(int(v) for v in values[:PROFILE_LEN]),
        tuple(int(v) for v in values[PROFILE_LEN:]),
        bool(rotation),
    )


def mutate_batch(parent: Genome, cfg: VariationConfig, count: int, rng):
    """Vectorized equivalent of `mutate` applied `count` times.

    Returns (profiles, zshifts, rotations) arrays with one row per offspring.
    Row i is distributed exactly like one `mutate` call; the draw sequence
    differs, so batch and loop are separate deterministic paths.
    """
    values = np.tile(np.array(parent.profile + parent.zshift, dtype=np.int64), (count, 1))
    lo = np.array([PROFILE_MIN] * PROFILE_LEN + [ZSHIFT_MIN] * ZSHIFT_LEN)
    hi = np.array([PROFILE_MAX] * PROFILE_LEN + [ZSHIFT_MAX] * ZSHIFT_LEN)

    mask = rng.random(values.shape) < cfg.mutation_rate
    n = int(mask.sum())
    if n:
        raw = rng.integers(0, 2 * cfg.max_step, n)
        stepped = values[mask] + _nonzero_steps(raw, cfg.max_step)
        values[mask] = np.clip(stepped, np.broadcast_to(lo, values.shape)[mask],
                               np.broadcast_to(hi, values.shape)[mask])
    flips = rng.random(count) < cfg.mutation_rate
    rotations = np.full(count, parent.rotation) != flips
    return values[:, :PROFILE_LEN], values[:, PROFILE_LEN:], rotations


def tournament_select(population: Sequence[tuple[object, float]], k: int, mode: str, rng) -> int:
    """Tournament over (item, fitness) pairs; returns the winning index.

    Samples k distinct indices uniformly without replacement and returns the
    best ("best" mode) or worst ("worst" mode) fitness among them. Ties go to
    the earliest-sampled candidate, so with all-equal fitnesses every member
    is equally likely to win.
    """
    if mode not in ("best", "worst"):
        raise ValueError(f"mode must be 'best' or 'worst', got {mode!r}")
    if not (1 <= k <= len(population)):
        raise ValueError(f"tournament size {k} invalid for population of {len(population)}")
    order = rng.permutation(len(population))[:k]
    winner = int(order[0])
    for idx in order[1:]:
        f, w = population[int(idx)][1], population[winner][1]
        if (mode == "best" and f > w) or (mode == "worst" and f < w):
            winner = int(idx)
    return winner


def roulette_select(weights: Sequence[float], rng) -> int:
    """Fitness-proportional pick; uniform fallback when all weights are zero.

    Weights must be non-negative. Draw order: one uniform in [0, 1) either way.
    """
    w = np.asarray(weights, dtype=float)
    if w.size == 0:
        raise ValueError("roulette over empty weights")
    if np.any(w < 0):
        raise ValueError("roulette weights must be non-negative")
    total = float(w.sum())
    u = float(rng.random())
    if total <= 0.0:
        return min(int(u * w.size), w.size - 1)
    return int(np.searchsorted(np.cumsum(w), u * total, side="right").clip(0, w.size - 1))
