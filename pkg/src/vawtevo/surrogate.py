"""Fitness surrogates: a small sigmoid MLP trained by online backprop, plus
an ordinary-least-squares baseline.

Training atoms are (genome, partner, measured fitness, fabrication index)
records. Genomes are normalized gene-wise onto [0, 1]; targets are divided
by the largest fitness in the training window so the sigmoid output can
reach them. Models are cheap and are always retrained from records, never
persisted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .genome import (
    Genome,
    PROFILE_LEN,
    PROFILE_MAX,
    PROFILE_MIN,
    ZSHIFT_LEN,
    ZSHIFT_MAX,
    ZSHIFT_MIN,
)

INPUT_DIM = PROFILE_LEN + ZSHIFT_LEN + 1


@dataclass(frozen=True)
class EvaluationRecord:
    """One measurement: the genome, who it was paired with, the combined
    rotational speed, and the fabrication index it was measured at."""

    genome: Genome
    partner: Genome
    fitness: float
    index: int


@dataclass(frozen=True)
class MlpConfig:
    learning_rate: float = 0.3
    initial_bias: float = 0.0
    momentum: float = 0.0
    hidden_units: int = 10
    epochs: int = 1000
    window: int | None = None      # None trains on all records
    weight_init_seed: int = 0

    def validate(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.hidden_units < 1:
            raise ValueError("hidden_units must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not (0.0 <= self.momentum < 1.0):
            raise ValueError("momentum must be in [0, 1)")
        if self.window is not None and self.window < 1:
            raise ValueError("window must be >= 1 when set")


def encode(genome: Genome) -> np.ndarray:
    """16 inputs in [0, 1]: profile, z-shifts, rotation flag."""
    profile = (np.array(genome.profile, dtype=np.float64) - PROFILE_MIN) / (PROFILE_MAX - PROFILE_MIN)
    zshift = (np.array(genome.zshift, dtype=np.float64) - ZSHIFT_MIN) / (ZSHIFT_MAX - ZSHIFT_MIN)
    return np.concatenate([profile, zshift, [1.0 if genome.rotation else 0.0]])


def encode_batch(profiles: np.ndarray, zshifts: np.ndarray, rotations: np.ndarray) -> np.ndarray:
    p = (profiles.astype(np.float64) - PROFILE_MIN) / (PROFILE_MAX - PROFILE_MIN)
    z = (zshifts.astype(np.float64) - ZSHIFT_MIN) / (ZSHIFT_MAX - ZSHIFT_MIN)
    r = rotations.astype(np.float64)[:, None]
    return np.concatenate([p, z, r], axis=1)


def training_window(records: Sequence[EvaluationRecord], window: int | None) -> list[EvaluationRecord]:
    """The most recent `window` records; all of them when window is None or
    larger than what is available (saturation)."""
    records = list(records)
    if window is None or window >= len(records):
        return records
    return records[-window:]


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


@dataclass
class MlpModel:
    w1: np.ndarray        # (16, hidden)
    b1: np.ndarray        # (hidden,)
    w2: np.ndarray        # (hidden,)
    b2: float
    fitness_scale: float

    def predict_batch(self, inputs: np.ndarray) -> np.ndarray:
        hidden = _sigmoid(inputs @ self.w1 + self.b1)
        return _sigmoid(hidden @ self.w2 + self.b2) * self.fitness_scale

    def predict(self, genome: Genome) -> float:
        return float(self.predict_batch(encode(genome)[None, :])[0])


def _default_rngs(seed: int):
    root = np.random.SeedSequence(entropy=seed)
    init_ss, shuffle_ss = root.spawn(2)
    return np.random.default_rng(init_ss), np.random.default_rng(shuffle_ss)


def train(records: Sequence[EvaluationRecord], cfg: MlpConfig,
          init_rng=None, shuffle_rng=None) -> MlpModel:
    """Online backprop, one uniformly drawn sample per epoch.

    Samples are drawn without replacement, reshuffling when the set is
    exhausted. Weights are freshly initialized uniform in [-0.5, 0.5] on
    every call (biases start at cfg.initial_bias), so the model never
    carries state between trainings.
    """
    cfg.validate()
    window = training_window(records, cfg.window)
    if not window:
        raise ValueError("cannot train on zero records")
    if init_rng is None or shuffle_rng is None:
        default_init, default_shuffle = _default_rngs(cfg.weight_init_seed)
        init_rng = init_rng or default_init
        shuffle_rng = shuffle_rng or default_shuffle

    x = np.stack([encode(r.genome) for r in window])
    y = np.array([r.fitness for r in window], dtype=np.float64)
    scale = float(y.max())
    if scale <= 0.0:
        scale = 1.0
    targets = y / scale

    hidden = cfg.hidden_units
    w1 = init_rng.uniform(-0.5, 0.5, (INPUT_DIM, hidden))
    b1 = np.full(hidden, cfg.initial_bias, dtype=np.float64)
    w2 = init_rng.uniform(-0.5, 0.5, hidden)
    b2 = float(cfg.initial_bias)

    vw1 = np.zeros_like(w1)
    vb1 = np.zeros_like(b1)
    vw2 = np.zeros_like(w2)
    vb2 = 0.0

    beta = cfg.learning_rate
    mu = cfg.momentum
    n = len(window)
    order = None
    cursor = n  # force a shuffle on the first epoch
    for _ in range(cfg.epochs):
        if cursor >= n:
            order = shuffle_rng.permutation(n)
            cursor = 0
        i = int(order[cursor])
        cursor += 1

        xi, ti = x[i], targets[i]
        h = _sigmoid(xi @ w1 + b1)
        o = _sigmoid(float(h @ w2) + b2)

        delta_o = (o - ti) * o * (1.0 - o)
        delta_h = delta_o * w2 * h * (1.0 - h)

        vw2 = mu * vw2 - beta * delta_o * h
        vb2 = mu * vb2 - beta * delta_o
        vw1 = mu * vw1 - beta * np.outer(xi, delta_h)
        vb1 = mu * vb1 - beta * delta_h
        w2 = w2 + vw2
        b2 = b2 + vb2
        w1 = w1 + vw1
        b1 = b1 + vb1

    return MlpModel(w1=w1, b1=b1, w2=w2, b2=b2, fitness_scale=scale)


@dataclass
class LinearModel:
    """OLS on centered inputs; collapses to the mean on degenerate data."""

    x_mean: np.ndarray
    y_mean: float
    beta: np.ndarray

    def predict_batch(self, inputs: np.ndarray) -> np.ndarray:
        return self.y_mean + (inputs - self.x_mean) @ self.beta

    def predict(self, genome: Genome) -> float:
        return float(self.predict_batch(encode(genome)[None, :])[0])


def linear_baseline_train(records: Sequence[EvaluationRecord],
                          window: int | None = None) -> LinearModel:
    subset = training_window(records, window)
    if not subset:
        raise ValueError("cannot fit on zero records")
    x = np.stack([encode(r.genome) for r in subset])
    y = np.array([r.fitness for r in subset], dtype=np.float64)
    x_mean = x.mean(axis=0)
    y_mean = float(y.mean())
    xc = x - x_mean
    a = xc.T @ xc
    b = xc.T @ (y - y_mean)
    try:
        beta = np.linalg.solve(a, b)
        if not np.all(np.isfinite(beta)):
            raise np.linalg.LinAlgError("non-finite solution")
    except np.linalg.LinAlgError:
        # singular normal system: tiny ridge keeps the fit defined
        beta = np.linalg.solve(a + 1e-8 * np.eye(a.shape[0]), b)
    return LinearModel(x_mean=x_mean, y_mean=y_mean, beta=beta)
