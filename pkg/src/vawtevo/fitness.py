"""Fitness backends.

Both backends score a *pairing*: two designs spinning together on the test
rig, one per physical position. The synthetic backend is a desk-scale
landscape with separable quality per position, a cross-position coupling
term, a co-rotation bonus, and Gaussian measurement noise from its own
stream. The hardware backend writes printable STL files, publishes a
pending request, and blocks until an operator submits the measured
combined rotational speed (rpm).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .genome import Genome, PROFILE_MAX, PROFILE_MIN
from . import mesh as meshmod
from . import phenotype

SPECIES = ("A", "B")

# Default per-position target profiles for the synthetic landscape: one
# ascending ramp, shared by both positions so the coupling term and the
# separable terms pull the same way.
DEFAULT_TARGET = (4, 8, 12, 17, 21, 25, 29, 33, 38, 42)


class RunSuspended(Exception):
    """Raised when a blocked hardware evaluation is aborted; the journal is
    durable at this point, so the run can be resumed later."""


@dataclass(frozen=True)
class EvaluationRequest:
    """One fabrication: which genome is being measured, with which partner,
    and which physical position each occupies."""

    run_id: str
    fab_index: int
    species: str               # position whose record this measurement is
    genome: Genome             # the design under evaluation
    partner: Genome
    position: str              # physical position of `genome` ("A" or "B")
    role: str = "steady"       # init | init-extra | steady | extra | cross

    def position_a(self) -> Genome:
        return self.genome if self.position == "A" else self.partner

    def position_b(self) -> Genome:
        return self.genome if self.position == "B" else self.partner

    def arrangement(self) -> dict:
        spin = {False: "clockwise", True: "counter-clockwise"}
        a, b = self.position_a(), self.position_b()
        return {
            "position_a": {"genome": a.as_flat(), "spin": spin[a.rotation]},
            "position_b": {"genome": b.as_flat(), "spin": spin[b.rotation]},
        }

    def arrangement_text(self) -> str:
        arr = self.arrangement()
        return (
            f"Mount position A (left pin): design spinning {arr['position_a']['spin']}. "
            f"Mount position B (right pin): design spinning {arr['position_b']['spin']}. "
            f"Measure the combined rotational speed of the pair in rpm."
        )


@dataclass(frozen=True)
class SyntheticLandscapeConfig:
    target_a: tuple[int, ...] = DEFAULT_TARGET
    target_b: tuple[int, ...] = DEFAULT_TARGET
    separable_weight: float = 1200.0   # alpha
    coupling_weight: float = 200.0     # gamma
    corotation_bonus: float = 100.0    # delta
    noise_sigma: float = 50.0
    noise_seed: int | None = None      # defaults to the run's master seed

    def validate(self):
        for name, target in (("target_a", self.target_a), ("target_b", self.target_b)):
            if len(target) != 10:
                raise ValueError(f"{name} must have 10 values")
            for v in target:
                if not (PROFILE_MIN <= v <= PROFILE_MAX):
                    raise ValueError(f"{name} value {v} outside [{PROFILE_MIN}, {PROFILE_MAX}]")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")


def _closeness(profile: tuple[int, ...], target) -> float:
    dev = np.abs(np.array(profile, dtype=float) - np.array(target, dtype=float))
    return 1.0 - float(dev.mean()) / (PROFILE_MAX - PROFILE_MIN)


def combined_speed(genome_a: Genome, genome_b: Genome,
                   cfg: SyntheticLandscapeConfig, eps: float = 0.0) -> float:
    """Noise-free landscape plus an externally supplied noise term, clamped
    at zero like a real tachometer reading."""
    value = cfg.separable_weight * _closeness(genome_a.profile, cfg.target_a)
    value += cfg.separable_weight * _closeness(genome_b.profile, cfg.target_b)
    value += cfg.coupling_weight * _closeness(genome_a.profile, genome_b.profile)
    if genome_a.rotation == genome_b.rotation:
        value += cfg.corotation_bonus
    return max(0.0, value + eps)


class SyntheticEvaluator:
    """Deterministic given its noise stream; used for studies and tests."""

    deterministic = True

    def __init__(self, cfg: SyntheticLandscapeConfig, noise_stream):
        cfg.validate()
        self.cfg = cfg
        self.noise = noise_stream

    def evaluate(self, request: EvaluationRequest) -> float:
        # one draw per measurement regardless of sigma, so stream positions
        # do not depend on the noise setting
        eps = float(self.noise.normal(0.0, self.cfg.noise_sigma))
        return combined_speed(request.position_a(), request.position_b(), self.cfg, eps)


@dataclass
class PendingRequest:
    """What the operator sees while the engine is blocked."""

    request_id: int            # the fabrication index
    run_id: str
    species: str
    role: str
    arrangement: dict
    arrangement_text: str
    stl_paths: dict            # {"A": path, "B": path}

    def to_data(self) -> dict:
        return {
            "request_id": self.request_id,
            "run_id": self.run_id,
            "species": self.species,
            "role": self.role,
            "arrangement": self.arrangement,
            "arrangement_text": self.arrangement_text,
            "stl": {k: str(v) for k, v in self.stl_paths.items()},
        }


class MeasurementExchange:
    """Single-slot synchronous hand-off between the engine thread and the
    operator-facing service. The engine publishes one pending request and
    blocks; exactly one submission answers it."""

    def __init__(self):
        self._cond = threading.Condition()
        self._pending: PendingRequest | None = None
        self._value: float | None = None
        self._answered: set[int] = set()
        self._aborted = False
        self.on_pending = None     # optional callback(PendingRequest)

    def pending(self) -> PendingRequest | None:
        with self._cond:
            return self._pending

    def publish_and_wait(self, pending: PendingRequest) -> float:
        with self._cond:
            if self._aborted:
                raise RunSuspended("evaluation aborted")
            self._pending = pending
            self._value = None
            callback = self.on_pending
        if callback:
            callback(pending)
        with self._cond:
            self._cond.notify_all()
            while self._value is None and not self._aborted:
                self._cond.wait()
            if self._aborted and self._value is None:
                self._pending = None
                raise RunSuspended(f"request {pending.request_id} aborted while pending")
            value = self._value
            self._pending = None
            self._value = None
            self._answered.add(pending.request_id)
            return value

    def submit(self, request_id, rpm: float) -> str:
        """Returns 'accepted', 'duplicate', or 'unknown'; no state change on
        rejection."""
        with self._cond:
            if self._pending is not None and request_id == self._pending.request_id:
                if self._value is not None:
                    return "duplicate"
                self._value = float(rpm)
                self._cond.notify_all()
                return "accepted"
            if request_id in self._answered:
                return "duplicate"
            return "unknown"

    def abort(self):
        with self._cond:
            self._aborted = True
            self._cond.notify_all()


class HardwareEvaluator:
    """Writes both designs of the pairing to STL and waits for the operator."""

    deterministic = False

    def __init__(self, run_dir: str | Path, exchange: MeasurementExchange,
                 smooth_steps: int = 50):
        self.run_dir = Path(run_dir)
        self.exchange = exchange
        self.smooth_steps = smooth_steps

    def _write_stl(self, genome: Genome, species: str, fab_index: int) -> Path:
        grid = phenotype.rasterize(genome)
        surface = meshmod.extract_surface(grid, phenotype.CELL_MM)
        smoothed = meshmod.laplacian_smooth(surface, self.smooth_steps)
        return meshmod.write_stl(smoothed, self.run_dir / species / f"{fab_index}.stl")

    def evaluate(self, request: EvaluationRequest) -> float:
        paths = {
            "A": self._write_stl(request.position_a(), "A", request.fab_index),
            "B": self._write_stl(request.position_b(), "B", request.fab_index),
        }
        pending = PendingRequest(
            request_id=request.fab_index,
            run_id=request.run_id,
            species=request.species,
            role=request.role,
            arrangement=request.arrangement(),
            arrangement_text=request.arrangement_text(),
            stl_paths=paths,
        )
        return self.exchange.publish_and_wait(pending)
