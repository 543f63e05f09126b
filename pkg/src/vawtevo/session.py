"""Run configuration and session orchestration.

A RunConfig captures everything a run needs; it is journaled verbatim as the
first event, so resuming needs only the journal file. Sessions wire the
config to an evaluator, an engine, and a journal, and expose the snapshot
and measurement-submission surface the HTTP service serves.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .coevolution import ConfigError, Engine, MODES, RunResult, StrategyConfig
from .fitness import (
    HardwareEvaluator,
    MeasurementExchange,
    SPECIES,
    SyntheticEvaluator,
    SyntheticLandscapeConfig,
)
from .genome import Genome, VariationConfig
from .journal import FORMAT_VERSION, Journal, JournalCorruption
from .rng import make_stream
from .surrogate import MlpConfig

JOURNAL_NAME = "journal.jsonl"
BACKENDS = ("synthetic", "hardware")

_RUN_ID = re.compile(r"^[A-Za-z0-9][A-Za-z0-9._-]*$")


@dataclass(frozen=True)
class RunConfig:
    run_id: str = ""
    mode: str = "cga"
    seed: int = 0
    budget: int = 160
    population: int = 20
    els_offspring: int = 1000
    backend: str = "synthetic"
    smooth_steps: int = 50
    variation: VariationConfig = field(default_factory=VariationConfig)
    surrogate: MlpConfig = field(default_factory=MlpConfig)
    synthetic: SyntheticLandscapeConfig = field(default_factory=SyntheticLandscapeConfig)
    seeds: dict | None = None          # {"A": [Genome, ...], "B": [...]}
    host: str = "127.0.0.1"
    port: int = 8819

    def named(self) -> "RunConfig":
        if self.run_id:
            return self
        return replace(self, run_id=f"{self.mode}-s{self.seed}")

    def validate(self):
        if not _RUN_ID.match(self.run_id or ""):
            raise ConfigError(f"run_id {self.run_id!r} is not a safe directory name")
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.smooth_steps < 0:
            raise ConfigError("smooth_steps must be >= 0")
        self.strategy().validate()
        try:
            self.synthetic.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.seeds:
            for sid, genomes in self.seeds.items():
                if sid not in SPECIES:
                    raise ConfigError(f"seed species must be one of {SPECIES}, got {sid!r}")
                if not genomes:
                    raise ConfigError(f"species {sid} seed list is empty")

    def strategy(self) -> StrategyConfig:
        return StrategyConfig(
            mode=self.mode,
            population=self.population,
            budget=self.budget,
            master_seed=self.seed,
            els_offspring=self.els_offspring,
            variation=self.variation,
            surrogate=self.surrogate,
        )

    def noise_seed(self) -> int:
        return self.seed if self.synthetic.noise_seed is None else self.synthetic.noise_seed

    def to_data(self) -> dict:
        return {
            "run_id": self.run_id,
            "mode": self.mode,
            "seed": self.seed,
            "budget": self.budget,
            "population": self.population,
            "els_offspring": self.els_offspring,
            "backend": self.backend,
            "smooth_steps": self.smooth_steps,
            "variation": {
                "mutation_rate": self.variation.mutation_rate,
                "max_step": self.variation.max_step,
                "crossover_rate": self.variation.crossover_rate,
            },
            "surrogate": {
                "learning_rate": self.surrogate.learning_rate,
                "initial_bias": self.surrogate.initial_bias,
                "momentum": self.surrogate.momentum,
                "hidden_units": self.surrogate.hidden_units,
                "epochs": self.surrogate.epochs,
                "window": self.surrogate.window,
                "weight_init_seed": self.surrogate.weight_init_seed,
            },
            "synthetic": {
                "target_a": list(self.synthetic.target_a),
                "target_b": list(self.synthetic.target_b),
                "separable_weight": self.synthetic.separable_weight,
                "coupling_weight": self.synthetic.coupling_weight,
                "corotation_bonus": self.synthetic.corotation_bonus,
                "noise_sigma": self.synthetic.noise_sigma,
                "noise_seed": self.synthetic.noise_seed,
            },
            "seeds": None if not self.seeds else {
                sid: [g.as_flat() for g in genomes] for sid, genomes in sorted(self.seeds.items())
            },
            "service": {"host": self.host, "port": self.port},
        }

    @classmethod
    def from_data(cls, data: dict) -> "RunConfig":
        def section(name):
            value = data.get(name) or {}
            if not isinstance(value, dict):
                raise ConfigError(f"config section {name!r} must be a mapping")
            return value

        known = {"run_id", "mode", "seed", "budget", "population", "els_offspring",
                 "backend", "smooth_steps", "variation", "surrogate", "synthetic",
                 "seeds", "service"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")

        base = cls()
        variation = section("variation")
        surrogate = section("surrogate")
        synthetic = section("synthetic")
        service = section("service")
        for sec_name, sec, allowed in (
            ("variation", variation, {"mutation_rate", "max_step", "crossover_rate"}),
            ("surrogate", surrogate, {"learning_rate", "initial_bias", "momentum",
                                      "hidden_units", "epochs", "window", "weight_init_seed"}),
            ("synthetic", synthetic, {"target_a", "target_b", "separable_weight",
                                      "coupling_weight", "corotation_bonus",
                                      "noise_sigma", "noise_seed"}),
            ("service", service, {"host", "port"}),
        ):
            bad = set(sec) - allowed
            if bad:
                raise ConfigError(f"unknown keys in config section {sec_name!r}: {sorted(bad)}")

        seeds = data.get("seeds")
        parsed_seeds = None
        if seeds:
            if not isinstance(seeds, dict):
                raise ConfigError("seeds must map species to genome lists")
            try:
                parsed_seeds = {
                    str(sid): [Genome.from_flat(flat) for flat in genomes]
                    for sid, genomes in seeds.items()
                }
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad seed genome: {exc}") from None

        try:
            return cls(
                run_id=str(data.get("run_id") or ""),
                mode=str(data.get("mode", base.mode)),
                seed=int(data.get("seed", base.seed)),
                budget=int(data.get("budget", base.budget)),
                population=int(data.get("population", base.population)),
                els_offspring=int(data.get("els_offspring", base.els_offspring)),
                backend=str(data.get("backend", base.backend)),
                smooth_steps=int(data.get("smooth_steps", base.smooth_steps)),
                variation=VariationConfig(
                    mutation_rate=float(variation.get("mutation_rate", 0.25)),
                    max_step=int(variation.get("max_step", 10)),
                    crossover_rate=float(variation.get("crossover_rate", 0.0)),
                ),
                surrogate=MlpConfig(
                    learning_rate=float(surrogate.get("learning_rate", 0.3)),
                    initial_bias=float(surrogate.get("initial_bias", 0.0)),
                    momentum=float(surrogate.get("momentum", 0.0)),
                    hidden_units=int(surrogate.get("hidden_units", 10)),
                    epochs=int(surrogate.get("epochs", 1000)),
                    window=None if surrogate.get("window") is None else int(surrogate["window"]),
                    weight_init_seed=int(surrogate.get("weight_init_seed", 0)),
                ),
                synthetic=SyntheticLandscapeConfig(
                    target_a=tuple(synthetic.get("target_a", SyntheticLandscapeConfig.target_a)),
                    target_b=tuple(synthetic.get("target_b", SyntheticLandscapeConfig.target_b)),
                    separable_weight=float(synthetic.get("separable_weight", 1200.0)),
                    coupling_weight=float(synthetic.get("coupling_weight", 200.0)),
                    corotation_bonus=float(synthetic.get("corotation_bonus", 100.0)),
                    noise_sigma=float(synthetic.get("noise_sigma", 50.0)),
                    noise_seed=None if synthetic.get("noise_seed") is None
                    else int(synthetic["noise_seed"]),
                ),
                seeds=parsed_seeds,
                host=str(service.get("host", base.host)),
                port=int(service.get("port", base.port)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad config value: {exc}") from None


def load_run_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    """Read a YAML run config; CLI flags may override the headline fields."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from None
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    cfg = RunConfig.from_data(data).named()
    cfg.validate()
    return cfg


class Session:
    """One engine wired to its evaluator and journal."""

    def __init__(self, cfg: RunConfig, run_dir: Path, journal: Journal):
        cfg.validate()
        self.cfg = cfg
        self.run_dir = Path(run_dir)
        self.journal = journal
        journal.record("run-config", {"format_version": FORMAT_VERSION,
                                      "config": cfg.to_data()})
        self.exchange: MeasurementExchange | None = None
        if cfg.backend == "hardware":
            self.exchange = MeasurementExchange()
            evaluator = HardwareEvaluator(self.run_dir, self.exchange, cfg.smooth_steps)
        else:
            synthetic = cfg.synthetic
            if synthetic.noise_seed is None:
                synthetic = replace(synthetic, noise_seed=cfg.noise_seed())
            evaluator = SyntheticEvaluator(synthetic, make_stream(synthetic.noise_seed, "noise"))
        self.evaluator = evaluator
        self.engine = Engine(cfg.strategy(), evaluator, journal,
                             run_id=cfg.run_id, seed_genomes=cfg.seeds or {})

    @property
    def journal_path(self) -> Path | None:
        return self.journal.path

    def run(self) -> RunResult:
        try:
            return self.engine.run()
        finally:
            self.journal.close()

    def abort(self):
        if self.exchange is not None:
            self.exchange.abort()

    # ------------------------------------------------- service-facing surface

    def run_info(self) -> dict:
        info = self.engine.snapshot()
        info["backend"] = self.cfg.backend
        info["config"] = self.cfg.to_data()
        result = self.engine.result()
        info["fittest"] = result.fittest
        return info

    def pending(self) -> dict | None:
        if self.exchange is None:
            return None
        slot = self.exchange.pending()
        return None if slot is None else slot.to_data()

    def history_rows(self) -> list[dict]:
        return self.engine.history_rows()

    def submit_measurement(self, request_id, rpm: float) -> str:
        if self.exchange is None:
            return "unknown"
        with self.engine._lock:
            answered = request_id in self.engine.measured_ids
        if answered:
            return "duplicate"
        return self.exchange.submit(request_id, rpm)


def start_run(cfg: RunConfig, out_dir: str | Path) -> Session:
    """Fresh run in out_dir/<run_id>/; refuses to clobber an existing journal."""
    cfg = cfg.named()
    cfg.validate()
    run_dir = Path(out_dir) / cfg.run_id
    journal_path = run_dir / JOURNAL_NAME
    if journal_path.exists() and journal_path.stat().st_size > 0:
        raise ConfigError(
            f"journal already exists at {journal_path}; resume it instead of rerunning")
    run_dir.mkdir(parents=True, exist_ok=True)
    hardware = cfg.backend == "hardware"
    journal = Journal(journal_path, wall_clock=hardware, fsync=hardware)
    return Session(cfg, run_dir, journal)


def resume_run(journal_path: str | Path) -> Session:
    journal_path = Path(journal_path)
    if not journal_path.is_file():
        raise ConfigError(f"journal not found: {journal_path}")
    journal = Journal(journal_path)
    if not journal.events:
        raise ConfigError(f"journal is empty: {journal_path}")
    head = journal.events[0]
    if head["kind"] != "run-config":
        raise JournalCorruption("journal does not begin with a run-config event")
    version = head["data"].get("format_version")
    if version != FORMAT_VERSION:
        raise ConfigError(f"unsupported journal format version: {version}")
    cfg = RunConfig.from_data(head["data"]["config"])
    cfg.validate()
    hardware = cfg.backend == "hardware"
    journal.wall_clock = hardware
    journal.fsync = hardware
    return Session(cfg, journal_path.parent, journal)
