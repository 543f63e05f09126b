"""Cooperative coevolution of turbine pairings.

Two species populations, one per physical position, evolve under a shared
fabrication budget. Every strategy is steady-state: tournament(3) parents,
mutation-only variation, tournament(3) replacement of the worst. Offspring
are scored by pairing them with the opposing species' elite (best measured
fitness, earliest fabrication on ties); the surrogate-assisted strategies
spend part of the budget on model-chosen candidates instead.

Modes:

  cga        one offspring fabricated per step (budget -1)
  scga       retrain the surrogate each species visit, insert P
             surrogate-scored offspring, then fabricate the best
             approximated member plus one random unevaluated member
             (budget -2; -1 when no second candidate exists)
  scga-20t   scga with the training window capped at the 20 newest records
  scga-els   one parent from measured members only, els_offspring mutants
             scored by the surrogate, fabricate the argmax (budget -1)
  cga-2      offspring additionally evaluated against a roulette-picked
             partner, keeping the larger score (budget -2, -1 on dedupe)
  cga-cross  offspring re-evaluated in the alternate physical position with
             its own species' elite; the copy joins the other population
             when it beats their best (budget -2)
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
import threading

import numpy as np

from .fitness import EvaluationRequest, SPECIES
from .genome import (
    Genome,
    VariationConfig,
    mutate,
    mutate_batch,
    random_genome,
    roulette_select,
    tournament_select,
)
from .journal import Journal
from .rng import make_streams
from .surrogate import EvaluationRecord, MlpConfig, encode_batch, train, training_window

MODES = ("cga", "scga", "scga-20t", "scga-els", "cga-2", "cga-cross")
TOURNAMENT_K = 3


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class StrategyConfig:
    mode: str = "cga"
    population: int = 20
    budget: int = 160
    master_seed: int = 0
    els_offspring: int = 1000
    variation: VariationConfig = field(default_factory=VariationConfig)
    surrogate: MlpConfig = field(default_factory=MlpConfig)

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.population < TOURNAMENT_K:
            raise ConfigError(f"population must be >= {TOURNAMENT_K}")
        if self.els_offspring < 1:
            raise ConfigError("els_offspring must be >= 1")
        try:
            self.variation.validate()
            self.surrogate.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.budget < self.init_cost():
            raise ConfigError(
                f"budget {self.budget} cannot cover initialization "
                f"({self.init_cost()} evaluations)")

    def init_cost(self) -> int:
        per_member = 2 if self.mode == "cga-2" else 1
        return 2 * self.population * per_member

    def step_cost(self) -> int:
        # worst-case evaluations per steady-state step
        return 1 if self.mode in ("cga", "scga-els") else 2

    def effective_surrogate(self) -> MlpConfig:
        if self.mode == "scga-20t" and self.surrogate.window != 20:
            return replace(self.surrogate, window=20)
        return self.surrogate


@dataclass
class Member:
    genome: Genome
    fitness: float = 0.0
    measured: bool = False
    fab_index: int | None = None


@dataclass
class SpeciesState:
    sid: str
    members: list[Member] = field(default_factory=list)
    evaluated: list[EvaluationRecord] = field(default_factory=list)

    def elite_slot(self) -> int:
        best = None
        for slot, m in enumerate(self.members):
            if not m.measured:
                continue
            if best is None:
                best = slot
                continue
            b = self.members[best]
            if m.fitness > b.fitness or (m.fitness == b.fitness and m.fab_index < b.fab_index):
                best = slot
        if best is None:
            raise RuntimeError(f"species {self.sid} has no measured member")
        return best

    def worst_measured_slot(self) -> int:
        worst = None
        for slot, m in enumerate(self.members):
            if not m.measured:
                continue
            if worst is None or m.fitness < self.members[worst].fitness:
                worst = slot
        if worst is None:
            raise RuntimeError(f"species {self.sid} has no measured member")
        return worst

    def best_measured_fitness(self) -> float:
        return self.members[self.elite_slot()].fitness

    def unevaluated_slots(self) -> list[int]:
        return [slot for slot, m in enumerate(self.members) if not m.measured]


@dataclass(frozen=True)
class RunResult:
    run_id: str
    mode: str
    spent: int
    complete: bool
    history: list[dict]
    best_so_far: list[float]
    fittest: dict | None


def other_species(sid: str) -> str:
    return "B" if sid == "A" else "A"


class Engine:
    """Drives one run against an evaluator, journaling every event.

    Deterministic given (config, seed genomes, evaluator stream): rebuilding
    the engine over an existing journal replays it with every event verified,
    then continues appending where the journal ends.
    """

    def __init__(self, cfg: StrategyConfig, evaluator, journal: Journal,
                 run_id: str = "run", seed_genomes: dict[str, list[Genome]] | None = None):
        cfg.validate()
        self.cfg = cfg
        self.evaluator = evaluator
        self.journal = journal
        self.run_id = run_id
        self.seed_genomes = seed_genomes or {}
        self.streams = make_streams(cfg.master_seed)
        self.species = {sid: SpeciesState(sid) for sid in SPECIES}
        self.active = "A"
        self.fab_index = 0
        self.spent = 0
        self.offspring_count = 0
        self.complete = False
        self.history: list[dict] = []
        self.best_curve: list[float] = []
        self.measured_ids: set[int] = set()
        self._lock = threading.Lock()

    # ------------------------------------------------------------------ run

    def run(self) -> RunResult:
        self._initialize()
        step = getattr(self, "_step_" + self.cfg.mode.replace("-", "_"))
        while self.spent + self.cfg.step_cost() <= self.cfg.budget:
            step()
            self.active = other_species(self.active)
        best = self.best_curve[-1] if self.best_curve else None
        self.journal.record("run-complete", {"evaluations": self.spent, "best": best})
        self.complete = True
        return self.result()

    def result(self) -> RunResult:
        with self._lock:
            history = [dict(row) for row in self.history]
            best_so_far = list(self.best_curve)
        fittest = None
        if history:
            top = max(history, key=lambda row: row["rpm"])
            fittest = {
                "fab": top["fab"],
                "rpm": top["rpm"],
                "position_a": top["position_a"],
                "position_b": top["position_b"],
            }
        return RunResult(
            run_id=self.run_id,
            mode=self.cfg.mode,
            spent=self.spent,
            complete=self.complete,
            history=history,
            best_so_far=best_so_far,
            fittest=fittest,
        )

    def snapshot(self) -> dict:
        with self._lock:
            best_so_far = list(self.best_curve)
        return {
            "run_id": self.run_id,
            "mode": self.cfg.mode,
            "population": self.cfg.population,
            "budget": self.cfg.budget,
            "evaluations": self.spent,
            "complete": self.complete,
            "best_so_far": best_so_far,
        }

    def history_rows(self) -> list[dict]:
        with self._lock:
            return [dict(row) for row in self.history]

    # --------------------------------------------------------- initialization

    def _initial_genomes(self, sid: str) -> list[tuple[Genome, str]]:
        p = self.cfg.population
        out: list[tuple[Genome, str]] = []
        for seed in self.seed_genomes.get(sid, []):
            if len(out) < p:
                out.append((seed, "seed"))
            if len(out) < p:
                out.append((seed.flipped(), "seed-flip"))
        while len(out) < p:
            out.append((random_genome(self.streams["init"]), "random"))
        return out

    def _initialize(self):
        p = self.cfg.population
        for sid in SPECIES:
            state = self.species[sid]
            for slot, (genome, source) in enumerate(self._initial_genomes(sid)):
                self.journal.record("init-member", {
                    "species": sid, "slot": slot,
                    "genome": genome.as_flat(), "source": source,
                })
                state.members.append(Member(genome))

        two_partners = self.cfg.mode == "cga-2"
        for sid in SPECIES:
            state = self.species[sid]
            others = self.species[other_species(sid)].members
            for slot, member in enumerate(state.members):
                j1 = int(self.streams["partner"].integers(0, p))
                rpm = self._measure(sid, slot, member.genome, others[j1].genome,
                                    role="init")
                member.fitness, member.measured, member.fab_index = rpm, True, self.fab_index - 1
                if two_partners:
                    # second partner distinct from the first
                    j2 = int(self.streams["partner"].integers(0, p - 1))
                    j2 += j2 >= j1
                    rpm2 = self._measure(sid, slot, member.genome, others[j2].genome,
                                         role="init-extra")
                    member.fitness = max(rpm, rpm2)

    # ----------------------------------------------------------- measurement

    def _measure(self, species: str, slot: int | None, genome: Genome, partner: Genome,
                 role: str, offspring: int | None = None, pick: str | None = None,
                 degenerate: bool = False) -> float:
        fab = self.fab_index
        request = EvaluationRequest(
            run_id=self.run_id, fab_index=fab, species=species,
            genome=genome, partner=partner, position=species, role=role,
        )
        self.journal.record("evaluation-request", {
            "fab": fab,
            "species": species,
            "slot": slot,
            "role": role,
            "position": species,
            "genome": genome.as_flat(),
            "partner": partner.as_flat(),
            "offspring": offspring,
            "pick": pick,
            "degenerate": degenerate,
        })
        if self.journal.next_is("measurement") and not self.evaluator.deterministic:
            # hardware replay: the journaled value substitutes for the operator
            rpm = float(self.journal.peek()["data"]["rpm"])
        else:
            rpm = float(self.evaluator.evaluate(request))
        self.journal.record("measurement", {"fab": fab, "species": species, "rpm": rpm})

        self.fab_index += 1
        self.spent += 1
        pos_a = genome if species == "A" else partner
        pos_b = genome if species == "B" else partner
        with self._lock:
            best = rpm if not self.best_curve else max(rpm, self.best_curve[-1])
            self.best_curve.append(best)
            self.history.append({
                "fab": fab, "species": species, "role": role, "rpm": rpm,
                "offspring": offspring,
                "genome": genome.as_flat(), "partner": partner.as_flat(),
                "position_a": pos_a.as_flat(), "position_b": pos_b.as_flat(),
            })
            self.measured_ids.add(fab)
        self.species[species].evaluated.append(
            EvaluationRecord(genome=genome, partner=partner, fitness=rpm, index=fab))
        return rpm

    # ------------------------------------------------------------- utilities

    def _tournament(self, members: list[Member], mode: str) -> int:
        pairs = [(m.genome, m.fitness) for m in members]
        return tournament_select(pairs, TOURNAMENT_K, mode, self.streams["selection"])

    def _spawn(self, state: SpeciesState) -> Genome:
        parent = state.members[self._tournament(state.members, "best")]
        return mutate(parent.genome, self.cfg.variation, self.streams["variation"])

    def _insert(self, state: SpeciesState, genome: Genome, fitness: float,
                measured: bool, fab: int | None, origin: str = "offspring") -> int:
        victim = self._tournament(state.members, "worst")
        state.members[victim] = Member(genome, fitness, measured, fab)
        self.journal.record("insertion", {
            "species": state.sid, "slot": victim, "genome": genome.as_flat(),
            "fitness": float(fitness),
            "kind": "measured" if measured else "approximated",
            "origin": origin,
        })
        return victim

    def _train_surrogate(self, state: SpeciesState):
        cfg = self.cfg.effective_surrogate()
        window = training_window(state.evaluated, cfg.window)
        model = train(window, cfg,
                      init_rng=self.streams["surrogate-init"],
                      shuffle_rng=self.streams["surrogate-shuffle"])
        self.journal.record("model-training-marker", {
            "species": state.sid,
            "records": len(state.evaluated),
            "window": len(window),
            "draws": {name: stream.calls for name, stream in sorted(self.streams.items())},
        })
        return model

    def _elite_genome(self, sid: str) -> Genome:
        state = self.species[sid]
        return state.members[state.elite_slot()].genome

    # ------------------------------------------------------------- cga steps

    def _step_cga(self):
        state = self.species[self.active]
        child = self._spawn(state)
        ordinal = self.offspring_count
        self.offspring_count += 1
        rpm = self._measure(state.sid, None, child, self._elite_genome(other_species(state.sid)),
                            role="steady", offspring=ordinal)
        self._insert(state, child, rpm, True, self.fab_index - 1)

    def _step_cga_2(self):
        state = self.species[self.active]
        other = self.species[other_species(state.sid)]
        child = self._spawn(state)
        ordinal = self.offspring_count
        self.offspring_count += 1

        elite = other.elite_slot()
        wheel = roulette_select([m.fitness for m in other.members], self.streams["partner"])
        rpm = self._measure(state.sid, None, child, other.members[elite].genome,
                            role="steady", offspring=ordinal)
        fab = self.fab_index - 1
        assigned = rpm
        if wheel != elite:
            rpm2 = self._measure(state.sid, None, child, other.members[wheel].genome,
                                 role="extra", offspring=ordinal)
            assigned = max(rpm, rpm2)
        self._insert(state, child, assigned, True, fab)

    def _step_cga_cross(self):
        state = self.species[self.active]
        other = self.species[other_species(state.sid)]
        child = self._spawn(state)
        ordinal = self.offspring_count
        self.offspring_count += 1

        rpm = self._measure(state.sid, None, child, self._elite_genome(other.sid),
                            role="steady", offspring=ordinal)
        self._insert(state, child, rpm, True, self.fab_index - 1)

        # the same design, printed for the alternate position, spinning with
        # its own species' elite (which may now be the offspring itself)
        cross_rpm = self._measure(other.sid, None, child, self._elite_genome(state.sid),
                                  role="cross", offspring=ordinal)
        if cross_rpm > other.best_measured_fitness():
            victim = other.worst_measured_slot()
            other.members[victim] = Member(child, cross_rpm, True, self.fab_index - 1)
            self.journal.record("insertion", {
                "species": other.sid, "slot": victim, "genome": child.as_flat(),
                "fitness": float(cross_rpm), "kind": "measured", "origin": "cross-copy",
            })

    # ------------------------------------------------------- surrogate steps

    def _step_scga(self):
        state = self.species[self.active]
        model = self._train_surrogate(state)
        for member in state.members:
            if not member.measured:
                member.fitness = model.predict(member.genome)

        for _ in range(self.cfg.population):
            child = self._spawn(state)
            self._insert(state, child, model.predict(child), False, None)

        unevaluated = state.unevaluated_slots()
        best = unevaluated[0]
        for slot in unevaluated[1:]:
            if state.members[slot].fitness > state.members[best].fitness:
                best = slot
        rest = [slot for slot in unevaluated if slot != best]
        degenerate = not rest

        self._fabricate_member(state, best, pick="model-best", degenerate=degenerate)
        if not degenerate:
            choice = rest[int(self.streams["selection"].integers(0, len(rest)))]
            self._fabricate_member(state, choice, pick="random-unevaluated")

    def _step_scga_20t(self):
        self._step_scga()

    def _fabricate_member(self, state: SpeciesState, slot: int, pick: str,
                          degenerate: bool = False):
        member = state.members[slot]
        ordinal = self.offspring_count
        self.offspring_count += 1
        rpm = self._measure(state.sid, slot, member.genome,
                            self._elite_genome(other_species(state.sid)),
                            role="steady", offspring=ordinal, pick=pick,
                            degenerate=degenerate)
        member.fitness, member.measured, member.fab_index = rpm, True, self.fab_index - 1

    def _step_scga_els(self):
        state = self.species[self.active]
        model = self._train_surrogate(state)

        measured = [m for m in state.members if m.measured]
        parent = measured[self._tournament(measured, "best")]
        profiles, zshifts, rotations = mutate_batch(
            parent.genome, self.cfg.variation, self.cfg.els_offspring, self.streams["variation"])
        scores = model.predict_batch(encode_batch(profiles, zshifts, rotations))
        best = int(np.argmax(scores))  # earliest-generated wins ties
        child = Genome(tuple(int(v) for v in profiles[best]),
                       tuple(int(v) for v in zshifts[best]),
                       bool(rotations[best]))

        ordinal = self.offspring_count
        self.offspring_count += 1
        rpm = self._measure(state.sid, None, child, self._elite_genome(other_species(state.sid)),
                            role="steady", offspring=ordinal,
                            pick=f"els-best-of-{self.cfg.els_offspring}")
        self._insert(state, child, rpm, True, self.fab_index - 1)
