"""Statistics and offline studies over runs and surrogate models.

Provides the rank-sum test used by the comparison studies, cross-validation
and rolling one-step-ahead scoring for surrogate models, multi-seed strategy
comparisons on the synthetic landscape, and CSV/figure reports rendered from
a journal file.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .coevolution import Engine, StrategyConfig
from .fitness import SyntheticEvaluator, SyntheticLandscapeConfig, combined_speed
from .genome import Genome, random_genome
from .journal import Journal, load_journal
from .rng import make_stream
from .surrogate import (
    EvaluationRecord,
    MlpConfig,
    encode,
    linear_baseline_train,
    train,
    training_window,
)

# ----------------------------------------------------------- rank-sum test


@dataclass(frozen=True)
class MannWhitneyResult:
    u: float           # U statistic of the first sample
    p: float           # two-sided p-value
    exact: bool        # True when computed by enumeration rather than approximation


EXACT_LIMIT = 16       # pooled size at or below which the exact distribution is used


def _midranks(pooled: np.ndarray) -> np.ndarray:
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(len(pooled), dtype=np.float64)
    sorted_vals = pooled[order]
    i = 0
    while i < len(pooled):
        j = i
        while j + 1 < len(pooled) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _exact_u_counts(n: int, m: int) -> np.ndarray:
    """Count subsets of size n from ranks 1..n+m by rank sum, as a dense table."""
    total = n + m
    max_sum = total * (total + 1) // 2
    ways = np.zeros((n + 1, max_sum + 1), dtype=np.float64)
    ways[0, 0] = 1.0
    for rank in range(1, total + 1):
        for k in range(min(rank, n), 0, -1):
            ways[k, rank:] += ways[k - 1, :-rank]
    lo = n * (n + 1) // 2
    hi = lo + n * m
    return ways[n, lo:hi + 1]      # index u = rank_sum - lo


def mann_whitney(a: Sequence[float], b: Sequence[float]) -> MannWhitneyResult:
    """Two-sided rank-sum test.

    Tie-free samples with pooled size <= EXACT_LIMIT get the exact null
    distribution; everything else uses the normal approximation with
    midranks, tie-corrected variance, and a 0.5 continuity correction.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        raise ValueError("both samples must be non-empty")
    pooled = np.concatenate([a, b])
    ranks = _midranks(pooled)
    u_a = float(np.sum(ranks[:n]) - n * (n + 1) / 2.0)
    u_min = min(u_a, n * m - u_a)

    tie_free = len(np.unique(pooled)) == n + m
    if tie_free and n + m <= EXACT_LIMIT:
        counts = _exact_u_counts(n, m)
        total = counts.sum()
        p = 2.0 * float(counts[: int(u_min) + 1].sum()) / total
        return MannWhitneyResult(u=u_a, p=min(1.0, p), exact=True)

    big_n = n + m
    mean = n * m / 2.0
    _, tie_sizes = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(tie_sizes.astype(np.float64) ** 3 - tie_sizes))
    var = n * m / 12.0 * ((big_n + 1) - tie_term / (big_n * (big_n - 1)))
    if var <= 0:
        return MannWhitneyResult(u=u_a, p=1.0, exact=False)
    z = (abs(u_a - mean) - 0.5) / math.sqrt(var)
    z = max(z, 0.0)
    p = math.erfc(z / math.sqrt(2.0))
    return MannWhitneyResult(u=u_a, p=min(1.0, p), exact=False)


# --------------------------------------------------- surrogate model scoring

# A factory builds a trained predictor from records: factory(train, seed)
# returns predict(test) -> array of fitness estimates.
ModelFactory = Callable[[Sequence[EvaluationRecord], int],
                        Callable[[Sequence[EvaluationRecord]], np.ndarray]]


def _encode_records(records: Sequence[EvaluationRecord]) -> np.ndarray:
    return np.stack([encode(r.genome) for r in records])


def mae(predicted: Sequence[float], actual: Sequence[float]) -> float:
    predicted = np.asarray(predicted, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if predicted.shape != actual.shape:
        raise ValueError("prediction and target lengths differ")
    return float(np.mean(np.abs(predicted - actual)))


def mean_factory() -> ModelFactory:
    def build(records, seed):
        level = float(np.mean([r.fitness for r in records]))
        return lambda test: np.full(len(test), level)
    return build


def linear_factory() -> ModelFactory:
    def build(records, seed):
        model = linear_baseline_train(records)
        return lambda test: model.predict_batch(_encode_records(test))
    return build


def mlp_factory(cfg: MlpConfig | None = None) -> ModelFactory:
    cfg = cfg or MlpConfig()

    def build(records, seed):
        init_rng, shuffle_rng = (np.random.Generator(np.random.PCG64(s))
                                 for s in np.random.SeedSequence(seed).spawn(2))
        model = train(records, cfg, init_rng=init_rng, shuffle_rng=shuffle_rng)
        return lambda test: model.predict_batch(_encode_records(test))
    return build


def kfold_cv(records: Sequence[EvaluationRecord], factory: ModelFactory,
             k: int = 10, runs: int = 100, seed: int = 0) -> np.ndarray:
    """Mean absolute error per shuffled k-fold run; returns `runs` values."""
    records = list(records)
    if len(records) < k:
        raise ValueError(f"need at least {k} records for {k}-fold splits")
    out = np.empty(runs, dtype=np.float64)
    for run in range(runs):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, run))))
        order = rng.permutation(len(records))
        folds = np.array_split(order, k)
        fold_maes = []
        for fold in folds:
            held = set(int(i) for i in fold)
            train_part = [records[i] for i in range(len(records)) if i not in held]
            test_part = [records[i] for i in sorted(held)]
            predict = factory(train_part, seed=int(rng.integers(0, 2 ** 31)))
            fold_maes.append(mae(predict(test_part), [r.fitness for r in test_part]))
        out[run] = float(np.mean(fold_maes))
    return out


def rolling_mae(records: Sequence[EvaluationRecord], factory: ModelFactory,
                window: int | None, evaluate_last: int = 20, seed: int = 0) -> float:
    """One-step-ahead error over the final stretch of an ordered record stream.

    For each target position the model trains on the (optionally windowed)
    prefix and predicts the next record, mirroring how the engine always
    trains on history and scores candidates it has not measured yet.
    """
    records = list(records)
    start = len(records) - evaluate_last
    if start < 2:
        raise ValueError("record stream too short for the requested evaluation span")
    errors = []
    for t in range(start, len(records)):
        past = training_window(records[:t], window)
        predict = factory(past, seed=seed + t)
        errors.append(mae(predict([records[t]]), [records[t].fitness]))
    return float(np.mean(errors))


def drifting_records(n: int = 78, seed: int = 0, sigma: float = 20.0) -> list[EvaluationRecord]:
    """Record stream whose genome-to-fitness mapping flips sign halfway through.

    The first half follows offset + w.x, the second half offset - w.x, with
    mild observation noise. Useful for exercising training-window behaviour
    under concept drift.
    """
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 9157))))
    weights = rng.uniform(-300.0, 300.0, size=16)
    offset = 2600.0
    records = []
    for i in range(n):
        genome = random_genome(rng)
        partner = random_genome(rng)
        x = encode(genome)
        signed = weights if i < n // 2 else -weights
        fitness = offset + float(signed @ x) + float(rng.normal(0.0, sigma))
        records.append(EvaluationRecord(genome=genome, partner=partner,
                                        fitness=max(0.0, fitness), index=i))
    return records


def landscape_records(n: int = 78, seed: int = 0,
                      synthetic: SyntheticLandscapeConfig | None = None
                      ) -> list[EvaluationRecord]:
    """Random turbine pairs measured once each on the synthetic landscape."""
    cfg = synthetic or SyntheticLandscapeConfig()
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 4201))))
    noise = make_stream(seed, "noise")
    records = []
    for i in range(n):
        genome = random_genome(rng)
        partner = random_genome(rng)
        eps = float(noise.normal(0.0, cfg.noise_sigma))
        records.append(EvaluationRecord(genome=genome, partner=partner,
                                        fitness=combined_speed(genome, partner, cfg, eps),
                                        index=i))
    return records


def windowing_study(seeds: Sequence[int], windows: Sequence[int | None],
                    factory: ModelFactory | None = None, n: int = 78,
                    evaluate_last: int = 20) -> dict:
    """Rolling one-step-ahead MAE per training window across drifting streams."""
    factory = factory or mlp_factory()
    out: dict = {w: [] for w in windows}
    for seed in seeds:
        records = drifting_records(n=n, seed=seed)
        for w in windows:
            out[w].append(rolling_mae(records, factory, window=w,
                                      evaluate_last=evaluate_last, seed=seed))
    return {w: np.asarray(v) for w, v in out.items()}


# ------------------------------------------------------------ strategy study


def run_mode(mode: str, seed: int, population: int = 20, budget: int = 160,
             synthetic: SyntheticLandscapeConfig | None = None,
             els_offspring: int = 1000):
    """One in-memory synthetic run; returns the engine's RunResult."""
    cfg = StrategyConfig(mode=mode, population=population, budget=budget,
                         master_seed=seed, els_offspring=els_offspring)
    landscape = synthetic or SyntheticLandscapeConfig()
    evaluator = SyntheticEvaluator(landscape, make_stream(seed, "noise"))
    with Journal(None) as journal:
        engine = Engine(cfg, evaluator, journal, run_id=f"{mode}-s{seed}")
        return engine.run()


def strategy_study(modes: Sequence[str], seeds: Sequence[int],
                   population: int = 20, budget: int = 160,
                   synthetic: SyntheticLandscapeConfig | None = None,
                   els_offspring: int = 1000) -> dict:
    """Best fitness and best-so-far curves per mode across seeds.

    Returns {mode: {"final": array(n_seeds), "curves": array(n_seeds, budget)}};
    curves are right-padded with their last value so modes whose runs stop one
    evaluation short of the budget still align.
    """
    out = {}
    for mode in modes:
        finals = []
        curves = []
        for seed in seeds:
            result = run_mode(mode, seed, population=population, budget=budget,
                              synthetic=synthetic, els_offspring=els_offspring)
            curve = np.asarray(result.best_so_far, dtype=np.float64)
            if len(curve) < budget:
                curve = np.concatenate([curve, np.full(budget - len(curve), curve[-1])])
            finals.append(curve[-1])
            curves.append(curve[:budget])
        out[mode] = {"final": np.asarray(finals), "curves": np.vstack(curves)}
    return out


# ----------------------------------------------------------------- reporting


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def report(journal_path: str | Path, out_dir: str | Path,
           final_span: int = 40) -> dict:
    """Render per-run CSV tables and a best-so-far figure from a journal.

    Writes best_so_far.csv, species_A.csv, species_B.csv, and summary.csv to
    out_dir plus best_so_far.png. Returns the summary row as a dict. The
    `final-span` statistics aggregate measured rpm over the last `final_span`
    fabrications; every measurement is one physical build, so this is uniform
    across strategies.
    """
    from .plots import render_best_curve

    events = load_journal(journal_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    config = {}
    requests = {}
    measurements = []
    complete = False
    for event in events:
        if event["kind"] == "run-config":
            config = event["data"]["config"]
        elif event["kind"] == "evaluation-request":
            requests[event["data"]["fab"]] = event["data"]
        elif event["kind"] == "measurement":
            measurements.append(event["data"])
        elif event["kind"] == "run-complete":
            complete = True
    if not measurements:
        raise ValueError(f"journal {journal_path} holds no measurements")

    best_rows = []
    best = -math.inf
    for i, m in enumerate(measurements, start=1):
        best = max(best, m["rpm"])
        best_rows.append((i, m["species"], m["fab"], f"{m['rpm']:.6f}", f"{best:.6f}"))
    _write_csv(out_dir / "best_so_far.csv",
               ("evaluation", "species", "fab", "rpm", "best_so_far"), best_rows)

    for sid in ("A", "B"):
        rows = []
        for m in measurements:
            if m["species"] != sid:
                continue
            req = requests.get(m["fab"], {})
            rows.append((m["fab"], req.get("role", ""), f"{m['rpm']:.6f}",
                         " ".join(str(v) for v in req.get("genome", [])),
                         " ".join(str(v) for v in req.get("partner", []))))
        _write_csv(out_dir / f"species_{sid}.csv",
                   ("fab", "role", "rpm", "genome", "partner"), rows)

    tail = np.asarray([m["rpm"] for m in measurements[-final_span:]], dtype=np.float64)
    summary = {
        "run_id": config.get("run_id", ""),
        "mode": config.get("mode", ""),
        "budget": config.get("budget", ""),
        "evaluations": len(measurements),
        "complete": complete,
        "best_rpm": max(m["rpm"] for m in measurements),
        f"final{final_span}_count": len(tail),
        f"final{final_span}_mean": float(tail.mean()),
        f"final{final_span}_sd": float(tail.std()),
    }
    _write_csv(out_dir / "summary.csv", list(summary), [list(summary.values())])

    render_best_curve([float(r[4]) for r in best_rows], out_dir / "best_so_far.png",
                      title=f"{summary['run_id']} best measured rpm")
    summary["figure"] = str(out_dir / "best_so_far.png")
    return summary
