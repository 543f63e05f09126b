"""Design mining for counter-rotating turbine pairs.

Evolves two cooperating populations of drag-based turbine genomes under a
fabrication budget, decodes genomes to voxel phenotypes and printable
meshes, and optionally steers the search with a neural surrogate trained on
the measurements taken so far. Runs are journaled and resumable; a small
HTTP service exposes each run to an operator console.
"""

__version__ = "0.1.0"

from .coevolution import ConfigError, Engine, MODES, RunResult, StrategyConfig
from .fitness import (
    EvaluationRequest,
    HardwareEvaluator,
    MeasurementExchange,
    RunSuspended,
    SyntheticEvaluator,
    SyntheticLandscapeConfig,
    combined_speed,
)
from .genome import Genome, VariationConfig, mutate, random_genome
from .journal import Journal, JournalCorruption, JournalError, load_journal
from .mesh import (
    TriangleMesh,
    extract_surface,
    laplacian_smooth,
    mesh_stats,
    mesh_volume,
    read_stl,
    stl_bytes,
    write_stl,
)
from .phenotype import band_bounds, rasterize
from .session import RunConfig, Session, load_run_config, resume_run, start_run
from .surrogate import EvaluationRecord, MlpConfig, linear_baseline_train, train

__all__ = [
    "__version__",
    "ConfigError", "Engine", "MODES", "RunResult", "StrategyConfig",
    "EvaluationRequest", "HardwareEvaluator", "MeasurementExchange",
    "RunSuspended", "SyntheticEvaluator", "SyntheticLandscapeConfig",
    "combined_speed",
    "Genome", "VariationConfig", "mutate", "random_genome",
    "Journal", "JournalCorruption", "JournalError", "load_journal",
    "TriangleMesh", "extract_surface", "laplacian_smooth", "mesh_stats",
    "mesh_volume", "read_stl", "stl_bytes", "write_stl",
    "band_bounds", "rasterize",
    "RunConfig", "Session", "load_run_config", "resume_run", "start_run",
    "EvaluationRecord", "MlpConfig", "linear_baseline_train", "train",
]
