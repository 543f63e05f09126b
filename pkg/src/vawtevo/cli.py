"""Command-line entry points.

  vawtevo run CONFIG.yaml      start a fresh run (journal under --out)
  vawtevo resume JOURNAL       continue a suspended or interrupted run
  vawtevo report JOURNAL       render CSV tables and figures from a journal
  vawtevo export-stl ...       decode a genome and write its printable STL
  vawtevo bench --study ...    multi-seed comparison studies

Exit codes: 0 success, 2 bad configuration or arguments, 3 run suspended
(resume later with the printed command), 4 journal corruption.
"""

from __future__ import annotations

import argparse
import json
import sys
import threading
from pathlib import Path

from . import __version__
from .coevolution import ConfigError, MODES
from .fitness import RunSuspended
from .genome import FLAT_LEN, Genome
from .journal import JournalCorruption, load_journal, to_native
from .mesh import extract_surface, laplacian_smooth, mesh_stats, write_stl
from .phenotype import rasterize
from .session import Session, load_run_config, resume_run, start_run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SUSPENDED = 3
EXIT_CORRUPT = 4


def _print_pending(pending):
    # one stable machine-parsable line per measurement request
    print("PENDING " + json.dumps(to_native(pending.to_data()), sort_keys=True), flush=True)


def _add_serve_flags(parser):
    parser.add_argument("--serve", action="store_true",
                        help="serve the HTTP API even for synthetic runs")
    parser.add_argument("--console", metavar="DIR", default=None,
                        help="directory of console static files to serve at /")
    parser.add_argument("--host", default=None, help="bind address override")
    parser.add_argument("--port", type=int, default=None,
                        help="port override (0 picks a free port)")


def _execute(session: Session, args) -> int:
    from .service import serve

    handle = None
    wants_service = args.serve or session.cfg.backend == "hardware"
    if wants_service:
        host = args.host if args.host is not None else session.cfg.host
        port = args.port if args.port is not None else session.cfg.port
        handle = serve(session, host, port, static_dir=args.console)
        print(f"serving on http://{handle.host}:{handle.port}/", flush=True)
    if session.exchange is not None:
        session.exchange.on_pending = _print_pending

    journal_path = session.journal_path
    try:
        result = session.run()
    except (KeyboardInterrupt, RunSuspended):
        session.abort()
        print(f"\nrun suspended after {session.engine.spent} evaluations")
        if journal_path is not None:
            print(f"resume with: vawtevo resume {journal_path}")
        if handle is not None:
            handle.stop()
        return EXIT_SUSPENDED
    except JournalCorruption as exc:
        print(f"journal corruption: {exc}", file=sys.stderr)
        if handle is not None:
            handle.stop()
        return EXIT_CORRUPT

    best = result.best_so_far[-1] if result.best_so_far else float("nan")
    print(f"run complete: {result.spent} evaluations, best rpm {best:.3f}")
    if journal_path is not None:
        print(f"journal: {journal_path}")
    if handle is not None:
        print("run complete; serving until Ctrl-C", flush=True)
        try:
            threading.Event().wait()
        except KeyboardInterrupt:
            pass
        handle.stop()
    return EXIT_OK


def _cmd_run(args) -> int:
    overrides = {"mode": args.mode, "seed": args.seed,
                 "budget": args.budget, "backend": args.backend}
    cfg = load_run_config(args.config, overrides)
    session = start_run(cfg, args.out)
    return _execute(session, args)


def _cmd_resume(args) -> int:
    session = resume_run(args.journal)
    return _execute(session, args)


def _cmd_report(args) -> int:
    from .analysis import report

    out_dir = Path(args.out) if args.out else Path(args.journal).parent / "report"
    summary = report(args.journal, out_dir)
    for key, value in summary.items():
        print(f"{key}: {value}")
    print(f"report written to {out_dir}")
    return EXIT_OK


def _parse_flat(text: str) -> Genome:
    parts = text.replace(",", " ").split()
    if len(parts) != FLAT_LEN:
        raise ConfigError(f"genome needs {FLAT_LEN} integers, got {len(parts)}")
    return Genome.from_flat([int(p) for p in parts])


def _genome_from_journal(journal_path: str, fab: int, position: str) -> Genome:
    events = load_journal(journal_path)
    for event in events:
        if event["kind"] == "evaluation-request" and event["data"]["fab"] == fab:
            key = "genome" if position == "subject" else "partner"
            return Genome.from_flat(event["data"][key])
    raise ConfigError(f"no evaluation request with fab index {fab} in {journal_path}")


def _cmd_export_stl(args) -> int:
    if (args.genome is None) == (args.journal is None):
        raise ConfigError("pass exactly one of --genome or --journal")
    if args.genome is not None:
        genome = _parse_flat(args.genome)
    else:
        if args.fab is None:
            raise ConfigError("--journal requires --fab")
        genome = _genome_from_journal(args.journal, args.fab, args.position)
    mesh = extract_surface(rasterize(genome))
    mesh = laplacian_smooth(mesh, steps=args.smooth_steps)
    write_stl(mesh, args.out)
    stats = mesh_stats(mesh)
    print(f"wrote {args.out}: {stats['triangles']} triangles, "
          f"volume {stats['volume_mm3']:.3f} mm^3")
    return EXIT_OK


def _cmd_bench(args) -> int:
    from . import analysis, plots

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    seeds = list(range(args.seeds))

    if args.study == "strategies":
        modes = [m.strip() for m in args.modes.split(",") if m.strip()]
        for mode in modes:
            if mode not in MODES:
                raise ConfigError(f"unknown mode {mode!r}; choose from {MODES}")
        study = analysis.strategy_study(modes, seeds, budget=args.budget)
        rows = [(mode, seed, f"{study[mode]['final'][i]:.6f}")
                for mode in modes for i, seed in enumerate(seeds)]
        analysis._write_csv(out_dir / "strategy_finals.csv", ("mode", "seed", "best_rpm"), rows)
        plots.render_strategy_curves(study, out_dir / "strategy_curves.png")
        for i, first in enumerate(modes):
            for second in modes[i + 1:]:
                test = analysis.mann_whitney(study[first]["final"], study[second]["final"])
                print(f"{first} vs {second}: p = {test.p:.5f}")
        for mode in modes:
            final = study[mode]["final"]
            print(f"{mode}: mean best rpm {final.mean():.2f} (sd {final.std():.2f})")

    elif args.study == "windowing":
        windows = [None, 20]
        study = analysis.windowing_study(seeds, windows)
        rows = [("all" if w is None else w, seed, f"{study[w][i]:.6f}")
                for w in windows for i, seed in enumerate(seeds)]
        analysis._write_csv(out_dir / "windowing.csv", ("window", "seed", "rolling_mae"), rows)
        plots.render_windowing_box(study, out_dir / "windowing.png")
        test = analysis.mann_whitney(study[20], study[None])
        print(f"window 20 vs all history: p = {test.p:.5f}")
        for w in windows:
            label = "all" if w is None else f"last {w}"
            print(f"{label}: mean rolling MAE {study[w].mean():.2f}")

    else:   # cv
        records = analysis.landscape_records(n=78, seed=args.seeds)
        results = {
            "mlp": analysis.kfold_cv(records, analysis.mlp_factory(), runs=args.runs),
            "linear": analysis.kfold_cv(records, analysis.linear_factory(), runs=args.runs),
            "mean": analysis.kfold_cv(records, analysis.mean_factory(), runs=args.runs),
        }
        rows = [(name, run, f"{values[run]:.6f}")
                for name, values in results.items() for run in range(len(values))]
        analysis._write_csv(out_dir / "cv.csv", ("model", "run", "mae"), rows)
        plots.render_cv_bars(results, out_dir / "cv.png")
        for name, values in results.items():
            print(f"{name}: mean MAE {values.mean():.2f} (sd {values.std():.2f})")

    print(f"study output written to {out_dir}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vawtevo",
                                     description="design mining for paired turbines")
    parser.add_argument("--version", action="version", version=f"vawtevo {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="start a fresh run from a YAML config")
    p_run.add_argument("config", help="path to the run config YAML")
    p_run.add_argument("--mode", choices=MODES, default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--budget", type=int, default=None)
    p_run.add_argument("--backend", choices=("synthetic", "hardware"), default=None)
    p_run.add_argument("--out", default="runs", help="directory that holds run folders")
    _add_serve_flags(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_resume = sub.add_parser("resume", help="continue a run from its journal")
    p_resume.add_argument("journal", help="path to journal.jsonl")
    _add_serve_flags(p_resume)
    p_resume.set_defaults(func=_cmd_resume)

    p_report = sub.add_parser("report", help="render tables and figures from a journal")
    p_report.add_argument("journal", help="path to journal.jsonl")
    p_report.add_argument("--out", default=None, help="output directory")
    p_report.set_defaults(func=_cmd_report)

    p_stl = sub.add_parser("export-stl", help="write the printable STL for a genome")
    p_stl.add_argument("out", help="output .stl path")
    p_stl.add_argument("--genome", default=None,
                       help=f"{FLAT_LEN} integers, comma or space separated")
    p_stl.add_argument("--journal", default=None, help="journal to pull the genome from")
    p_stl.add_argument("--fab", type=int, default=None, help="fabrication index in the journal")
    p_stl.add_argument("--position", choices=("subject", "partner"), default="subject")
    p_stl.add_argument("--smooth-steps", type=int, default=50)
    p_stl.set_defaults(func=_cmd_export_stl)

    p_bench = sub.add_parser("bench", help="multi-seed comparison studies")
    p_bench.add_argument("--study", choices=("strategies", "windowing", "cv"), required=True)
    p_bench.add_argument("--seeds", type=int, default=10, help="number of seeds (0..n-1)")
    p_bench.add_argument("--runs", type=int, default=20, help="cv repetitions")
    p_bench.add_argument("--budget", type=int, default=160)
    p_bench.add_argument("--modes", default="cga,scga,scga-els",
                         help="comma-separated modes for the strategies study")
    p_bench.add_argument("--out", default="bench", help="output directory")
    p_bench.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except JournalCorruption as exc:
        print(f"journal corruption: {exc}", file=sys.stderr)
        return EXIT_CORRUPT


if __name__ == "__main__":
    sys.exit(main())
