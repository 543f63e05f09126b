"""Figure rendering for run reports and benchmark studies.

All figures render headless to files via the Agg backend; nothing here
opens a window.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  backend must be pinned first
import numpy as np  # noqa: E402


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def render_best_curve(best_so_far: Sequence[float], path: str | Path,
                      title: str = "best measured rpm") -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    xs = np.arange(1, len(best_so_far) + 1)
    ax.step(xs, best_so_far, where="post", color="#1565c0")
    ax.set_xlabel("evaluation")
    ax.set_ylabel("best rpm so far")
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def render_strategy_curves(study: Mapping[str, Mapping[str, np.ndarray]],
                           path: str | Path,
                           title: str = "best-so-far by strategy") -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    for mode, data in study.items():
        curves = np.asarray(data["curves"], dtype=np.float64)
        xs = np.arange(1, curves.shape[1] + 1)
        mean = curves.mean(axis=0)
        sem = curves.std(axis=0) / np.sqrt(curves.shape[0])
        line, = ax.plot(xs, mean, label=mode)
        ax.fill_between(xs, mean - sem, mean + sem, alpha=0.2, color=line.get_color())
    ax.set_xlabel("evaluation")
    ax.set_ylabel("mean best rpm so far")
    ax.set_title(title)
    ax.legend()
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def render_windowing_box(study: Mapping, path: str | Path,
                         title: str = "one-step-ahead error by training window") -> Path:
    labels = ["all" if w is None else str(w) for w in study]
    data = [np.asarray(v, dtype=np.float64) for v in study.values()]
    fig, ax = plt.subplots(figsize=(6, 4))
    kwargs = {"tick_labels": labels} if _boxplot_takes_tick_labels() else {"labels": labels}
    ax.boxplot(data, **kwargs)
    ax.set_xlabel("training window")
    ax.set_ylabel("rolling MAE")
    ax.set_title(title)
    ax.grid(True, axis="y", alpha=0.3)
    return _save(fig, path)


def _boxplot_takes_tick_labels() -> bool:
    # the labels kwarg was renamed in matplotlib 3.9
    version = tuple(int(p) for p in matplotlib.__version__.split(".")[:2])
    return version >= (3, 9)


def render_cv_bars(results: Mapping[str, np.ndarray], path: str | Path,
                   title: str = "cross-validated MAE by model") -> Path:
    names = list(results)
    means = [float(np.mean(results[n])) for n in names]
    sds = [float(np.std(results[n])) for n in names]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(names, means, yerr=sds, capsize=4, color="#42a5f5")
    ax.set_ylabel("MAE")
    ax.set_title(title)
    ax.grid(True, axis="y", alpha=0.3)
    return _save(fig, path)
