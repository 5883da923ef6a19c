"""Figures written next to the CSV reports.

matplotlib is optional (``pip install .[plot]``); without it the functions
log a warning and return ``None``.
"""

from __future__ import annotations

import csv
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

log = logging.getLogger(__name__)


def _pyplot():
    try:
        import matplotlib
    except ImportError:
        log.warning("matplotlib is not installed; skipping figures")
        return None
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def read_metrics(path: Path) -> Dict[str, List[float]]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {key: [float(r[key]) for r in rows] for key in (rows[0].keys() if rows else [])}


def plot_training(metrics_files: Sequence[Path], out_path: Path, title: str = "") -> Optional[Path]:
    """Mean actor loss and mean episode return against meta-steps, one line per model."""
    plt = _pyplot()
    if plt is None:
        return None
    fig, (ax_loss, ax_ret) = plt.subplots(1, 2, figsize=(10, 3.8))
    for path in metrics_files:
        m = read_metrics(Path(path))
        if not m:
            continue
        label = Path(path).stem.replace("metrics_", "")
        ax_loss.plot(m["meta_steps"], m["mean_actor_loss"], lw=1.2, label=label)
        ax_ret.plot(m["meta_steps"], m["mean_episode_return"], lw=1.2, label=label)
    ax_loss.set_xlabel("meta-steps")
    ax_loss.set_ylabel("mean actor loss")
    ax_ret.set_xlabel("meta-steps")
    ax_ret.set_ylabel("mean episode return (summed)")
    ax_ret.legend(frameon=False, fontsize=8)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return Path(out_path)


def plot_evaluation(rewards: Sequence[float], lengths: Sequence[int], models: Sequence[int],
                    out_path: Path, optimum: Optional[float] = None, title: str = "") -> Optional[Path]:
    """Scatter of reported reward against episode length for every rollout."""
    plt = _pyplot()
    if plt is None:
        return None
    fig, ax = plt.subplots(figsize=(5.5, 4))
    sc = ax.scatter(lengths, rewards, c=models, cmap="viridis", s=18, alpha=0.8)
    if optimum is not None:
        ax.axhline(optimum, color="0.4", ls="--", lw=1, label="optimum")
        ax.legend(frameon=False, fontsize=8)
    if len(set(models)) > 1:
        fig.colorbar(sc, ax=ax, label="model")
    ax.set_xlabel("episode length (meta-actions)")
    ax.set_ylabel("reward")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return Path(out_path)
