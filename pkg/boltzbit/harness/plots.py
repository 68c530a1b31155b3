"""Static SVG figures. Ids are salted with a fixed string and no date is embedded, so reruns are byte-identical."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import torch  # noqa: E402

logger = logging.getLogger(__name__)

STYLE = {
    "svg.hashsalt": "boltzbit",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.frameon": False,
}

LABELS = {"ddpm_is": "DDPM + IS", "bctm_is": "BCTM + IS", "mc_only": "DDPM + MC"}

# points drawn per scatter panel
SCATTER_POINTS = 2000


def _save(fig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info(f"Wrote figure, path={path}")


def ess_curve_svg(path: Path, curves: dict[str, Sequence[tuple[int, float, float, float]]], title: str = "") -> None:
    """Mean ESS against NFE per pipeline, with the first-to-third quartile band shaded.

    ``curves`` maps a pipeline to (nfe, q1, mean, q3) points sorted by NFE.
    """
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.5))
        for pipeline, points in curves.items():
            nfe, q1, mean, q3 = zip(*points)
            (line,) = ax.plot(nfe, mean, marker="o", markersize=3, label=LABELS.get(pipeline, pipeline))
            ax.fill_between(nfe, q1, q3, color=line.get_color(), alpha=0.25, linewidth=0)
        ax.set_xscale("log")
        ax.set_xlabel("NFE")
        ax.set_ylabel("ESS (%)")
        ax.set_ylim(0, 105)
        if title:
            ax.set_title(title)
        ax.legend()
        _save(fig, path)


def alignment_svg(path: Path, panels: dict[str, tuple[torch.Tensor, torch.Tensor]]) -> None:
    """Proposal against target samples, one row per target design and one column per grid time t_0…t_{N−1}.

    Each panel value holds the proposal and target paths, both (N+1, K, d). Two-dimensional data is scattered on
    its first two coordinates; one-dimensional data is drawn as overlaid histograms.
    """
    designs = list(panels)
    n_times = next(iter(panels.values()))[0].shape[0] - 1
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(len(designs), n_times, figsize=(2.6 * n_times, 2.4 * len(designs)), squeeze=False)
        for row, design in enumerate(designs):
            proposal, target = panels[design]
            for index in range(n_times):
                ax = axes[row][index]
                p, q = proposal[index, :SCATTER_POINTS], target[index, :SCATTER_POINTS]
                if p.shape[-1] >= 2:
                    ax.scatter(q[:, 0], q[:, 1], s=1, alpha=0.4, label="target")
                    ax.scatter(p[:, 0], p[:, 1], s=1, alpha=0.4, label="proposal")
                else:
                    ax.hist(q[:, 0].numpy(), bins=60, alpha=0.5, density=True, label="target")
                    ax.hist(p[:, 0].numpy(), bins=60, alpha=0.5, density=True, label="proposal")
                ax.set_title(f"{design}, $t_{index}$")
        axes[0][0].legend(markerscale=4)
        fig.tight_layout()
        _save(fig, path)
