from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

from boltzbit.errors import TrainingError

COLUMNS = ["iteration", "loss", "grad_norm", "ctm", "dsm"]


@dataclass
class TrainReport:
    iterations: list[int] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)
    grad_norms: list[float] = field(default_factory=list)
    ctm_losses: list[float | None] = field(default_factory=list)
    dsm_losses: list[float | None] = field(default_factory=list)
    snapshots: list[dict] = field(default_factory=list)  # EMA evaluations: iteration, eval_loss, best
    wall_clock: float = 0.0

    def record(
        self, iteration: int, loss: float, grad_norm: float, ctm: float | None = None, dsm: float | None = None
    ) -> None:
        if not math.isfinite(loss):
            raise TrainingError(f"Divergent loss, loss={loss}", step=iteration)
        self.iterations.append(iteration)
        self.losses.append(loss)
        self.grad_norms.append(grad_norm)
        self.ctm_losses.append(ctm)
        self.dsm_losses.append(dsm)

    def snapshot(self, iteration: int, eval_loss: float, best: bool) -> None:
        self.snapshots.append({"iteration": iteration, "eval_loss": eval_loss, "best": best})

    @property
    def final_loss(self) -> float | None:
        return self.losses[-1] if self.losses else None

    def to_csv(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(COLUMNS)
            for row in zip(self.iterations, self.losses, self.grad_norms, self.ctm_losses, self.dsm_losses):
                writer.writerow(["" if value is None else repr(value) for value in row])
