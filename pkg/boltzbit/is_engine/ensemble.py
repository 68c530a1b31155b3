from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import torch

from boltzbit.errors import DegenerateEnsembleError, ShapeError
from boltzbit.numerics import as_tensor, log_sum_exp
from boltzbit.sampling import coordinate_columns, write_csv
from boltzbit.targets import TestFunction, eval_test_function
from boltzbit.telemetry import ensemble_ess

logger = logging.getLogger(__name__)

ESS_ROUNDING = 1e-9


@dataclass
class WeightedEnsemble:
    """K terminal samples with log importance weights; weights stay in log space until normalized."""

    samples: torch.Tensor
    log_weights: torch.Tensor
    trajectories: torch.Tensor | None = None  # (N+1, K, d), indexed like the grid
    log_proposal: torch.Tensor | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.samples = as_tensor(self.samples)
        self.log_weights = as_tensor(self.log_weights)
        if self.log_weights.shape != self.samples.shape[:1]:
            raise ShapeError(
                f"One log weight per sample, samples={tuple(self.samples.shape)}, "
                f"log_weights={tuple(self.log_weights.shape)}"
            )
        if bool(torch.isnan(self.log_weights).any()) or bool((self.log_weights == math.inf).any()):
            raise DegenerateEnsembleError("Log weights must be finite or -inf")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def nfe(self) -> int | None:
        return self.metadata.get("nfe")

    def normalized_weights(self) -> torch.Tensor:
        total = log_sum_exp(self.log_weights.detach())
        if not bool(torch.isfinite(total)):
            raise DegenerateEnsembleError("All log weights are -inf")
        return torch.exp(self.log_weights.detach() - total)

    def to_csv(self, path: Path, metadata: dict | None = None) -> None:
        rows = torch.cat([self.samples.detach(), self.log_weights.detach().unsqueeze(-1)], dim=-1)
        columns = coordinate_columns(self.samples.shape[-1]) + ["log_weight"]
        write_csv(path, rows, columns, {**self.metadata, **(metadata or {})})
        logger.info(f"Wrote ensemble, path={path}, n={len(self)}")


def ess(ensemble: WeightedEnsemble) -> float:
    """1 / Σ w̄², evaluated as exp(2·LSE(lw) − LSE(2·lw))."""
    log_weights = ensemble.log_weights.detach()
    total = log_sum_exp(log_weights)
    if not bool(torch.isfinite(total)):
        raise DegenerateEnsembleError(f"Log weights do not sum to a finite value, lse={total.item()}")
    value = math.exp(2 * total.item() - log_sum_exp(2 * log_weights).item())
    n = float(len(ensemble))
    if not 1.0 - ESS_ROUNDING <= value <= n * (1.0 + ESS_ROUNDING):
        raise DegenerateEnsembleError(f"ESS outside [1, n], ess={value}, n={len(ensemble)}")
    # rounding only
    value = min(max(value, 1.0), n)
    ensemble_ess.set(value)
    if value < 0.01 * len(ensemble):
        logger.warning(f"ESS below 1% of the ensemble, ess={value:.1f}, n={len(ensemble)}")
    return value


def snis_estimate(ensemble: WeightedEnsemble, phi: TestFunction | str) -> tuple[float, float]:
    """Self-normalized estimate of E[φ] and its delta-method standard error √(Σ w̄²(φ − estimate)²)."""
    weights = ensemble.normalized_weights()
    values = eval_test_function(phi, ensemble.samples.detach())
    mask = weights > 0
    estimate = (weights[mask] * values[mask]).sum()
    std_error = torch.sqrt((weights[mask] ** 2 * (values[mask] - estimate) ** 2).sum())
    return estimate.item(), std_error.item()


def merge_ensembles(shards: Sequence[WeightedEnsemble]) -> WeightedEnsemble:
    """Concatenate shards built with distinct stream ids; log weights are comparable across shards."""
    if not shards:
        raise DegenerateEnsembleError("Nothing to merge")
    nfe = {shard.nfe for shard in shards}
    if len(nfe) > 1:
        raise ShapeError(f"Shards disagree on NFE, nfe={sorted(nfe, key=str)}")
    trajectories = None
    if all(shard.trajectories is not None for shard in shards):
        trajectories = torch.cat([shard.trajectories for shard in shards], dim=1)  # type: ignore[misc]
    log_proposal = None
    if all(shard.log_proposal is not None for shard in shards):
        log_proposal = torch.cat([shard.log_proposal for shard in shards])  # type: ignore[misc]
    metadata = {**shards[0].metadata, "shards": len(shards)}
    return WeightedEnsemble(
        torch.cat([shard.samples for shard in shards]),
        torch.cat([shard.log_weights for shard in shards]),
        trajectories,
        log_proposal,
        metadata,
    )
