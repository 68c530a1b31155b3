from __future__ import annotations

import logging

import torch

from boltzbit.errors import DegenerateProposalError
from boltzbit.numerics import RandomStream, gaussian_log_density
from boltzbit.sampling import Schedule, ancestral_sample

from .ensemble import WeightedEnsemble

logger = logging.getLogger(__name__)


def forward_log_density(path: torch.Tensor, times: torch.Tensor, event_dim: int) -> torch.Tensor:
    """Σ_n log N(x_n; x_{n−1}, (t_n² − t_{n−1}²)·I) over an ascending path (N+1, K, d)."""
    total = torch.zeros(path.shape[1], dtype=path.dtype)
    for n in range(1, len(times)):
        total = total + gaussian_log_density(path[n], path[n - 1], times[n] ** 2 - times[n - 1] ** 2, dim=event_dim)
    return total


def baseline_ddpm_is(model, target, schedule: Schedule, eta: float, n: int, rng: RandomStream) -> WeightedEnsemble:
    """Joint-space importance sampling of reverse diffusion chains against the forward noising chain.

    log w = log π̄(x_0) + Σ log q(x_n | x_{n−1}) − log N(x_N; 0, T²) − Σ log p(x_{n−1} | x_n).
    """
    if eta <= 0:
        raise DegenerateProposalError(f"Deterministic reverse kernels have no density, eta={eta}")
    batch = ancestral_sample(model, schedule, eta, n, rng, record=True)
    path = batch.trajectory.flip(0)  # type: ignore[union-attr]
    log_target = target.unnorm_log_density(path[0]) + forward_log_density(
        path, schedule.times, model.space.event_dim
    )
    log_weights = log_target - batch.log_density  # type: ignore[operator]
    return WeightedEnsemble(
        path[0],
        log_weights.detach(),
        path,
        batch.log_density,
        {
            "pipeline": "ddpm_is",
            "nfe": schedule.n_steps,
            "eta": eta,
            "seed": rng.seed,
            "stream": rng.stream_id,
            "schedule": schedule.describe(),
        },
    )
