from __future__ import annotations

from typing import Sequence

import torch

from boltzbit.is_engine import TimeGrid, proposal_log_density, target_log_density, target_rollout
from boltzbit.numerics import RandomStream


def forward_kl_terms(
    grid: TimeGrid,
    model,
    target,
    x0: torch.Tensor,
    rng: RandomStream | None = None,
    noise: Sequence[torch.Tensor] | None = None,
) -> torch.Tensor:
    """Per-path log target joint − log proposal joint on paths rolled forward from the given x_{t_0}."""
    path = target_rollout(model, grid, x0, rng=rng, noise=noise)
    return target_log_density(model, path, target, grid) - proposal_log_density(model, path, grid)


def forward_kl_objective(
    grid: TimeGrid,
    model,
    target,
    target_samples: torch.Tensor,
    m: int,
    rng: RandomStream,
    noise: Sequence[torch.Tensor] | None = None,
) -> torch.Tensor:
    """Monte Carlo forward KL between target and proposal joints, up to the log normalizer of π.

    ``m`` starting points are resampled with replacement from ``target_samples``, which carry no gradient.
    Gradients reach the grid through reparameterized path noise.
    """
    x0 = target_samples[torch.from_numpy(rng.integers(0, len(target_samples), size=m))].detach()
    if noise is None:
        noise = [model.space.normal(m, rng) for _ in range(grid.n_steps)]
    return forward_kl_terms(grid, model, target, x0, noise=noise).mean()
