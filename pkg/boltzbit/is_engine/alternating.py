from __future__ import annotations

import logging
from typing import Sequence

import torch

from boltzbit.errors import ContractError
from boltzbit.numerics import RandomStream, gaussian_log_density

from .ensemble import WeightedEnsemble
from .grid import TimeGrid

logger = logging.getLogger(__name__)


def _noise(noise: Sequence[torch.Tensor] | None, index: int, model, n: int, rng: RandomStream | None) -> torch.Tensor:
    if noise is not None:
        return model.space.project(noise[index])
    if rng is None:
        raise ContractError("Rollouts need either a random stream or explicit noise")
    return model.space.normal(n, rng)


def _check_path(path: torch.Tensor | Sequence[torch.Tensor | None], grid: TimeGrid) -> None:
    if len(path) != grid.n_steps + 1 or any(x is None for x in path):
        raise ContractError(f"Trajectory must hold x at every grid time, expected {grid.n_steps + 1} slots")


def target_traverse_count(grid: TimeGrid) -> int:
    """Target kernels whose mean needs a network hop; t^(tar) = t is a plain diffusion kernel."""
    return int((grid.t_tar.detach() != grid.t[:-1].detach()).sum())


def proposal_log_density(model, path: torch.Tensor | Sequence[torch.Tensor], grid: TimeGrid) -> torch.Tensor:
    """log N(x_N; 0, T²) + Σ_n log N(x_{n−1}; G(x_n, t_n → t_{n−1}^(prop)), (t_{n−1}² − (t_{n−1}^(prop))²)·I)."""
    _check_path(path, grid)
    n_steps, event_dim = grid.n_steps, model.space.event_dim
    total = gaussian_log_density(path[n_steps], torch.zeros_like(path[n_steps]), grid.t[n_steps] ** 2, dim=event_dim)
    variances = grid.proposal_variances()
    for n in range(n_steps, 0, -1):
        mean = model.traverse(path[n], grid.t[n], grid.t_prop[n - 1])
        total = total + gaussian_log_density(path[n - 1], mean, variances[n - 1], dim=event_dim)
    return total


def proposal_rollout(
    model,
    grid: TimeGrid,
    n: int,
    rng: RandomStream | None = None,
    noise: Sequence[torch.Tensor] | None = None,
) -> WeightedEnsemble:
    """Sample the alternating proposal: one deterministic hop to t^(prop), then Gaussian noise up to the next t.

    ``noise`` (N+1 standard normal tensors, prior first) replaces draws from ``rng``. The returned ensemble carries
    the proposal log-density and log weights −log p until the target part is added.
    """
    grid.detach().validate(model.eps, model.t_max)
    n_steps, event_dim = grid.n_steps, model.space.event_dim
    variances = grid.proposal_variances()

    x = grid.t[n_steps] * _noise(noise, 0, model, n, rng)
    log_density = gaussian_log_density(x, torch.zeros_like(x), grid.t[n_steps] ** 2, dim=event_dim)
    path = [x]
    for k, m in enumerate(range(n_steps, 0, -1), start=1):
        mean = model.traverse(x, grid.t[m], grid.t_prop[m - 1])
        x = mean + torch.sqrt(variances[m - 1]) * _noise(noise, k, model, n, rng)
        log_density = log_density + gaussian_log_density(x, mean, variances[m - 1], dim=event_dim)
        path.append(x)

    trajectories = torch.stack(path[::-1])
    return WeightedEnsemble(
        trajectories[0].detach(),
        -log_density.detach(),
        trajectories,
        log_density,
        {"nfe": n_steps, "grid_hash": grid.grid_hash()},
    )


def target_log_density(model, path: torch.Tensor | Sequence[torch.Tensor], target, grid: TimeGrid) -> torch.Tensor:
    """log π̄(x_0) + Σ_n log N(x_n; G(x_{n−1}, t_{n−1} → t_{n−1}^(tar)), (t_n² − (t_{n−1}^(tar))²)·I)."""
    _check_path(path, grid)
    event_dim = model.space.event_dim
    variances = grid.target_variances()
    total = target.unnorm_log_density(path[0])
    for n in range(1, grid.n_steps + 1):
        mean = _target_mean(model, path[n - 1], grid, n - 1)
        total = total + gaussian_log_density(path[n], mean, variances[n - 1], dim=event_dim)
    return total


def _target_mean(model, x: torch.Tensor, grid: TimeGrid, index: int) -> torch.Tensor:
    if grid.t_tar[index].item() == grid.t[index].item():
        return x
    return model.traverse(x, grid.t[index], grid.t_tar[index])


def target_rollout(
    model,
    grid: TimeGrid,
    x0: torch.Tensor,
    rng: RandomStream | None = None,
    noise: Sequence[torch.Tensor] | None = None,
) -> torch.Tensor:
    """Sample the target joint forward from given x_{t_0}: a hop to t^(tar), then noise up to the next t.

    Returns the ascending path (N+1, K, d). ``noise`` holds N standard normal tensors.
    """
    variances = grid.target_variances()
    x = model.space.project(x0)
    path = [x]
    for n in range(1, grid.n_steps + 1):
        mean = _target_mean(model, x, grid, n - 1)
        x = mean + torch.sqrt(variances[n - 1]) * _noise(noise, n - 1, model, len(x0), rng)
        path.append(x)
    return torch.stack(path)


def bctm_is(model, target, grid: TimeGrid, n: int, rng: RandomStream) -> WeightedEnsemble:
    """Importance sampling with the alternating ODE–SDE proposal and target. Weights are evaluated at x_{t_0}."""
    grid = grid.detach()
    with torch.no_grad():
        proposal = proposal_rollout(model, grid, n, rng)
        log_target = target_log_density(model, proposal.trajectories, target, grid)  # type: ignore[arg-type]
    nfe = grid.n_steps + target_traverse_count(grid)
    logger.debug(f"BCTM IS ensemble drawn, n={n}, nfe={nfe}, stream={rng.stream_id}")
    return WeightedEnsemble(
        proposal.samples,
        log_target - proposal.log_proposal,  # type: ignore[operator]
        proposal.trajectories,
        proposal.log_proposal,
        {**proposal.metadata, "pipeline": "bctm_is", "nfe": nfe, "seed": rng.seed, "stream": rng.stream_id},
    )
