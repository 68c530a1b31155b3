from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import torch
from tqdm import tqdm

from boltzbit.errors import ConfigError
from boltzbit.numerics import RandomStream
from boltzbit.schema.targets import McmcConfig
from boltzbit.settings import config

from .dw4 import Dw4Target

logger = logging.getLogger(__name__)

ACCEPTANCE_BOUNDS = (0.1, 0.9)


@dataclass
class McmcResult:
    samples: torch.Tensor
    acceptance_rate: float
    step_size: float
    warnings: list[str] = field(default_factory=list)


def metropolis_log_accept(log_p_new: torch.Tensor, log_p_old: torch.Tensor) -> torch.Tensor:
    """log min(1, p_new / p_old) for a symmetric proposal. NaN proposals are never accepted."""
    ratio = torch.clamp(log_p_new - log_p_old, max=0.0)
    return torch.nan_to_num(ratio, nan=-math.inf)


def rest_configuration(target: Dw4Target) -> torch.Tensor:
    """Particles on a regular polygon with neighbouring distance d0, centred at the origin."""
    n = target.n_particles
    if target.space_dim == 1:
        positions = torch.arange(n, dtype=torch.float64).unsqueeze(-1) * target.d0
    else:
        radius = target.d0 / (2 * math.sin(math.pi / n))
        angles = 2 * math.pi * torch.arange(n, dtype=torch.float64) / n
        positions = torch.zeros(n, target.space_dim, dtype=torch.float64)
        positions[:, 0] = radius * torch.cos(angles)
        positions[:, 1] = radius * torch.sin(angles)
    return target.space.project(positions.reshape(-1))


def _draw_normal(streams: list[RandomStream], dim: int) -> torch.Tensor:
    return torch.stack([s.normal(dim) for s in streams])


def _draw_uniform(streams: list[RandomStream]) -> torch.Tensor:
    return torch.stack([s.uniform() for s in streams])


def mcmc_reference(target: Dw4Target, n: int, mcmc: McmcConfig, rng: RandomStream) -> McmcResult:
    """Random-walk Metropolis samples of ``target`` on its zero-CoG subspace.

    Chains run side by side, each with its own stream. During burn-in the shared step size is adapted every
    ``adapt_window`` iterations toward ``adapt_target`` acceptance; it is frozen afterwards.
    """
    if n < 1:
        raise ConfigError(f"Sample count must be positive, n={n}")
    space = target.space
    streams = [rng.spawn((rng.stream_id << 16) + c + 1) for c in range(mcmc.chains)]

    x = space.project(rest_configuration(target) + mcmc.init_scale * _draw_normal(streams, space.dim))
    log_p = target.unnorm_log_density(x)
    step_size = mcmc.step_size

    def transition() -> torch.Tensor:
        nonlocal x, log_p
        proposal = space.project(x + step_size * _draw_normal(streams, space.dim))
        log_p_new = target.unnorm_log_density(proposal)
        accept = torch.log(_draw_uniform(streams)) < metropolis_log_accept(log_p_new, log_p)
        x = torch.where(accept.unsqueeze(-1), proposal, x)
        log_p = torch.where(accept, log_p_new, log_p)
        return accept

    window_accepts = 0.0
    for i in tqdm(range(mcmc.burn_in), desc="mcmc burn-in", disable=not config.progress):
        window_accepts += transition().double().mean().item()
        if (i + 1) % mcmc.adapt_window == 0:
            rate = window_accepts / mcmc.adapt_window
            step_size *= math.exp(rate - mcmc.adapt_target)
            window_accepts = 0.0

    collected: list[torch.Tensor] = []
    accepted, proposed = 0, 0
    rounds = math.ceil(n / mcmc.chains)
    for _ in tqdm(range(rounds), desc="mcmc sampling", disable=not config.progress):
        for _ in range(mcmc.thinning):
            accept = transition()
            accepted += int(accept.sum())
            proposed += accept.numel()
        collected.append(x.clone())

    rate = accepted / proposed
    logger.info(f"MCMC finished, n={n}, chains={mcmc.chains}, acceptance={rate:.3f}, step_size={step_size:.4f}")
    result = McmcResult(torch.cat(collected)[:n], rate, step_size)
    low, high = ACCEPTANCE_BOUNDS
    if not low <= rate <= high:
        message = f"MCMC acceptance outside [{low}, {high}], acceptance={rate:.3f}"
        logger.warning(message)
        result.warnings.append(message)
    return result


def save_reservoir(path: Path, result: McmcResult, target: Dw4Target, seed: int) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    torch.save(
        {
            "samples": result.samples,
            "acceptance_rate": result.acceptance_rate,
            "step_size": result.step_size,
            "warnings": result.warnings,
            "target": target.__dict__,
            "seed": seed,
        },
        path,
    )
    logger.info(f"Saved MCMC reservoir, path={path}, n={len(result.samples)}")


def load_reservoir(path: Path, target: Dw4Target | None = None) -> McmcResult:
    if not path.exists():
        raise ConfigError(f"MCMC reservoir not found, path={path}")
    data = torch.load(path, weights_only=True)
    if target is not None and data["target"] != target.__dict__:
        raise ConfigError(f"MCMC reservoir was drawn for a different target, path={path}")
    return McmcResult(data["samples"], data["acceptance_rate"], data["step_size"], list(data["warnings"]))
