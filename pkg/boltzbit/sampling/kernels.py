from __future__ import annotations

import math

import torch

from boltzbit.errors import ContractError, DomainError
from boltzbit.numerics import RandomStream, as_tensor
from boltzbit.targets import EuclideanSpace, Space


def _space(x: torch.Tensor, space: Space | None) -> Space:
    return space if space is not None else EuclideanSpace(x.shape[-1])


def forward_noise(
    x: torch.Tensor,
    t_from: float | torch.Tensor,
    t_to: float | torch.Tensor,
    rng: RandomStream | None = None,
    space: Space | None = None,
    noise: torch.Tensor | None = None,
) -> torch.Tensor:
    """x + √(t_to² − t_from²)·z. Noise is drawn from ``rng`` unless given; it is projected onto ``space``."""
    x = as_tensor(x)
    t_from, t_to = as_tensor(t_from), as_tensor(t_to)
    if bool((t_to <= t_from).any()) or bool((t_from < 0).any()):
        raise DomainError(f"Forward noise needs t_to > t_from >= 0, t_from={t_from}, t_to={t_to}")
    space = _space(x, space)
    if noise is None:
        if rng is None:
            raise ContractError("forward_noise needs either a random stream or explicit noise")
        noise = space.normal(math.prod(x.shape[:-1]), rng).reshape(x.shape)
    else:
        noise = space.project(noise)
    return x + torch.sqrt(t_to**2 - t_from**2) * noise


def ddim_sigma(t_n: float, t_prev: float, eta: float) -> float:
    return eta * math.sqrt((t_n**2 - t_prev**2) * t_prev**2 / t_n**2)


def ddim_kernel(model, x: torch.Tensor, t_n: float, t_prev: float, eta: float) -> tuple[torch.Tensor, float]:
    """Mean and standard deviation of the DDIM-style reverse kernel from t_n to t_prev."""
    t_n, t_prev = float(t_n), float(t_prev)
    if not t_prev < t_n:
        raise DomainError(f"Reverse kernel needs t_prev < t_n, t_prev={t_prev}, t_n={t_n}")
    sigma = ddim_sigma(t_n, t_prev, eta)
    if sigma**2 > t_prev**2:
        raise ContractError(f"Kernel variance exceeds t_prev², eta={eta}")
    ratio = math.sqrt((t_prev**2 - sigma**2) / t_n**2)
    x0_hat = model.denoise(x, t_n)
    return ratio * x + (1 - ratio) * x0_hat, sigma


def ddim_step(model, x: torch.Tensor, t_n: float, t_prev: float, eta: float, rng: RandomStream) -> torch.Tensor:
    """One reverse step; η = 1 is the DDPM kernel and η = 0 the deterministic Euler PF-ODE step."""
    x = as_tensor(x)
    mean, sigma = ddim_kernel(model, x, t_n, t_prev, eta)
    if sigma == 0.0:
        return mean
    return mean + sigma * model.space.normal(math.prod(x.shape[:-1]), rng).reshape(x.shape)
