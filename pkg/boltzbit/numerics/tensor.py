from __future__ import annotations

import math
from typing import Sequence

import torch

from boltzbit.errors import DomainError, ShapeError
from boltzbit.settings import DTYPE

LOG_2PI = math.log(2.0 * math.pi)


def as_tensor(values: torch.Tensor | Sequence[float] | float) -> torch.Tensor:
    if isinstance(values, torch.Tensor):
        return values if values.dtype == DTYPE else values.to(DTYPE)
    return torch.as_tensor(values, dtype=DTYPE)


def gaussian_log_density(
    x: torch.Tensor,
    mean: torch.Tensor,
    variance: torch.Tensor | float,
    dim: int | None = None,
) -> torch.Tensor:
    """Log-density of an isotropic Gaussian N(mean, variance·I).

    The last axis of ``x`` is the event axis; leading axes are batch axes and one value is returned per row.
    ``dim`` overrides the dimension used in the normalizer, which is how densities on the zero-CoG
    subspace are evaluated with ambient coordinates. ``variance`` may be a tensor broadcastable to the batch.
    """
    x = as_tensor(x)
    mean = as_tensor(mean)
    try:
        diff = x - mean
    except RuntimeError as e:
        raise ShapeError(f"Shape mismatch, x={tuple(x.shape)}, mean={tuple(mean.shape)}") from e
    if diff.shape != x.shape:
        raise ShapeError(f"Mean does not broadcast onto x, x={tuple(x.shape)}, mean={tuple(mean.shape)}")

    variance = as_tensor(variance)
    if bool((variance <= 0).any()):
        raise DomainError(f"Gaussian variance must be positive, variance={variance.min().item()}")

    d = x.shape[-1] if dim is None else dim
    return -0.5 * d * (LOG_2PI + torch.log(variance)) - 0.5 * (diff * diff).sum(dim=-1) / variance


def log_sum_exp(values: torch.Tensor | Sequence[float], dim: int = -1) -> torch.Tensor:
    values = as_tensor(values)
    if values.numel() == 0:
        raise DomainError("log_sum_exp of an empty array")
    return torch.logsumexp(values, dim=dim)
