from __future__ import annotations

from typing import Callable

import torch

from boltzbit.errors import CapabilityError, DomainError

from .random import RandomStream


def value_and_grad(
    f: Callable[[torch.Tensor], torch.Tensor], params: torch.Tensor
) -> tuple[torch.Tensor, torch.Tensor]:
    """Value and reverse-mode gradient of a scalar function at ``params``.

    A fresh graph is recorded for every call; nothing is retained afterwards.
    """
    if not bool(torch.isfinite(params).all()):
        raise DomainError("Gradient requested at non-finite parameters")
    leaf = params.detach().clone().requires_grad_(True)
    with torch.enable_grad():
        value = f(leaf)
    if value.numel() != 1:
        raise CapabilityError(f"grad needs a scalar function, got shape={tuple(value.shape)}")
    if not value.requires_grad:
        # constant in params
        return value.detach().reshape(()), torch.zeros_like(leaf)
    try:
        (g,) = torch.autograd.grad(value.reshape(()), leaf, allow_unused=True)
    except RuntimeError as e:
        raise CapabilityError(f"Unsupported operation in graph: {e}") from e
    return value.detach().reshape(()), torch.zeros_like(leaf) if g is None else g


def grad(f: Callable[[torch.Tensor], torch.Tensor], params: torch.Tensor) -> torch.Tensor:
    """Reverse-mode gradient of a scalar function at ``params``."""
    return value_and_grad(f, params)[1]


def check_grad(
    f: Callable[[torch.Tensor], torch.Tensor],
    params: torch.Tensor,
    rng: RandomStream,
    n_coords: int = 100,
    step: float = 1e-5,
) -> float:
    """Worst relative error between ``grad`` and central finite differences on random coordinates."""
    flat = params.detach().reshape(-1)
    analytic = grad(f, params).reshape(-1)
    coords = rng.integers(0, flat.numel(), size=min(n_coords, flat.numel()))

    worst = 0.0
    with torch.no_grad():
        for idx in coords.tolist():
            plus, minus = flat.clone(), flat.clone()
            plus[idx] += step
            minus[idx] -= step
            numeric = (f(plus.reshape(params.shape)) - f(minus.reshape(params.shape))).item() / (2 * step)
            exact = analytic[idx].item()
            scale = max(abs(exact), abs(numeric), 1e-6)
            worst = max(worst, abs(exact - numeric) / scale)
    return worst


class _Bound(torch.nn.Module):
    def __init__(self, model: torch.nn.Module, loss: Callable[[torch.nn.Module], torch.Tensor]):
        super().__init__()
        self.model = model
        self.loss = loss

    def forward(self) -> torch.Tensor:
        return self.loss(self.model)


def parameter_function(
    model: torch.nn.Module, loss: Callable[[torch.nn.Module], torch.Tensor]
) -> tuple[Callable[[torch.Tensor], torch.Tensor], torch.Tensor]:
    """Express ``loss(model)`` as a function of the flattened parameter vector.

    Returns the function and the current flat parameters, so it can be handed to ``grad`` or ``check_grad``.
    """
    named = [(name, p) for name, p in model.named_parameters() if p.requires_grad]
    flat = torch.cat([p.detach().reshape(-1) for _, p in named])
    bound = _Bound(model, loss)

    def f(vector: torch.Tensor) -> torch.Tensor:
        chunks = vector.split([p.numel() for _, p in named])
        tensors = {f"model.{name}": chunk.view(p.shape) for (name, p), chunk in zip(named, chunks)}
        return torch.func.functional_call(bound, tensors, ())

    return f, flat
