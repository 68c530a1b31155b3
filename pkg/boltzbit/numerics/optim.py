from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import torch

from boltzbit.errors import ShapeError, TrainingError


@dataclass
class AdamState:
    first_moment: torch.Tensor
    second_moment: torch.Tensor
    step_count: int = 0
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps_stability: float = 1e-8

    @classmethod
    def zeros_like(cls, params: torch.Tensor, **kwargs) -> AdamState:
        return cls(torch.zeros_like(params), torch.zeros_like(params), **kwargs)


def adam_step(params: torch.Tensor, grads: torch.Tensor, state: AdamState) -> tuple[torch.Tensor, AdamState]:
    """One bias-corrected Adam update. Returns new parameters and a new state; inputs are left untouched."""
    if params.shape != grads.shape or params.shape != state.first_moment.shape:
        raise ShapeError(
            f"Adam shapes differ, params={tuple(params.shape)}, grads={tuple(grads.shape)}, "
            f"state={tuple(state.first_moment.shape)}"
        )
    step = state.step_count + 1
    if bool(torch.isnan(grads).any()):
        raise TrainingError("NaN in gradient", step=step)

    m = state.beta1 * state.first_moment + (1 - state.beta1) * grads
    v = state.beta2 * state.second_moment + (1 - state.beta2) * grads * grads
    m_hat = m / (1 - state.beta1**step)
    v_hat = v / (1 - state.beta2**step)
    new_params = params - state.learning_rate * m_hat / (v_hat.sqrt() + state.eps_stability)

    return new_params, AdamState(
        first_moment=m,
        second_moment=v,
        step_count=step,
        learning_rate=state.learning_rate,
        beta1=state.beta1,
        beta2=state.beta2,
        eps_stability=state.eps_stability,
    )


@torch.no_grad()
def ema_update(target: Iterable[torch.Tensor], online: Iterable[torch.Tensor], mu: float) -> None:
    """In place: target <- mu * target + (1 - mu) * online."""
    for t, o in zip(target, online, strict=True):
        t.mul_(mu).add_(o, alpha=1 - mu)
