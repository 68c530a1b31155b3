from __future__ import annotations

from typing import Callable

import torch

from boltzbit.models.networks import batch_times
from boltzbit.numerics import as_tensor
from boltzbit.settings import config
from boltzbit.targets import Space
from boltzbit.telemetry import network_evaluations

ScoreFn = Callable[[torch.Tensor, torch.Tensor], torch.Tensor]


def _column(t: torch.Tensor | float, x: torch.Tensor) -> torch.Tensor:
    t = as_tensor(t)
    return t.expand(x.shape[:-1]) if t.ndim == 0 else t


def _drift(score_fn: ScoreFn, x: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
    # PF ODE with f = 0, g = sqrt(2t): dx/dt = -t * score
    return -t.unsqueeze(-1) * score_fn(x, t)


def heun_step(score_fn: ScoreFn, x: torch.Tensor, t: torch.Tensor | float, u: torch.Tensor | float) -> torch.Tensor:
    """One Heun step of the PF ODE from t to u, either direction. Rows with u == t are returned unchanged."""
    x = as_tensor(x)
    t, u = _column(t, x), _column(u, x)
    still = u == t
    if bool(still.all()):
        return x.clone()
    dt = (u - t).unsqueeze(-1)
    d1 = _drift(score_fn, x, t)
    x_euler = x + dt * d1
    d2 = _drift(score_fn, x_euler, u)
    return torch.where(still.unsqueeze(-1), x, x + dt * 0.5 * (d1 + d2))


def heun_integrate(
    score_fn: ScoreFn, x: torch.Tensor, t: torch.Tensor | float, u: torch.Tensor | float, steps: int
) -> torch.Tensor:
    """``steps`` Heun steps from t to u, evenly spaced in log-time."""
    x = as_tensor(x)
    t, u = _column(t, x), _column(u, x)
    log_t, log_u = torch.log(t), torch.log(u)
    current = t
    for i in range(1, steps + 1):
        following = u if i == steps else torch.exp(log_t + (log_u - log_t) * i / steps)
        x = heun_step(score_fn, x, current, following)
        current = following
    return x


class SolverFlow:
    """Trajectory model that traverses the PF ODE of a score function with ``steps`` Heun steps.

    Stands in for a distilled model when the score is known in closed form; one traversal counts as one
    evaluation, like a network call.
    """

    kind = "traverse"

    def __init__(
        self, score_fn: ScoreFn, space: Space, steps: int = 256, eps: float | None = None, t_max: float | None = None
    ):
        self.score_fn = score_fn
        self.space = space
        self.steps = steps
        self.eps = config.eps if eps is None else eps
        self.t_max = config.t_max if t_max is None else t_max
        self.evaluations = 0

    def traverse(self, x: torch.Tensor, t: torch.Tensor | float, s: torch.Tensor | float) -> torch.Tensor:
        raw = as_tensor(x)
        x = self.space.project(raw)
        t = batch_times(t, x, self.eps, self.t_max)
        s = batch_times(s, x, self.eps, self.t_max)
        anchored = s == t
        if bool(anchored.all()):
            return raw.clone()
        self.evaluations += 1
        network_evaluations.add(1, {"kind": self.kind})
        return torch.where(anchored.unsqueeze(-1), raw, heun_integrate(self.score_fn, x, t, s, self.steps))
