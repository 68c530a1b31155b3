from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

import torch

from boltzbit.errors import DegenerateScheduleError
from boltzbit.numerics import as_tensor

ScheduleRule = Literal["log", "rho", "explicit"]


@dataclass(frozen=True, eq=False)
class Schedule:
    """Ascending times t_0 < t_1 < … < t_N."""

    times: torch.Tensor
    rule: ScheduleRule

    def __post_init__(self):
        times = as_tensor(self.times)
        if times.ndim != 1 or len(times) < 2:
            raise DegenerateScheduleError(f"A schedule needs at least two times, got shape={tuple(times.shape)}")
        if not bool((times[1:] > times[:-1]).all()):
            raise DegenerateScheduleError("Schedule times must be strictly increasing")
        if bool((times <= 0).any()):
            raise DegenerateScheduleError(f"Schedule times must be positive, min={times.min().item()}")
        object.__setattr__(self, "times", times)

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    @property
    def descending(self) -> torch.Tensor:
        return self.times.flip(0)

    def describe(self) -> str:
        return f"{self.rule}:N={self.n_steps}:{self.times[0].item()!r}-{self.times[-1].item()!r}"


def _check(n: int, eps: float, t_max: float) -> None:
    if n < 1:
        raise DegenerateScheduleError(f"Schedule needs N >= 1, N={n}")
    if not 0 < eps < t_max:
        raise DegenerateScheduleError(f"Schedule needs 0 < eps < T, eps={eps}, T={t_max}")


def log_schedule(n: int, eps: float, t_max: float) -> Schedule:
    """t_i = eps·(T/eps)^(i/N), evenly spaced in log-time."""
    _check(n, eps, t_max)
    times = torch.exp(torch.linspace(math.log(eps), math.log(t_max), n + 1, dtype=torch.float64))
    times[0], times[-1] = eps, t_max
    return Schedule(times, "log")


def rho_schedule(n: int, eps: float, t_max: float, rho: float = 7.0) -> Schedule:
    """t_i = (eps^(1/ρ) + i/N·(T^(1/ρ) − eps^(1/ρ)))^ρ; tends to the log schedule as ρ grows."""
    _check(n, eps, t_max)
    fractions = torch.linspace(0, 1, n + 1, dtype=torch.float64)
    times = (eps ** (1 / rho) + fractions * (t_max ** (1 / rho) - eps ** (1 / rho))) ** rho
    times[0], times[-1] = eps, t_max
    return Schedule(times, "rho")


def explicit_schedule(times: Sequence[float] | torch.Tensor) -> Schedule:
    return Schedule(as_tensor(times), "explicit")
