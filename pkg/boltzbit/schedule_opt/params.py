from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import torch

from boltzbit.errors import ConfigError, GridError
from boltzbit.is_engine import TimeGrid
from boltzbit.numerics import as_tensor
from boltzbit.schema.tuning import GridMode, TargetDesign

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class ScheduleParams:
    """Unconstrained grid parameters; a sigmoid maps each to (0, 1).

    ``raw_mu`` and ``raw_eta`` are indexed n = 0…N−1. ``raw_gamma`` (free mode only) is indexed n = 1…N−1.
    """

    raw_mu: torch.Tensor
    raw_eta: torch.Tensor
    raw_gamma: torch.Tensor | None = None
    mode: GridMode = "variance_matched"
    design: TargetDesign = "alternating"
    objective_trace: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.raw_mu = as_tensor(self.raw_mu)
        self.raw_eta = as_tensor(self.raw_eta)
        n = len(self.raw_mu)
        if n < 1:
            raise ConfigError("Grid needs N >= 1")
        if self.raw_eta.shape != (n,):
            raise ConfigError(f"raw_eta must hold N={n} values, got {tuple(self.raw_eta.shape)}")
        if self.mode == "free":
            if self.raw_gamma is None:
                self.raw_gamma = torch.zeros(n - 1, dtype=self.raw_mu.dtype)
            self.raw_gamma = as_tensor(self.raw_gamma)
            if self.raw_gamma.shape != (n - 1,):
                raise ConfigError(f"raw_gamma must hold N-1={n - 1} values, got {tuple(self.raw_gamma.shape)}")
        elif self.raw_gamma is not None:
            raise ConfigError("raw_gamma is only used by the free mode")

    @classmethod
    def uniform(
        cls, n_steps: int, mode: GridMode = "variance_matched", design: TargetDesign = "alternating"
    ) -> ScheduleParams:
        """All raw parameters 0, i.e. every μ_n, η_n (and γ_n) at ½."""
        zeros = torch.zeros(n_steps, dtype=torch.float64)
        gamma = torch.zeros(n_steps - 1, dtype=torch.float64) if mode == "free" else None
        return cls(zeros, zeros.clone(), gamma, mode, design)

    @property
    def n_steps(self) -> int:
        return len(self.raw_mu)

    @property
    def mu(self) -> torch.Tensor:
        return torch.sigmoid(self.raw_mu)

    @property
    def eta(self) -> torch.Tensor:
        if self.design == "sde_only":
            return torch.zeros_like(self.raw_eta)
        return torch.sigmoid(self.raw_eta)

    @property
    def gamma(self) -> torch.Tensor | None:
        return None if self.raw_gamma is None else torch.sigmoid(self.raw_gamma)

    def vector(self) -> torch.Tensor:
        """Flat raw parameters, the quantity the tuner optimizes."""
        parts = [self.raw_mu, self.raw_eta] + ([self.raw_gamma] if self.raw_gamma is not None else [])
        return torch.cat(parts)

    def with_vector(self, vector: torch.Tensor) -> ScheduleParams:
        n = self.n_steps
        gamma = vector[2 * n :] if self.mode == "free" else None
        return replace(self, raw_mu=vector[:n], raw_eta=vector[n : 2 * n], raw_gamma=gamma, objective_trace=[])

    def detach(self) -> ScheduleParams:
        return self.with_vector(self.vector().detach().clone())


def build_time_grid(params: ScheduleParams, eps: float, t_max: float) -> TimeGrid:
    """Map raw parameters to the interleaved time grid, differentiably.

    t_N = T and t_n = μ_n(t_{n+1} − ε) + ε going down; t_n^(tar) = (t_{n+1} − t_n)·η_n + t_n.
    In variance-matched mode t_n^(prop) = √max(t_n² + (t_n^(tar))² − t_{n+1}², ε²) for n ≥ 1 and
    t_0 = min(√max(t_1² − (t_0^(tar))² + ε², ε²), t_0^(tar)), where t_0^(tar) is built from the recursion's t_0.
    Free mode uses t_n^(prop) = γ_n(t_n − ε) + ε and keeps the recursion's t_0. t_0^(prop) = ε always.
    """
    n_steps = params.n_steps
    mu, eta = params.mu, params.eta
    dtype = params.raw_mu.dtype

    descending = [torch.tensor(t_max, dtype=dtype)]
    for n in range(n_steps - 1, -1, -1):
        descending.append(mu[n] * (descending[-1] - eps) + eps)
    t = torch.stack(descending[::-1])
    t_tar = (t[1:] - t[:-1]) * eta + t[:-1]

    floor = torch.tensor(eps**2, dtype=dtype)
    head = torch.tensor([eps], dtype=dtype)
    if params.mode == "free":
        gamma = params.gamma
        t_prop = torch.cat([head, gamma * (t[1:-1] - eps) + eps])  # type: ignore[operator]
    else:
        t_prop = torch.cat([head, torch.sqrt(torch.maximum(t[1:-1] ** 2 + t_tar[1:] ** 2 - t[2:] ** 2, floor))])
        t_0 = torch.minimum(torch.sqrt(torch.maximum(t[1] ** 2 - t_tar[0] ** 2 + eps**2, floor)), t_tar[0])
        t = torch.cat([t_0.reshape(1), t[1:]])

    if params.design == "sde_only":
        t_tar = t[:-1]

    try:
        return TimeGrid(t, t_tar, t_prop).validate(eps, t_max)
    except GridError as e:
        logger.debug(f"Raw parameters give an invalid grid, index={e.index}, mode={params.mode}")
        raise
