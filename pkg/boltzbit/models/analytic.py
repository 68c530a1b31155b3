"""Closed-form models used as perfect teachers and as test oracles."""

from __future__ import annotations

import torch

from boltzbit.errors import ConfigError
from boltzbit.numerics import as_tensor
from boltzbit.settings import config
from boltzbit.targets import EuclideanSpace, GmmTarget, Space
from boltzbit.telemetry import network_evaluations

from .networks import batch_times


class _Analytic:
    kind = "denoise"

    def __init__(self, space: Space, eps: float | None = None, t_max: float | None = None):
        self.space = space
        self.eps = config.eps if eps is None else eps
        self.t_max = config.t_max if t_max is None else t_max
        self.evaluations = 0

    def _count(self) -> None:
        self.evaluations += 1
        network_evaluations.add(1, {"kind": self.kind})

    def _prepare(self, x: torch.Tensor, t: torch.Tensor | float) -> tuple[torch.Tensor, torch.Tensor]:
        x = self.space.project(as_tensor(x))
        return x, batch_times(t, x, self.eps, self.t_max).unsqueeze(-1)

    def score(self, x: torch.Tensor, t: torch.Tensor | float) -> torch.Tensor:
        x, t_col = self._prepare(x, t)
        return (self.denoise(x, t) - x) / t_col**2


class GaussianPosteriorDenoiser(_Analytic):
    """E[x_0 | x_t] = (v·x + t²·μ) / (v + t²) for x_0 ~ N(μ, v·I). v = 0 is a point mass at μ."""

    def __init__(self, mean: torch.Tensor, variance: float, **kwargs):
        mean = as_tensor(mean)
        if variance < 0:
            raise ConfigError(f"Variance negative, variance={variance}")
        super().__init__(EuclideanSpace(mean.shape[-1]), **kwargs)
        self.mean = mean
        self.variance = float(variance)

    def denoise(self, x: torch.Tensor, t: torch.Tensor | float) -> torch.Tensor:
        x, t_col = self._prepare(x, t)
        self._count()
        return (self.variance * x + t_col**2 * self.mean) / (self.variance + t_col**2)


class AnalyticGmmDenoiser(_Analytic):
    """D = x + t²·∇log p_t(x) from the mixture's exact noised score."""

    def __init__(self, target: GmmTarget, **kwargs):
        super().__init__(target.space, **kwargs)
        self.target = target

    def denoise(self, x: torch.Tensor, t: torch.Tensor | float) -> torch.Tensor:
        x, t_col = self._prepare(x, t)
        self._count()
        return x + t_col**2 * self.target.analytic_noised_score(x, t_col.squeeze(-1))

    def score(self, x: torch.Tensor, t: torch.Tensor | float) -> torch.Tensor:
        x, t_col = self._prepare(x, t)
        self._count()
        return self.target.analytic_noised_score(x, t_col.squeeze(-1))


class GaussianFlow(GaussianPosteriorDenoiser):
    """Exact PF-ODE flow of a Gaussian: μ + (x − μ)·√((v + s²) / (v + t²))."""

    kind = "traverse"

    def traverse(self, x: torch.Tensor, t: torch.Tensor | float, s: torch.Tensor | float) -> torch.Tensor:
        raw = as_tensor(x)
        x, t_col = self._prepare(raw, t)
        s_col = batch_times(s, x, self.eps, self.t_max).unsqueeze(-1)
        anchored = s_col == t_col
        if bool(anchored.all()):
            return raw.clone()
        self._count()
        factor = torch.sqrt((self.variance + s_col**2) / (self.variance + t_col**2))
        return torch.where(anchored, raw, self.mean + (x - self.mean) * factor)

    def g(self, x: torch.Tensor, t: torch.Tensor | float, s: torch.Tensor | float) -> torch.Tensor:
        """The g of G = (s/t)·x + (1 − s/t)·g that reproduces the flow; the posterior mean at s = t."""
        x, t_col = self._prepare(x, t)
        s_col = batch_times(s, x, self.eps, self.t_max).unsqueeze(-1)
        anchored = s_col == t_col
        ratio = s_col / t_col
        flow = self.mean + (x - self.mean) * torch.sqrt((self.variance + s_col**2) / (self.variance + t_col**2))
        moved = (flow - ratio * x) / torch.where(anchored, torch.ones_like(ratio), 1 - ratio)
        self._count()
        posterior = (self.variance * x + t_col**2 * self.mean) / (self.variance + t_col**2)
        return torch.where(anchored, posterior, moved)
