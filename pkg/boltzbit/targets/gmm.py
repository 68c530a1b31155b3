from __future__ import annotations

from dataclasses import dataclass

import torch

from boltzbit.errors import ConfigError, ShapeError
from boltzbit.numerics import RandomStream, as_tensor, gaussian_log_density, log_sum_exp

from .spaces import EuclideanSpace


@dataclass(frozen=True, eq=False)
class GmmTarget:
    """Isotropic Gaussian mixture with a shared component variance.

    The normalizer is known, so ``unnorm_log_density`` returns the normalized mixture log-density.
    A component variance of zero is accepted for sampling; densities then need ``t > 0``.
    """

    weights: torch.Tensor
    means: torch.Tensor
    component_variance: float

    def __post_init__(self):
        weights, means = as_tensor(self.weights), as_tensor(self.means)
        if means.ndim != 2 or weights.shape != (means.shape[0],):
            raise ConfigError(f"GMM shapes inconsistent, weights={tuple(weights.shape)}, means={tuple(means.shape)}")
        if bool((weights <= 0).any()) or abs(weights.sum().item() - 1.0) > 1e-12:
            raise ConfigError("GMM weights must be positive and sum to 1")
        if not bool(torch.isfinite(means).all()):
            raise ConfigError("GMM means must be finite")
        if self.component_variance < 0:
            raise ConfigError(f"GMM component variance negative, variance={self.component_variance}")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "means", means)

    @classmethod
    def gaussian(cls, mean: torch.Tensor, variance: float) -> GmmTarget:
        mean = as_tensor(mean)
        return cls(torch.ones(1, dtype=mean.dtype), mean.reshape(1, -1), variance)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def space(self) -> EuclideanSpace:
        return EuclideanSpace(self.dim)

    def _check(self, x: torch.Tensor) -> torch.Tensor:
        x = as_tensor(x)
        if x.shape[-1] != self.dim:
            raise ShapeError(f"Expected {self.dim} coordinates, got shape={tuple(x.shape)}")
        return x

    def _component_log_densities(self, x: torch.Tensor, variance: torch.Tensor) -> torch.Tensor:
        # (..., M)
        return torch.log(self.weights) + gaussian_log_density(
            x.unsqueeze(-2).expand(*x.shape[:-1], *self.means.shape), self.means, variance.unsqueeze(-1)
        )

    def noised_log_density(self, x: torch.Tensor, t: torch.Tensor | float) -> torch.Tensor:
        """log p_t(x): the mixture convolved with N(0, t²I), a mixture with variance v + t²."""
        x = self._check(x)
        variance = self.component_variance + as_tensor(t) ** 2
        variance = variance.expand(x.shape[:-1]) if variance.ndim == 0 else variance
        return log_sum_exp(self._component_log_densities(x, variance), dim=-1)

    def unnorm_log_density(self, x: torch.Tensor) -> torch.Tensor:
        return self.noised_log_density(x, 0.0)

    def analytic_noised_score(self, x: torch.Tensor, t: torch.Tensor | float) -> torch.Tensor:
        """Exact gradient of log p_t at x. ``t`` is a scalar or one time per row of x."""
        x = self._check(x)
        variance = self.component_variance + as_tensor(t) ** 2
        variance = variance.expand(x.shape[:-1]) if variance.ndim == 0 else variance
        responsibilities = torch.softmax(self._component_log_densities(x, variance), dim=-1)
        posterior_mean = responsibilities @ self.means
        return (posterior_mean - x) / variance.unsqueeze(-1)

    def sample_exact(self, n: int, rng: RandomStream) -> torch.Tensor:
        if n < 1:
            raise ConfigError(f"Sample count must be positive, n={n}")
        components = rng.choice(len(self.weights), size=n, p=self.weights.numpy())
        noise = rng.normal(n, self.dim)
        return self.means[torch.from_numpy(components)] + self.component_variance**0.5 * noise
