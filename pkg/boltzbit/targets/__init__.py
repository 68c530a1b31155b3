from __future__ import annotations

import torch

from boltzbit.errors import ConfigError
from boltzbit.numerics import RandomStream, as_tensor
from boltzbit.schema.targets import Dw4Spec, GaussianSpec, GmmSpec

from .dw4 import Dw4Target, pairwise_distances  # noqa: F401
from .functions import TestFunction, eval_test_function  # noqa: F401
from .gmm import GmmTarget
from .mcmc import (  # noqa: F401
    McmcResult,
    load_reservoir,
    mcmc_reference,
    metropolis_log_accept,
    save_reservoir,
)
from .spaces import EuclideanSpace, Space, ZeroCogSpace, project_zero_cog  # noqa: F401

Target = GmmTarget | Dw4Target


def make_target(spec: GaussianSpec | GmmSpec | Dw4Spec) -> Target:
    match spec:
        case GaussianSpec():
            mean = torch.zeros(spec.dim, dtype=torch.float64) if spec.mean is None else as_tensor(spec.mean)
            return GmmTarget.gaussian(mean, spec.variance)
        case GmmSpec():
            if spec.means is None:
                means = RandomStream(spec.seed).uniform(spec.n_components, spec.dim, low=spec.low, high=spec.high)
            else:
                means = as_tensor(spec.means)
            if spec.weights is None:
                weights = torch.full((spec.n_components,), 1.0 / spec.n_components, dtype=torch.float64)
            else:
                weights = as_tensor(spec.weights)
                weights = weights / weights.sum()
            return GmmTarget(weights, means, spec.component_variance)
        case Dw4Spec():
            return Dw4Target(
                a=spec.a,
                b=spec.b,
                c=spec.c,
                d0=spec.d0,
                tau=spec.tau,
                n_particles=spec.n_particles,
                space_dim=spec.space_dim,
            )
    raise ConfigError(f"Unknown target spec, spec={spec!r}")


def sample_target(target: Target, n: int, rng: RandomStream, reservoir: torch.Tensor | None = None) -> torch.Tensor:
    """Exact samples for mixtures; resampling with replacement from a reference bank otherwise."""
    if reservoir is not None:
        return reservoir[torch.from_numpy(rng.integers(0, len(reservoir), size=n))]
    if isinstance(target, GmmTarget):
        return target.sample_exact(n, rng)
    raise ConfigError("Target has no exact sampler, an MCMC reservoir is required")


def estimate_sigma_data(
    target: Target, rng: RandomStream, n: int = 100_000, reservoir: torch.Tensor | None = None
) -> float:
    """Standard deviation over all coordinates of ``n`` target samples."""
    samples = sample_target(target, n, rng, reservoir)
    return samples.std().item()
