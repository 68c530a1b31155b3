from __future__ import annotations

from dataclasses import dataclass

import torch

from boltzbit.numerics import RandomStream


def project_zero_cog(x: torch.Tensor, n_particles: int, space_dim: int) -> torch.Tensor:
    """Subtract the mean particle position. ``x`` is flat with last axis n_particles * space_dim."""
    particles = x.reshape(*x.shape[:-1], n_particles, space_dim)
    centered = particles - particles.mean(dim=-2, keepdim=True)
    return centered.reshape(x.shape)


@dataclass(frozen=True)
class EuclideanSpace:
    dim: int

    @property
    def event_dim(self) -> int:
        return self.dim

    def project(self, x: torch.Tensor) -> torch.Tensor:
        return x

    def normal(self, n: int, rng: RandomStream) -> torch.Tensor:
        return rng.normal(n, self.dim)


@dataclass(frozen=True)
class ZeroCogSpace:
    n_particles: int
    space_dim: int

    @property
    def dim(self) -> int:
        return self.n_particles * self.space_dim

    @property
    def event_dim(self) -> int:
        return (self.n_particles - 1) * self.space_dim

    def project(self, x: torch.Tensor) -> torch.Tensor:
        return project_zero_cog(x, self.n_particles, self.space_dim)

    def normal(self, n: int, rng: RandomStream) -> torch.Tensor:
        return self.project(rng.normal(n, self.dim))


Space = EuclideanSpace | ZeroCogSpace
