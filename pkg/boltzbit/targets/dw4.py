from __future__ import annotations

from dataclasses import dataclass

import torch

from boltzbit.errors import ConfigError, ShapeError
from boltzbit.numerics import as_tensor

from .spaces import ZeroCogSpace


def pairwise_distances(x: torch.Tensor, n_particles: int, space_dim: int) -> torch.Tensor:
    """Distances d_ij for i < j, shape (..., n_particles * (n_particles - 1) / 2)."""
    particles = x.reshape(*x.shape[:-1], n_particles, space_dim)
    i, j = torch.triu_indices(n_particles, n_particles, offset=1)
    diff = particles[..., i, :] - particles[..., j, :]
    return torch.linalg.vector_norm(diff, dim=-1)


@dataclass(frozen=True)
class Dw4Target:
    """Planar particles with a quartic double-well pair potential, defined on the zero-CoG subspace."""

    a: float = 0.0
    b: float = -4.0
    c: float = 0.9
    d0: float = 4.0
    tau: float = 1.0
    n_particles: int = 4
    space_dim: int = 2

    def __post_init__(self):
        if self.tau <= 0:
            raise ConfigError(f"Temperature must be positive, tau={self.tau}")
        if self.n_particles < 2 or self.space_dim < 1:
            raise ConfigError(f"Invalid particle system, n_particles={self.n_particles}, space_dim={self.space_dim}")

    @property
    def space(self) -> ZeroCogSpace:
        return ZeroCogSpace(self.n_particles, self.space_dim)

    @property
    def dim(self) -> int:
        return self.space.dim

    def pair_energy(self, r: torch.Tensor) -> torch.Tensor:
        u = r - self.d0
        return self.a * u + self.b * u**2 + self.c * u**4

    def energy(self, x: torch.Tensor) -> torch.Tensor:
        x = as_tensor(x)
        if x.shape[-1] != self.dim:
            raise ShapeError(f"Expected {self.dim} coordinates, got shape={tuple(x.shape)}")
        x = self.space.project(x)
        return self.pair_energy(pairwise_distances(x, self.n_particles, self.space_dim)).sum(dim=-1)

    def unnorm_log_density(self, x: torch.Tensor) -> torch.Tensor:
        return -self.energy(x) / self.tau
