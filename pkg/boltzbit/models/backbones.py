from __future__ import annotations

import torch
from torch import nn

from boltzbit.targets import project_zero_cog

from .embedding import TimeEmbedding

ACTIVATIONS: dict[str, type[nn.Module]] = {"silu": nn.SiLU, "gelu": nn.GELU, "tanh": nn.Tanh}


def _zero(layer: nn.Linear) -> nn.Linear:
    nn.init.zeros_(layer.weight)
    nn.init.zeros_(layer.bias)
    return layer


class MlpBackbone(nn.Module):
    """F(x, c_noise(t), [c_noise(s)]) for flat vectors. The output layer starts at zero."""

    def __init__(self, dim: int, n_times: int, width: int, depth: int, activation: str, embedding_size: int):
        super().__init__()
        self.embedding = TimeEmbedding(embedding_size)
        act = ACTIVATIONS[activation]
        layers: list[nn.Module] = []
        in_features = dim + n_times * self.embedding.out_features
        for _ in range(depth):
            layers += [nn.Linear(in_features, width), act()]
            in_features = width
        layers.append(_zero(nn.Linear(in_features, dim)))
        self.net = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor, noise_levels: list[torch.Tensor]) -> torch.Tensor:
        features = [x] + [self.embedding(level) for level in noise_levels]
        return self.net(torch.cat(features, dim=-1))


class EquivariantLayer(nn.Module):
    """Fully connected E(n) message passing over particles.

    Messages see both node states and the squared distance; coordinates move along pairwise differences
    scaled by 1/sqrt(1 + r²), so the update is smooth at coinciding particles.
    """

    def __init__(self, width: int, activation: str):
        super().__init__()
        act = ACTIVATIONS[activation]
        self.edge_mlp = nn.Sequential(nn.Linear(2 * width + 1, width), act(), nn.Linear(width, width), act())
        self.node_mlp = nn.Sequential(nn.Linear(2 * width, width), act(), nn.Linear(width, width))
        self.coord_mlp = nn.Sequential(nn.Linear(width, width), act(), _zero(nn.Linear(width, 1)))

    def forward(self, h: torch.Tensor, x: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        n = h.shape[-2]
        diff = x.unsqueeze(-2) - x.unsqueeze(-3)  # x_i - x_j
        squared = (diff * diff).sum(dim=-1, keepdim=True)
        h_i = h.unsqueeze(-2).expand(*h.shape[:-2], n, n, h.shape[-1])
        h_j = h.unsqueeze(-3).expand(*h.shape[:-2], n, n, h.shape[-1])
        off_diagonal = (1.0 - torch.eye(n, dtype=h.dtype)).unsqueeze(-1)

        messages = self.edge_mlp(torch.cat([h_i, h_j, squared], dim=-1)) * off_diagonal
        shifts = diff / torch.sqrt(squared + 1.0) * self.coord_mlp(messages) * off_diagonal
        x = x + shifts.sum(dim=-2) / (n - 1)
        h = h + self.node_mlp(torch.cat([h, messages.sum(dim=-2)], dim=-1))
        return h, x


class EgnnBackbone(nn.Module):
    """Equivariant network for particle systems; node states start from the time embedding alone.

    Returns the total coordinate displacement, projected onto the zero-CoG subspace.
    """

    def __init__(
        self,
        n_particles: int,
        space_dim: int,
        n_times: int,
        width: int,
        depth: int,
        activation: str,
        embedding_size: int,
    ):
        super().__init__()
        self.n_particles = n_particles
        self.space_dim = space_dim
        self.embedding = TimeEmbedding(embedding_size)
        self.node_in = nn.Linear(n_times * self.embedding.out_features, width)
        self.layers = nn.ModuleList([EquivariantLayer(width, activation) for _ in range(depth)])

    def forward(self, x: torch.Tensor, noise_levels: list[torch.Tensor]) -> torch.Tensor:
        batch = x.shape[:-1]
        coords = x.reshape(*batch, self.n_particles, self.space_dim)
        h = self.node_in(torch.cat([self.embedding(level) for level in noise_levels], dim=-1))
        h = h.unsqueeze(-2).expand(*batch, self.n_particles, h.shape[-1])
        moved = coords
        for layer in self.layers:
            h, moved = layer(h, moved)
        return project_zero_cog((moved - coords).reshape(x.shape), self.n_particles, self.space_dim)
