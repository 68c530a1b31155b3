from __future__ import annotations

import torch
from torch import nn


def c_noise(t: torch.Tensor) -> torch.Tensor:
    return 0.25 * torch.log(t)


class TimeEmbedding(nn.Module):
    """Features of c_noise(t): the value itself followed by sin/cos at geometric frequencies in [1, 100]."""

    def __init__(self, n_frequencies: int):
        super().__init__()
        self.register_buffer("frequencies", torch.logspace(0, 2, n_frequencies, dtype=torch.float64))
        self.out_features = 1 + 2 * n_frequencies

    def forward(self, noise_level: torch.Tensor) -> torch.Tensor:
        angles = noise_level.unsqueeze(-1) * self.frequencies
        return torch.cat([noise_level.unsqueeze(-1), torch.sin(angles), torch.cos(angles)], dim=-1)
