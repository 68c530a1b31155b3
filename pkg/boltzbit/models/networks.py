from __future__ import annotations

import torch
from torch import nn

from boltzbit.errors import DomainError, ShapeError
from boltzbit.numerics import as_tensor
from boltzbit.targets import Space
from boltzbit.telemetry import network_evaluations

from .embedding import c_noise

# relative slack for times that land a rounding error outside [eps, T]
TIME_TOLERANCE = 1e-9


def edm_coefficients(
    t: torch.Tensor, sigma_data: float
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
    """(c_skip, c_out, c_in, c_noise) of the EDM preconditioning."""
    variance = sigma_data**2 + t**2
    return sigma_data**2 / variance, t * sigma_data / variance.sqrt(), 1 / variance.sqrt(), c_noise(t)


def batch_times(t: torch.Tensor | float, x: torch.Tensor, eps: float, t_max: float) -> torch.Tensor:
    """Broadcast ``t`` to one time per row of ``x`` and check it lies in [eps, t_max]."""
    t = as_tensor(t)
    if t.ndim == 0:
        t = t.expand(x.shape[:-1])
    elif t.shape != x.shape[:-1]:
        raise ShapeError(f"Times do not match batch, t={tuple(t.shape)}, x={tuple(x.shape)}")
    low, high = eps * (1 - TIME_TOLERANCE), t_max * (1 + TIME_TOLERANCE)
    if bool(((t < low) | (t > high) | torch.isnan(t)).any()):
        raise DomainError(f"Time outside [{eps}, {t_max}], min={t.min().item()}, max={t.max().item()}")
    return t


class _Preconditioned(nn.Module):
    kind = "network"

    def __init__(self, backbone: nn.Module, space: Space, sigma_data: float, eps: float, t_max: float):
        super().__init__()
        self.backbone = backbone
        self.space = space
        self.sigma_data = float(sigma_data)
        self.eps = eps
        self.t_max = t_max
        self.evaluations = 0
        self.architecture = None  # set by the builders

    def _check(self, x: torch.Tensor) -> torch.Tensor:
        x = as_tensor(x)
        if x.shape[-1] != self.space.dim:
            raise ShapeError(f"Expected {self.space.dim} coordinates, got shape={tuple(x.shape)}")
        return self.space.project(x)

    def _count(self) -> None:
        self.evaluations += 1
        network_evaluations.add(1, {"kind": self.kind})

    def _precondition(self, x: torch.Tensor, t: torch.Tensor, *conditions: torch.Tensor) -> torch.Tensor:
        c_skip, c_out, c_in, noise = edm_coefficients(t.unsqueeze(-1), self.sigma_data)
        levels = [noise.squeeze(-1)] + [c_noise(c) for c in conditions]
        out = c_skip * x + c_out * self.backbone(c_in * x, levels)
        return self.space.project(out)

    def score(self, x: torch.Tensor, t: torch.Tensor | float) -> torch.Tensor:
        x = self._check(x)
        t = batch_times(t, x, self.eps, self.t_max)
        return (self.denoise(x, t) - x) / (t**2).unsqueeze(-1)


class Denoiser(_Preconditioned):
    """EDM-preconditioned denoiser D(x, t) estimating E[x_0 | x_t]."""

    kind = "denoise"

    def forward(self, x: torch.Tensor, t: torch.Tensor | float) -> torch.Tensor:
        return self.denoise(x, t)

    def denoise(self, x: torch.Tensor, t: torch.Tensor | float) -> torch.Tensor:
        x = self._check(x)
        t = batch_times(t, x, self.eps, self.t_max)
        self._count()
        return self._precondition(x, t)


class TrajectoryModel(_Preconditioned):
    """G(x, t, s) = (s/t)·x + (1 − s/t)·g(x, t, s), moving x_t along the PF ODE to time s.

    g is preconditioned like a denoiser at time t and additionally conditioned on c_noise(s).
    """

    kind = "traverse"

    def g(self, x: torch.Tensor, t: torch.Tensor | float, s: torch.Tensor | float) -> torch.Tensor:
        x = self._check(x)
        t = batch_times(t, x, self.eps, self.t_max)
        s = batch_times(s, x, self.eps, self.t_max)
        self._count()
        return self._precondition(x, t, s)

    def forward(self, x: torch.Tensor, t: torch.Tensor | float, s: torch.Tensor | float) -> torch.Tensor:
        return self.traverse(x, t, s)

    def traverse(self, x: torch.Tensor, t: torch.Tensor | float, s: torch.Tensor | float) -> torch.Tensor:
        raw = as_tensor(x)
        x = self._check(raw)
        t = batch_times(t, x, self.eps, self.t_max)
        s = batch_times(s, x, self.eps, self.t_max)
        anchored = s == t
        if bool(anchored.all()):
            return raw.clone()
        ratio = (s / t).unsqueeze(-1)
        moved = self.space.project(ratio * x + (1 - ratio) * self.g(x, t, s))
        return torch.where(anchored.unsqueeze(-1), raw, moved)

    def denoise(self, x: torch.Tensor, t: torch.Tensor | float) -> torch.Tensor:
        return self.g(x, t, t)


def denoise(model, x: torch.Tensor, t: torch.Tensor | float) -> torch.Tensor:
    return model.denoise(x, t)


def score_from_denoiser(model, x: torch.Tensor, t: torch.Tensor | float) -> torch.Tensor:
    """(D(x, t) − x) / t²."""
    return model.score(x, t)


def traverse(model, x: torch.Tensor, t: torch.Tensor | float, s: torch.Tensor | float) -> torch.Tensor:
    return model.traverse(x, t, s)
