from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import torch

from boltzbit.errors import DegenerateScheduleError
from boltzbit.numerics import RandomStream, as_tensor, gaussian_log_density

from .export import coordinate_columns, write_csv
from .kernels import ddim_kernel, forward_noise
from .schedule import Schedule

logger = logging.getLogger(__name__)


@dataclass
class SampleBatch:
    samples: torch.Tensor
    times: torch.Tensor  # descending, the times visited
    nfe: int
    trajectory: torch.Tensor | None = None  # (len(times), K, d), aligned with times
    log_density: torch.Tensor | None = None  # joint log-density of recorded stochastic chains
    metadata: dict = field(default_factory=dict)

    def to_csv(self, path: Path) -> None:
        metadata = {"nfe": self.nfe, **self.metadata}
        write_csv(path, self.samples, coordinate_columns(self.samples.shape[-1]), metadata)
        logger.info(f"Wrote samples, path={path}, n={len(self.samples)}")


def prior_sample(model, n: int, t_max: float, rng: RandomStream) -> torch.Tensor:
    """x_T ~ N(0, T²·I) on the model's space."""
    return t_max * model.space.normal(n, rng)


def ancestral_sample(
    model, schedule: Schedule, eta: float, n: int, rng: RandomStream, record: bool = False
) -> SampleBatch:
    """``n`` independent reverse chains down ``schedule`` with the DDIM-style kernel.

    With ``record`` the full trajectory is kept and, for η > 0, the joint log-density of each chain under the
    prior and the reverse kernels.
    """
    times = schedule.descending
    event_dim = model.space.event_dim
    x = prior_sample(model, n, times[0].item(), rng)
    path = [x]
    log_density = gaussian_log_density(x, torch.zeros_like(x), times[0] ** 2, dim=event_dim) if eta > 0 else None
    for t_n, t_prev in zip(times[:-1].tolist(), times[1:].tolist()):
        mean, sigma = ddim_kernel(model, x, t_n, t_prev, eta)
        if sigma == 0.0:
            x = mean
        else:
            x = mean + sigma * model.space.normal(n, rng)
            if log_density is not None:
                log_density = log_density + gaussian_log_density(x, mean, sigma**2, dim=event_dim)
        if record:
            path.append(x)
    return SampleBatch(
        x,
        times,
        schedule.n_steps,
        torch.stack(path) if record else None,
        log_density if record else None,
        {"schedule": schedule.describe(), "eta": eta, "seed": rng.seed, "stream": rng.stream_id},
    )


def cm_multistep_sample(model, times: Sequence[float] | torch.Tensor, n: int, rng: RandomStream) -> SampleBatch:
    """Consistency-style sampling: jump to eps, re-noise to the next anchor, jump again."""
    times = as_tensor(times)
    if times.ndim != 1 or len(times) == 0:
        raise DegenerateScheduleError("Multistep sampling needs at least one time")
    if len(times) > 1 and not bool((times[1:] < times[:-1]).all()):
        raise DegenerateScheduleError("Multistep times must be strictly decreasing")
    eps = model.eps
    x = prior_sample(model, n, times[0].item(), rng)
    x0 = model.traverse(x, times[0].item(), eps)
    for anchor in times[1:].tolist():
        x = forward_noise(x0, eps, anchor, rng, model.space)
        x0 = model.traverse(x, anchor, eps)
    return SampleBatch(x0, times, len(times), metadata={"seed": rng.seed, "stream": rng.stream_id})
