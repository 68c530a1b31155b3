from __future__ import annotations

import copy
import logging
import math
import time

import torch
from tqdm import tqdm

from boltzbit.errors import TrainingError
from boltzbit.models import Checkpoint, Denoiser
from boltzbit.numerics import RandomStream, ema_update
from boltzbit.schema import config_hash
from boltzbit.schema.training import DsmConfig
from boltzbit.settings import config
from boltzbit.telemetry import training_iterations

from .report import TrainReport

logger = logging.getLogger(__name__)


def sample_training_times(
    rng: RandomStream, n: int, p_mean: float, p_std: float, eps: float, t_max: float
) -> torch.Tensor:
    """EDM log-normal time proposal clipped to [eps, t_max]."""
    return torch.exp(p_mean + p_std * rng.normal(n)).clamp(eps, t_max)


def edm_loss_weight(t: torch.Tensor, sigma_data: float) -> torch.Tensor:
    return (t**2 + sigma_data**2) / (t * sigma_data) ** 2


def dsm_loss(model: Denoiser, x0: torch.Tensor, t: torch.Tensor, noise: torch.Tensor) -> torch.Tensor:
    """EDM-weighted E‖D(x_0 + t·z, t) − x_0‖², per coordinate."""
    x_t = model.space.project(x0 + t.unsqueeze(-1) * noise)
    error = ((model.denoise(x_t, t) - x0) ** 2).sum(dim=-1)
    return (edm_loss_weight(t, model.sigma_data) * error).mean() / x0.shape[-1]


def train_dsm(
    model: Denoiser, data: torch.Tensor, train: DsmConfig, rng: RandomStream | None = None
) -> tuple[Checkpoint, TrainReport]:
    """Denoising score matching with an EMA copy; returns the EMA weights that scored best on a fixed held-out batch."""
    rng = rng or RandomStream(train.seed)
    eval_rng = rng.spawn(rng.stream_id + 1)
    space = model.space
    data = space.project(data)

    ema = copy.deepcopy(model).requires_grad_(False)
    best_state = copy.deepcopy(ema.state_dict())
    best_loss, best_iteration = math.inf, 0

    eval_x0 = data[torch.from_numpy(eval_rng.integers(0, len(data), size=train.eval_size))]
    eval_t = sample_training_times(eval_rng, train.eval_size, train.p_mean, train.p_std, model.eps, model.t_max)
    eval_noise = space.normal(train.eval_size, eval_rng)

    optimizer = torch.optim.Adam(model.parameters(), lr=train.learning_rate)
    report = TrainReport()
    start = time.perf_counter()
    logger.info(f"DSM training started, iterations={train.iterations}, batch_size={train.batch_size}")

    for step in tqdm(range(1, train.iterations + 1), desc="dsm", disable=not config.progress):
        x0 = data[torch.from_numpy(rng.integers(0, len(data), size=train.batch_size))]
        t = sample_training_times(rng, train.batch_size, train.p_mean, train.p_std, model.eps, model.t_max)
        loss = dsm_loss(model, x0, t, space.normal(train.batch_size, rng))
        if not bool(torch.isfinite(loss)):
            raise TrainingError("Divergent loss", step=step)

        optimizer.zero_grad()
        loss.backward()
        grad_norm = torch.nn.utils.clip_grad_norm_(model.parameters(), train.grad_clip or math.inf)
        optimizer.step()
        ema_update(ema.parameters(), model.parameters(), train.ema_rate)
        training_iterations.add(1, {"loop": "dsm"})
        report.record(step, loss.item(), grad_norm.item())

        if step % train.eval_every == 0 or step == train.iterations:
            with torch.no_grad():
                eval_loss = dsm_loss(ema, eval_x0, eval_t, eval_noise).item()
            best = eval_loss < best_loss
            if best:
                best_loss, best_iteration = eval_loss, step
                best_state = copy.deepcopy(ema.state_dict())
            report.snapshot(step, eval_loss, best)
        if step % train.log_every == 0:
            logger.info(f"DSM progress, step={step}, loss={loss.item():.5f}, best_eval={best_loss:.5f}")

    ema.load_state_dict(best_state)
    ema.requires_grad_(True)
    report.wall_clock = time.perf_counter() - start
    logger.info(f"DSM training finished, best_iteration={best_iteration}, wall_clock={report.wall_clock:.1f}s")

    checkpoint = Checkpoint(
        ema,
        ema.architecture,  # type: ignore[arg-type]
        "denoiser",
        config_hash(train),
        {
            "iterations": train.iterations,
            "best_iteration": best_iteration,
            "best_eval_loss": best_loss if math.isfinite(best_loss) else None,
        },
    )
    return checkpoint, report
