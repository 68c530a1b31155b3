from __future__ import annotations

import copy
import logging
import math
import time

import torch
from tqdm import tqdm

from boltzbit.errors import TrainingError
from boltzbit.models import Checkpoint, TrajectoryModel
from boltzbit.numerics import RandomStream, ema_update
from boltzbit.schema import config_hash
from boltzbit.schema.training import DistillConfig
from boltzbit.settings import config
from boltzbit.telemetry import training_iterations

from .dsm import sample_training_times
from .report import TrainReport
from .solver import ScoreFn, heun_integrate, heun_step

logger = logging.getLogger(__name__)


def sample_distill_times(
    rng: RandomStream, n: int, distill: DistillConfig, eps: float, t_max: float
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Draw (t, s, u).

    t follows the clipped log-normal proposal and s is log-uniform on [eps, t_max], redrawn where s == t.
    u is uniform between s and t on the denoising side and equals t when s > t.
    """
    t = sample_training_times(rng, n, distill.p_mean, distill.p_std, eps, t_max)
    log_eps, log_t_max = math.log(eps), math.log(t_max)
    s = torch.exp(rng.uniform(n, low=log_eps, high=log_t_max))
    while bool((clash := s == t).any()):
        s = torch.where(clash, torch.exp(rng.uniform(n, low=log_eps, high=log_t_max)), s)
    u = torch.where(s < t, s + (t - s) * rng.uniform(n), t)
    return t, s, u


def distill_loss(
    student,
    ema,
    teacher_score: ScoreFn,
    x0: torch.Tensor,
    t: torch.Tensor,
    s: torch.Tensor,
    u: torch.Tensor,
    noise: torch.Tensor,
    distill: DistillConfig,
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Soft consistency loss plus the DSM term. Returns (total, ctm, dsm).

    Teacher path, s < t: solver hop t→u, then the EMA model u→s and s→eps.
    Teacher path, s > t: ``forward_solver_steps`` solver steps t→s, then the EMA model s→eps.
    Student path: t→s→eps.
    """
    eps = student.eps
    x_t = student.space.project(x0 + t.unsqueeze(-1) * noise)

    with torch.no_grad():
        target = torch.empty_like(x_t)
        backward = s < t
        if bool(backward.any()):
            b = backward
            x_u = heun_step(teacher_score, x_t[b], t[b], u[b])
            target[b] = ema.traverse(ema.traverse(x_u, u[b], s[b]), s[b], eps)
        if bool((~backward).any()):
            f = ~backward
            x_s = heun_integrate(teacher_score, x_t[f], t[f], s[f], distill.forward_solver_steps)
            target[f] = ema.traverse(x_s, s[f], eps)

    estimate = student.traverse(student.traverse(x_t, t, s), s, eps)
    ctm = ((target - estimate) ** 2).sum(dim=-1).mean()
    dsm = ((x0 - student.g(x_t, t, t)) ** 2).sum(dim=-1).mean()
    return distill.lambda_ctm * ctm + distill.lambda_dsm * dsm, ctm, dsm


def distill_bctm(
    student: TrajectoryModel,
    teacher_score: ScoreFn,
    data: torch.Tensor,
    distill: DistillConfig,
    rng: RandomStream | None = None,
    ema: TrajectoryModel | None = None,
) -> tuple[Checkpoint, TrainReport]:
    """Distill a bidirectional trajectory model from a teacher score.

    ``ema`` is the stop-gradient teacher copy, updated in place after every optimizer step; a fresh copy of the
    student is used when none is given. The returned checkpoint holds the online student weights.
    """
    rng = rng or RandomStream(distill.seed)
    data = student.space.project(data)
    ema = ema if ema is not None else copy.deepcopy(student)
    ema.requires_grad_(False)

    optimizer = torch.optim.Adam(student.parameters(), lr=distill.learning_rate)
    report = TrainReport()
    start = time.perf_counter()
    logger.info(f"BCTM distillation started, iterations={distill.iterations}, batch_size={distill.batch_size}")

    for step in tqdm(range(1, distill.iterations + 1), desc="distill", disable=not config.progress):
        x0 = data[torch.from_numpy(rng.integers(0, len(data), size=distill.batch_size))]
        t, s, u = sample_distill_times(rng, distill.batch_size, distill, student.eps, student.t_max)
        noise = student.space.normal(distill.batch_size, rng)
        loss, ctm, dsm = distill_loss(student, ema, teacher_score, x0, t, s, u, noise, distill)
        if not bool(torch.isfinite(loss)):
            raise TrainingError("Divergent loss", step=step)

        optimizer.zero_grad()
        loss.backward()
        grad_norm = torch.nn.utils.clip_grad_norm_(student.parameters(), distill.grad_clip or math.inf)
        optimizer.step()
        ema_update(ema.parameters(), student.parameters(), distill.ema_rate)
        training_iterations.add(1, {"loop": "distill"})
        report.record(step, loss.item(), grad_norm.item(), ctm.item(), dsm.item())

        if step % distill.log_every == 0:
            logger.info(f"Distill progress, step={step}, loss={loss.item():.5f}, ctm={ctm.item():.5f}")

    report.wall_clock = time.perf_counter() - start
    logger.info(f"BCTM distillation finished, wall_clock={report.wall_clock:.1f}s")

    checkpoint = Checkpoint(
        student,
        student.architecture,  # type: ignore[arg-type]
        "trajectory",
        config_hash(distill),
        {"iterations": distill.iterations, "final_loss": report.final_loss},
    )
    return checkpoint, report
