from __future__ import annotations

import logging
import math
import time

import torch
from tqdm import tqdm

from boltzbit.errors import GridError, TuningError
from boltzbit.numerics import AdamState, RandomStream, adam_step, value_and_grad
from boltzbit.schema.tuning import TuneConfig
from boltzbit.settings import config
from boltzbit.telemetry import training_iterations

from .objective import forward_kl_terms
from .params import ScheduleParams, build_time_grid

logger = logging.getLogger(__name__)


def tune_grid(
    params0: ScheduleParams,
    model,
    target,
    target_samples: torch.Tensor,
    tune: TuneConfig,
    eps: float | None = None,
    t_max: float | None = None,
) -> ScheduleParams:
    """Minimize the forward KL over the raw grid parameters with Adam.

    Every step resamples ``tune.paths`` starting points and fixes the path noise for that step. The best objective
    seen wins, so the result is never worse than ``params0`` on the recorded trace, which is kept on the returned
    params. A step that drives the grid out of its invariants ends tuning early.
    """
    eps = model.eps if eps is None else eps
    t_max = model.t_max if t_max is None else t_max
    rng = RandomStream(tune.seed)
    vector = params0.vector().detach().clone()
    state = AdamState.zeros_like(vector, learning_rate=tune.learning_rate)

    best_value, best_vector = math.inf, vector
    trace: list[float] = []
    start = time.perf_counter()
    logger.info(f"Grid tuning started, n_steps={params0.n_steps}, steps={tune.steps}, paths={tune.paths}")

    for step in tqdm(range(1, tune.steps + 1), desc="tune", disable=not config.progress):
        x0 = target_samples[torch.from_numpy(rng.integers(0, len(target_samples), size=tune.paths))].detach()
        noise = [model.space.normal(tune.paths, rng) for _ in range(params0.n_steps)]

        def objective(v: torch.Tensor) -> torch.Tensor:
            grid = build_time_grid(params0.with_vector(v), eps, t_max)
            return forward_kl_terms(grid, model, target, x0, noise=noise).mean()

        try:
            value, gradient = value_and_grad(objective, vector)
        except GridError as e:
            logger.warning(f"Grid tuning stopped on an invalid grid, step={step}, index={e.index}")
            break
        if not bool(torch.isfinite(value)) or bool(torch.isnan(gradient).any()):
            raise TuningError("Objective is not finite", step=step)

        trace.append(value.item())
        if value.item() < best_value:
            best_value, best_vector = value.item(), vector
        vector, state = adam_step(vector, gradient, state)
        training_iterations.add(1, {"loop": "tune"})
        if step % tune.log_every == 0:
            logger.info(f"Tuning progress, step={step}, objective={value.item():.5f}, best={best_value:.5f}")

    tuned = params0.with_vector(best_vector.detach().clone())
    tuned.objective_trace = trace
    if trace:
        logger.info(
            f"Grid tuning finished, first={trace[0]:.5f}, best={best_value:.5f}, "
            f"wall_clock={time.perf_counter() - start:.1f}s"
        )
    return tuned
